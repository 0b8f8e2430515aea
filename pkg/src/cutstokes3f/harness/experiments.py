"""Convergence, sliver and conditioning studies producing CSV tables."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from cutstokes3f.assembly import assemble_system
from cutstokes3f.geometry import AxisBox, collect_cut_sets, validate_assumptions
from cutstokes3f.manufactured import ManufacturedSolution
from cutstokes3f.mesh import build_structured_mesh, dilated_bbox
from cutstokes3f.postprocess import compute_errors, eoc, fictitious_stress_error
from cutstokes3f.solver import condition_number, solve_direct
from cutstokes3f.spaces import FieldCoefficients

log = logging.getLogger(__name__)

ERROR_COLUMNS = ("err_L2_u", "err_H1_u", "err_L2_p", "err_L2_sigma", "triple_norm")
CONVERGENCE_HEADER = ("level", "h", "ndof") + ERROR_COLUMNS
SLIVER_HEADER = ("epsilon", "gamma_sigma", "level", "h", "ndof") + ERROR_COLUMNS + ("err_L2_sigma_fictitious",)
CONDITION_HEADER = ("epsilon", "gamma_sigma", "ndof", "kappa2")


@dataclass
class ExperimentResult:
    header: tuple
    rows: list
    systems: list = field(default_factory=list, repr=False)
    cut_sets: list = field(default_factory=list, repr=False)

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            lines.append(",".join(_cell(row.get(k)) for k in self.header))
        return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CUTSTOKES_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    """Ordered map; runs concurrently when CUTSTOKES_THREADS > 1."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _solve_case(mesh, domain, params, exact, error_degree, fictitious=False):
    cut_sets = collect_cut_sets(mesh, domain)
    validate_assumptions(cut_sets)
    system = assemble_system(cut_sets, params, exact.body_force, exact.boundary_data)
    report = solve_direct(system)
    coeffs = FieldCoefficients(system.layout, report.x)
    errors = compute_errors(coeffs, exact, cut_sets, params, error_degree)
    row = {"level": mesh.shape[0], **errors.as_row()}
    if fictitious:
        row["err_L2_sigma_fictitious"] = fictitious_stress_error(coeffs, exact, cut_sets, error_degree)
    return row, system, cut_sets


def run_convergence(config) -> ExperimentResult:
    if config.kind != "convergence":
        raise ValueError(f"expected a convergence config, got {config.kind!r}")
    if len(config.levels) < 2:
        raise ValueError("a convergence study needs at least two mesh levels")
    exact = ManufacturedSolution(config.params.eta)
    exact.self_test()
    domain = config.domain()

    def level(n):
        log.info("convergence level %d", n)
        mesh = build_structured_mesh(n, n, config.bbox)
        return _solve_case(mesh, domain, config.params, exact, config.error_degree)

    results = _map(level, config.levels)
    rows = [r[0] for r in results]
    hs = [r["h"] for r in rows]
    slopes = {k: eoc(hs, [r[k] for r in rows]) for k in ERROR_COLUMNS}
    for i in range(len(rows) - 1):
        tag = f"eoc:{rows[i]['level']}-{rows[i + 1]['level']}"
        rows.append({"level": tag, **{k: slopes[k].pairwise[i] for k in ERROR_COLUMNS}})
    rows.append({"level": "eoc:fit", **{k: slopes[k].fit for k in ERROR_COLUMNS}})
    return ExperimentResult(
        CONVERGENCE_HEADER, rows, [r[1] for r in results], [r[2] for r in results]
    )


def run_sliver(config) -> ExperimentResult:
    """Square domain in background meshes dilated so that its edges cut the
    boundary cells at relative height epsilon."""
    if config.kind != "sliver":
        raise ValueError(f"expected a sliver config, got {config.kind!r}")
    exact = ManufacturedSolution(config.params.eta)
    domain = AxisBox(tuple(config.lower), tuple(config.upper))
    base = (*config.lower, *config.upper)
    cells = [(e, g, n) for e in config.epsilons for g in config.gamma_sigmas for n in config.levels]

    def cell(item):
        eps, gs, n = item
        log.info("sliver eps=%g gamma_sigma=%g n=%d", eps, gs, n)
        mesh = build_structured_mesh(n, n, dilated_bbox(eps, n, base))
        params = replace(config.params, gamma_sigma=gs)
        row, system, cut_sets = _solve_case(mesh, domain, params, exact, config.error_degree, fictitious=True)
        return {"epsilon": eps, "gamma_sigma": gs, **row}, system, cut_sets

    results = _map(cell, cells)
    return ExperimentResult(
        SLIVER_HEADER, [r[0] for r in results], [r[1] for r in results], [r[2] for r in results]
    )


def shrunk_box(bbox, n: int, epsilon: float) -> AxisBox:
    """Physical box whose edges sit ``(1 - epsilon)`` cell widths inside the
    background box."""
    x0, y0, x1, y1 = bbox
    ax = (1.0 - epsilon) * (x1 - x0) / n
    ay = (1.0 - epsilon) * (y1 - y0) / n
    return AxisBox((x0 + ax, y0 + ay), (x1 - ax, y1 - ay))


def run_condition(config) -> ExperimentResult:
    """Spectral condition numbers for a fixed mesh and a shrinking square."""
    if config.kind != "condition":
        raise ValueError(f"expected a condition config, got {config.kind!r}")
    n = config.levels[0]
    mesh = build_structured_mesh(n, n, config.bbox)
    cells = [(e, g) for e in config.epsilons for g in config.gamma_sigmas]

    def cell(item):
        eps, gs = item
        log.info("condition eps=%g gamma_sigma=%g", eps, gs)
        cut_sets = collect_cut_sets(mesh, shrunk_box(config.bbox, n, eps))
        system = assemble_system(cut_sets, replace(config.params, gamma_sigma=gs))
        row = {"epsilon": eps, "gamma_sigma": gs, "ndof": system.n, "kappa2": condition_number(system)}
        return row, system, cut_sets

    results = _map(cell, cells)
    return ExperimentResult(
        CONDITION_HEADER, [r[0] for r in results], [r[1] for r in results], [r[2] for r in results]
    )


RUNNERS = {"convergence": run_convergence, "sliver": run_sliver, "condition": run_condition}


def run_experiment(config) -> ExperimentResult:
    return RUNNERS[config.kind](config)
