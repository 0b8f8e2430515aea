"""Flat ``key = value`` experiment configuration files.

Lines starting with ``#`` and blank lines are ignored; keys are namespaced
(``mesh.levels``, ``params.gamma_sigma``, ``geometry.kind``).  Lists are
comma separated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from cutstokes3f.assembly import Params
from cutstokes3f.geometry import AxisBox, Circle

KINDS = ("convergence", "sliver", "condition")


class ConfigError(ValueError):
    pass


def default_params(kind: str) -> Params:
    if kind == "convergence":
        return Params(eta=0.5, gamma_u=0.01, gamma_p=0.1, gamma_sigma=0.1, gamma_b=15.0)
    return Params(eta=0.5, gamma_u=0.1, gamma_p=0.1, gamma_sigma=0.1, gamma_b=15.0)


_DEFAULTS = {
    "convergence": dict(
        geometry_kind="circle",
        bbox=(-1.5, -1.5, 1.5, 1.5),
        levels=(8, 16, 32, 64),
        epsilons=(),
        gamma_sigmas=(),
    ),
    "sliver": dict(
        geometry_kind="box",
        bbox=(-1.0, -1.0, 1.0, 1.0),
        levels=(10, 20, 40),
        epsilons=(0.5, 0.1, 0.02, 0.004),
        gamma_sigmas=(0.0, 0.1),
    ),
    "condition": dict(
        geometry_kind="box",
        bbox=(-1.0, -1.0, 1.0, 1.0),
        levels=(10,),
        epsilons=(0.5, 0.1, 0.02, 0.004, 0.0008),
        gamma_sigmas=(0.0, 0.001, 0.1, 1.0),
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    ``bbox`` is the background box for the convergence and condition
    studies; for the sliver study the box of the square domain is dilated
    per sliver parameter and ``bbox`` is unused.  ``levels`` are cells per
    direction.
    """

    kind: str
    geometry_kind: str = "circle"
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    lower: tuple[float, float] = (-1.0, -1.0)
    upper: tuple[float, float] = (1.0, 1.0)
    bbox: tuple[float, float, float, float] = (-1.5, -1.5, 1.5, 1.5)
    levels: tuple[int, ...] = (8, 16, 32, 64)
    epsilons: tuple[float, ...] = ()
    gamma_sigmas: tuple[float, ...] = ()
    params: Params = field(default_factory=Params)
    error_degree: int = 6
    output: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"experiment.kind must be one of {KINDS}, got {self.kind!r}")
        if self.geometry_kind not in ("circle", "box"):
            raise ConfigError(f"geometry.kind must be 'circle' or 'box', got {self.geometry_kind!r}")
        if any(n < 1 for n in self.levels):
            raise ConfigError(f"mesh.levels must be positive, got {self.levels}")
        if any(not 0.0 < e <= 1.0 for e in self.epsilons):
            raise ConfigError(f"sweep.epsilons must lie in (0, 1], got {self.epsilons}")
        if any(g < 0 for g in self.gamma_sigmas):
            raise ConfigError(f"sweep.gamma_sigmas must be non-negative, got {self.gamma_sigmas}")
        if self.radius <= 0:
            raise ConfigError(f"geometry.radius must be positive, got {self.radius}")
        if not 1 <= self.error_degree <= 6:
            raise ConfigError(f"quadrature.error_degree must lie in 1..6, got {self.error_degree}")
        x0, y0, x1, y1 = self.bbox
        if not (x1 > x0 and y1 > y0):
            raise ConfigError(f"mesh.bbox is degenerate: {self.bbox}")
        if self.kind == "convergence" and len(self.levels) < 2:
            raise ConfigError("a convergence study needs at least two mesh levels")
        if self.kind in ("sliver", "condition") and (not self.epsilons or not self.gamma_sigmas):
            raise ConfigError(f"a {self.kind} study needs sweep.epsilons and sweep.gamma_sigmas")

    def domain(self):
        if self.geometry_kind == "circle":
            return Circle(tuple(self.center), self.radius)
        return AxisBox(tuple(self.lower), tuple(self.upper))

    def to_text(self) -> str:
        p = self.params
        rows = [
            ("experiment.kind", self.kind),
            ("geometry.kind", self.geometry_kind),
            ("geometry.center", _fmt_list(self.center)),
            ("geometry.radius", _fmt(self.radius)),
            ("geometry.lower", _fmt_list(self.lower)),
            ("geometry.upper", _fmt_list(self.upper)),
            ("mesh.bbox", _fmt_list(self.bbox)),
            ("mesh.levels", _fmt_list(self.levels)),
            ("sweep.epsilons", _fmt_list(self.epsilons)),
            ("sweep.gamma_sigmas", _fmt_list(self.gamma_sigmas)),
            ("params.eta", _fmt(p.eta)),
            ("params.gamma_u", _fmt(p.gamma_u)),
            ("params.gamma_p", _fmt(p.gamma_p)),
            ("params.gamma_sigma", _fmt(p.gamma_sigma)),
            ("params.gamma_b", _fmt(p.gamma_b)),
            ("params.penalty_variant", p.penalty_variant),
            ("quadrature.volume_degree", str(p.volume_degree)),
            ("quadrature.boundary_degree", str(p.boundary_degree)),
            ("quadrature.error_degree", str(self.error_degree)),
            ("output.path", self.output),
        ]
        return "".join(f"{k} = {v}\n" for k, v in rows)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _fmt_list(xs) -> str:
    return ",".join(_fmt(x) for x in xs)


def _floats(text: str, key: str, count: int | None = None) -> tuple[float, ...]:
    if not text.strip():
        vals = ()
    else:
        try:
            vals = tuple(float(t) for t in text.split(","))
        except ValueError as exc:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) != count:
        raise ConfigError(f"{key}: expected {count} numbers, got {len(vals)}")
    return vals


def _ints(text: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",")) if text.strip() else ()
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from exc


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from exc


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


_PARAM_KEYS = {
    "params.eta": ("eta", _float),
    "params.gamma_u": ("gamma_u", _float),
    "params.gamma_p": ("gamma_p", _float),
    "params.gamma_sigma": ("gamma_sigma", _float),
    "params.gamma_b": ("gamma_b", _float),
    "params.penalty_variant": ("penalty_variant", lambda t, k: t),
    "quadrature.volume_degree": ("volume_degree", _int),
    "quadrature.boundary_degree": ("boundary_degree", _int),
}

_KEYS = {
    "geometry.kind": ("geometry_kind", lambda t, k: t),
    "geometry.center": ("center", lambda t, k: _floats(t, k, 2)),
    "geometry.radius": ("radius", _float),
    "geometry.lower": ("lower", lambda t, k: _floats(t, k, 2)),
    "geometry.upper": ("upper", lambda t, k: _floats(t, k, 2)),
    "mesh.bbox": ("bbox", lambda t, k: _floats(t, k, 4)),
    "mesh.levels": ("levels", _ints),
    "sweep.epsilons": ("epsilons", _floats),
    "sweep.gamma_sigmas": ("gamma_sigmas", _floats),
    "quadrature.error_degree": ("error_degree", _int),
    "output.path": ("output", lambda t, k: t),
}


def parse_config(text: str) -> ExperimentConfig:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key != "experiment.kind" and key not in _KEYS and key not in _PARAM_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        entries[key] = value

    if "experiment.kind" not in entries:
        raise ConfigError("missing experiment.kind")
    kind = entries["experiment.kind"]
    if kind not in KINDS:
        raise ConfigError(f"experiment.kind must be one of {KINDS}, got {kind!r}")

    fields = dict(_DEFAULTS[kind])
    for key, (name, conv) in _KEYS.items():
        if key in entries:
            fields[name] = conv(entries[key], key)
    overrides = {name: conv(entries[key], key) for key, (name, conv) in _PARAM_KEYS.items() if key in entries}
    try:
        params = dataclasses.replace(default_params(kind), **overrides)
        return ExperimentConfig(kind=kind, params=params, **fields)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def read_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
