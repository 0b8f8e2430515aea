import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutstokes3f.assembly import Params, assemble_system
from cutstokes3f.geometry import Circle, collect_cut_sets, fitted_cut_sets
from cutstokes3f.manufactured import ManufacturedSolution
from cutstokes3f.mesh import build_structured_mesh
from cutstokes3f.postprocess import (
    compute_errors,
    eoc,
    fictitious_stress_error,
    triple_norm,
    triple_norm_matrix,
)
from cutstokes3f.solver import solve_direct
from cutstokes3f.spaces import FieldCoefficients, build_layout, interpolate


@pytest.fixture(scope="module")
def case():
    return collect_cut_sets(build_structured_mesh(10, 10, (-1.5, -1.5, 1.5, 1.5)), Circle())


def test_eoc_of_exact_power_law():
    hs = [0.4, 0.2, 0.1, 0.05]
    orders = eoc(hs, [3.0 * h**2 for h in hs])
    assert np.allclose(orders.pairwise, 2.0)
    assert orders.fit == pytest.approx(2.0)
    assert orders.last == pytest.approx(2.0)


@pytest.mark.parametrize(
    "hs,errs",
    [([0.1], [1.0]), ([0.1, 0.2], [1.0, 0.5]), ([0.2, 0.1], [1.0, 0.0]), ([0.2, 0.1], [1.0, np.nan])],
)
def test_eoc_rejects_bad_input(hs, errs):
    with pytest.raises(ValueError):
        eoc(hs, errs)


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(0.5, 4.0), c=st.floats(1e-3, 1e3))
def test_eoc_recovers_rate(rate, c):
    hs = [1.0 / n for n in (8, 16, 32)]
    assert eoc(hs, [c * h**rate for h in hs]).fit == pytest.approx(rate, rel=1e-9)


def test_errors_of_exact_linear_fields_vanish(case):
    class Linear:
        eta = 0.5

        def velocity(self, x):
            return np.stack([x[:, 1], 2 * x[:, 0]], axis=1)

        def velocity_gradient(self, x):
            g = np.zeros((len(x), 2, 2))
            g[:, 0, 1] = 1.0
            g[:, 1, 0] = 2.0
            return g

        def stress(self, x):
            return np.tile(np.array([[0.0, 1.5], [1.5, 0.0]]) * self.eta, (len(x), 1, 1))

        def pressure(self, x):
            return x[:, 0] - x[:, 1]

    ex = Linear()
    layout = build_layout(case)
    coeffs = interpolate(layout, sigma=lambda z: ex.stress(z).reshape(-1, 4), u=ex.velocity, p=lambda z: ex.pressure(z) + 5.0)
    rep = compute_errors(coeffs, ex, case, Params())
    for v in (rep.err_L2_u, rep.err_H1_u, rep.err_L2_p, rep.err_L2_sigma, rep.triple_norm):
        assert v < 1e-12


def test_error_of_zero_field_is_the_exact_norm(case):
    ms = ManufacturedSolution()
    rep = compute_errors(FieldCoefficients(build_layout(case)), ms, case, Params())
    # independent Monte Carlo estimate of ||u_x|| over the linearized disc
    rng = np.random.default_rng(11)
    pts = rng.uniform(-1, 1, size=(400_000, 2))
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) < 1.0]
    ux2 = np.mean(ms.velocity(pts)[:, 0] ** 2) * case.area()
    assert rep.err_L2_u > np.sqrt(ux2)
    assert rep.err_L2_u == pytest.approx(2 * np.sqrt(ux2), rel=2e-2)


def test_triple_norm_matrix_agrees_with_quadrature(case):
    P = Params()
    layout = build_layout(case)
    rng = np.random.default_rng(5)
    for discrete in (False, True):
        M = triple_norm_matrix(case, layout, P, discrete=discrete)
        for _ in range(3):
            x = rng.standard_normal(layout.ndof)
            x[layout.multiplier] = 0.0
            tn = triple_norm(FieldCoefficients(layout, x), case, P, discrete=discrete)
            assert x @ (M @ x) == pytest.approx(tn**2, rel=1e-11)


def test_layout_mismatch_detected(case):
    other = fitted_cut_sets(build_structured_mesh(3, 3, (0, 0, 1, 1)))
    with pytest.raises(ValueError):
        triple_norm(FieldCoefficients(build_layout(other)), case, Params())


def test_fictitious_error_dominates_physical_error(case):
    ms = ManufacturedSolution()
    system = assemble_system(case, Params(), ms.body_force, ms.boundary_data)
    coeffs = FieldCoefficients(system.layout, solve_direct(system).x)
    phys = compute_errors(coeffs, ms, case, Params()).err_L2_sigma
    assert fictitious_stress_error(coeffs, ms, case) >= phys * 0.99
