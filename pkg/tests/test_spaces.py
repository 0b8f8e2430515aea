import numpy as np
import pytest

from cutstokes3f.geometry import Circle, collect_cut_sets, fitted_cut_sets
from cutstokes3f.mesh import build_structured_mesh
from cutstokes3f.spaces import (
    FIELDS,
    FieldCoefficients,
    barycentric,
    barycentric_gradients,
    build_layout,
    interpolate,
)


def test_hand_counted_layout():
    # only the four interior vertices are inside; the SE lower and NW upper
    # triangles touch none of them, leaving corners (3,0) and (0,3) unused
    mesh = build_structured_mesh(3, 3, (0, 0, 3, 3))
    cs = collect_cut_sets(mesh, Circle((1.5, 1.5), 0.8))
    assert len(cs.inside_elements) == 2
    assert len(cs.active_elements) == 16
    assert sorted(set(range(16)) - set(cs.active_vertices)) == [3, 12]
    layout = build_layout(cs)
    assert layout.ndof == 7 * 14 + 1 == 99
    assert layout.multiplier == 98
    assert np.array_equal(layout.field_dofs("p"), np.arange(84, 98))
    assert np.array_equal(layout.field_dofs("u"), np.arange(56, 84))


def test_layout_is_a_partition(circle_cut_16):
    layout = build_layout(circle_cut_16)
    all_dofs = np.concatenate([layout.field_dofs(n) for n in FIELDS] + [[layout.multiplier]])
    assert np.array_equal(np.sort(all_dofs), np.arange(layout.ndof))
    inactive = np.setdiff1d(np.arange(layout.mesh.n_vertices), layout.active_vertices)
    assert np.all(layout.vertex_to_local[inactive] == -1)
    with pytest.raises(ValueError):
        layout.dofs(0, inactive[:1])


def test_empty_active_set_rejected():
    mesh = build_structured_mesh(2, 2, (0, 0, 1, 1))
    cs = collect_cut_sets(mesh, Circle((5.0, 5.0), 0.5))
    with pytest.raises(ValueError):
        build_layout(cs)


def test_barycentric_gradients_sum_to_zero():
    mesh = build_structured_mesh(3, 2, (0, 0, 3, 1))
    g, areas = barycentric_gradients(mesh)
    assert np.allclose(g.sum(axis=1), 0.0)
    assert np.allclose(areas, 0.25)
    lam = barycentric(mesh, np.arange(mesh.n_triangles), mesh.triangle_coords().mean(axis=1))
    assert np.allclose(lam, 1 / 3)


def test_linear_fields_interpolate_exactly():
    cs = fitted_cut_sets(build_structured_mesh(4, 4, (-1, -1, 1, 1)))
    layout = build_layout(cs)
    coeffs = interpolate(
        layout,
        sigma=lambda x: np.stack([x[:, 0], x[:, 1], 2 * x[:, 0], -x[:, 1]], axis=1),
        u=lambda x: np.stack([x[:, 1], -x[:, 0]], axis=1),
        p=lambda x: 3 * x[:, 0] - x[:, 1] + 1,
    )
    pt = np.array([0.1, -0.3])
    t = 0
    for t in range(layout.mesh.n_triangles):
        if np.all(barycentric(layout.mesh, t, pt) >= 0):
            break
    assert coeffs.evaluate("p", pt, t) == pytest.approx(3 * 0.1 + 0.3 + 1)
    assert np.allclose(coeffs.evaluate("u", pt, t), [-0.3, -0.1])
    assert np.allclose(coeffs.evaluate("sigma", pt, t), [[0.1, -0.3], [0.2, 0.3]])
    assert np.allclose(coeffs.gradient("p", t), [3.0, -1.0])
    # rigid rotation has no strain
    assert np.allclose(coeffs.symmetric_gradient(t), 0.0, atol=1e-14)


def test_evaluate_rejects_point_outside_element():
    cs = fitted_cut_sets(build_structured_mesh(2, 2, (0, 0, 1, 1)))
    coeffs = FieldCoefficients(build_layout(cs))
    with pytest.raises(ValueError):
        coeffs.evaluate("p", [0.9, 0.9], 0)


def test_coefficient_shape_checked():
    cs = fitted_cut_sets(build_structured_mesh(2, 2, (0, 0, 1, 1)))
    with pytest.raises(ValueError):
        FieldCoefficients(build_layout(cs), np.zeros(5))
