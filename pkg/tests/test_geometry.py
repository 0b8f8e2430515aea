import numpy as np
import pytest

from cutstokes3f.geometry import (
    AffineDomain,
    AssumptionViolation,
    AxisBox,
    Circle,
    Classification,
    CoverageError,
    classify_element,
    classify_values,
    collect_cut_sets,
    cut_element,
    fitted_cut_sets,
    validate_assumptions,
    write_svg,
)
from cutstokes3f.mesh import build_structured_mesh, dilated_bbox

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class Linear:
    def __init__(self, a, b, c):
        self.a, self.b, self.c = a, b, c

    def __call__(self, x):
        x = np.atleast_2d(x)
        return self.a * x[:, 0] + self.b * x[:, 1] + self.c


def test_circle_and_box_are_signed_distances():
    c = Circle((0.5, -0.25), 2.0)
    pts = np.array([[0.5, -0.25], [3.5, -0.25], [0.5, 1.75]])
    assert np.allclose(c(pts), [-2.0, 1.0, 0.0])
    b = AxisBox((-1, -1), (1, 2))
    pts = np.array([[0.0, 0.5], [2.0, 0.5], [2.0, 3.0], [0.9, 0.5], [0.0, 1.9]])
    assert np.allclose(b(pts), [-1.0, 1.0, np.sqrt(2.0), -0.1, -0.1])


def test_affine_domain_maps_membership():
    base = Circle((0, 0), 1.0)
    d = AffineDomain(base, ((2.0, 0.0), (0.0, 0.5)), (1.0, 1.0))
    assert d(np.array([[2.9, 1.0]]))[0] < 0
    assert d(np.array([[1.0, 1.6]]))[0] > 0
    with pytest.raises(ValueError):
        AffineDomain(base, ((1.0, 2.0), (0.5, 1.0)))


def test_classification_examples():
    circle = Circle()
    small = 0.3 * REF
    assert classify_element(small, circle) is Classification.INSIDE
    far = REF + np.array([3.0, 3.0])
    assert classify_element(far, circle) is Classification.OUTSIDE
    assert classify_values(np.array([-1.0, -1.0, 1.0]), 1.0) is Classification.CUT


def test_vertex_on_boundary_is_snapped_outside():
    # one vertex exactly on the zero level, the others on both sides
    assert classify_values(np.array([0.0, -1.0, 1.0]), 1.0) is Classification.CUT
    assert classify_values(np.array([0.0, 1.0, 1.0]), 1.0) is Classification.OUTSIDE
    # an edge on the boundary keeps the element inside
    assert classify_values(np.array([0.0, 0.0, -1.0]), 1.0) is Classification.INSIDE


def test_cut_element_vertical_line():
    d = cut_element(REF, Linear(1, 0, -0.5))
    assert d.tag is Classification.CUT
    assert d.area == pytest.approx(0.375, rel=1e-14)
    assert len(d.segments) == 1
    seg = d.segments[0]
    assert sorted(map(tuple, np.round(seg, 14))) == [(0.5, 0.0), (0.5, 0.5)]
    assert np.linalg.norm(seg[1] - seg[0]) == pytest.approx(0.5)
    assert np.allclose(d.normals[0], [1.0, 0.0])


def test_cut_element_requires_crossing():
    with pytest.raises(ValueError):
        cut_element(REF, Linear(1, 0, -10))


def test_cut_element_area_monte_carlo():
    d = cut_element(REF, Linear(0, 1, -0.25))
    rng = np.random.default_rng(3)
    s = rng.uniform(size=(4_000_000, 2))
    in_tri = s.sum(axis=1) < 1.0
    mc = np.mean(in_tri & (s[:, 1] < 0.25))  # unit-square sampling
    assert d.area == pytest.approx(mc, abs=1e-3)
    assert d.area == pytest.approx(0.5 - 0.5 * 0.75**2, rel=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_cut_decomposition_invariants(seed):
    rng = np.random.default_rng(seed)
    circle = Circle(tuple(rng.uniform(-0.2, 0.2, 2)), rng.uniform(0.5, 1.0))
    cs = collect_cut_sets(build_structured_mesh(12, 12, (-1.2, -1.2, 1.2, 1.2)), circle)
    for t in cs.cut_elements:
        d = cs.decompositions[int(t)]
        e1 = d.subtriangles[:, 1] - d.subtriangles[:, 0]
        e2 = d.subtriangles[:, 2] - d.subtriangles[:, 0]
        assert np.all(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] > 0)
        assert np.allclose(np.linalg.norm(d.normals, axis=1), 1.0)
        mid = d.segments.mean(axis=1)
        # normal points away from the domain
        assert np.all(circle(mid + 1e-6 * d.normals) > circle(mid))


def test_partition_has_no_overlap():
    cs = collect_cut_sets(build_structured_mesh(6, 6, (-1.5, -1.5, 1.5, 1.5)), Circle())
    tris = np.concatenate([d.subtriangles for d in cs.decompositions.values()])
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, size=(20000, 2))

    def contains(tri, p):
        a, b, c = tri
        def cross(u, v, w):
            return (v[0] - u[0]) * (w[:, 1] - u[1]) - (v[1] - u[1]) * (w[:, 0] - u[0])
        return (cross(a, b, p) > 0) & (cross(b, c, p) > 0) & (cross(c, a, p) > 0)

    count = np.zeros(len(pts), dtype=int)
    for tri in tris:
        count += contains(tri, pts)
    assert count.max() <= 1
    # strictly inside the linearized domain means covered exactly once
    assert np.all(count[Circle()(pts) < -0.1] == 1)


def test_area_and_perimeter_converge_at_second_order():
    hs, ea, ep = [], [], []
    for n in (8, 16, 32, 64):
        cs = collect_cut_sets(build_structured_mesh(n, n, (-1.5, -1.5, 1.5, 1.5)), Circle())
        hs.append(cs.mesh.h_global)
        ea.append(abs(cs.area() - np.pi))
        ep.append(abs(cs.boundary_length() - 2 * np.pi))
    assert np.polyfit(np.log(hs), np.log(ea), 1)[0] >= 1.95
    assert np.polyfit(np.log(hs), np.log(ep), 1)[0] >= 1.95


def test_segment_normals_approximate_radial_normal():
    devs = []
    for n in (8, 16, 32):
        cs = collect_cut_sets(build_structured_mesh(n, n, (-1.5, -1.5, 1.5, 1.5)), Circle())
        worst = 0.0
        for t in cs.cut_elements:
            d = cs.decompositions[int(t)]
            mid = d.segments.mean(axis=1)
            radial = mid / np.linalg.norm(mid, axis=1)[:, None]
            worst = max(worst, np.max(np.linalg.norm(d.normals - radial, axis=1)))
        devs.append(worst / cs.mesh.h_global)
    assert max(devs) < 1.0


def test_cut_sets_for_circle():
    cs = collect_cut_sets(build_structured_mesh(4, 4, (-2, -2, 2, 2)), Circle())
    assert len(cs.cut_elements) > 0
    assert len(cs.ghost_faces) > 0
    assert set(cs.cut_elements) <= set(cs.active_elements)
    fe = cs.mesh.face_elements
    for f in cs.ghost_faces:
        assert fe[f, 1] >= 0
        assert cs.tags[fe[f, 0]] == 1 or cs.tags[fe[f, 1]] == 1
    # exactly the interior faces touching a cut element
    expected = [f for f in cs.interior_faces if 1 in (cs.tags[fe[f, 0]], cs.tags[fe[f, 1]])]
    assert list(cs.ghost_faces) == expected
    inactive = np.setdiff1d(np.arange(cs.mesh.n_triangles), cs.active_elements)
    assert np.all(Circle()(cs.mesh.vertices[cs.mesh.triangles[inactive]].reshape(-1, 2)) >= 0)


def test_domain_containing_whole_mesh():
    cs = collect_cut_sets(build_structured_mesh(3, 3, (0, 0, 1, 1)), Circle((0.5, 0.5), 10.0))
    assert len(cs.cut_elements) == 0
    assert len(cs.ghost_faces) == 0
    assert len(cs.active_elements) == 18


def test_fitted_square_has_no_cut_elements():
    mesh = build_structured_mesh(10, 10, dilated_bbox(1.0, 10))
    cs = collect_cut_sets(mesh, AxisBox())
    assert len(cs.cut_elements) == 0
    assert len(cs.active_elements) == mesh.n_triangles
    assert cs.boundary_length() == pytest.approx(8.0, rel=1e-14)
    fitted = fitted_cut_sets(mesh)
    for t, d in cs.decompositions.items():
        other = fitted.decompositions[t]
        assert np.array_equal(d.segments, other.segments)
        assert np.array_equal(d.normals, other.normals)


def test_coverage_error_names_face():
    mesh = build_structured_mesh(4, 4, (-1, -1, 1, 1))
    with pytest.raises(CoverageError, match="exterior face"):
        collect_cut_sets(mesh, Circle((1.0, 0.0), 0.5))


def test_g3_walk_on_circle():
    cs = collect_cut_sets(build_structured_mesh(16, 16, (-2, -2, 2, 2)), Circle())
    report = validate_assumptions(cs)
    assert report.ok
    assert 1 <= report.max_walk <= 3
    assert set(report.walks) == set(int(t) for t in cs.cut_elements)


def test_g3_violation_when_everything_is_cut():
    # only one vertex is inside, so no element is fully inside
    cs = collect_cut_sets(build_structured_mesh(3, 3, (-1.5, -1.5, 1.5, 1.5)), Circle((0.5, 0.5), 0.6))
    assert len(cs.cut_elements) == 6
    assert len(cs.inside_elements) == 0
    with pytest.raises(AssumptionViolation):
        validate_assumptions(cs)


def test_g3_fitted_square_is_trivial():
    cs = fitted_cut_sets(build_structured_mesh(4, 4, (-1, -1, 1, 1)))
    assert validate_assumptions(cs).max_walk == 0


def test_svg_export(tmp_path):
    cs = collect_cut_sets(build_structured_mesh(6, 6, (-1.5, -1.5, 1.5, 1.5)), Circle())
    path = tmp_path / "cut.svg"
    write_svg(cs, path)
    text = path.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polygon") == cs.mesh.n_triangles + sum(len(d.subtriangles) for d in cs.decompositions.values())
