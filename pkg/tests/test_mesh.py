import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutstokes3f.mesh import build_structured_mesh, dilated_bbox


def test_smallest_mesh(unit_square_mesh):
    m = unit_square_mesh
    assert m.n_vertices == 4
    assert m.n_triangles == 2
    assert m.n_faces == 5
    assert len(m.interior_faces) == 1


def test_condition_study_mesh_size():
    m = build_structured_mesh(10, 10, (-1, -1, 1, 1))
    assert m.dx == pytest.approx(0.2)
    assert m.h_global == pytest.approx(0.2 * np.sqrt(2))
    assert round(m.h_global, 4) == 0.2828


def test_two_by_two_face_counts():
    # 6 horizontal + 6 vertical + 4 diagonal edges, 8 of them on the boundary
    m = build_structured_mesh(2, 2, (0, 0, 1, 1))
    assert m.n_triangles == 8
    assert m.n_faces == 16
    assert len(m.interior_faces) == 8


@pytest.mark.parametrize("bbox", [(0, 0, 0, 1), (0, 0, 1, 0), (1, 0, 0, 1)])
def test_degenerate_bbox(bbox):
    with pytest.raises(ValueError):
        build_structured_mesh(2, 2, bbox)


def test_nonpositive_counts():
    with pytest.raises(ValueError):
        build_structured_mesh(0, 3, (0, 0, 1, 1))


@settings(max_examples=25, deadline=None)
@given(
    nx=st.integers(1, 9),
    ny=st.integers(1, 9),
    x0=st.floats(-5, 5),
    y0=st.floats(-5, 5),
    w=st.floats(0.1, 10),
    ht=st.floats(0.1, 10),
)
def test_mesh_invariants(nx, ny, x0, y0, w, ht):
    m = build_structured_mesh(nx, ny, (x0, y0, x0 + w, y0 + ht))
    areas = m.signed_areas()
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(w * ht, rel=1e-12)
    assert m.n_vertices == (nx + 1) * (ny + 1)
    counts = (m.face_elements >= 0).sum(axis=1)
    assert set(np.unique(counts)) <= {1, 2}
    d = m.diameters()
    assert d.max() / d.min() <= 2.0
    assert m.h_global == pytest.approx(d.max())
    assert np.allclose(np.linalg.norm(m.face_normals, axis=1), 1.0)


def test_interior_faces_have_opposite_orientations():
    m = build_structured_mesh(4, 3, (0, 0, 2, 1))
    for f in m.interior_faces:
        a, b = m.faces[f]
        dirs = []
        for t in m.face_elements[f]:
            tri = list(m.triangles[t])
            i, j = tri.index(a), tri.index(b)
            dirs.append((j - i) % 3 == 1)  # a -> b in CCW traversal
        assert dirs[0] != dirs[1]


def test_face_normals_point_from_first_to_second():
    m = build_structured_mesh(3, 3, (0, 0, 1, 1))
    c = m.triangle_coords().mean(axis=1)
    for f in m.interior_faces:
        t0, t1 = m.face_elements[f]
        assert np.dot(c[t1] - c[t0], m.face_normals[f]) > 0
    for f in m.exterior_faces:
        t0 = m.face_elements[f, 0]
        mid = m.vertices[m.faces[f]].mean(axis=0)
        assert np.dot(mid - c[t0], m.face_normals[f]) > 0


def test_dilated_bbox_examples():
    assert dilated_bbox(1.0, 7) == (-1.0, -1.0, 1.0, 1.0)
    l = dilated_bbox(0.5, 10)[2] - 1.0
    assert l == pytest.approx(1 / 9, rel=1e-14)
    l = dilated_bbox(0.1, 20)[2] - 1.0
    assert l == pytest.approx(1.8 / 18.2, rel=1e-14)
    assert l == pytest.approx(0.098901, abs=1e-6)


@pytest.mark.parametrize("eps,n", [(0.5, 10), (0.1, 20), (0.02, 40), (0.004, 16)])
def test_dilated_mesh_cuts_boundary_cells_at_relative_height(eps, n):
    m = build_structured_mesh(n, n, dilated_bbox(eps, n))
    xs = np.unique(m.vertices[:, 0])
    inner = xs[xs < 1.0].max()
    assert 1.0 - inner == pytest.approx(eps * m.dx, rel=1e-12)


def test_dilated_bbox_errors():
    with pytest.raises(ValueError):
        dilated_bbox(0.0, 10)
    with pytest.raises(ValueError):
        dilated_bbox(1.5, 10)
    with pytest.raises(ValueError):
        dilated_bbox(0.1, 1)
