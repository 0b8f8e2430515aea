"""Level-set domains, element classification and cut-cell decomposition.

Within every element the boundary is replaced by the zero line of the linear
interpolant of the level set at the vertices.  Vertex values closer to zero
than ``1e-12 * h`` are pushed to the outside so that every cut crosses two
distinct edges.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from cutstokes3f.mesh import BackgroundMesh

SNAP_FACTOR = 1e-12


class CoverageError(ValueError):
    """The physical domain leaves the background mesh."""


class AssumptionViolation(ValueError):
    """The boundary is not resolved well enough by the mesh."""


# ---------------------------------------------------------------------------
# level sets


class LevelSetDomain:
    """Implicit domain ``{phi < 0}``; subclasses implement ``__call__``."""

    def __call__(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def normal(self, x: np.ndarray, step: float = 1e-7) -> np.ndarray:
        """Unit normal from a central-difference gradient of ``phi``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ex = np.array([step, 0.0])
        ey = np.array([0.0, step])
        g = np.column_stack([self(x + ex) - self(x - ex), self(x + ey) - self(x - ey)])
        return g / np.linalg.norm(g, axis=1)[:, None]


@dataclass(frozen=True)
class Circle(LevelSetDomain):
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.hypot(x[:, 0] - self.center[0], x[:, 1] - self.center[1]) - self.radius

    @property
    def area(self) -> float:
        return np.pi * self.radius**2

    @property
    def perimeter(self) -> float:
        return 2.0 * np.pi * self.radius


@dataclass(frozen=True)
class AxisBox(LevelSetDomain):
    lower: tuple[float, float] = (-1.0, -1.0)
    upper: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if not (self.upper[0] > self.lower[0] and self.upper[1] > self.lower[1]):
            raise ValueError(f"degenerate box {self.lower}..{self.upper}")

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        d = np.abs(x - center) - half
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=1)
        inside = np.minimum(d.max(axis=1), 0.0)
        return outside + inside

    @property
    def area(self) -> float:
        return (self.upper[0] - self.lower[0]) * (self.upper[1] - self.lower[1])

    @property
    def perimeter(self) -> float:
        return 2.0 * ((self.upper[0] - self.lower[0]) + (self.upper[1] - self.lower[1]))


@dataclass(frozen=True)
class AffineDomain(LevelSetDomain):
    """Image ``{A y + b : y in base}`` of another level-set domain."""

    base: LevelSetDomain
    matrix: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if abs(np.linalg.det(np.asarray(self.matrix, dtype=float))) < 1e-14:
            raise ValueError("affine map must be invertible")

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inv = np.linalg.inv(np.asarray(self.matrix, dtype=float))
        y = (x - np.asarray(self.offset, dtype=float)) @ inv.T
        return self.base(y)


# ---------------------------------------------------------------------------
# per-element cutting


class Classification(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    CUT = "cut"


@dataclass(frozen=True, eq=False)
class CutDecomposition:
    """Inside sub-triangles ``(k, 3, 2)`` and boundary segments ``(m, 2, 2)``
    with outward unit normals ``(m, 2)`` of one background element."""

    element: int
    tag: Classification
    subtriangles: np.ndarray
    segments: np.ndarray
    normals: np.ndarray

    @property
    def area(self) -> float:
        if len(self.subtriangles) == 0:
            return 0.0
        return float(np.sum(_areas(self.subtriangles)))

    @property
    def boundary_length(self) -> float:
        if len(self.segments) == 0:
            return 0.0
        return float(np.sum(np.linalg.norm(self.segments[:, 1] - self.segments[:, 0], axis=1)))


def _areas(tris: np.ndarray) -> np.ndarray:
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _empty_decomposition(element: int, tag: Classification) -> CutDecomposition:
    return CutDecomposition(element, tag, np.zeros((0, 3, 2)), np.zeros((0, 2, 2)), np.zeros((0, 2)))


def snap_values(values: np.ndarray, h: float) -> np.ndarray:
    tol = SNAP_FACTOR * h
    values = np.array(values, dtype=float)
    values[np.abs(values) < tol] = tol
    return values


def classify_values(raw: np.ndarray, h: float, centroid_value: float | None = None) -> Classification:
    """Classify one element from its raw vertex values of ``phi``.

    When every vertex lies on the boundary the linear interpolant carries no
    information and ``centroid_value`` (``phi`` at the centroid) decides.
    """
    raw = np.asarray(raw, dtype=float)
    tol = SNAP_FACTOR * h
    if np.all(np.abs(raw) < tol) and centroid_value is not None and centroid_value < 0:
        return Classification.INSIDE
    # an edge lying on the boundary keeps the element inside (fitted case)
    if np.all(raw < tol) and np.any(raw <= -tol):
        return Classification.INSIDE
    snapped = snap_values(raw, h)
    if np.all(snapped > 0):
        return Classification.OUTSIDE
    return Classification.CUT


def _diameter(tri: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(tri - np.roll(tri, -1, axis=0), axis=1)))


def classify_element(triangle, phi: LevelSetDomain, h: float | None = None) -> Classification:
    tri = np.asarray(triangle, dtype=float)
    h = _diameter(tri) if h is None else h
    return classify_values(phi(tri), h, float(phi(tri.mean(axis=0)[None])[0]))


def edge_segment(tri: np.ndarray, k: int):
    """Edge opposite local vertex ``k`` with its unit normal pointing away
    from that vertex."""
    a = tri[(k + 1) % 3]
    b = tri[(k + 2) % 3]
    t = b - a
    n = np.array([t[1], -t[0]]) / np.hypot(t[0], t[1])
    if np.dot(tri[k] - a, n) > 0:
        n = -n
    return np.array([a, b]), n


def _ccw(tri: np.ndarray) -> np.ndarray:
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    if e1[0] * e2[1] - e1[1] * e2[0] < 0:
        return tri[[0, 2, 1]]
    return tri


def decompose(
    tri: np.ndarray,
    raw: np.ndarray,
    h: float,
    element: int = -1,
    centroid_value: float | None = None,
    boundary_edges=None,
) -> CutDecomposition:
    """Cut decomposition of one element from its raw vertex values.

    For an inside element, ``boundary_edges`` lists the local edges (by
    opposite vertex) lying on the boundary; by default every edge whose
    endpoints both sit on the zero level is taken.
    """
    tri = np.asarray(tri, dtype=float)
    tag = classify_values(raw, h, centroid_value)
    if tag is Classification.OUTSIDE:
        return _empty_decomposition(element, tag)
    if tag is Classification.INSIDE:
        if boundary_edges is None:
            on_gamma = np.abs(raw) < SNAP_FACTOR * h
            boundary_edges = [k for k in range(3) if on_gamma[(k + 1) % 3] and on_gamma[(k + 2) % 3]]
        segs, normals = [], []
        for k in boundary_edges:
            s, n = edge_segment(tri, k)
            segs.append(s)
            normals.append(n)
        return CutDecomposition(
            element,
            tag,
            tri[None].copy(),
            np.array(segs).reshape(-1, 2, 2),
            np.array(normals).reshape(-1, 2),
        )

    s = snap_values(raw, h)
    neg = s < 0
    lone = int(np.flatnonzero(neg)[0]) if neg.sum() == 1 else int(np.flatnonzero(~neg)[0])
    i, j = (lone + 1) % 3, (lone + 2) % 3

    def crossing(a, b):
        t = s[a] / (s[a] - s[b])
        return tri[a] + t * (tri[b] - tri[a])

    xi = crossing(lone, i)
    xj = crossing(lone, j)
    if neg[lone]:
        pieces = [np.array([tri[lone], xi, xj])]
    else:
        # quadrilateral xi, tri[i], tri[j], xj fanned from xi
        pieces = [np.array([xi, tri[i], tri[j]]), np.array([xi, tri[j], xj])]
    subtriangles = np.array([_ccw(p) for p in pieces])

    # gradient of the linear interpolant points towards phi > 0
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    jac = np.array([e1, e2]).T
    grad = np.linalg.solve(jac.T, np.array([s[1] - s[0], s[2] - s[0]]))
    normal = grad / np.linalg.norm(grad)
    return CutDecomposition(element, tag, subtriangles, np.array([[xi, xj]]), normal[None])


def cut_element(triangle, phi: LevelSetDomain, h: float | None = None, element: int = -1) -> CutDecomposition:
    """Decompose an element known to be crossed by the boundary."""
    tri = np.asarray(triangle, dtype=float)
    h = _diameter(tri) if h is None else h
    raw = phi(tri)
    if classify_values(raw, h, float(phi(tri.mean(axis=0)[None])[0])) is not Classification.CUT:
        raise ValueError("cut_element requires an element crossed by the boundary")
    return decompose(tri, raw, h, element)


# ---------------------------------------------------------------------------
# mesh-level sets


@dataclass(eq=False)
class CutSets:
    """Element and face sets of one mesh/domain configuration.

    ``cut_elements`` (elements crossed by the boundary), ``ghost_faces``
    (interior faces touching a cut element), ``active_elements`` (elements
    meeting the domain) and ``active_vertices``.  ``interior_faces`` are the
    faces shared by two active elements.  ``decompositions`` maps each active
    element to its cut decomposition.
    """

    mesh: BackgroundMesh
    tags: np.ndarray
    cut_elements: np.ndarray
    ghost_faces: np.ndarray
    active_elements: np.ndarray
    active_vertices: np.ndarray
    interior_faces: np.ndarray
    decompositions: dict = field(repr=False)

    @property
    def inside_elements(self) -> np.ndarray:
        return np.flatnonzero(self.tags == 0)

    def area(self) -> float:
        return float(sum(d.area for d in self.decompositions.values()))

    def boundary_length(self) -> float:
        return float(sum(d.boundary_length for d in self.decompositions.values()))


_TAG_CODE = {Classification.INSIDE: 0, Classification.CUT: 1, Classification.OUTSIDE: 2}


def _finish(mesh: BackgroundMesh, tags: np.ndarray, decomps: dict) -> CutSets:
    active = np.flatnonzero(tags != 2)
    cut = np.flatnonzero(tags == 1)
    is_active = tags != 2
    fe = mesh.face_elements
    both = (fe[:, 1] >= 0) & is_active[fe[:, 0]] & is_active[np.maximum(fe[:, 1], 0)]
    interior = np.flatnonzero(both)
    is_cut = tags == 1
    ghost = interior[is_cut[fe[interior, 0]] | is_cut[fe[interior, 1]]]
    verts = np.unique(mesh.triangles[active]) if len(active) else np.zeros(0, dtype=np.int64)
    return CutSets(
        mesh=mesh,
        tags=tags,
        cut_elements=cut,
        ghost_faces=ghost,
        active_elements=active,
        active_vertices=verts,
        interior_faces=interior,
        decompositions={int(t): decomps[int(t)] for t in active},
    )


def collect_cut_sets(mesh: BackgroundMesh, phi: LevelSetDomain) -> CutSets:
    """Classify and cut every element of ``mesh`` against ``phi``."""
    h = mesh.h_global
    raw = phi(mesh.vertices)
    snapped = snap_values(raw, h)

    ext = mesh.exterior_faces
    sv = snapped[mesh.faces[ext]]
    crossed = (sv[:, 0] < 0) != (sv[:, 1] < 0)
    if np.any(crossed):
        f = int(ext[np.flatnonzero(crossed)[0]])
        a, b = mesh.vertices[mesh.faces[f]]
        raise CoverageError(
            f"domain boundary crosses exterior face {f} ({a.tolist()} -> {b.tolist()}); "
            "enlarge the background mesh"
        )

    coords = mesh.triangle_coords()
    tol = SNAP_FACTOR * h
    tri_raw = raw[mesh.triangles]
    degenerate = np.flatnonzero(np.all(np.abs(tri_raw) < tol, axis=1))
    centroids = np.full(mesh.n_triangles, np.nan)
    if len(degenerate):
        centroids[degenerate] = phi(coords[degenerate].mean(axis=1))

    def centroid(t):
        return None if np.isnan(centroids[t]) else float(centroids[t])

    tags = np.array(
        [_TAG_CODE[classify_values(tri_raw[t], h, centroid(t))] for t in range(mesh.n_triangles)],
        dtype=np.int8,
    )
    # an inside element's edge on the zero level is boundary only where the
    # domain ends: at the mesh boundary or next to an outside element
    on_gamma = np.abs(tri_raw) < tol
    decomps = {}
    for t in range(mesh.n_triangles):
        if tags[t] == 2:
            continue
        edges = None
        if tags[t] == 0:
            edges = []
            for k in range(3):
                if on_gamma[t, (k + 1) % 3] and on_gamma[t, (k + 2) % 3]:
                    f = mesh.element_faces[t, k]
                    a, b = mesh.face_elements[f]
                    other = b if a == t else a
                    if other < 0 or tags[other] == 2:
                        edges.append(k)
        decomps[t] = decompose(coords[t], tri_raw[t], h, t, centroid(t), edges)
    return _finish(mesh, tags, decomps)


def fitted_cut_sets(mesh: BackgroundMesh) -> CutSets:
    """Configuration in which the domain is the whole mesh and its boundary
    is the set of exterior faces."""
    coords = mesh.triangle_coords()
    exterior = mesh.face_elements[:, 1] < 0
    decomps = {}
    for t in range(mesh.n_triangles):
        segs, normals = [], []
        for k in range(3):
            if exterior[mesh.element_faces[t, k]]:
                s, n = edge_segment(coords[t], k)
                segs.append(s)
                normals.append(n)
        decomps[t] = CutDecomposition(
            t,
            Classification.INSIDE,
            coords[t][None].copy(),
            np.array(segs).reshape(-1, 2, 2),
            np.array(normals).reshape(-1, 2),
        )
    tags = np.zeros(mesh.n_triangles, dtype=np.int8)
    return _finish(mesh, tags, decomps)


# ---------------------------------------------------------------------------
# resolution assumptions


@dataclass(frozen=True)
class AssumptionReport:
    single_face_crossings: bool
    local_parametrization: bool
    max_walk: int
    walks: dict

    @property
    def ok(self) -> bool:
        return self.single_face_crossings and self.local_parametrization


def validate_assumptions(cut_sets: CutSets) -> AssumptionReport:
    """Check that every cut element reaches an uncut inside element.

    Walk lengths count the interior faces crossed on a shortest path through
    the active mesh.  Face crossings are single and the local boundary is a
    straight segment by construction of the linearized cut.
    """
    mesh = cut_sets.mesh
    fe = mesh.face_elements
    neighbours: dict[int, list[int]] = {int(t): [] for t in cut_sets.active_elements}
    for f in cut_sets.interior_faces:
        a, b = int(fe[f, 0]), int(fe[f, 1])
        neighbours[a].append(b)
        neighbours[b].append(a)

    inside = set(int(t) for t in cut_sets.inside_elements)
    walks = {}
    for start in cut_sets.cut_elements:
        start = int(start)
        seen = {start: 0}
        queue = deque([start])
        found = None
        while queue:
            t = queue.popleft()
            if t in inside:
                found = seen[t]
                break
            for nb in neighbours[t]:
                if nb not in seen:
                    seen[nb] = seen[t] + 1
                    queue.append(nb)
        if found is None:
            raise AssumptionViolation(
                f"cut element {start} cannot reach an uncut inside element; refine the mesh"
            )
        walks[start] = found
    return AssumptionReport(
        single_face_crossings=True,
        local_parametrization=True,
        max_walk=max(walks.values(), default=0),
        walks=walks,
    )


# ---------------------------------------------------------------------------
# debug output


def write_svg(cut_sets: CutSets, path, size: int = 800) -> None:
    """Element outlines, shaded inside polygons and boundary normals."""
    mesh = cut_sets.mesh
    x0, y0, x1, y1 = mesh.bbox
    scale = size / max(x1 - x0, y1 - y0)

    def xy(p):
        return f"{(p[0] - x0) * scale:.3f},{(y1 - p[1]) * scale:.3f}"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{(x1 - x0) * scale:.0f}" '
        f'height="{(y1 - y0) * scale:.0f}">'
    ]
    colours = {0: "#ffffff", 1: "#fff2cc", 2: "#eeeeee"}
    for t, tri in enumerate(mesh.triangle_coords()):
        pts = " ".join(xy(p) for p in tri)
        lines.append(
            f'<polygon points="{pts}" fill="{colours[int(cut_sets.tags[t])]}" '
            'stroke="#999999" stroke-width="0.5"/>'
        )
    arrow = 0.3 * min(mesh.dx, mesh.dy)
    for d in cut_sets.decompositions.values():
        for sub in d.subtriangles:
            pts = " ".join(xy(p) for p in sub)
            lines.append(f'<polygon points="{pts}" fill="#6fa8dc" fill-opacity="0.5" stroke="none"/>')
        for seg, n in zip(d.segments, d.normals):
            lines.append(
                f'<polyline points="{xy(seg[0])} {xy(seg[1])}" stroke="#cc0000" stroke-width="1.5"/>'
            )
            mid = seg.mean(axis=0)
            lines.append(
                f'<polyline points="{xy(mid)} {xy(mid + arrow * n)}" stroke="#38761d" stroke-width="1"/>'
            )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
