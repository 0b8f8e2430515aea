"""Structured triangular background meshes and their face connectivity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class BackgroundMesh:
    """Immutable triangulation of an axis-aligned rectangle.

    ``faces`` holds each edge once as a sorted vertex pair.  ``face_elements``
    lists the adjacent triangles in ascending order, ``-1`` marking the missing
    neighbour of an exterior face.  ``face_normals`` are unit vectors pointing
    from the first adjacent triangle towards the second (outward for exterior
    faces).  ``element_faces[t, k]`` is the face opposite local vertex ``k``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    faces: np.ndarray
    face_elements: np.ndarray
    face_normals: np.ndarray
    element_faces: np.ndarray
    h_global: float
    dx: float
    dy: float
    bbox: tuple[float, float, float, float]
    shape: tuple[int, int]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] >= 0)

    @property
    def exterior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] < 0)

    def triangle_coords(self, t=None) -> np.ndarray:
        if t is None:
            return self.vertices[self.triangles]
        return self.vertices[self.triangles[t]]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return lengths.max(axis=1)

    def face_lengths(self) -> np.ndarray:
        p = self.vertices[self.faces]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)


def build_structured_mesh(nx: int, ny: int, bbox) -> BackgroundMesh:
    """Split an ``nx`` by ``ny`` grid of cells on ``bbox = (x0, y0, x1, y1)``
    into triangles along the lower-left to upper-right diagonal."""
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive, got nx={nx}, ny={ny}")
    x0, y0, x1, y1 = (float(c) for c in bbox)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate bounding box {bbox!r}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    faces, face_elements, element_faces = _connectivity(triangles)
    face_normals = _face_normals(vertices, triangles, faces, face_elements, element_faces)

    dx = (x1 - x0) / nx
    dy = (y1 - y0) / ny
    return BackgroundMesh(
        vertices=vertices,
        triangles=triangles,
        faces=faces,
        face_elements=face_elements,
        face_normals=face_normals,
        element_faces=element_faces,
        h_global=float(np.hypot(dx, dy)),
        dx=dx,
        dy=dy,
        bbox=(x0, y0, x1, y1),
        shape=(nx, ny),
    )


def _connectivity(triangles: np.ndarray):
    nt = len(triangles)
    # local edge k is opposite local vertex k
    local = np.stack(
        [triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1
    ).reshape(-1, 2)
    keys = np.sort(local, axis=1)
    faces, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    element_faces = inverse.reshape(nt, 3)

    owner = np.repeat(np.arange(nt), 3)
    order = np.lexsort((owner, inverse))
    face_elements = np.full((len(faces), 2), -1, dtype=np.int64)
    counts = np.bincount(inverse, minlength=len(faces))
    if counts.max() > 2:
        raise ValueError("non-manifold triangulation: a face has more than two elements")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    face_elements[:, 0] = owner[order[starts]]
    two = counts == 2
    face_elements[two, 1] = owner[order[starts[two] + 1]]
    return faces, face_elements, element_faces


def _face_normals(vertices, triangles, faces, face_elements, element_faces):
    p = vertices[faces]
    tangent = p[:, 1] - p[:, 0]
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    first = face_elements[:, 0]
    k = np.argmax(element_faces[first] == np.arange(len(faces))[:, None], axis=1)
    opposite = vertices[triangles[first, k]]
    flip = np.einsum("ij,ij->i", opposite - p[:, 0], normal) > 0
    normal[flip] *= -1.0
    return normal


def dilated_bbox(epsilon: float, n: int, base=(-1.0, -1.0, 1.0, 1.0)):
    """Bounding box of ``n`` cells per direction around ``base`` such that
    the boundary of ``base`` cuts each boundary cell at relative height
    ``epsilon``.

    Returns the rectangle ``(x0 - lx, y0 - ly, x1 + lx, y1 + ly)``.  For the
    default base square both dilations equal ``2(1-eps) / (n - 2(1-eps))``.
    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"sliver parameter must lie in (0, 1], got {epsilon}")
    slack = 1.0 - epsilon
    if n <= 2.0 * slack:
        raise ValueError(f"need n > 2(1-eps) = {2.0 * slack}, got n={n}")
    x0, y0, x1, y1 = (float(c) for c in base)
    half_x = 0.5 * (x1 - x0)
    half_y = 0.5 * (y1 - y0)
    lx = 2.0 * half_x * slack / (n - 2.0 * slack)
    ly = 2.0 * half_y * slack / (n - 2.0 * slack)
    return (x0 - lx, y0 - ly, x1 + lx, y1 + ly)
