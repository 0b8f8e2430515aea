"""Continuous P1 spaces on the active submesh and the mixed dof layout.

Dofs are numbered field-major: ``[s00, s01, s10, s11 | u0, u1 | p | mu]``,
each scalar block running over the active vertices in ascending background
order, followed by the single mean-pressure multiplier ``mu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cutstokes3f.mesh import BackgroundMesh

COMPONENTS = ("s00", "s01", "s10", "s11", "u0", "u1", "p")
FIELDS = {"sigma": (0, 1, 2, 3), "u": (4, 5), "p": (6,)}
SIGMA_INDEX = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False)
class MixedDofLayout:
    mesh: BackgroundMesh
    active_vertices: np.ndarray
    vertex_to_local: np.ndarray

    @property
    def n_active(self) -> int:
        return len(self.active_vertices)

    @property
    def ndof(self) -> int:
        return 7 * self.n_active + 1

    @property
    def multiplier(self) -> int:
        return 7 * self.n_active

    def offset(self, component: int) -> int:
        return component * self.n_active

    def dofs(self, component: int, vertices) -> np.ndarray:
        """Global dofs of a scalar component at background vertex ids."""
        local = self.vertex_to_local[np.asarray(vertices)]
        if np.any(local < 0):
            raise ValueError("vertex carries no dofs (not active)")
        return component * self.n_active + local

    def field_slice(self, component: int) -> slice:
        return slice(component * self.n_active, (component + 1) * self.n_active)

    def field_dofs(self, name: str) -> np.ndarray:
        return np.concatenate([np.arange(self.ndof)[self.field_slice(c)] for c in FIELDS[name]])


def build_layout(cut_sets) -> MixedDofLayout:
    if len(cut_sets.active_elements) == 0:
        raise ValueError("no active elements: the domain misses the mesh")
    mesh = cut_sets.mesh
    verts = np.asarray(cut_sets.active_vertices, dtype=np.int64)
    v2l = np.full(mesh.n_vertices, -1, dtype=np.int64)
    v2l[verts] = np.arange(len(verts))
    return MixedDofLayout(mesh, verts, v2l)


def barycentric_gradients(mesh: BackgroundMesh) -> tuple[np.ndarray, np.ndarray]:
    """Constant basis gradients ``(nt, 3, 2)`` and element areas ``(nt,)``."""
    p = mesh.triangle_coords()
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    g = np.empty((len(p), 3, 2))
    g[:, 1, 0] = e2[:, 1] / det
    g[:, 1, 1] = -e2[:, 0] / det
    g[:, 2, 0] = -e1[:, 1] / det
    g[:, 2, 1] = e1[:, 0] / det
    g[:, 0] = -g[:, 1] - g[:, 2]
    return g, 0.5 * np.abs(det)


def barycentric(mesh: BackgroundMesh, elements, points) -> np.ndarray:
    """Barycentric coordinates of ``points`` (``(..., 2)``) in the matching
    ``elements`` (same leading shape, or broadcast)."""
    elements = np.asarray(elements)
    points = np.asarray(points, dtype=float)
    p = mesh.vertices[mesh.triangles[elements]]
    e1 = p[..., 1, :] - p[..., 0, :]
    e2 = p[..., 2, :] - p[..., 0, :]
    r = points - p[..., 0, :]
    det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    l1 = (r[..., 0] * e2[..., 1] - r[..., 1] * e2[..., 0]) / det
    l2 = (e1[..., 0] * r[..., 1] - e1[..., 1] * r[..., 0]) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


class FieldCoefficients:
    """Coefficient vector over a mixed layout with P1 evaluation helpers."""

    def __init__(self, layout: MixedDofLayout, values=None):
        self.layout = layout
        if values is None:
            values = np.zeros(layout.ndof)
        values = np.asarray(values, dtype=float)
        if values.shape != (layout.ndof,):
            raise ValueError(f"expected {layout.ndof} coefficients, got shape {values.shape}")
        self.values = values
        self._grads, _ = barycentric_gradients(layout.mesh)

    def nodal(self, component: int) -> np.ndarray:
        """Values of one scalar component at the active vertices."""
        return self.values[self.layout.field_slice(component)]

    def _element_nodal(self, component: int, elements) -> np.ndarray:
        tri = self.layout.mesh.triangles[np.asarray(elements)]
        local = self.layout.vertex_to_local[tri]
        if np.any(local < 0):
            raise ValueError("element is not active")
        return self.nodal(component)[local]

    def component_values(self, component: int, elements, points) -> np.ndarray:
        """Vectorized evaluation; no containment check."""
        lam = barycentric(self.layout.mesh, elements, points)
        return np.sum(lam * self._element_nodal(component, elements), axis=-1)

    def component_gradients(self, component: int, elements) -> np.ndarray:
        elements = np.asarray(elements)
        nod = self._element_nodal(component, elements)
        return np.einsum("...i,...id->...d", nod, self._grads[elements])

    def evaluate(self, name: str, point, element: int, tol: float = 1e-12):
        """Value of field ``name`` (``sigma``, ``u`` or ``p``) at a point of
        ``element``: a scalar, a 2-vector or a 2x2 tensor."""
        lam = barycentric(self.layout.mesh, element, np.asarray(point, dtype=float))
        if np.any(lam < -tol) or np.any(lam > 1 + tol):
            raise ValueError(f"point {point!r} lies outside element {element}")
        vals = np.array(
            [np.dot(lam, self._element_nodal(c, element)) for c in FIELDS[name]]
        )
        if name == "p":
            return float(vals[0])
        if name == "sigma":
            return vals.reshape(2, 2)
        return vals

    def gradient(self, name: str, element: int) -> np.ndarray:
        """Constant element gradient, shape ``(ncomp, 2)`` (``(2, 2, 2)`` for
        the stress)."""
        g = np.array([self.component_gradients(c, element) for c in FIELDS[name]])
        if name == "sigma":
            return g.reshape(2, 2, 2)
        if name == "p":
            return g[0]
        return g

    def symmetric_gradient(self, element: int) -> np.ndarray:
        g = self.gradient("u", element)
        return 0.5 * (g + g.T)


def interpolate(layout: MixedDofLayout, sigma=None, u=None, p=None) -> FieldCoefficients:
    """Nodal interpolant; each callable maps ``(n, 2)`` points to values."""
    x = layout.mesh.vertices[layout.active_vertices]
    values = np.zeros(layout.ndof)
    if sigma is not None:
        s = np.asarray(sigma(x)).reshape(len(x), 4)
        for c in range(4):
            values[layout.field_slice(c)] = s[:, c]
    if u is not None:
        v = np.asarray(u(x)).reshape(len(x), 2)
        values[layout.field_slice(4)] = v[:, 0]
        values[layout.field_slice(5)] = v[:, 1]
    if p is not None:
        values[layout.field_slice(6)] = np.asarray(p(x)).reshape(len(x))
    return FieldCoefficients(layout, values)
