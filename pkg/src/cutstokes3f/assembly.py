"""Sparse assembly of the stabilized cut finite element system.

Block structure (rows are test functions, columns trial functions)::

    (1/2eta)(sigma, tau)                      stress mass on the cut domain
    +(sigma, eps(v)) - <sigma n, v>           momentum <- stress
    -(tau, eps(u))   + <tau n, u>             constitutive <- velocity
    -(p, div v)      + <p n, v>               momentum <- pressure
    +(q, div u)      - <q n, u>               continuity <- velocity
    +(gamma_b eta / h) <u, v>                 Nitsche penalty
    + s_sigma + s_u + s_p                     gradient-jump penalties
    + mean-pressure multiplier border

Volume terms are integrated over the inside part of each element, boundary
terms over the linearized boundary segments, and jump penalties over whole
faces of the active mesh.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from cutstokes3f.geometry import CutSets
from cutstokes3f.quadrature import map_segments, map_triangles, segment_rule, triangle_rule
from cutstokes3f.spaces import SIGMA_INDEX, MixedDofLayout, barycentric, barycentric_gradients, build_layout

TERM_ORDER = (
    "sigma_mass",
    "a_volume",
    "b_volume",
    "a_boundary",
    "b_boundary",
    "nitsche",
    "s_sigma",
    "s_u",
    "s_p",
    "mean",
)


class CompatibilityWarning(UserWarning):
    """Boundary data carries a net flux through the boundary."""


@dataclass(frozen=True)
class Params:
    eta: float = 0.5
    gamma_u: float = 0.01
    gamma_p: float = 0.1
    gamma_sigma: float = 0.1
    gamma_b: float = 15.0
    penalty_variant: str = "face"
    volume_degree: int = 4
    boundary_degree: int = 4

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.gamma_b > 0:
            raise ValueError(f"gamma_b must be positive, got {self.gamma_b}")
        for name in ("gamma_u", "gamma_p", "gamma_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.penalty_variant not in ("face", "element"):
            raise ValueError(f"penalty_variant must be 'face' or 'element', got {self.penalty_variant!r}")


@dataclass(eq=False)
class LinearSystem:
    layout: MixedDofLayout
    K: sp.csr_matrix
    b: np.ndarray
    params: Params
    h: float
    terms: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.layout.ndof


# ---------------------------------------------------------------------------
# quadrature on the cut configuration


@dataclass(frozen=True, eq=False)
class VolumeQuadrature:
    parent: np.ndarray  # (ns,)
    points: np.ndarray  # (ns, nq, 2)
    weights: np.ndarray  # (ns, nq)
    basis: np.ndarray  # (ns, nq, 3)


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    parent: np.ndarray  # (nseg,)
    normals: np.ndarray  # (nseg, 2)
    points: np.ndarray
    weights: np.ndarray
    basis: np.ndarray


def volume_quadrature(cut_sets: CutSets, degree: int) -> VolumeQuadrature:
    rule = triangle_rule(degree)
    parents, tris = [], []
    for t in cut_sets.active_elements:
        d = cut_sets.decompositions[int(t)]
        parents.extend([int(t)] * len(d.subtriangles))
        tris.append(d.subtriangles)
    parent = np.array(parents, dtype=np.int64)
    tris = np.concatenate(tris) if tris else np.zeros((0, 3, 2))
    pts, w = map_triangles(tris, rule)
    lam = barycentric(cut_sets.mesh, parent[:, None], pts)
    return VolumeQuadrature(parent, pts, w, lam)


def boundary_quadrature(cut_sets: CutSets, degree: int) -> BoundaryQuadrature:
    rule = segment_rule(degree)
    parents, segs, normals = [], [], []
    for t in cut_sets.active_elements:
        d = cut_sets.decompositions[int(t)]
        if len(d.segments):
            parents.extend([int(t)] * len(d.segments))
            segs.append(d.segments)
            normals.append(d.normals)
    parent = np.array(parents, dtype=np.int64)
    segs = np.concatenate(segs) if segs else np.zeros((0, 2, 2))
    normals = np.concatenate(normals) if normals else np.zeros((0, 2))
    if len(normals) and np.max(np.abs(np.linalg.norm(normals, axis=1) - 1.0)) > 1e-12:
        raise RuntimeError("boundary segment with a non-unit normal")
    pts, w = map_segments(segs, rule)
    lam = barycentric(cut_sets.mesh, parent[:, None], pts)
    return BoundaryQuadrature(parent, normals, pts, w, lam)


# ---------------------------------------------------------------------------
# triplet bookkeeping


class _Triplets:
    def __init__(self):
        self.terms: dict[str, list] = {}

    def add(self, term, rows, cols, local):
        """``rows`` (n, a), ``cols`` (n, b), ``local`` (n, a, b)."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        r = np.broadcast_to(rows[:, :, None], local.shape)
        c = np.broadcast_to(cols[:, None, :], local.shape)
        self.terms.setdefault(term, []).append((r.ravel(), c.ravel(), np.asarray(local).ravel()))

    def matrices(self, n: int) -> dict:
        out = {}
        for name in TERM_ORDER:
            if name not in self.terms:
                continue
            parts = self.terms[name]
            r = np.concatenate([p[0] for p in parts])
            c = np.concatenate([p[1] for p in parts])
            v = np.concatenate([p[2] for p in parts])
            out[name] = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
        return out


def _element_moments(cut_sets: CutSets, vq: VolumeQuadrature):
    """Per-element mass matrix and basis integrals over the inside part."""
    nt = cut_sets.mesh.n_triangles
    mass = np.zeros((nt, 3, 3))
    first = np.zeros((nt, 3))
    np.add.at(mass, vq.parent, np.einsum("sq,sqi,sqj->sij", vq.weights, vq.basis, vq.basis))
    np.add.at(first, vq.parent, np.einsum("sq,sqi->si", vq.weights, vq.basis))
    return mass, first


def _dofs(layout: MixedDofLayout, component: int, vertices) -> np.ndarray:
    return layout.dofs(component, vertices)


# ---------------------------------------------------------------------------
# individual contributions


def assemble_volume(cut_sets: CutSets, layout: MixedDofLayout, params: Params, acc=None, vq=None):
    acc = acc if acc is not None else _Triplets()
    vq = vq if vq is not None else volume_quadrature(cut_sets, params.volume_degree)
    mesh = cut_sets.mesh
    elems = cut_sets.active_elements
    tri = mesh.triangles[elems]
    grads, _ = barycentric_gradients(mesh)
    G = grads[elems]
    mass, first = _element_moments(cut_sets, vq)
    M = mass[elems]
    m = first[elems]

    for c in range(4):
        d = _dofs(layout, c, tri)
        acc.add("sigma_mass", d, d, M / (2.0 * params.eta))

    for c, (k, l) in enumerate(SIGMA_INDEX):
        sig = _dofs(layout, c, tri)
        for comp in range(2):
            if not (k == comp or l == comp):
                continue
            coef = 0.5 * ((k == comp) * G[:, :, l] + (l == comp) * G[:, :, k])
            local = coef[:, :, None] * m[:, None, :]  # rows v_j, cols sigma_i
            vel = _dofs(layout, 4 + comp, tri)
            acc.add("a_volume", vel, sig, local)
            acc.add("a_volume", sig, vel, -np.transpose(local, (0, 2, 1)))

    pres = _dofs(layout, 6, tri)
    for comp in range(2):
        local = -G[:, :, comp][:, :, None] * m[:, None, :]
        vel = _dofs(layout, 4 + comp, tri)
        acc.add("b_volume", vel, pres, local)
        acc.add("b_volume", pres, vel, -np.transpose(local, (0, 2, 1)))
    return acc


def assemble_boundary(cut_sets: CutSets, layout: MixedDofLayout, params: Params, h: float, acc=None, bq=None):
    acc = acc if acc is not None else _Triplets()
    bq = bq if bq is not None else boundary_quadrature(cut_sets, params.boundary_degree)
    if len(bq.parent) == 0:
        return acc
    tri = cut_sets.mesh.triangles[bq.parent]
    B = np.einsum("sq,sqi,sqj->sij", bq.weights, bq.basis, bq.basis)
    n = bq.normals
    vel = [_dofs(layout, 4 + k, tri) for k in range(2)]
    pres = _dofs(layout, 6, tri)

    for c, (k, l) in enumerate(SIGMA_INDEX):
        sig = _dofs(layout, c, tri)
        acc.add("a_boundary", vel[k], sig, -B * n[:, l, None, None])
        acc.add("a_boundary", sig, vel[k], B * n[:, l, None, None])
    for k in range(2):
        acc.add("b_boundary", vel[k], pres, B * n[:, k, None, None])
        acc.add("b_boundary", pres, vel[k], -B * n[:, k, None, None])
    scale = params.gamma_b * params.eta / h
    for k in range(2):
        acc.add("nitsche", vel[k], vel[k], scale * B)
    return acc


def face_jump_coefficients(mesh, faces: np.ndarray):
    """Patch vertices ``(nf, 4)`` and normal-gradient jump coefficients
    ``(nf, 4)`` of the P1 hat functions across interior ``faces``.

    The patch is ordered (face vertex, face vertex, opposite vertex of the
    first element, opposite vertex of the second element).
    """
    fe = mesh.face_elements[faces]
    if np.any(fe[:, 1] < 0):
        raise ValueError("jump coefficients need interior faces")
    grads, _ = barycentric_gradients(mesh)
    plus, minus = fe[:, 0], fe[:, 1]
    n = mesh.face_normals[faces]
    kp = np.argmax(mesh.element_faces[plus] == faces[:, None], axis=1)
    km = np.argmax(mesh.element_faces[minus] == faces[:, None], axis=1)
    patch = np.column_stack(
        [mesh.faces[faces], mesh.triangles[plus, kp], mesh.triangles[minus, km]]
    )
    dplus = np.einsum("fid,fd->fi", grads[plus], n)
    dminus = np.einsum("fid,fd->fi", grads[minus], n)
    match_p = mesh.triangles[plus][:, :, None] == patch[:, None, :]
    match_m = mesh.triangles[minus][:, :, None] == patch[:, None, :]
    coeff = np.einsum("fi,fij->fj", dplus, match_p) - np.einsum("fi,fij->fj", dminus, match_m)
    return patch, coeff


def assemble_ghost_penalties(cut_sets: CutSets, layout: MixedDofLayout, params: Params, h: float, acc=None):
    """Face-based gradient-jump penalties.

    ``s_u`` and (face variant) ``s_p`` run over all interior faces of the
    active mesh, ``s_sigma`` over faces touching a cut element only.
    """
    acc = acc if acc is not None else _Triplets()
    mesh = cut_sets.mesh
    eta = params.eta

    def add(term, faces, weight, components):
        if weight == 0.0 or len(faces) == 0:
            return
        patch, coeff = face_jump_coefficients(mesh, faces)
        length = mesh.face_lengths()[faces]
        local = (weight * length)[:, None, None] * coeff[:, :, None] * coeff[:, None, :]
        for c in components:
            d = _dofs(layout, c, patch)
            acc.add(term, d, d, local)

    faces = cut_sets.interior_faces
    if params.penalty_variant == "face":
        add("s_sigma", cut_sets.ghost_faces, params.gamma_sigma / (2 * eta) * h**3, range(4))
    add("s_u", faces, 2 * eta * params.gamma_u * h, (4, 5))
    if params.penalty_variant == "face":
        add("s_p", faces, params.gamma_p / (2 * eta) * h**3, (6,))
    return acc


def assemble_element_penalties(cut_sets: CutSets, layout: MixedDofLayout, params: Params, h: float, acc=None):
    """Element-wise gradient penalties for pressure and stress over whole
    active elements."""
    acc = acc if acc is not None else _Triplets()
    if params.penalty_variant != "element":
        return acc
    mesh = cut_sets.mesh
    elems = cut_sets.active_elements
    tri = mesh.triangles[elems]
    grads, areas = barycentric_gradients(mesh)
    G = grads[elems]
    stiff = areas[elems][:, None, None] * np.einsum("eid,ejd->eij", G, G)
    eta = params.eta
    ws = params.gamma_sigma / (2 * eta) * h**2
    if ws != 0.0:
        for c in range(4):
            d = _dofs(layout, c, tri)
            acc.add("s_sigma", d, d, ws * stiff)
    wp = params.gamma_p / (2 * eta) * h**2
    if wp != 0.0:
        d = _dofs(layout, 6, tri)
        acc.add("s_p", d, d, wp * stiff)
    return acc


def assemble_mean_constraint(cut_sets: CutSets, layout: MixedDofLayout, params: Params, acc=None, vq=None):
    acc = acc if acc is not None else _Triplets()
    vq = vq if vq is not None else volume_quadrature(cut_sets, params.volume_degree)
    _, first = _element_moments(cut_sets, vq)
    elems = cut_sets.active_elements
    m = first[elems]
    pres = _dofs(layout, 6, cut_sets.mesh.triangles[elems])
    mu = np.full((len(elems), 1), layout.multiplier)
    acc.add("mean", mu, pres, m[:, None, :])
    acc.add("mean", pres, mu, m[:, :, None])
    return acc


def _eval_vector(fn, pts):
    flat = pts.reshape(-1, 2)
    return np.asarray(fn(flat), dtype=float).reshape(pts.shape[:-1] + (2,))


def boundary_flux(cut_sets: CutSets, g, degree: int = 4) -> tuple[float, float]:
    """Net flux of ``g`` through the boundary and the boundary length."""
    bq = boundary_quadrature(cut_sets, degree)
    if len(bq.parent) == 0:
        return 0.0, 0.0
    gv = _eval_vector(g, bq.points)
    flux = float(np.sum(bq.weights * np.einsum("sqd,sd->sq", gv, bq.normals)))
    return flux, float(bq.weights.sum())


def assemble_rhs(cut_sets: CutSets, layout: MixedDofLayout, params: Params, h: float, f=None, g=None, vq=None, bq=None):
    """Load vector for body force ``f`` and boundary velocity ``g``."""
    b = np.zeros(layout.ndof)
    mesh = cut_sets.mesh
    if f is not None:
        vq = vq if vq is not None else volume_quadrature(cut_sets, params.volume_degree)
        fv = _eval_vector(f, vq.points)
        tri = mesh.triangles[vq.parent]
        for k in range(2):
            loc = np.einsum("sq,sq,sqj->sj", vq.weights, fv[..., k], vq.basis)
            np.add.at(b, _dofs(layout, 4 + k, tri), loc)
    if g is not None:
        bq = bq if bq is not None else boundary_quadrature(cut_sets, params.boundary_degree)
        if len(bq.parent) == 0:
            return b
        gv = _eval_vector(g, bq.points)
        n = bq.normals
        tri = mesh.triangles[bq.parent]
        length = float(bq.weights.sum())
        flux = float(np.sum(bq.weights * np.einsum("sqd,sd->sq", gv, n)))
        if abs(flux) > 1e-8 * length:
            warnings.warn(
                f"boundary data has net flux {flux:.3e} over a boundary of length {length:.3e}",
                CompatibilityWarning,
                stacklevel=2,
            )
        for c, (k, l) in enumerate(SIGMA_INDEX):
            loc = np.einsum("sq,sq,sqi->si", bq.weights, gv[..., k], bq.basis) * n[:, l, None]
            np.add.at(b, _dofs(layout, c, tri), loc)
        gn = np.einsum("sqd,sd->sq", gv, n)
        np.add.at(b, _dofs(layout, 6, tri), -np.einsum("sq,sq,sqi->si", bq.weights, gn, bq.basis))
        scale = params.gamma_b * params.eta / h
        for k in range(2):
            loc = scale * np.einsum("sq,sq,sqj->sj", bq.weights, gv[..., k], bq.basis)
            np.add.at(b, _dofs(layout, 4 + k, tri), loc)
    return b


# ---------------------------------------------------------------------------


def assemble_system(cut_sets: CutSets, params: Params | None = None, f=None, g=None, constrain: bool = True) -> LinearSystem:
    """Assemble matrix and load vector; ``f`` and ``g`` map ``(n, 2)`` points
    to ``(n, 2)`` values and default to zero."""
    params = params or Params()
    layout = build_layout(cut_sets)
    h = cut_sets.mesh.h_global
    vq = volume_quadrature(cut_sets, params.volume_degree)
    bq = boundary_quadrature(cut_sets, params.boundary_degree)

    acc = _Triplets()
    assemble_volume(cut_sets, layout, params, acc, vq)
    assemble_boundary(cut_sets, layout, params, h, acc, bq)
    assemble_ghost_penalties(cut_sets, layout, params, h, acc)
    assemble_element_penalties(cut_sets, layout, params, h, acc)
    if constrain:
        assemble_mean_constraint(cut_sets, layout, params, acc, vq)
    terms = acc.matrices(layout.ndof)

    K = sp.csr_matrix((layout.ndof, layout.ndof))
    for name in TERM_ORDER:
        if name in terms:
            K = K + terms[name]
    K = K.tocsr()
    K.sort_indices()
    b = assemble_rhs(cut_sets, layout, params, h, f, g, vq, bq)
    return LinearSystem(layout=layout, K=K, b=b, params=params, h=h, terms=terms)
