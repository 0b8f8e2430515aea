"""Error norms over the physical domain and convergence orders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from cutstokes3f.assembly import (
    _Triplets,
    assemble_element_penalties,
    assemble_ghost_penalties,
    boundary_quadrature,
    volume_quadrature,
)
from cutstokes3f.spaces import SIGMA_INDEX, FieldCoefficients, barycentric_gradients

ERROR_DEGREE = 6


@dataclass(frozen=True)
class ErrorReport:
    h: float
    ndof: int
    err_L2_u: float
    err_H1_u: float
    err_L2_p: float
    err_L2_sigma: float
    triple_norm: float

    def as_row(self) -> dict:
        return dict(self.__dict__)


def _check_layout(coeffs: FieldCoefficients, cut_sets) -> None:
    layout = coeffs.layout
    if layout.mesh is not cut_sets.mesh or not np.array_equal(layout.active_vertices, cut_sets.active_vertices):
        raise ValueError("coefficients were built on a different mesh or cut configuration")


class _FieldSampler:
    """Discrete fields at cut-domain and boundary quadrature points."""

    def __init__(self, coeffs: FieldCoefficients, cut_sets, degree: int):
        self.vq = volume_quadrature(cut_sets, degree)
        self.bq = boundary_quadrature(cut_sets, degree)
        layout = coeffs.layout
        mesh = cut_sets.mesh
        vtri = layout.vertex_to_local[mesh.triangles[self.vq.parent]]
        btri = layout.vertex_to_local[mesh.triangles[self.bq.parent]]
        grads, _ = barycentric_gradients(mesh)
        gv = grads[self.vq.parent]
        self.values = []
        self.gradients = []
        self.boundary = []
        for c in range(7):
            nod = coeffs.nodal(c)
            self.values.append(np.einsum("sqi,si->sq", self.vq.basis, nod[vtri]))
            self.gradients.append(np.einsum("si,sid->sd", nod[vtri], gv))
            self.boundary.append(np.einsum("sqi,si->sq", self.bq.basis, nod[btri]) if len(btri) else np.zeros((0, 0)))

    def integrate(self, values) -> float:
        return float(np.sum(self.vq.weights * values))

    def integrate_boundary(self, values) -> float:
        if len(self.bq.parent) == 0:
            return 0.0
        return float(np.sum(self.bq.weights * values))


def compute_errors(coeffs: FieldCoefficients, exact, cut_sets, params, degree: int = ERROR_DEGREE) -> ErrorReport:
    """L2 errors (summed over components), the velocity H1-seminorm error
    and the triple norm of the error, all integrated over the cut domain.

    Pressures are compared after removing their means over the domain.
    """
    _check_layout(coeffs, cut_sets)
    fs = _FieldSampler(coeffs, cut_sets, degree)
    vq, bq = fs.vq, fs.bq
    pts = vq.points.reshape(-1, 2)
    shape = vq.weights.shape
    eta = params.eta
    h = cut_sets.mesh.h_global

    u_ex = exact.velocity(pts).reshape(shape + (2,))
    du_ex = exact.velocity_gradient(pts).reshape(shape + (2, 2))
    s_ex = exact.stress(pts).reshape(shape + (2, 2))
    p_ex = exact.pressure(pts).reshape(shape)

    eu = [fs.values[4 + k] - u_ex[..., k] for k in range(2)]
    dgu = [fs.gradients[4 + k][:, None, :] - du_ex[:, :, k, :] for k in range(2)]
    es = [fs.values[c] - s_ex[..., k, l] for c, (k, l) in enumerate(SIGMA_INDEX)]

    area = float(vq.weights.sum())
    ph = fs.values[6]
    ep = (ph - fs.integrate(ph) / area) - (p_ex - fs.integrate(p_ex) / area)

    l2_u = sum(np.sqrt(fs.integrate(e**2)) for e in eu)
    h1_u = sum(np.sqrt(fs.integrate(np.sum(d**2, axis=-1))) for d in dgu)
    l2_s = sum(np.sqrt(fs.integrate(e**2)) for e in es)
    l2_p = np.sqrt(fs.integrate(ep**2))

    sym = 0.5 * (np.stack([dgu[0], dgu[1]], axis=-2) + np.swapaxes(np.stack([dgu[0], dgu[1]], axis=-2), -1, -2))
    eps_sq = fs.integrate(np.sum(sym**2, axis=(-1, -2)))
    gamma_sq = 0.0
    if len(bq.parent):
        ub = exact.velocity(bq.points.reshape(-1, 2)).reshape(bq.weights.shape + (2,))
        gamma_sq = sum(fs.integrate_boundary((fs.boundary[4 + k] - ub[..., k]) ** 2) for k in range(2))
    triple = (
        sum(fs.integrate(e**2) for e in es) / (2 * eta)
        + 2 * eta * eps_sq
        + fs.integrate(ep**2) / (2 * eta)
        + 2 * eta * params.gamma_b / h * gamma_sq
    )
    return ErrorReport(
        h=h,
        ndof=coeffs.layout.ndof,
        err_L2_u=float(l2_u),
        err_H1_u=float(h1_u),
        err_L2_p=float(l2_p),
        err_L2_sigma=float(l2_s),
        triple_norm=float(np.sqrt(triple)),
    )


def triple_norm(coeffs: FieldCoefficients, cut_sets, params, discrete: bool = False, degree: int = ERROR_DEGREE) -> float:
    """Triple norm of a discrete field by quadrature; ``discrete`` adds the
    stabilization form, evaluated face by face."""
    _check_layout(coeffs, cut_sets)
    fs = _FieldSampler(coeffs, cut_sets, degree)
    eta = params.eta
    h = cut_sets.mesh.h_global
    total = sum(fs.integrate(fs.values[c] ** 2) for c in range(4)) / (2 * eta)
    g0, g1 = fs.gradients[4], fs.gradients[5]
    eps_sq = g0[:, 0] ** 2 + g1[:, 1] ** 2 + 0.5 * (g0[:, 1] + g1[:, 0]) ** 2
    total += 2 * eta * fs.integrate(eps_sq[:, None] * np.ones_like(fs.vq.weights))
    total += fs.integrate(fs.values[6] ** 2) / (2 * eta)
    total += 2 * eta * params.gamma_b / h * sum(fs.integrate_boundary(fs.boundary[4 + k] ** 2) for k in range(2))
    if discrete:
        total += stabilization_energy(coeffs, cut_sets, params)
    return float(np.sqrt(total))


def stabilization_energy(coeffs: FieldCoefficients, cut_sets, params) -> float:
    """Penalty form evaluated on one field, from element gradients on both
    sides of every face (or over whole elements for the element variant)."""
    mesh = cut_sets.mesh
    eta = params.eta
    h = mesh.h_global
    fe = mesh.face_elements
    n = mesh.face_normals
    lengths = mesh.face_lengths()

    def face_sum(faces, components):
        if len(faces) == 0:
            return 0.0
        out = 0.0
        for c in components:
            gp = coeffs.component_gradients(c, fe[faces, 0])
            gm = coeffs.component_gradients(c, fe[faces, 1])
            jump = np.einsum("fd,fd->f", gp - gm, n[faces])
            out += float(np.sum(lengths[faces] * jump**2))
        return out

    def element_sum(components):
        _, areas = barycentric_gradients(mesh)
        elems = cut_sets.active_elements
        out = 0.0
        for c in components:
            g = coeffs.component_gradients(c, elems)
            out += float(np.sum(areas[elems] * np.sum(g**2, axis=1)))
        return out

    energy = 2 * eta * params.gamma_u * h * face_sum(cut_sets.interior_faces, (4, 5))
    if params.penalty_variant == "face":
        energy += params.gamma_sigma / (2 * eta) * h**3 * face_sum(cut_sets.ghost_faces, range(4))
        energy += params.gamma_p / (2 * eta) * h**3 * face_sum(cut_sets.interior_faces, (6,))
    else:
        energy += params.gamma_sigma / (2 * eta) * h**2 * element_sum(range(4))
        energy += params.gamma_p / (2 * eta) * h**2 * element_sum((6,))
    return energy


def triple_norm_matrix(cut_sets, layout, params, discrete: bool = False, degree: int = ERROR_DEGREE) -> sp.csr_matrix:
    """Matrix ``M`` with ``x^T M x`` equal to the squared triple norm."""
    mesh = cut_sets.mesh
    eta = params.eta
    h = mesh.h_global
    vq = volume_quadrature(cut_sets, degree)
    bq = boundary_quadrature(cut_sets, degree)
    acc = _Triplets()

    tri = mesh.triangles[vq.parent]
    mass = np.einsum("sq,sqi,sqj->sij", vq.weights, vq.basis, vq.basis)
    area = vq.weights.sum(axis=1)
    grads, _ = barycentric_gradients(mesh)
    G = grads[vq.parent]
    for c in range(4):
        d = layout.dofs(c, tri)
        acc.add("sigma_mass", d, d, mass / (2 * eta))
    d6 = layout.dofs(6, tri)
    acc.add("sigma_mass", d6, d6, mass / (2 * eta))

    d0, d1 = layout.dofs(4, tri), layout.dofs(5, tri)
    gx = G[:, :, 0]
    gy = G[:, :, 1]
    w = 2 * eta * area[:, None, None]
    outer = lambda a, b: a[:, :, None] * b[:, None, :]  # noqa: E731
    acc.add("a_volume", d0, d0, w * (outer(gx, gx) + 0.5 * outer(gy, gy)))
    acc.add("a_volume", d1, d1, w * (outer(gy, gy) + 0.5 * outer(gx, gx)))
    acc.add("a_volume", d0, d1, w * 0.5 * outer(gy, gx))
    acc.add("a_volume", d1, d0, w * 0.5 * outer(gx, gy))

    if len(bq.parent):
        btri = mesh.triangles[bq.parent]
        B = np.einsum("sq,sqi,sqj->sij", bq.weights, bq.basis, bq.basis)
        for k in range(2):
            d = layout.dofs(4 + k, btri)
            acc.add("nitsche", d, d, 2 * eta * params.gamma_b / h * B)
    if discrete:
        assemble_ghost_penalties(cut_sets, layout, params, h, acc)
        assemble_element_penalties(cut_sets, layout, params, h, acc)
    M = sp.csr_matrix((layout.ndof, layout.ndof))
    for m in acc.matrices(layout.ndof).values():
        M = M + m
    return M.tocsr()


@dataclass(frozen=True)
class ConvergenceOrders:
    pairwise: tuple[float, ...]
    fit: float

    @property
    def last(self) -> float:
        return self.pairwise[-1]


def eoc(hs, errors) -> ConvergenceOrders:
    """Pairwise log-ratio slopes and the least-squares slope in log-log."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.shape != errors.shape or hs.ndim != 1:
        raise ValueError("h and error sequences must be one-dimensional and equally long")
    if len(hs) < 2:
        raise ValueError("need at least two refinement levels")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ValueError("convergence order undefined for zero or non-finite errors")
    lh = np.log(hs)
    le = np.log(errors)
    pairwise = tuple(float(x) for x in np.diff(le) / np.diff(lh))
    fit = float(np.polyfit(lh, le, 1)[0])
    return ConvergenceOrders(pairwise, fit)


def fictitious_stress_error(coeffs: FieldCoefficients, exact, cut_sets, degree: int = ERROR_DEGREE) -> float:
    """Stress L2 error (summed over components) over whole active elements.

    A diagnostic only: it exposes the size of the discrete stress outside the
    physical domain, which the error over the cut domain does not see.
    """
    from cutstokes3f.quadrature import map_triangles, triangle_rule

    _check_layout(coeffs, cut_sets)
    mesh = cut_sets.mesh
    elems = cut_sets.active_elements
    pts, w = map_triangles(mesh.triangle_coords(elems), triangle_rule(degree))
    s_ex = exact.stress(pts.reshape(-1, 2)).reshape(w.shape + (2, 2))
    total = 0.0
    for c, (k, l) in enumerate(SIGMA_INDEX):
        v = coeffs.component_values(c, elems[:, None], pts)
        total += np.sqrt(np.sum(w * (v - s_ex[..., k, l]) ** 2))
    return float(total)
