"""Symmetric Gauss rules on the reference triangle and segment.

Triangle rules use barycentric points and weights that sum to 1/2 (the area
of the unit right triangle); segment rules are Gauss-Legendre on [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int
    kind: str  # "triangle" or "segment"

    def __len__(self) -> int:
        return len(self.weights)


def _orbit3(a: float, b: float) -> list[tuple[float, float, float]]:
    return [(a, b, b), (b, a, b), (b, b, a)]


def _orbit6(a: float, b: float, c: float) -> list[tuple[float, float, float]]:
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


# Dunavant (1985) rules; weights normalised to unit area
_DEG1 = ([(1 / 3, 1 / 3, 1 / 3)], [1.0])
_DEG2 = (_orbit3(2 / 3, 1 / 6), [1 / 3] * 3)
_DEG4 = (
    _orbit3(0.108103018168070, 0.445948490915965)
    + _orbit3(0.816847572980459, 0.091576213509771),
    [0.223381589678011] * 3 + [0.109951743655322] * 3,
)
_DEG5 = (
    [(1 / 3, 1 / 3, 1 / 3)]
    + _orbit3(0.059715871789770, 0.470142064105115)
    + _orbit3(0.797426985353087, 0.101286507323456),
    [0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3,
)
_DEG6 = (
    _orbit3(0.501426509658179, 0.249286745170910)
    + _orbit3(0.873821971016996, 0.063089014491502)
    + _orbit6(0.053145049844817, 0.310352451033784, 0.636502499121399),
    [0.116786275726379] * 3 + [0.050844906370207] * 3 + [0.082851075618374] * 6,
)
_TRIANGLE_TABLE = {1: _DEG1, 2: _DEG2, 3: _DEG4, 4: _DEG4, 5: _DEG5, 6: _DEG6}
_TABLE_DEGREE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6}


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Positive-weight symmetric rule exact for polynomials of ``degree``."""
    if degree not in _TRIANGLE_TABLE:
        raise ValueError(f"triangle rules exist for degrees 1..6, got {degree}")
    pts, wts = _TRIANGLE_TABLE[degree]
    points = np.array(pts, dtype=float)
    points /= points.sum(axis=1, keepdims=True)
    weights = np.array(wts, dtype=float)
    weights *= 0.5 / weights.sum()
    points.flags.writeable = False
    weights.flags.writeable = False
    return QuadRule(points, weights, _TABLE_DEGREE[degree], "triangle")


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``."""
    if degree < 0:
        raise ValueError(f"degree must be non-negative, got {degree}")
    npts = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npts)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.flags.writeable = False
    weights.flags.writeable = False
    return QuadRule(points, weights, 2 * npts - 1, "segment")


def map_triangles(tris: np.ndarray, rule: QuadRule):
    """Physical points ``(n, q, 2)`` and weights ``(n, q)`` of ``rule`` on
    each triangle of ``tris`` (shape ``(n, 3, 2)``)."""
    tris = np.asarray(tris, dtype=float)
    pts = np.einsum("qi,nid->nqd", rule.points, tris)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return pts, jac[:, None] * rule.weights[None, :]


def map_segments(segs: np.ndarray, rule: QuadRule):
    """Physical points ``(n, q, 2)`` and weights ``(n, q)`` on segments
    ``(n, 2, 2)``."""
    segs = np.asarray(segs, dtype=float)
    t = rule.points
    pts = segs[:, None, 0] * (1.0 - t)[None, :, None] + segs[:, None, 1] * t[None, :, None]
    length = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
    return pts, length[:, None] * rule.weights[None, :]


def _apply(f, pts: np.ndarray) -> np.ndarray:
    flat = pts.reshape(-1, 2)
    vals = np.asarray(f(flat), dtype=float)
    return vals.reshape(pts.shape[:-1] + vals.shape[1:])


def integrate_cut_volume(decomp, f, rule: QuadRule | None = None) -> float:
    """Integrate the scalar field ``f`` over the inside part of a cut
    decomposition.  ``f`` maps an ``(n, 2)`` point array to ``(n,)``."""
    rule = rule or triangle_rule(4)
    if len(decomp.subtriangles) == 0:
        return 0.0
    pts, w = map_triangles(decomp.subtriangles, rule)
    return float(np.sum(w * _apply(f, pts)))


def integrate_boundary(decomp, f, rule: QuadRule | None = None) -> float:
    """Integrate ``f`` over the boundary segments of a cut decomposition."""
    rule = rule or segment_rule(4)
    if len(decomp.segments) == 0:
        return 0.0
    pts, w = map_segments(decomp.segments, rule)
    return float(np.sum(w * _apply(f, pts)))
