"""Direct sparse solves and 2-norm condition numbers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 20000
PIVOT_RTOL = 1e-15


class SingularSystemError(ArithmeticError):
    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SolveReport:
    x: np.ndarray
    residual: float
    min_pivot: float
    max_pivot: float

    @property
    def pivot_ratio(self) -> float:
        return self.min_pivot / self.max_pivot if self.max_pivot > 0 else 0.0


def _as_matrix(system):
    K = system.K if hasattr(system, "K") else system
    return sp.csc_matrix(K)


def solve_direct(system, b=None, residual_tol: float = 1e-9) -> SolveReport:
    """LU solve of ``system.K x = system.b``.

    Raises :class:`SingularSystemError` when a pivot of the factorization is
    negligible relative to the largest one, or when the solve misses
    ``residual_tol``.
    """
    K = _as_matrix(system)
    if K.shape[0] != K.shape[1]:
        raise ValueError(f"matrix must be square, got {K.shape}")
    rhs = np.asarray(system.b if b is None else b, dtype=float)
    try:
        lu = spla.splu(K, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(f"factorization failed: {exc}") from exc
    pivots = np.abs(lu.U.diagonal())
    k = int(np.argmin(pivots))
    pmax = float(pivots.max())
    if pivots[k] <= PIVOT_RTOL * pmax:
        raise SingularSystemError(
            f"numerically singular matrix: pivot {k} is {pivots[k]:.3e} (largest {pmax:.3e})",
            pivot=int(lu.perm_c[k]),
        )
    x = lu.solve(rhs)
    bnorm = np.linalg.norm(rhs)
    res = float(np.linalg.norm(K @ x - rhs) / bnorm) if bnorm > 0 else float(np.linalg.norm(K @ x))
    if not np.isfinite(res) or res > residual_tol:
        raise SingularSystemError(f"relative residual {res:.3e} exceeds {residual_tol:.1e}")
    return SolveReport(x=x, residual=res, min_pivot=float(pivots[k]), max_pivot=pmax)


def condition_number(system, limit: int = DENSE_LIMIT) -> float:
    """Spectral condition number from a dense singular value decomposition."""
    K = system.K if hasattr(system, "K") else system
    n = K.shape[0]
    if n > limit:
        raise SizeLimitError(f"{n} unknowns exceed the dense limit {limit}; use a smaller mesh")
    dense = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    s = scipy.linalg.svdvals(dense)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])
