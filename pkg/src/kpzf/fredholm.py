"""Fredholm determinants by Nystrom discretisation.

A kernel is passed as a matrix evaluator ``kernel(x, y) -> K[i, j]`` taking
two arrays of (complex) nodes; every kernel in :mod:`kpzf.kernels` has such a
builder. det(I + sign K) on a grid with nodes x_j and weights w_j is
approximated by det(delta_ij + sign K(x_i, x_j) w_j).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .contours import QuadratureGrid
from .errors import AccuracyError, ConditioningError, ParameterError

MatrixKernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    error_estimate: float
    outer_nodes: int
    converged: bool = True

    @property
    def real(self) -> float:
        return float(self.value.real)


def nystrom_matrix(kernel: MatrixKernel, grid: QuadratureGrid, sign: int = 1) -> np.ndarray:
    x = grid.nodes
    K = np.asarray(kernel(x, x))
    if K.shape != (len(x), len(x)):
        raise ParameterError("kernel must return an n x n matrix")
    M = sign * K * grid.weights[None, :]
    M[np.diag_indices_from(M)] += 1.0
    return M


def _lu_det(M: np.ndarray) -> complex:
    if not np.all(np.isfinite(M)):
        raise ConditioningError("non-finite entries in the Nystrom matrix")
    with warnings.catch_warnings():
        # an exactly zero pivot is reported below as ConditioningError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    d = np.diag(lu)
    if np.any(d == 0):
        raise ConditioningError("Nystrom matrix is singular to working precision")
    flips = np.count_nonzero(piv != np.arange(len(piv)))
    # product in log space; the determinant itself is O(1)
    val = np.exp(np.sum(np.log(d.astype(complex))))
    return complex(-val if flips % 2 else val)


def _plain_det(kernel: MatrixKernel, grid: QuadratureGrid, sign: int) -> complex:
    if len(grid) == 0:
        return 1.0 + 0j
    return _lu_det(nystrom_matrix(kernel, grid, sign))


def det_nystrom(kernel: MatrixKernel, grid: QuadratureGrid, sign: int = 1) -> FredholmResult:
    """det(I + sign K) with an error estimate from a half-resolution grid.

    Gauss-Legendre nodes are not nested, so the comparison grid is the same
    panel layout rebuilt with half the nodes per panel (when the grid knows
    its source contour); otherwise the estimate is reported as NaN.
    """
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    if len(grid) == 0:
        raise ParameterError("empty quadrature grid")
    value = _plain_det(kernel, grid, sign)
    err = math.nan
    if grid.source is not None and grid.nodes_per_panel >= 4:
        coarse = _plain_det(kernel, grid.coarsened(), sign)
        err = abs(value - coarse)
    return FredholmResult(value=value, error_estimate=err, outer_nodes=len(grid))


def det_series(kernel: MatrixKernel, grid: QuadratureGrid, n_max: int, sign: int = 1) -> complex:
    """Fredholm series 1 + sum_{n<=n_max} (1/n!) int det[K(x_i, x_j)] truncated.

    The n-th term of the discretised series is the sum of all n x n principal
    minors of A = sign K W, i.e. the elementary symmetric function e_n of the
    eigenvalues of A; it is computed from traces of powers via Newton's
    identities (the Plemelj-Smithies form of the series) rather than by LU.
    """
    if not 0 <= n_max <= 8:
        raise ParameterError("n_max must lie in [0, 8]")
    if n_max == 0:
        return 1.0 + 0j
    A = sign * np.asarray(kernel(grid.nodes, grid.nodes)) * grid.weights[None, :]
    p = []
    P = np.eye(len(A), dtype=complex)
    for _ in range(n_max):
        P = P @ A
        p.append(np.trace(P))
    e = [1.0 + 0j]
    for n in range(1, n_max + 1):
        acc = sum((-1) ** (k - 1) * e[n - k] * p[k - 1] for k in range(1, n + 1))
        e.append(acc / n)
    return complex(sum(e))


def det_adaptive(
    kernel: MatrixKernel,
    grid_factory: Callable[[int], QuadratureGrid],
    tol: float,
    sign: int = 1,
    max_rounds: int = 5,
) -> FredholmResult:
    """Refine until two successive determinants agree within ``tol``.

    ``grid_factory(k)`` returns the grid for round k (callers double the node
    count and the truncation radius). Round 0 is judged by its embedded
    half-resolution estimate; later rounds by the change from the previous
    round. Raises AccuracyError after ``max_rounds`` refinements.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    prev = None
    best = None
    for k in range(max_rounds + 1):
        grid = grid_factory(k)
        res = det_nystrom(kernel, grid, sign)
        err = res.error_estimate if prev is None else abs(res.value - prev)
        best = FredholmResult(res.value, err, res.outer_nodes, err <= tol)
        if err <= tol:
            return best
        prev = res.value
    raise AccuracyError(
        f"determinant did not reach tol={tol:g} after {max_rounds} refinements "
        f"(best {best.value:.12g}, estimate {best.error_estimate:.3g})",
        value=best.value,
        error_estimate=best.error_estimate,
    )
