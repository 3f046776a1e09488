"""User-facing distributions: F_GUE, F_BBP, CDRP and semi-discrete Laplace transforms.

Each function builds a quadrature grid for the relevant L^2 space, wraps the
matrix kernel from :mod:`kpzf.kernels`, and runs :func:`kpzf.fredholm.det_adaptive`.
Results carry through an error estimate; the public functions return plain
numbers and raise :class:`AccuracyError` if the tolerance cannot be met.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import contours as ct
from . import kernels as kn
from .errors import DomainError, ParameterError
from .fredholm import FredholmResult, det_adaptive
from .scaling import theta_from_kappa, u_semidiscrete

INV_2PI_I = 1.0 / (2j * math.pi)
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class CdfTable:
    """A CDF tabulated on a sorted grid, with a metadata record."""

    r_grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.r_grid, float)
        v = np.asarray(self.values, float)
        if r.shape != v.shape or r.ndim != 1:
            raise ParameterError("r_grid and values must be 1-d and of equal length")
        if np.any(np.diff(r) <= 0):
            raise ParameterError("r_grid must be strictly increasing")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "values", v)

    def is_valid(self, slack: float = 1e-8) -> bool:
        v = self.values
        in_range = np.all(v >= -slack) and np.all(v <= 1 + slack)
        return bool(in_range and np.all(np.diff(v) >= -slack))

    def __call__(self, x):
        """Linear interpolation, clamped to [0, 1] outside the grid."""
        x = np.asarray(x, float)
        return np.interp(x, self.r_grid, self.values, left=max(self.values[0], 0.0), right=min(self.values[-1], 1.0))


def tabulate(fn, r_grid, **meta) -> CdfTable:
    r = np.asarray(r_grid, float)
    return CdfTable(r, np.array([fn(x) for x in r]), dict(meta))


# --- Airy / BBP -----------------------------------------------------------


def _half_line_grid(r: float, upper: float, nodes_per_panel: int, panel_length: float = 2.0):
    seg = ct.Contour((ct.Segment(complex(r), complex(max(upper, r + 1.0))),), label=f"[{r}, {upper}]")
    return ct.discretize(seg, nodes_per_panel, 1e12, 2.0, panel_length)


def _airy_real(r: float, tol: float) -> FredholmResult:
    if r >= kn.AIRY_CUTOFF + 2.0:
        return FredholmResult(1.0 + 0j, 0.0, 0)

    def kernel(x, y):
        return kn.airy_product_matrix(x.real, y.real)

    return det_adaptive(kernel, lambda k: _half_line_grid(r, kn.AIRY_CUTOFF, 16 * 2**k), tol, sign=-1)


def _bent_grids(r: float, b: tuple, k: int):
    gap = kn.bbp_gap(b)
    cw, cz = ct.build_bbp_contours(b, gap)
    pl = min(0.5, gap)
    gw = kn.wedge_grid(cw, 16 * 2**k, r, INV_2PI_I, pl)
    gz = kn.wedge_grid(cz, 32 * 2**k, r, panel_length=pl)
    return gw, gz


def _bent_contour(r: float, b: tuple, tol: float) -> FredholmResult:
    """det(I + K~)_{L^2(C_w)} on the bent w-wedge."""
    cache = {}

    def grid(k):
        gw, gz = _bent_grids(r, b, k)
        cache["gz"] = gz
        return gw

    def kernel(w, w2):
        return kn.tilde_bbp_matrix(w, w2, r, b, cache["gz"])

    return det_adaptive(kernel, grid, tol, sign=1)


def f_gue_result(r: float, tol: float = DEFAULT_TOL, mode: str = "real") -> FredholmResult:
    if mode == "real":
        return _airy_real(float(r), tol)
    if mode == "contour":
        return _bent_contour(float(r), (), tol)
    raise ParameterError(f"unknown mode {mode!r}")


def f_gue(r: float, tol: float = DEFAULT_TOL, mode: str = "real") -> float:
    """GUE Tracy-Widom distribution F_GUE(r) = det(I - K_Ai) on L^2(r, inf).

    ``mode="contour"`` evaluates det(I + K~_Ai) on the bent w-wedge instead.
    """
    return f_gue_result(r, tol, mode).real


def f_bbp_result(r: float, b: Sequence[float] = (), tol: float = DEFAULT_TOL, mode: str = "real") -> FredholmResult:
    b = kn.finite_spikes(b)
    if not b:
        return f_gue_result(r, tol, mode)
    r = float(r)
    if mode == "contour":
        return _bent_contour(r, b, tol)
    if mode != "real":
        raise ParameterError(f"unknown mode {mode!r}")
    gap = kn.bbp_gap(b)
    wv = max(list(b) + [0.0]) + gap
    conj = wv + gap / 2
    # the spike terms decay like e^{b t - 2/3 t^{3/2}}, peaking near t = b^2
    upper = kn.AIRY_CUTOFF + max(0.0, max(b)) ** 2 + 2.0

    def kernel(x, y):
        return kn.bbp_contour_matrix(x.real, y.real, b, 24, gap, conj)

    return det_adaptive(kernel, lambda k: _half_line_grid(r, upper, 16 * 2**k), tol, sign=-1)


def f_bbp(r: float, b: Sequence[float] = (), tol: float = DEFAULT_TOL, mode: str = "real") -> float:
    """BBP distribution F_BBP,b(r) = det(I - K_BBP,b) on L^2(r, inf).

    Spikes equal to -inf are dropped; with no finite spikes this is exactly
    :func:`f_gue` (same code path).
    """
    return f_bbp_result(r, b, tol, mode).real


# --- CDRP -----------------------------------------------------------------


def _check_S(S: complex) -> complex:
    S = complex(S)
    if not S.real > 0:
        raise DomainError("cdrp_laplace requires Re(S) > 0")
    return S


def cdrp_laplace_result(
    T: float, S: complex, b: Sequence[float] = (), tol: float = 1e-8, mode: str = "contour"
) -> FredholmResult:
    if T <= 0:
        raise ParameterError("T must be positive")
    S = _check_S(S)
    b = kn.finite_spikes(b)
    logS = cmath.log(S)
    sigma = ct.cdrp_sigma(T)
    if mode == "contour":
        cache = {}

        def grid(k):
            _, gw, gz = kn.cdrp_grids(T, b, 16 * 2**k, log_S=logS)
            cache["gz"] = gz
            return ct.discretize(
                gw.source, gw.nodes_per_panel, gw.truncation_radius, gw.growth, gw.panel_length,
                gw.step_cap, INV_2PI_I,
            )

        def kernel(w, w2):
            return kn.tilde_cdrp_matrix(w, w2, T, S, b, cache["gz"])

        return det_adaptive(kernel, grid, tol, sign=1)
    # L^2(R+): the kernel decays like S e^{-x/sigma}
    upper = sigma * (40.0 + max(logS.real, -40.0)) + 6.0
    pl = min(1.0, max(sigma, 0.25))
    if mode == "real_line":
        if b:
            raise ParameterError("real_line mode only covers b = ()")

        def kernel(x, y):
            return kn.cdrp_real_matrix(x.real, y.real, T, S)

    elif mode == "double_contour":

        def kernel(x, y):
            return kn.cdrp_contour_matrix(x.real, y.real, T, S, b)

    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return det_adaptive(kernel, lambda k: _half_line_grid(0.0, upper, 16 * 2**k, pl), tol, sign=-1)


def cdrp_laplace(T: float, S: complex, b: Sequence[float] = (), tol: float = 1e-8, mode: str = "contour") -> complex:
    """E[exp(-S e^{F + T/24})] for the CDRP free energy F with m-spiked data b.

    Equal to det(I - K_CDRP,b) on L^2(R+). ``mode`` selects the evaluation:
    ``contour`` (default) is the equivalent det(I + K~) on L^2(C_w);
    ``real_line`` uses the Fermi-factor Airy form on R+ (b = () only);
    ``double_contour`` uses double-contour kernel entries on R+.
    """
    return cdrp_laplace_result(T, S, b, tol, mode).value


def cdrp_smoothed_cdf(T: float, r: float, b: Sequence[float] = (), tol: float = 1e-8, mode: str = "contour") -> float:
    """Theta_T-smoothed CDF of the rescaled CDRP free energy.

    S = e^{-r/sigma}, sigma = (2/T)^{1/3}, and the spikes enter as the drift
    vector sigma * b.
    """
    sigma = ct.cdrp_sigma(T)
    log_s = -float(r) / sigma
    if log_s < -700:
        return 1.0
    if log_s > 700:
        raise DomainError("S = e^{-r/sigma} overflows; r is too negative for this T")
    bs = tuple(sigma * x for x in kn.finite_spikes(b))
    return float(cdrp_laplace(T, math.exp(log_s), bs, tol, mode).real)


# --- semi-discrete polymer ---------------------------------------------------


def default_alpha(a: Sequence[float], tau: float) -> float:
    """Vertex of C_{alpha,phi}: the critical point theta^kappa (kappa = tau/N), kept right of the drifts."""
    a = np.asarray(a, float)
    theta = theta_from_kappa(tau / len(a)).theta
    return float(max(theta, a.max() + 0.5))


def semidiscrete_laplace_result(
    N: int,
    tau: float,
    a: Sequence[float] | None = None,
    log_u: complex = 0.0,
    alpha: float | None = None,
    phi: float = 0.9 * math.pi / 4,
    tol: float = 1e-8,
    inner_nodes: int = 20,
) -> FredholmResult:
    a = tuple(float(x) for x in (np.zeros(N) if a is None else a))
    if len(a) != N or N < 1:
        raise ParameterError("need N >= 1 drifts")
    if alpha is None:
        alpha = default_alpha(a, tau)
    spec = kn.KernelSpec("semidiscrete_u", a=a, log_u=complex(log_u), tau=float(tau), alpha=float(alpha), phi=phi)
    ev = kn.KuEvaluator(spec, inner_nodes, 45.0)
    cv = ct.build_cv(alpha, phi)
    # the kernel varies on the fluctuation scale (c N^{1/3})^{-1} and decays
    # like a Gaussian of width ~ 1/sqrt(tau) along the wedge
    radius0 = 12.0 + 18.0 / math.sqrt(tau)
    pl = 0.5

    def grid(k):
        return ct.discretize(cv, 16 * 2**k, radius0 * 2**k, 1.5, pl, weight_scale=INV_2PI_I)

    return det_adaptive(ev.matrix, grid, tol, sign=1)


def semidiscrete_laplace(
    N: int,
    tau: float,
    a: Sequence[float] | None = None,
    log_u: complex = 0.0,
    alpha: float | None = None,
    phi: float = 0.9 * math.pi / 4,
    tol: float = 1e-8,
) -> complex:
    """E[exp(-u Z^N(tau))] = det(I + K_u) on L^2(C_{alpha,phi}), u = e^{log_u}."""
    return semidiscrete_laplace_result(N, tau, a, log_u, alpha, phi, tol).value


def spiked_drifts(N: int, kappa: float, b: Sequence[float]) -> tuple:
    """Drifts a_k = theta^kappa + b_k / (c^kappa N^{1/3}) for the given spikes, 0 otherwise."""
    sc = theta_from_kappa(kappa)
    b = kn.finite_spikes(b)
    if len(b) > N:
        raise ParameterError("more spikes than lines")
    head = [sc.theta + x / (sc.c * N ** (1.0 / 3.0)) for x in b]
    return tuple(head + [0.0] * (N - len(b)))


def semidiscrete_smoothed_cdf(
    N: int, kappa: float, a: Sequence[float] | None = None, r: float = 0.0, tol: float = 1e-8
) -> float:
    """E[Theta_N((F - N f)/(c N^{1/3}) - r)] at tau = kappa N, via the Laplace identity."""
    sc = theta_from_kappa(kappa)
    log_u, _ = u_semidiscrete(N, r, sc)
    return float(semidiscrete_laplace(N, kappa * N, a, log_u, tol=tol).real)
