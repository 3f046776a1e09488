"""Pointwise and matrix evaluation of the Fredholm kernels.

Every kernel here is either a single or a double contour integral. The
inner integrals are discretised once and written as matrix products, so a
full n x n kernel matrix costs a few BLAS calls instead of n^2 quadratures.
The scalar functions (``k_airy`` etc.) are thin wrappers over the matrix
builders.

Families:

* ``airy``        Airy kernel on L^2(r, inf), product or double-contour form
* ``bbp``         spiked (BBP) kernel on L^2(r, inf), double-contour form
* ``tilde_bbp``   Airy/BBP kernel on the bent w-wedge (single z-integral)
* ``cdrp``        CDRP kernel on L^2(R+), double-contour or Fermi-factor form
* ``tilde_cdrp``  CDRP kernel on the vertical w-contour (single z-integral)
* ``semidiscrete_u``  the finite-N Laplace-transform kernel K_u on C_{alpha,phi}
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import contours as ct
from .errors import DomainError, GeometryError, ParameterError
from .specfun import airy_ai, log_gamma, log_gamma_ratio_reflection

TWO_PI_I = 2j * math.pi
POLE_GUARD = 1e-6

# Ai(x)^2 < 1e-20 beyond this point
AIRY_CUTOFF = 10.5


def finite_spikes(b: Sequence[float]) -> tuple:
    """Drop spikes at -inf; they decouple from every kernel."""
    return tuple(float(x) for x in b if np.isfinite(x))


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    Not every field applies to every family; see the module docstring.
    """

    family: str
    a: tuple = ()
    log_u: complex = 0.0
    tau: float = 1.0
    alpha: float = 1.0
    phi: float = 0.9 * math.pi / 4
    b: tuple = ()
    r: float = 0.0
    T: float = 2.0
    S: complex = 1.0

    FAMILIES = (
        "airy_contour",
        "airy_product",
        "bbp",
        "cdrp_contour",
        "cdrp_real",
        "semidiscrete_u",
        "tilde_bbp",
        "tilde_cdrp",
    )

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        vecs = [np.asarray(self.a, float), np.asarray([x for x in self.b if np.isfinite(x)], float)]
        if any(not np.all(np.isfinite(v)) for v in vecs):
            raise ParameterError("kernel parameter vectors must be finite")
        if self.family == "semidiscrete_u":
            if len(self.a) < 1:
                raise ParameterError("semidiscrete_u needs N >= 1 drifts")
            if not self.alpha > max(self.a):
                raise ParameterError("semidiscrete_u requires alpha > max(a)")
            if self.tau <= 0:
                raise ParameterError("tau must be positive")
        if self.family.startswith("cdrp") or self.family == "tilde_cdrp":
            if complex(self.S).real <= 0:
                raise DomainError("CDRP kernels require Re(S) > 0")
            if self.T <= 0:
                raise ParameterError("T must be positive")


# --- Airy ---------------------------------------------------------------


def _lambda_grid(lo: float, nodes_per_panel: int = 16, panel_length: float = 1.0):
    """GL grid for lambda in [0, L] such that Ai(lo + L)^2 < 1e-20."""
    L = max(AIRY_CUTOFF - lo, 1.0)
    seg = ct.Contour((ct.Segment(0.0, complex(L)),))
    g = ct.discretize(seg, nodes_per_panel, L + 1.0, 2.0, panel_length)
    return g.nodes.real, g.weights.real


def airy_product_matrix(x, y, nodes_per_panel: int = 16) -> np.ndarray:
    """K_Ai(x_i, y_j) = int_0^inf Ai(x_i + l) Ai(y_j + l) dl."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    lam, w = _lambda_grid(min(x.min(), y.min()), nodes_per_panel)
    ax = airy_ai(x[:, None] + lam[None, :])
    ay = airy_ai(y[:, None] + lam[None, :])
    return (ax * w) @ ay.T


def wedge_grid(
    c: ct.Contour, nodes_per_panel: int, xmax: float = 0.0, weight_scale: complex = 1.0, panel_length: float = 0.5
):
    """Grid on an Airy-type wedge, panels capped by the local phase rate |z|^2 + |x|."""
    vertex = c.pieces[0].origin
    radius = 12.0 + abs(vertex)
    per_panel = 1.6 * nodes_per_panel

    def cap(p):
        return per_panel / (abs(p) ** 2 + abs(xmax) + 1.0)

    return ct.discretize(c, nodes_per_panel, radius, 1.25, panel_length, cap, weight_scale)


def bbp_gap(b: Sequence[float]) -> float:
    """Vertex gap for the BBP wedges.

    Both vertices sit right of every spike, and |e^{z^3/3}| near a vertex at
    Re z = v is about e^{v^3/3}; the gap shrinks for large positive spikes so
    the cancellation stays below ~1e4.
    """
    top = max(list(finite_spikes(b)) + [0.0])
    return 1.0 if top <= 0.5 else max(0.5 / top, 0.1)


def _spike_log_product(z: np.ndarray, b: tuple) -> np.ndarray:
    out = np.zeros(z.shape, complex)
    for bk in b:
        out += np.log(z - bk)
    return out


def bbp_contour_matrix(
    x, y, b: Sequence[float] = (), nodes_per_panel: int = 24, gap: float | None = None, conj: float = 0.0
) -> np.ndarray:
    """Double-contour BBP (Airy if b is empty) kernel, optionally conjugated.

    Returns e^{conj x_i} K(x_i, y_j) e^{-conj y_j}; the Fredholm determinant
    does not depend on ``conj`` but a value between the two wedge vertices
    keeps the matrix bounded for large arguments.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    b = finite_spikes(b)
    gap = bbp_gap(b) if gap is None else gap
    cw, cz = ct.build_bbp_contours(b, gap)
    xm = max(np.abs(x).max(), np.abs(y).max())
    gw = wedge_grid(cw, nodes_per_panel, xm, panel_length=min(0.5, gap))
    gz = wedge_grid(cz, nodes_per_panel, xm, panel_length=min(0.5, gap))
    w, ww = gw.nodes, gw.weights / TWO_PI_I
    z, wz = gz.nodes, gz.weights / TWO_PI_I
    # K(x, y) = sum_{z,w} e^{z^3/3 - z x} P(z) / (z - w) e^{-w^3/3 + w y} / P(w)
    lz = z**3 / 3 + _spike_log_product(z, b)
    lw = -(w**3) / 3 - _spike_log_product(w, b)
    left = np.exp(lz[None, :] - np.outer(x, z - conj)) * wz[None, :]
    mid = 1.0 / (z[:, None] - w[None, :])
    right = np.exp(lw[:, None] + np.outer(w - conj, y)) * ww[:, None]
    return left @ mid @ right


def k_airy(eta, eta2, mode: str = "product"):
    if mode == "product":
        return float(airy_product_matrix(eta, eta2)[0, 0])
    if mode == "contour":
        return float(bbp_contour_matrix(eta, eta2)[0, 0].real)
    raise ParameterError(f"unknown mode {mode!r}")


def k_bbp(eta, eta2, b: Sequence[float] = (), nodes_per_panel: int = 24):
    b = finite_spikes(b)
    if not b:
        return k_airy(eta, eta2)
    return float(bbp_contour_matrix(eta, eta2, b, nodes_per_panel)[0, 0].real)


def tilde_bbp_matrix(
    w, w2, r: float, b: Sequence[float] = (), gz: ct.QuadratureGrid | None = None
) -> np.ndarray:
    """(1/2 pi i) int dz e^{z^3/3 - rz} / e^{w^3/3 - rw} P(z)/P(w) / ((w - z)(z - w2))."""
    w = np.atleast_1d(np.asarray(w, complex))
    w2 = np.atleast_1d(np.asarray(w2, complex))
    b = finite_spikes(b)
    if gz is None:
        gap = bbp_gap(b)
        _, cz = ct.build_bbp_contours(b, gap)
        gz = wedge_grid(cz, 24, r, panel_length=min(0.5, gap))
    z, wz = gz.nodes, gz.weights / TWO_PI_I
    for arr in (w, w2):
        if np.min(np.abs(arr[:, None] - z[None, :])) < POLE_GUARD:
            raise GeometryError("z-contour passes through a pole of the tilde kernel")
    lz = z**3 / 3 - r * z + _spike_log_product(z, b)
    lw = -(w**3) / 3 + r * w - _spike_log_product(w, b)
    left = np.exp(lw[:, None] + lz[None, :]) / (w[:, None] - z[None, :]) * wz[None, :]
    return left @ (1.0 / (z[:, None] - w2[None, :]))


def k_tilde_bbp(w, w2, r: float, b: Sequence[float] = ()):
    return complex(tilde_bbp_matrix(w, w2, r, b)[0, 0])


# --- CDRP ---------------------------------------------------------------


def _log_S(S: complex) -> complex:
    S = complex(S)
    if S.imag == 0 and S.real <= 0:
        raise DomainError("S on the branch cut (nonpositive reals)")
    return cmath.log(S)


def _sine_factor_log(diff: np.ndarray, sigma: float, logS: complex) -> np.ndarray:
    """log(sigma pi S^{diff sigma} / sin(pi diff sigma)) modulo 2 pi i."""
    from .specfun import log_sin_pi

    arg = diff * sigma
    if np.min(np.abs(arg - np.round(arg.real))) < POLE_GUARD:
        raise GeometryError("quadrature node on a pole of 1/sin")
    return math.log(sigma * math.pi) + arg * logS - log_sin_pi(arg)


def _cdrp_spike_log(x: np.ndarray, sigma: float, b: tuple) -> np.ndarray:
    out = np.zeros(x.shape, complex)
    for bk in b:
        out += log_gamma(sigma * x - bk)
    return out


def cdrp_grids(
    T: float,
    b: Sequence[float] = (),
    nodes_per_panel: int = 16,
    radius: float | None = None,
    xmax: float = 0.0,
    log_S: complex = 0.0,
):
    """Quadrature grids on C_w and C_z.

    Both are vertical lines (possibly indented) where e^{-w^3/3} oscillates at
    rate ~ (Im w)^2; ray panels are capped so each holds a bounded number of
    oscillations. ``xmax`` bounds the outer variable in e^{w x}.
    """
    sigma = ct.cdrp_sigma(T)
    cw, cz = ct.build_cdrp_contours(T, b)
    # e^{-w^3/3} decays like exp(-y^2 / (4 sigma)) on the line; the indentation
    # (if any) and the z-shift only move the real part
    if radius is None:
        reach = abs(cw.pieces[0].origin.real) + 0.5 / sigma + abs(cw.pieces[0].origin.imag)
        radius = math.hypot(reach, math.sqrt(4 * sigma * 36.0) + abs(cw.pieces[0].origin.imag))
    pl = min(0.5, 0.25 / sigma)
    base = 1.0 + abs(xmax) + sigma * abs(log_S) + len(finite_spikes(b)) * sigma * 3.0
    per_panel = 1.6 * nodes_per_panel  # radians of phase per panel

    def cap(p):
        return per_panel / (p.imag**2 + base)

    gw = ct.discretize(cw, nodes_per_panel, radius, 1.25, pl, cap)
    gz = ct.discretize(cz, nodes_per_panel, radius, 1.25, pl, cap)
    return sigma, gw, gz


def cdrp_contour_matrix(x, y, T: float, S: complex, b: Sequence[float] = (), nodes_per_panel: int = 16):
    """Double-contour CDRP kernel K(x_i, y_j) on L^2(R+)."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    b = finite_spikes(b)
    logS = _log_S(S)
    xm = max(np.abs(x).max(), np.abs(y).max())
    sigma, gw, gz = cdrp_grids(T, b, nodes_per_panel, xmax=xm, log_S=logS)
    w, ww = gw.nodes, gw.weights / TWO_PI_I
    z, wz = gz.nodes, gz.weights / TWO_PI_I
    # K(x, y) = sum_{w,z} e^{-w^3/3 + w x} G(w) F(z - w) e^{z^3/3 - z y} / G(z)
    lw = -(w**3) / 3 + _cdrp_spike_log(w, sigma, b)
    lz = z**3 / 3 - _cdrp_spike_log(z, sigma, b)
    left = np.exp(lw[None, :] + np.outer(x, w)) * ww[None, :]
    mid = np.exp(_sine_factor_log(z[None, :] - w[:, None], sigma, logS))
    right = np.exp(lz[:, None] - np.outer(z, y)) * wz[:, None]
    return left @ mid @ right


def cdrp_real_matrix(x, y, T: float, S: complex, nodes_per_panel: int = 16):
    """K(x, y) = int_R S / (S + e^{-t/sigma}) Ai(t + x) Ai(t + y) dt (no spikes)."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    sigma = ct.cdrp_sigma(T)
    logS = _log_S(S)
    # Fermi factor ~ S e^{t/sigma} as t -> -inf; cut where it is < 1e-17
    t_lo = sigma * (-logS.real - 40.0)
    t_lo = min(t_lo, -AIRY_CUTOFF - max(x.max(), y.max()))
    t_hi = AIRY_CUTOFF - min(x.min(), y.min())
    seg = ct.Contour((ct.Segment(complex(t_lo), complex(t_hi)),))
    pl = min(1.0, 2.0 * sigma)
    g = ct.discretize(seg, nodes_per_panel, abs(t_lo) + abs(t_hi) + 1, 2.0, pl)
    t, wt = g.nodes.real, g.weights.real
    # S / (S + e^{-t/sigma}) = 1 / (1 + e^{-t/sigma - log S})
    fermi = 1.0 / (1.0 + np.exp(-t / sigma - logS))
    ax = airy_ai(x[:, None] + t[None, :])
    ay = airy_ai(y[:, None] + t[None, :])
    return (ax * (wt * fermi)) @ ay.T


def k_cdrp(eta, eta2, T: float, S: complex, b: Sequence[float] = (), mode: str = "contour"):
    b = finite_spikes(b)
    if mode == "contour":
        return complex(cdrp_contour_matrix(eta, eta2, T, S, b)[0, 0])
    if mode == "real_line":
        if b:
            raise ParameterError("real_line form only covers the unspiked kernel")
        return complex(cdrp_real_matrix(eta, eta2, T, S)[0, 0])
    raise ParameterError(f"unknown mode {mode!r}")


def tilde_cdrp_matrix(w, w2, T: float, S: complex, b: Sequence[float] = (), gz: ct.QuadratureGrid | None = None):
    """-(1/2 pi i) int dz sine factor e^{z^3/3 - w^3/3} / (z - w2) G(w)/G(z), on L^2(C_w)."""
    w = np.atleast_1d(np.asarray(w, complex))
    w2 = np.atleast_1d(np.asarray(w2, complex))
    b = finite_spikes(b)
    logS = _log_S(S)
    sigma = ct.cdrp_sigma(T)
    if gz is None:
        _, _, gz = cdrp_grids(T, b, log_S=logS)
    z, wz = gz.nodes, gz.weights / TWO_PI_I
    lw = -(w**3) / 3 + _cdrp_spike_log(w, sigma, b)
    lz = z**3 / 3 - _cdrp_spike_log(z, sigma, b)
    left = np.exp(_sine_factor_log(z[None, :] - w[:, None], sigma, logS) + lw[:, None] + lz[None, :])
    diff = z[:, None] - w2[None, :]
    if np.min(np.abs(diff)) < POLE_GUARD:
        raise GeometryError("z node on the pole z = w'")
    return -(left * wz[None, :]) @ (1.0 / diff)


# --- semi-discrete K_u ---------------------------------------------------


@dataclass
class InnerIntegralPlan:
    """Inner s-grid for one outer node v, with the v'-independent integrand."""

    v: complex
    s: np.ndarray
    weights: np.ndarray  # quadrature weight / (2 pi i) times integrand, no 1/(v+s-v')
    R: float
    d: float


def _geometric_breaks(length: float, h0: float, hmax: float) -> np.ndarray:
    br = [0.0]
    h = h0
    while br[-1] < length:
        br.append(min(length, br[-1] + h))
        h = min(hmax, h * 1.6)
    return np.array(br)


def _panel_rule(breaks: np.ndarray, n: int):
    x, w = ct.gauss_legendre(n)
    a, b = breaks[:-1, None], breaks[1:, None]
    return (a + (b - a) * x).ravel(), ((b - a) * w).ravel()


@dataclass
class KuEvaluator:
    """K_u(v, v') of the Laplace-transform identity, for one parameter set."""

    spec: KernelSpec
    nodes_per_panel: int = 20
    cutoff: float = 45.0  # drop inner nodes below e^{-cutoff} of the peak
    _plans: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.spec.family != "semidiscrete_u":
            raise ParameterError("KuEvaluator needs a semidiscrete_u spec")
        self.a = np.asarray(self.spec.a, float)

    def _log_integrand(self, v: complex, s: np.ndarray) -> np.ndarray:
        sp = self.spec
        out = log_gamma_ratio_reflection(s)
        lg_v = log_gamma(v - self.a)
        for am, lgv in zip(self.a, np.atleast_1d(lg_v)):
            out = out + lgv - log_gamma(s + v - am)
        return out + s * complex(sp.log_u) + sp.tau * (v * s + s * s / 2)

    def plan(self, v: complex) -> InnerIntegralPlan:
        v = complex(v)
        key = (round(v.real, 14), round(v.imag, 14))
        if key in self._plans:
            return self._plans[key]
        sp = self.spec
        phi = ct.wedge_angle_of(v, sp.alpha) or sp.phi
        d = ct.default_notch_height(v, sp.alpha, phi)
        R = -v.real + sp.alpha + 1.0
        n = self.nodes_per_panel
        tau = sp.tau
        hl = min(0.5, 1.0 / math.sqrt(tau))
        # notch: bottom (R -> 1/2), left side, top (1/2 -> R); panels refined at the corners
        lb = _geometric_breaks(R - 0.5, min(d, 0.25), hl)
        t, wt = _panel_rule(lb, n)
        bottom = (R - t) - 1j * d
        wb = -wt + 0j
        ts, ws = _panel_rule(np.linspace(-d, d, 3), n)
        side = 0.5 + 1j * ts
        wside = 1j * ws
        top = (0.5 + t) + 1j * d
        wtop = wt + 0j
        # vertical line Re s = R: Gaussian in Im s centred near -Im v
        beta = (len(self.a) / 2.0 + 1.0) * math.pi
        half = math.sqrt(2.0 * (self.cutoff + 5.0) / tau) + beta / tau + 1.0
        y0 = -v.imag
        pieces_s, pieces_w = [bottom, side, top], [wb, wside, wtop]
        for sign in (-1.0, 1.0):
            lo = max(d, sign * y0 - half)
            hi = sign * y0 + half
            if hi <= lo:
                continue
            br = np.concatenate([[lo], np.arange(lo + hl, hi, hl), [hi]])
            br = br[np.concatenate([[True], np.diff(br) > 1e-9])]
            y, wy = _panel_rule(br, n)
            pieces_s.append(R + 1j * sign * y)
            pieces_w.append(1j * wy)  # both rays run upward: ds = i dy
        s = np.concatenate(pieces_s)
        w = np.concatenate(pieces_w)
        logf = self._log_integrand(v, s) + np.log(w / TWO_PI_I)
        keep = logf.real > logf.real.max() - self.cutoff
        p = InnerIntegralPlan(v=v, s=s[keep], weights=np.exp(logf[keep]), R=R, d=d)
        self._plans[key] = p
        return p

    def matrix(self, vs, v2s) -> np.ndarray:
        vs = np.atleast_1d(np.asarray(vs, complex))
        v2s = np.atleast_1d(np.asarray(v2s, complex))
        out = np.empty((len(vs), len(v2s)), complex)
        for i, v in enumerate(vs):
            p = self.plan(v)
            denom = v + p.s[:, None] - v2s[None, :]
            if np.min(np.abs(denom)) < POLE_GUARD:
                raise GeometryError("inner node on the pole s = v' - v")
            out[i] = p.weights @ (1.0 / denom)
        return out


def k_u(v, v2, spec: KernelSpec) -> complex:
    return complex(KuEvaluator(spec).matrix([v], [v2])[0, 0])
