"""Centering and scaling constants, and the parameter maps of the limit theorems."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import digamma, log_gamma, polygamma


@dataclass(frozen=True)
class ScalingConstants:
    theta: float
    kappa: float
    f: float
    c: float


@dataclass(frozen=True)
class IntermediateScale:
    N: int
    T: float
    m: int
    sigma: float
    log_u: complex
    log_C: float

    @property
    def u(self) -> complex:
        return cmath.exp(self.log_u)


def constants_from_theta(theta: float) -> ScalingConstants:
    if not theta > 0:
        raise DomainError("theta must be positive")
    k = float(polygamma(1, theta))
    f = theta * k - float(digamma(theta))
    c = (-float(polygamma(2, theta)) / 2.0) ** (1.0 / 3.0)
    return ScalingConstants(theta=float(theta), kappa=k, f=f, c=c)


def theta_from_kappa(kappa: float) -> ScalingConstants:
    """Invert theta -> Psi'(theta) with a bracketed Newton iteration."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    lo, hi = 1e-6, 1e6
    # Psi'(t) ~ 1/t^2 for small t and ~ 1/t for large t
    t = 1.0 / kappa if kappa < 1 else 1.0 / math.sqrt(kappa)
    t = min(max(t, lo), hi)
    for _ in range(200):
        g = float(polygamma(1, t)) - kappa
        if g > 0:
            lo = t
        else:
            hi = t
        dg = float(polygamma(2, t))
        step = t - g / dg
        t_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * t:
            t = t_new
            break
        t = t_new
    return constants_from_theta(t)


def u_semidiscrete(N: int, r: float, sc: ScalingConstants) -> tuple[float, float]:
    """(log u, u) for u = exp(-N f - r c N^{1/3})."""
    if N < 1:
        raise DomainError("N must be >= 1")
    log_u = -N * sc.f - r * sc.c * N ** (1.0 / 3.0)
    return log_u, math.exp(log_u) if log_u > -745 else 0.0


def u_intermediate(N: int, T: float, S: complex, m: int) -> tuple[complex, complex]:
    """(log u, u) for u = S exp(-N - N/2 ln(T/N) - sqrt(TN)/2 + T/24 + m/2 ln(T/N))."""
    if N < max(m, 1) or T <= 0:
        raise DomainError("need N >= max(m, 1) and T > 0")
    S = complex(S)
    if S == 0:
        raise DomainError("S must be nonzero")
    lr = math.log(T / N)
    log_u = cmath.log(S) + (-N - 0.5 * N * lr - 0.5 * math.sqrt(T * N) + T / 24.0 + 0.5 * m * lr)
    return log_u, cmath.exp(log_u) if log_u.real > -745 else 0j


def scaling_C(N: int, T: float, X: float, m: int) -> float:
    """log C(N, T, X) of the intermediate-disorder rescaling."""
    tau = math.sqrt(T * N) + X
    if tau <= 0:
        raise DomainError("need sqrt(T N) + X > 0")
    lr = math.log(T / N)
    return N + 0.5 * N * lr + 0.5 * tau + X * math.sqrt(N / T) - 0.5 * m * lr


def intermediate_scale(N: int, T: float, S: complex, m: int, X: float = 0.0) -> IntermediateScale:
    log_u, _ = u_intermediate(N, T, S, m)
    return IntermediateScale(
        N=N, T=T, m=m, sigma=(2.0 / T) ** (1.0 / 3.0), log_u=log_u, log_C=scaling_C(N, T, X, m)
    )


def g_function(z, sc: ScalingConstants) -> tuple[complex, complex]:
    """G(z) = ln Gamma(z) - kappa z^2/2 + f z and G'(z) = Psi(z) - kappa z + f.

    G' uses the real digamma, so it is only returned for real positive z;
    complex z gets G' by a centred difference of G.
    """
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == round(z.real):
        raise DomainError("G has poles at the nonpositive integers")
    G = complex(log_gamma(z)) - sc.kappa * z * z / 2 + sc.f * z
    if z.imag == 0 and z.real > 0:
        Gp = complex(float(digamma(z.real)) - sc.kappa * z.real + sc.f)
    else:
        h = 1e-5 * max(1.0, abs(z))
        Gp = (complex(log_gamma(z + h)) - complex(log_gamma(z - h))) / (2 * h) - sc.kappa * z + sc.f
    return G, Gp


def annealed_density(kappa: float) -> float:
    """Limit of the annealed free energy per unit N: kappa/2 + ln kappa + 1."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    return kappa / 2.0 + math.log(kappa) + 1.0


def annealed_free_energy(N: int, tau: float) -> float:
    """ln E Z^N(tau) = tau/2 + (N-1) ln tau - ln (N-1)! for zero drifts."""
    return tau / 2.0 + (N - 1) * math.log(tau) - math.lgamma(N)


def f_inf_formulation(kappa: float) -> float:
    """inf_{t>0} (kappa t - Psi(t)) by a grid scan then golden-section search."""
    ts = np.exp(np.linspace(math.log(1e-4), math.log(1e4), 4001))
    vals = kappa * ts - digamma(ts)
    i = int(np.argmin(vals))
    a, b = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
    gr = (math.sqrt(5) - 1) / 2

    def h(t):
        return kappa * t - float(digamma(t))

    c, d = b - gr * (b - a), a + gr * (b - a)
    for _ in range(200):
        if h(c) < h(d):
            b = d
        else:
            a = c
        c, d = b - gr * (b - a), a + gr * (b - a)
        if b - a < 1e-13 * b:
            break
    return h(0.5 * (a + b))
