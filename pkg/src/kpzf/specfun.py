"""Special functions used by the kernels and scaling constants.

Complex log-Gamma, the reflection product Gamma(-s)Gamma(1+s), digamma and
the first two polygamma functions on the positive axis, and the real Airy
function with its derivative. Everything is vectorised over numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

# B_2k / (2k (2k-1)) for k = 1..12
_STIRLING = np.array(
    [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
        43867.0 / 244188.0,
        -174611.0 / 125400.0,
        77683.0 / 5796.0,
        -236364091.0 / 1506960.0,
    ]
)
# Bernoulli numbers B_2 .. B_20, for the Euler-Maclaurin tails
_BERNOULLI = np.array(
    [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
    ]
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)
_POLE_TOL = 1e-8
_SHIFT_TARGET = 10.0


def _check_poles(z: np.ndarray) -> None:
    near = (np.abs(z.imag) < _POLE_TOL) & (z.real < _POLE_TOL)
    if np.any(near):
        dist = np.abs(z[near] - np.round(z[near].real))
        if np.any(dist < _POLE_TOL):
            raise DomainError("log_gamma: argument within 1e-8 of a pole of Gamma")


def _stirling(z: np.ndarray) -> np.ndarray:
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    for coef in _STIRLING[::-1]:
        series = series * inv2 + coef
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series * inv


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex z.

    Arguments with real part below 10 are shifted up with the recurrence
    Gamma(z+1) = z Gamma(z); summing principal logarithms keeps the result on
    the principal branch (cut along the negative real axis).
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    _check_poles(z)
    nshift = np.where(
        np.abs(z.imag) >= _SHIFT_TARGET, 0, np.ceil(np.maximum(_SHIFT_TARGET - z.real, 0.0))
    ).astype(int)
    out = np.zeros_like(z)
    kmax = int(nshift.max(initial=0))
    for k in range(kmax):
        mask = nshift > k
        out[mask] -= np.log(z[mask] + k)
    out += _stirling(z + nshift)
    return out[0] if scalar else out


def log_sin_pi(s):
    """log(sin(pi s)) modulo 2 pi i, stable for large |Im s|."""
    s = np.asarray(s, dtype=complex)
    flip = s.imag < 0
    t = np.where(flip, np.conj(s), s)
    # sin(pi t) = e^{-i pi t} (e^{2 pi i t} - 1) / (2i), |e^{2 pi i t}| <= 1
    val = -1j * np.pi * t + np.log(np.expm1(2j * np.pi * t)) - np.log(2j)
    return np.where(flip, np.conj(val), val)


def log_gamma_ratio_reflection(s):
    """log(Gamma(-s) Gamma(1+s)) = log(-pi / sin(pi s)) modulo 2 pi i."""
    s = np.asarray(s, dtype=complex)
    frac = np.abs(s - np.round(s.real))
    if np.any(frac < 1e-14):
        raise DomainError("gamma_ratio_reflection: s is an integer")
    return _LOG_PI + 1j * np.pi - log_sin_pi(s)


def gamma_ratio_reflection(s):
    """Gamma(-s) Gamma(1+s) = -pi / sin(pi s), evaluated through log space."""
    return np.exp(log_gamma_ratio_reflection(s))


def _as_positive(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError(f"{name}: argument must be > 0")
    return x


def _shift_count(x: np.ndarray, target: float = 20.0) -> int:
    return int(max(0.0, math.ceil(target - float(np.min(x)))))


def digamma(x):
    """Psi(x) for real x > 0 (absolute accuracy ~1e-15)."""
    x = _as_positive(x, "digamma")
    k = _shift_count(x)
    acc = np.zeros_like(x)
    for j in range(k):
        acc -= 1.0 / (x + j)
    y = x + k
    inv2 = 1.0 / (y * y)
    tail = np.zeros_like(y)
    for j, b in enumerate(_BERNOULLI[::-1]):
        n = len(_BERNOULLI) - j
        tail = tail * inv2 + b / (2 * n)
    tail = tail * inv2
    return acc + np.log(y) - 0.5 / y - tail


def polygamma(n: int, x):
    """Psi^(n)(x) for n in {1, 2} and real x > 0."""
    x = _as_positive(x, "polygamma")
    if n not in (1, 2):
        raise DomainError("polygamma: only orders 1 and 2 are supported")
    k = _shift_count(x)
    acc = np.zeros_like(x)
    for j in range(k):
        acc += (1.0 if n == 1 else -2.0) / (x + j) ** (n + 1)
    y = x + k
    inv = 1.0 / y
    inv2 = inv * inv
    if n == 1:
        # psi'(y) ~ 1/y + 1/(2y^2) + sum B_2k / y^(2k+1)
        tail = np.zeros_like(y)
        for b in _BERNOULLI[::-1]:
            tail = tail * inv2 + b
        return acc + inv + 0.5 * inv2 + tail * inv2 * inv
    # psi''(y) ~ -1/y^2 - 1/y^3 - sum (2k+1) B_2k / y^(2k+2)
    tail = np.zeros_like(y)
    for j, b in enumerate(_BERNOULLI[::-1]):
        kk = len(_BERNOULLI) - j
        tail = tail * inv2 + (2 * kk + 1) * b
    return acc - inv2 - inv2 * inv - tail * inv2 * inv2


# --- Airy ---------------------------------------------------------------

_LD = np.longdouble
_AI0 = _LD("0.35502805388781723926006318600418317639797917419918")
_AIP0 = _LD("0.25881940379280679840518356018920396347909113835493")  # -Ai'(0)
_AIRY_SWITCH = 8.0
_ASYM_TERMS = 40


def _airy_u_coeffs(count: int) -> np.ndarray:
    u = np.empty(count)
    u[0] = 1.0
    for k in range(1, count):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    return u


_U = _airy_u_coeffs(_ASYM_TERMS)
_V = np.array([1.0] + [-(6 * k + 1) / (6 * k - 1) * _U[k] for k in range(1, _ASYM_TERMS)])


def _maclaurin(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xl = x.astype(_LD)
    x3 = xl**3
    tiny = 1e-22
    # f = sum a_j x^3j, g = sum b_j x^(3j+1)
    f, g = np.ones_like(xl), xl.copy()
    tf, tg = np.ones_like(xl), xl.copy()
    # f' = sum 3j a_j x^(3j-1), g' = sum (3j+1) b_j x^3j
    fp, gp = xl**2 / 2, np.ones_like(xl)
    tfp, tgp = fp.copy(), gp.copy()
    for j in range(1, 80):
        tf = tf * x3 / ((3 * j - 1) * (3 * j))
        tg = tg * x3 / ((3 * j) * (3 * j + 1))
        tgp = tgp * x3 / ((3 * j - 2) * (3 * j))
        f, g, gp = f + tf, g + tg, gp + tgp
        if j > 1:
            tfp = tfp * x3 / ((3 * j - 3) * (3 * j - 1))
            fp = fp + tfp
        if max(np.max(np.abs(tf)), np.max(np.abs(tg)), np.max(np.abs(tfp)), np.max(np.abs(tgp))) < tiny:
            break
    ai = _AI0 * f - _AIP0 * g
    aip = _AI0 * fp - _AIP0 * gp
    return ai.astype(float), aip.astype(float)


def _asym_series(coeffs: np.ndarray, zeta: np.ndarray, alternating: bool) -> np.ndarray:
    """Optimally truncated sum_k (+-1)^k c_k / zeta^k."""
    total = np.zeros_like(zeta)
    term_prev = np.full_like(zeta, np.inf)
    active = np.ones(zeta.shape, dtype=bool)
    for k, c in enumerate(coeffs):
        term = c / zeta**k
        if alternating and k % 2:
            term = -term
        active &= np.abs(term) < np.abs(term_prev)
        total = total + np.where(active, term, 0.0)
        term_prev = term
    return total


def _asym_positive(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zeta = 2.0 / 3.0 * x**1.5
    pref = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    ai = pref / x**0.25 * _asym_series(_U, zeta, True)
    aip = -pref * x**0.25 * _asym_series(_V, zeta, True)
    return ai, aip


def _asym_negative(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = -x
    zeta = 2.0 / 3.0 * y**1.5
    even_u = _asym_series(_U[0::2], zeta**2, True)
    odd_u = _asym_series(_U[1::2], zeta**2, True) / zeta
    even_v = _asym_series(_V[0::2], zeta**2, True)
    odd_v = _asym_series(_V[1::2], zeta**2, True) / zeta
    phase = zeta - math.pi / 4
    c, s = np.cos(phase), np.sin(phase)
    ai = (c * even_u + s * odd_u) / (math.sqrt(math.pi) * y**0.25)
    aip = y**0.25 * (s * even_v - c * odd_v) / math.sqrt(math.pi)
    return ai, aip


def airy_ai_and_prime(x) -> tuple[np.ndarray, np.ndarray]:
    """Ai(x) and Ai'(x) for real x.

    Maclaurin series (in extended precision) for |x| <= 8, asymptotic
    expansions beyond; absolute accuracy about 1e-13 on [-20, 20].
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    mid = np.abs(x) <= _AIRY_SWITCH
    pos = x > _AIRY_SWITCH
    neg = x < -_AIRY_SWITCH
    if mid.any():
        ai[mid], aip[mid] = _maclaurin(x[mid])
    if pos.any():
        ai[pos], aip[pos] = _asym_positive(x[pos])
    if neg.any():
        ai[neg], aip[neg] = _asym_negative(x[neg])
    if scalar:
        return ai[0], aip[0]
    return ai, aip


def airy_ai(x):
    return airy_ai_and_prime(x)[0]


def airy_ai_prime(x):
    return airy_ai_and_prime(x)[1]
