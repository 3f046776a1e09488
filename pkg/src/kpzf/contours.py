"""Integration contours and their Gauss-Legendre discretisations.

A :class:`Contour` is an ordered tuple of pieces (segments, rays, circular
arcs). Rays are semi-infinite and are truncated when discretised. Weights of
a :class:`QuadratureGrid` carry the complex Jacobian dz/dt, so ``sum(w * f)``
approximates the oriented line integral of ``f``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import GeometryError, ParameterError


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def point(self, t):
        return self.start + (self.end - self.start) * t

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)


@dataclass(frozen=True)
class Ray:
    """Points origin + t * direction, t >= 0.

    ``inward`` rays are traversed from infinity towards the origin.
    """

    origin: complex
    direction: complex
    inward: bool = False

    def __post_init__(self):
        if abs(abs(self.direction) - 1.0) > 1e-12:
            raise ParameterError("ray direction must have unit modulus")

    def point(self, t):
        return self.origin + self.direction * t

    def reversed(self) -> "Ray":
        return Ray(self.origin, self.direction, not self.inward)

    def max_parameter(self, radius: float) -> float:
        """Largest t with |origin + t*direction| <= radius (0 if none)."""
        b = (self.origin * self.direction.conjugate()).real
        c = abs(self.origin) ** 2 - radius**2
        disc = b * b - c
        if disc < 0:
            return 0.0
        return max(0.0, -b + math.sqrt(disc))


@dataclass(frozen=True)
class Arc:
    """center + radius * exp(i*theta), theta running from theta0 to theta1."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    @property
    def length(self) -> float:
        return abs(self.theta1 - self.theta0) * self.radius

    @property
    def closed(self) -> bool:
        return abs(abs(self.theta1 - self.theta0) - 2 * math.pi) < 1e-14

    def point(self, theta):
        return self.center + self.radius * np.exp(1j * np.asarray(theta))

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta0)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta1)

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)


Piece = Union[Segment, Ray, Arc]


def _piece_start(p: Piece):
    if isinstance(p, Ray):
        return None if p.inward else p.origin
    return p.start


def _piece_end(p: Piece):
    if isinstance(p, Ray):
        return p.origin if p.inward else None
    return p.end


@dataclass(frozen=True)
class Contour:
    pieces: tuple
    label: str = ""

    def __post_init__(self):
        if not self.pieces:
            raise ParameterError("a contour needs at least one piece")
        for a, b in zip(self.pieces, self.pieces[1:]):
            e, s = _piece_end(a), _piece_start(b)
            if e is None or s is None or abs(e - s) > 1e-12 * max(1.0, abs(e)):
                raise GeometryError("consecutive contour pieces must share an endpoint")

    def reversed(self) -> "Contour":
        return Contour(tuple(p.reversed() for p in reversed(self.pieces)), self.label)

    def translated(self, shift: complex) -> "Contour":
        out = []
        for p in self.pieces:
            if isinstance(p, Segment):
                out.append(Segment(p.start + shift, p.end + shift))
            elif isinstance(p, Ray):
                out.append(Ray(p.origin + shift, p.direction, p.inward))
            else:
                out.append(Arc(p.center + shift, p.radius, p.theta0, p.theta1))
        return Contour(tuple(out), self.label)

    def polyline(self, radius: float = 1e3, per_piece: int = 200) -> np.ndarray:
        """Ordered sample points along the contour (rays cut at ``radius``)."""
        pts = []
        for p in self.pieces:
            if isinstance(p, Segment):
                pts.append(p.point(np.linspace(0.0, 1.0, per_piece)))
            elif isinstance(p, Ray):
                tmax = max(p.max_parameter(radius), 1.0)
                t = np.linspace(0.0, tmax, per_piece)
                pts.append(p.point(t[::-1] if p.inward else t))
            else:
                pts.append(p.point(np.linspace(p.theta0, p.theta1, per_piece)))
        return np.concatenate(pts)

    def is_left_of(self, point: complex, radius: float = 1e3) -> bool:
        """True if ``point`` lies strictly left of an upward-running contour.

        Counts signed crossings of the horizontal half-line to the right of
        the point; an upward-oriented contour crossing it once leaves the point
        on its left.
        """
        pts = self.polyline(radius, per_piece=2000)
        y = pts.imag - point.imag
        x = pts.real - point.real
        winding = 0
        for i in range(len(pts) - 1):
            y0, y1 = y[i], y[i + 1]
            if (y0 <= 0 < y1) or (y1 <= 0 < y0):
                xc = x[i] + (x[i + 1] - x[i]) * (-y0) / (y1 - y0)
                if xc > 0:
                    winding += 1 if y1 > y0 else -1
        return winding == 1


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    panel_boundaries: tuple
    truncation_radius: float
    source: Contour = field(repr=False, default=None)
    nodes_per_panel: int = 0
    panel_length: float = 1.0
    growth: float = 2.0
    step_cap: object = field(repr=False, default=None)
    weight_scale: complex = 1.0

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ParameterError("nodes and weights must have equal length")

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * values))

    def refined(self, factor: int = 2) -> "QuadratureGrid":
        return discretize(
            self.source,
            self.nodes_per_panel * factor,
            self.truncation_radius,
            self.growth,
            self.panel_length,
            self.step_cap,
            self.weight_scale,
        )

    def coarsened(self) -> "QuadratureGrid":
        return discretize(
            self.source,
            max(2, self.nodes_per_panel // 2),
            self.truncation_radius,
            self.growth,
            self.panel_length,
            self.step_cap,
            self.weight_scale,
        )


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _ray_breaks(tmax: float, h0: float, growth: float, cap=None) -> list[float]:
    breaks = [0.0]
    h = h0
    while breaks[-1] < tmax:
        step = h if cap is None else min(h, cap(breaks[-1]))
        breaks.append(min(tmax, breaks[-1] + step))
        h *= growth
    if len(breaks) > 2 and breaks[-1] - breaks[-2] < 0.25 * (breaks[-2] - breaks[-3]):
        breaks.pop(-2)
    return breaks


def discretize(
    c: Contour,
    nodes_per_panel: int,
    truncation_radius: float,
    growth: float = 2.0,
    panel_length: float = 1.0,
    step_cap=None,
    weight_scale: complex = 1.0,
) -> QuadratureGrid:
    """Composite Gauss-Legendre rule along ``c``.

    Finite pieces are cut into panels of length at most ``panel_length``.
    Rays are truncated where they leave the disc of radius
    ``truncation_radius`` and cut into panels growing geometrically by
    ``growth`` away from their finite end. ``step_cap(z)``, if given, bounds
    the length of a ray panel starting at the point z (used to follow
    oscillatory integrands). All weights are multiplied by ``weight_scale``
    (1/(2 pi i) for the L^2(C, dz/(2 pi i)) spaces of the contour kernels).
    """
    if nodes_per_panel < 2:
        raise ParameterError("nodes_per_panel must be >= 2")
    if growth <= 1.0:
        raise ParameterError("growth must exceed 1")
    x, w = gauss_legendre(nodes_per_panel)
    nodes, weights, bounds = [], [], [0]
    for piece in c.pieces:
        if isinstance(piece, Segment):
            npan = max(1, math.ceil(piece.length / panel_length - 1e-12))
            d = piece.end - piece.start
            for k in range(npan):
                t = (k + x) / npan
                nodes.append(piece.start + d * t)
                weights.append(d * w / npan)
                bounds.append(bounds[-1] + nodes_per_panel)
        elif isinstance(piece, Arc):
            npan = max(1, math.ceil(piece.length / panel_length - 1e-12))
            dth = (piece.theta1 - piece.theta0) / npan
            for k in range(npan):
                th = piece.theta0 + dth * (k + x)
                z = piece.center + piece.radius * np.exp(1j * th)
                nodes.append(z)
                weights.append(1j * (z - piece.center) * dth * w)
                bounds.append(bounds[-1] + nodes_per_panel)
        else:
            tmax = piece.max_parameter(truncation_radius)
            if tmax <= 0:
                continue
            cap = None if step_cap is None else (lambda t, p=piece: step_cap(p.point(t)))
            breaks = _ray_breaks(tmax, panel_length, growth, cap)
            pan_nodes, pan_weights = [], []
            for a, b in zip(breaks, breaks[1:]):
                t = a + (b - a) * x
                pan_nodes.append(piece.point(t))
                pan_weights.append(piece.direction * (b - a) * w)
            if piece.inward:
                pan_nodes = [n[::-1] for n in pan_nodes[::-1]]
                pan_weights = [-wt[::-1] for wt in pan_weights[::-1]]
            for n_, w_ in zip(pan_nodes, pan_weights):
                nodes.append(n_)
                weights.append(w_)
                bounds.append(bounds[-1] + nodes_per_panel)
    return QuadratureGrid(
        nodes=np.concatenate(nodes).astype(complex),
        weights=np.concatenate(weights).astype(complex) * weight_scale,
        panel_boundaries=tuple(bounds),
        truncation_radius=truncation_radius,
        source=c,
        nodes_per_panel=nodes_per_panel,
        panel_length=panel_length,
        growth=growth,
        step_cap=step_cap,
        weight_scale=weight_scale,
    )


# --- contour builders ------------------------------------------------------


def build_cv(alpha: float, phi: float) -> Contour:
    """Two-ray wedge alpha + e^{i(pi +- phi)} y, oriented upward."""
    if not (0.0 < phi <= math.pi / 4 + 1e-15):
        raise ParameterError("phi must lie in (0, pi/4]")
    a = complex(alpha)
    return Contour(
        (
            Ray(a, cmath.exp(1j * (math.pi + phi)), inward=True),
            Ray(a, cmath.exp(1j * (math.pi - phi)), inward=False),
        ),
        label=f"C_v(alpha={alpha}, phi={phi})",
    )


def wedge_angle_of(v: complex, alpha: float) -> float | None:
    """Opening angle phi of the C_{alpha,phi} ray carrying v (None at the vertex)."""
    d = complex(v) - alpha
    if abs(d) < 1e-14:
        return None
    return math.pi - abs(cmath.phase(d))


def _segment_distance(p0, p1, q0, q1) -> float:
    """Euclidean distance between two closed segments in the plane."""

    def point_seg(p, a, b):
        ab = b - a
        if abs(ab) == 0:
            return abs(p - a)
        t = ((p - a) * ab.conjugate()).real / abs(ab) ** 2
        t = min(1.0, max(0.0, t))
        return abs(p - (a + t * ab))

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    r, s = p1 - p0, q1 - q0
    den = cross(r, s)
    if den != 0:
        t = cross(q0 - p0, s) / den
        u = cross(q0 - p0, r) / den
        if 0 <= t <= 1 and 0 <= u <= 1:
            return 0.0
    return min(point_seg(p0, q0, q1), point_seg(p1, q0, q1), point_seg(q0, p0, p1), point_seg(q1, p0, p1))


def _notch_segments(v: complex, R: float, d: float):
    corners = [R - 1j * d, 0.5 - 1j * d, 0.5 + 1j * d, R + 1j * d]
    return [(v + a, v + b) for a, b in zip(corners, corners[1:])]


def notch_distance(v: complex, alpha: float, phi: float, d: float) -> float:
    """Distance between the shifted notch v + C_s^v (finite part) and C_{alpha,phi}."""
    R = -v.real + alpha + 1.0
    far = 10.0 * (abs(v) + abs(alpha) + R + 10.0)
    rays = [(alpha, alpha + far * cmath.exp(1j * (math.pi + s * phi))) for s in (1, -1)]
    segs = _notch_segments(v, R, d)
    # vertical rays of v + C_s^v sit on Re = alpha + 1; only their ends matter
    segs.append((v + R + 1j * d, v + R + 1j * (d + far)))
    segs.append((v + R - 1j * d, v + R - 1j * (d + far)))
    return min(_segment_distance(a, b, p, q) for a, b in segs for p, q in rays)


def default_notch_height(v: complex, alpha: float, phi: float) -> float:
    """min(0.25, half the distance from the flat notch to C_{alpha,phi})."""
    dist = notch_distance(complex(v), alpha, phi, 0.0)
    return min(0.25, 0.5 * dist)


def build_cs(v: complex, alpha: float, d: float | None = None, phi: float | None = None) -> Contour:
    """Inner contour C_s^v: R - i inf -> R - id -> 1/2 - id -> 1/2 + id -> R + id -> R + i inf.

    ``phi`` defaults to the wedge angle on which ``v`` lies. Raises
    GeometryError if v + C_s^v meets C_{alpha,phi}.
    """
    v = complex(v)
    R = -v.real + alpha + 1.0
    if phi is None:
        phi = wedge_angle_of(v, alpha)
    if d is None:
        d = default_notch_height(v, alpha, phi if phi is not None else math.pi / 4)
    if d <= 0:
        raise ParameterError("notch half-height d must be positive")
    if phi is not None and notch_distance(v, alpha, phi, d) <= 0.0:
        raise GeometryError(f"v + C_s^v meets C_alpha,phi for d={d}; use a smaller d")
    pieces = (
        Ray(complex(R, -d), -1j, inward=True),
        Segment(complex(R, -d), complex(0.5, -d)),
        Segment(complex(0.5, -d), complex(0.5, d)),
        Segment(complex(0.5, d), complex(R, d)),
        Ray(complex(R, d), 1j, inward=False),
    )
    return Contour(pieces, label=f"C_s(v={v}, R={R}, d={d})")


def wedge(vertex: complex, angle: float) -> Contour:
    """Wedge from e^{-i angle} inf through ``vertex`` to e^{i angle} inf."""
    vertex = complex(vertex)
    return Contour(
        (
            Ray(vertex, cmath.exp(-1j * angle), inward=True),
            Ray(vertex, cmath.exp(1j * angle), inward=False),
        ),
        label=f"wedge({vertex}, {angle:.4f})",
    )


def build_bbp_contours(b: Sequence[float] = (), r_vertex_gap: float = 1.0) -> tuple[Contour, Contour]:
    """w-wedge (angles +-2pi/3) right of every spike and of 0, z-wedge (+-pi/3) right of it.

    The vertex never moves left of ``r_vertex_gap``: a far-left spike would
    otherwise put the vertex where e^{-w^3/3} overflows.
    """
    finite = [x for x in b if np.isfinite(x)]
    wv = max(finite + [0.0]) + r_vertex_gap
    return wedge(wv, 2 * math.pi / 3), wedge(wv + r_vertex_gap, math.pi / 3)


def cdrp_sigma(T: float) -> float:
    return (2.0 / T) ** (1.0 / 3.0)


def build_cdrp_contours(T: float, b: Sequence[float] = ()) -> tuple[Contour, Contour]:
    """Vertical w-line Re = -1/(4 sigma), indented right around spikes b_k/sigma.

    The z-contour is the w-contour translated by 1/(2 sigma).
    """
    if T <= 0:
        raise ParameterError("T must be positive")
    sigma = cdrp_sigma(T)
    x0 = -1.0 / (4.0 * sigma)
    spikes = [bk / sigma for bk in b if np.isfinite(bk)]
    top = max(spikes) if spikes else -math.inf
    if top >= x0:
        rho = top + 1.0 / (8.0 * sigma) - x0
        c = complex(x0, 0.0)
        pieces = (
            Ray(complex(x0, -rho), -1j, inward=True),
            Arc(c, rho, -math.pi / 2, math.pi / 2),
            Ray(complex(x0, rho), 1j, inward=False),
        )
    else:
        pieces = (
            Ray(complex(x0, 0.0), -1j, inward=True),
            Ray(complex(x0, 0.0), 1j, inward=False),
        )
    cw = Contour(pieces, label=f"C_w(T={T})")
    return cw, cw.translated(1.0 / (2.0 * sigma))
