"""Y-shaped limit sets: junction, Stokes-image rays and the equal-growth curve.

Everything is computed in the normalised frame of a segment, where the
endpoint values become -e^{i theta} and e^{i theta}.  The frame map is a
translation and a positive real scaling, so directions are unchanged and
the zero set of the curve defect transforms covariantly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError, ValidationError
from .potential import PiecewiseLinearPotential, SegmentFrame, endpoint_values, segment_frame

logger = logging.getLogger(__name__)

GAMMA_CHECK_TOL = 1e-12
DEGENERATE_ANGLE = 1e-9
DEFAULT_R_TRUNC = 10.0
DEFAULT_STEP = 1e-2
_SCAN_POINTS = 24
_MAX_CORRECTOR_ITERS = 50


def _arg(u: complex) -> float:
    a = math.atan2(u.imag, u.real)
    return math.pi if a == -math.pi else a


def _re_pow32(u: complex) -> float:
    """Re u^{3/2} on the principal branch (continuous across the cut)."""
    return abs(u) ** 1.5 * math.cos(1.5 * _arg(u))


def _sign_theta(theta: float) -> int:
    return 1 if theta >= 0 else -1


def gamma_normalized(theta: float) -> tuple[complex, complex]:
    """Junction in the normalised frame by the two closed forms.

    The first form needs the ray-sign convention: its exponent is
    2(theta - pi)/3 for theta >= 0 and 2(theta + pi)/3 for theta < 0.
    """
    s = _sign_theta(theta)
    c = 4.0 / math.sqrt(3.0)
    g1 = complex(np.exp(1j * theta) + c * math.sin(abs(theta) / 3) * np.exp(2j * (theta - s * math.pi) / 3))
    g2 = complex(-np.exp(1j * theta) + c * math.sin(2 * math.pi / 3 + abs(theta) / 3) * np.exp(2j * theta / 3))
    return g1, g2


def gamma_point(alpha: complex, beta: complex) -> complex:
    """Junction of Y(alpha, beta)."""
    fr = segment_frame(alpha, beta)
    g1, g2 = gamma_normalized(fr.theta)
    if abs(g1 - g2) > GAMMA_CHECK_TOL * max(1.0, abs(g2)):
        raise NumericalError("GAMMA_MISMATCH", f"closed forms disagree at theta={fr.theta}: {g1} vs {g2}")
    return complex(fr.from_frame(g2))


def _defect_factory(theta: float):
    rot = complex(np.exp(-2j * theta / 3))
    a = rot * complex(-np.exp(1j * theta))
    b = rot * complex(np.exp(1j * theta))

    def F(mu: complex) -> float:
        w = rot * mu
        return _re_pow32(a - w) - _re_pow32(b - w)

    return F


def curve_defect(alpha: complex, beta: complex, lam):
    """Defect F(lam) = Re{(e^{-2 theta i/3}(alpha-lam))^{3/2}} - Re{(e^{-2 theta i/3}(beta-lam))^{3/2}}."""
    from .airy import principal_power

    fr = segment_frame(alpha, beta)
    rot = np.exp(-2j * fr.theta / 3)
    lam = np.asarray(lam, dtype=complex)
    return (principal_power(rot * (complex(alpha) - lam), 1.5).real
            - principal_power(rot * (complex(beta) - lam), 1.5).real)


@dataclass(frozen=True)
class Ray:
    """Bounded ray piece from ``origin`` along ``direction`` for ``length``."""

    origin: complex
    direction: complex
    length: float

    @property
    def end(self) -> complex:
        return self.origin + self.length * self.direction

    def points(self) -> np.ndarray:
        return np.array([self.origin, self.end])


@dataclass(frozen=True)
class YFigure:
    alpha: complex
    beta: complex
    frame: SegmentFrame
    gamma: complex
    ray_alpha: Ray
    ray_beta: Ray
    curve: np.ndarray = field(repr=False)
    asymptote_level: float
    step: float
    branch_crossings: int = 0

    def polylines(self) -> list[np.ndarray]:
        return [self.ray_alpha.points(), self.ray_beta.points(), self.curve]


@dataclass(frozen=True)
class SpectralSkeleton:
    figures: tuple[YFigure, ...]
    R_trunc: float

    def distance(self, lam):
        return distance_to_skeleton(lam, self)


def _scan_step(F, v: complex, d: complex, rho: float):
    """Locate the zero of F on the forward half-circle |mu - v| = rho nearest to d.

    Two branches of the level set can hug each other near a junction that sits
    close to an endpoint; their sign changes then cancel on a coarse scan, so
    progressively narrower windows around the current direction are tried.
    """
    width = np.pi / 2
    while width > 1e-12:
        nxt = _scan_once(F, v, d, rho, width)
        if nxt is not None:
            return nxt
        width /= 32.0
    return None


def _scan_once(F, v: complex, d: complex, rho: float, width: float):
    n = _SCAN_POINTS
    psi0 = _arg(d)
    angles = np.linspace(0.0, width, n + 1)
    g = lambda t: F(v + rho * complex(np.exp(1j * (psi0 + t))))
    vals_p = [g(t) for t in angles]
    vals_m = [vals_p[0]] + [g(-t) for t in angles[1:]]
    if vals_p[0] == 0.0:
        return v + rho * d
    for j in range(n):
        hits = []
        for sgn, vals in ((1.0, vals_p), (-1.0, vals_m)):
            if vals[j] * vals[j + 1] <= 0.0:
                lo, hi = sgn * angles[j], sgn * angles[j + 1]
                t, info = brentq(g, min(lo, hi), max(lo, hi), xtol=1e-13,
                                 maxiter=_MAX_CORRECTOR_ITERS, full_output=True, disp=False)
                if info.converged:
                    hits.append(t)
        if hits:
            t = min(hits, key=abs)
            return v + rho * complex(np.exp(1j * (psi0 + t)))
    return None


def _trace_normalized(theta: float, R_trunc: float, step: float):
    """Trace {F = 0} in the normalised frame from the junction outward."""
    F = _defect_factory(theta)
    g = gamma_normalized(theta)[1]
    if abs(math.sin(theta)) < DEGENERATE_ANGLE:
        n = int(math.ceil((R_trunc + 1.0 - g.real) / step))
        return g.real + step * np.arange(n + 1) + 0j, 0

    # start: zero of F on a small circle around the junction with the largest real part
    rho0 = 0.25 * step
    ang = np.linspace(-np.pi, np.pi, 721)
    vals = np.array([F(g + rho0 * complex(np.exp(1j * t))) for t in ang])
    cands = []
    for j in range(len(ang) - 1):
        if vals[j] * vals[j + 1] <= 0.0:
            f = lambda t: F(g + rho0 * complex(np.exp(1j * t)))
            t = brentq(f, ang[j], ang[j + 1], xtol=1e-13)
            cands.append(g + rho0 * complex(np.exp(1j * t)))
    if not cands:
        raise NumericalError("TRACE_STALL", "no outgoing branch found at the junction", last_vertex=g)
    first = max(cands, key=lambda c: c.real)
    pts = [g, first]
    crossings = 0
    while abs(pts[-1]) <= R_trunc:
        v = pts[-1]
        d = v - pts[-2]
        d = d / abs(d)
        rho = step * min(1.0, 0.25 + abs(v - g))
        nxt = _scan_step(F, v, d, rho)
        if nxt is None:
            raise NumericalError("TRACE_STALL", f"corrector failed after {len(pts)} vertices",
                                 last_vertex=v)
        crossings += _cut_crossed(theta, v, nxt)
        pts.append(nxt)
    return np.array(pts), crossings


def _cut_crossed(theta: float, v: complex, w: complex) -> int:
    """Count branch-cut crossings of either fractional power between v and w."""
    rot = complex(np.exp(-2j * theta / 3))
    n = 0
    for e in (-complex(np.exp(1j * theta)), complex(np.exp(1j * theta))):
        u1, u2 = rot * (e - v), rot * (e - w)
        if u1.real < 0 and u2.real < 0 and (u1.imag >= 0) != (u2.imag >= 0):
            n += 1
    return n


def trace_equal_curve(alpha: complex, beta: complex, R_trunc: float = DEFAULT_R_TRUNC,
                      step: float | None = None) -> np.ndarray:
    """Polyline of the equal-growth curve from the junction outward.

    Parameters
    ----------
    alpha, beta : complex
        Endpoint values of the segment.
    R_trunc : float
        Tracing stops once the frame-local radius exceeds this.
    step : float, optional
        Maximal vertex spacing in original units (default ``1e-2 * half_span``).
    """
    return _trace(alpha, beta, R_trunc, step)[0]


def _trace(alpha, beta, R_trunc, step):
    fr = segment_frame(alpha, beta)
    g = gamma_normalized(fr.theta)[1]
    if R_trunc <= abs(g) + 1:
        raise ValidationError("BAD_PARAMETER", f"R_trunc must exceed |Gamma| + 1 = {abs(g) + 1:.6g}")
    step_n = DEFAULT_STEP if step is None else step / fr.half_span
    if not step_n > 0:
        raise ValidationError("BAD_PARAMETER", "step must be positive")
    pts, crossings = _trace_normalized(fr.theta, R_trunc, step_n)
    if crossings:
        logger.debug("curve for (%s, %s) crossed a branch cut %d times", alpha, beta, crossings)
    return fr.from_frame(pts), crossings, fr, step_n * fr.half_span


def y_figure(alpha: complex, beta: complex, R_trunc: float = DEFAULT_R_TRUNC,
             step: float | None = None) -> YFigure:
    alpha, beta = complex(alpha), complex(beta)
    curve, crossings, fr, step_abs = _trace(alpha, beta, R_trunc, step)
    gamma = gamma_point(alpha, beta)
    s = _sign_theta(fr.theta)
    da = complex(np.exp(2j * fr.theta / 3))
    db = complex(np.exp(2j * fr.theta / 3 - s * 2j * np.pi / 3))
    ra = Ray(alpha, da, abs(gamma - alpha))
    rb = Ray(beta, db, abs(gamma - beta))
    curve = np.asarray(curve, dtype=complex)
    curve[0] = gamma
    return YFigure(alpha, beta, fr, gamma, ra, rb, curve,
                   (alpha.imag + beta.imag) / 2, step_abs, crossings)


def skeleton(V: PiecewiseLinearPotential, R_trunc: float = DEFAULT_R_TRUNC,
             step: float | None = None) -> SpectralSkeleton:
    """Union of the Y-figures of all segments."""
    figs = tuple(y_figure(a, b, R_trunc, step) for a, b in endpoint_values(V))
    return SpectralSkeleton(figs, R_trunc)


# ---------------------------------------------------------------------------
# distances

def _segments_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point in p to the union of segments [a_k, b_k]."""
    out = np.full(p.shape, np.inf)
    d = b - a
    dd = np.abs(d) ** 2
    dd_safe = np.where(dd == 0, 1.0, dd)
    chunk = max(1, 2_000_000 // max(1, a.size))
    for i in range(0, p.size, chunk):
        q = p[i:i + chunk, None]
        t = np.clip(((q - a) * np.conj(d)).real / dd_safe, 0.0, 1.0)
        t = np.where(dd == 0, 0.0, t)
        out[i:i + chunk] = np.min(np.abs(q - (a + t * d)), axis=1)
    return out


def _figure_distance(p: np.ndarray, fig: YFigure) -> np.ndarray:
    starts = [fig.ray_alpha.origin, fig.ray_beta.origin]
    ends = [fig.ray_alpha.end, fig.ray_beta.end]
    c = fig.curve
    a = np.concatenate([np.array(starts), c[:-1]])
    b = np.concatenate([np.array(ends), c[1:]])
    dist = _segments_distance(p, a, b)
    # horizontal half-line continuing the curve beyond truncation
    last = c[-1]
    tail = np.where(p.real >= last.real, np.abs(p.imag - last.imag), np.abs(p - last))
    return np.minimum(dist, tail)


def distance_to_skeleton(lam, T: SpectralSkeleton):
    """Euclidean distance from ``lam`` (scalar or array) to the skeleton."""
    p = np.atleast_1d(np.asarray(lam, dtype=complex)).ravel()
    d = np.full(p.shape, np.inf)
    for fig in T.figures:
        d = np.minimum(d, _figure_distance(p, fig))
    if np.ndim(lam) == 0:
        return float(d[0])
    return d.reshape(np.shape(lam))


def skeleton_records(T: SpectralSkeleton) -> list[dict]:
    """Plot-ready vertex rows ``{figure_index, element, vertex_index, re, im}``."""
    rows = []
    for i, fig in enumerate(T.figures):
        for name, pts in (("ray_a", fig.ray_alpha.points()), ("ray_b", fig.ray_beta.points()),
                          ("curve", fig.curve)):
            for j, z in enumerate(pts):
                rows.append({"figure_index": i, "element": name, "vertex_index": j,
                             "re": float(z.real), "im": float(z.imag)})
    return rows
