"""Zeros of the characteristic determinant and the containment / limit experiments.

Zeros are counted by the argument principle on rectangle boundaries, isolated
by quadtree subdivision, seeded by the first contour moment and polished by
Newton's method with a central-difference derivative.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .determinant import SINGULAR_TOL, log_chardet
from .errors import NumericalError, ValidationError
from .potential import PiecewiseLinearPotential, jump, linear
from .stokes import SpectralSkeleton, distance_to_skeleton, skeleton

logger = logging.getLogger(__name__)

MIN_BOX = 1e-4
NEWTON_TOL = 1e-10
MAX_NEWTON = 60
INFLATE = 0.017
MAX_PERTURB = 3
PHASE_STEP = np.pi / 2
RESIDUAL_LOG_TOL = math.log(SINGULAR_TOL)
BOUNDARY_DIP = math.log(1e10)
_MAX_REFINE = 40
_SPLIT_OFFSETS = (0.0, 0.0173, -0.0291, 0.0437, -0.0613)


@dataclass(frozen=True)
class SearchRegion:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        vals = (self.re_lo, self.re_hi, self.im_lo, self.im_hi)
        if not all(np.isfinite(v) for v in vals):
            raise ValidationError("BAD_REGION", f"non-finite region bounds {vals}")
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValidationError("BAD_REGION", f"region bounds not ordered: {vals}")

    @property
    def width(self) -> float:
        return self.re_hi - self.re_lo

    @property
    def height(self) -> float:
        return self.im_hi - self.im_lo

    @property
    def center(self) -> complex:
        return complex((self.re_lo + self.re_hi) / 2, (self.im_lo + self.im_hi) / 2)

    def contains(self, z: complex) -> bool:
        return self.re_lo < z.real < self.re_hi and self.im_lo < z.imag < self.im_hi

    def inflate(self, frac: float) -> "SearchRegion":
        dx, dy = frac * self.width / 2, frac * self.height / 2
        return SearchRegion(self.re_lo - dx, self.re_hi + dx, self.im_lo - dy, self.im_hi + dy)

    def split(self, offset: float = 0.0) -> list["SearchRegion"]:
        xm = self.re_lo + (0.5 + offset) * self.width
        ym = self.im_lo + (0.5 - offset) * self.height
        return [SearchRegion(self.re_lo, xm, self.im_lo, ym), SearchRegion(xm, self.re_hi, self.im_lo, ym),
                SearchRegion(self.re_lo, xm, ym, self.im_hi), SearchRegion(xm, self.re_hi, ym, self.im_hi)]


@dataclass(frozen=True)
class EigenEntry:
    lam: complex
    residual_log: float
    winding: int
    refine_iterations: int
    status: str = "ok"


@dataclass
class EigenvalueSet:
    entries: list[EigenEntry]
    params: dict
    flagged: list[EigenEntry] = field(default_factory=list)
    region: SearchRegion | None = None

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=complex)

    def __len__(self) -> int:
        return len(self.entries)


def _sort_key(z: complex):
    return (round(z.real, 9), round(z.imag, 9))


# ---------------------------------------------------------------------------
# contour integration

@dataclass
class _Contour:
    points: np.ndarray     # closed: last point equals the first
    logd: np.ndarray
    winding: int

    def moment(self) -> complex:
        """(1 / 2 pi i) sum z d(log D): the zero location when the winding is one."""
        d = np.diff(self.logd.real) + 1j * _wrap(np.diff(self.logd.imag))
        zm = 0.5 * (self.points[1:] + self.points[:-1])
        return complex(np.sum(zm * d) / (2j * np.pi))


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _initial_points(region: SearchRegion, density: float) -> np.ndarray:
    c = [complex(region.re_lo, region.im_lo), complex(region.re_hi, region.im_lo),
         complex(region.re_hi, region.im_hi), complex(region.re_lo, region.im_hi)]
    pts = []
    for a, b in zip(c, c[1:] + c[:1]):
        n = max(8, int(math.ceil(abs(b - a) * density)))
        pts.append(a + (b - a) * np.arange(n) / n)
    pts = np.concatenate(pts)
    return np.append(pts, pts[0])


def _contour(f: Callable, region: SearchRegion, density: float) -> _Contour:
    pts = _initial_points(region, density)
    logd, _ = f(pts[:-1])
    logd = np.append(logd, logd[0])
    scale = max(region.width, region.height)
    checked = False
    for _ in range(_MAX_REFINE):
        if not np.all(np.isfinite(logd)) or _has_dip(logd.real):
            raise NumericalError("BOUNDARY_ZERO", "determinant vanishes on the contour", region=region)
        dphi = _wrap(np.diff(logd.imag))
        bad = np.abs(dphi) >= PHASE_STEP
        if not bad.any():
            if checked:
                break
            # consistency pass: halve every interval once more and re-check
            checked = True
            mids = 0.5 * (pts[1:] + pts[:-1])
            pts, logd = _insert(pts, logd, np.ones_like(bad), mids, f(mids)[0])
            continue
        seg = np.abs(np.diff(pts))
        if np.any(seg[bad] < 1e-11 * (1 + scale)):
            raise NumericalError("BOUNDARY_ZERO", "phase jump cannot be resolved on the contour", region=region)
        mids = 0.5 * (pts[1:] + pts[:-1])[bad]
        pts, logd = _insert(pts, logd, bad, mids, f(mids)[0])
    else:
        raise NumericalError("BOUNDARY_ZERO", "contour refinement did not settle", region=region)
    total = float(np.sum(_wrap(np.diff(logd.imag)))) / (2 * np.pi)
    w = int(round(total))
    if abs(total - w) > 1e-3:
        raise NumericalError("BOUNDARY_ZERO", f"non-integer winding {total}", region=region)
    return _Contour(pts, logd, w)


def _insert(pts, logd, mask, mids, lm):
    idx = np.nonzero(mask)[0] + 1
    return np.insert(pts, idx, mids), np.insert(logd, idx, lm)


def _has_dip(la) -> bool:
    """True when log|D| at a contour point falls far below both neighbours.

    Between neighbouring samples log|D| changes by O(1); a zero at distance r
    from the contour with sample spacing s pulls the nearest sample down by
    about log(s / r).  The test is scale free, unlike a threshold on |D|,
    whose natural size shrinks exponentially as h decreases.
    """
    ring = la[:-1]
    mid = 0.5 * (np.roll(ring, 1) + np.roll(ring, -1))
    return bool(np.any(ring - mid < -BOUNDARY_DIP))


def _density(h: float) -> float:
    return max(40.0, 8.0 / h)


def _det_fn(V, h):
    """z -> (log D, row-normalised log|det|)."""
    def f(z):
        return log_chardet(V, h, z)
    return f


def winding_count(region: SearchRegion, V: PiecewiseLinearPotential, h: float) -> int:
    """Number of determinant zeros inside ``region`` (argument principle).

    Raises
    ------
    NumericalError
        ``BOUNDARY_ZERO`` when a zero sits on or too close to the boundary.
    """
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    return _contour(_det_fn(V, h), region, _density(h)).winding


# ---------------------------------------------------------------------------
# root polishing

def _newton(f, z0: complex, tol: float, max_iter: int, max_step: float):
    z = complex(z0)
    for it in range(1, max_iter + 1):
        s = 1e-6 * (1 + abs(z))
        ld = f(np.array([z, z + s, z - s]))[0]
        if not np.isfinite(ld[0].real):
            return z, it, True
        rp = np.exp(ld[1] - ld[0])
        rm = np.exp(ld[2] - ld[0])
        denom = rp - rm
        if denom == 0 or not np.isfinite(denom):
            return z, it, False
        step = -2 * s / denom
        if abs(step) > max_step:
            step *= max_step / abs(step)
        z = z + step
        if abs(step) < tol:
            return z, it, True
    return z, max_iter, False


def solve_spectrum(V: PiecewiseLinearPotential, h: float, region: SearchRegion,
                   min_box: float = MIN_BOX, newton_tol: float = NEWTON_TOL,
                   max_newton: int = MAX_NEWTON, params: dict | None = None) -> EigenvalueSet:
    """All determinant zeros inside ``region``.

    Parameters
    ----------
    min_box : float
        Boxes smaller than this holding more than one zero are reported as
        unresolved clusters instead of being split further.
    newton_tol : float
        Newton stops once the update is below this.

    Returns
    -------
    EigenvalueSet
        Accepted roots in ``entries`` (sorted by real then imaginary part);
        clusters and non-converged roots in ``flagged``.
    """
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    f = _det_fn(V, h)
    dens = _density(h)
    top = region
    for attempt in range(MAX_PERTURB + 1):
        try:
            c0 = _contour(f, top, dens)
            break
        except NumericalError as exc:
            if exc.code != "BOUNDARY_ZERO" or attempt == MAX_PERTURB:
                raise
            top = top.inflate(INFLATE)
            logger.info("zero on the search boundary; inflating region to %s", top)

    entries: list[EigenEntry] = []
    flagged: list[EigenEntry] = []
    stack = [(top, c0)]
    while stack:
        box, con = stack.pop()
        if con.winding == 0:
            continue
        if con.winding == 1:
            z, its, ok = _newton(f, con.moment(), newton_tol, max_newton, max(box.width, box.height))
            if ok and box.contains(z):
                res = float(f(np.array([z]))[1][0])
                status = "ok" if res <= RESIDUAL_LOG_TOL else "precision_floor"
                entries.append(EigenEntry(z, res, 1, its, status))
                continue
            if max(box.width, box.height) < min_box:
                flagged.append(EigenEntry(z, math.nan, 1, its, "no_convergence"))
                continue
        elif max(box.width, box.height) < min_box:
            flagged.append(EigenEntry(box.center, math.nan, con.winding, 0, "unresolved_cluster"))
            continue
        stack.extend(_subdivide(f, box, con.winding, dens))

    entries.sort(key=lambda e: _sort_key(e.lam))
    flagged.sort(key=lambda e: _sort_key(e.lam))
    p = {"h": h}
    p.update(params or {})
    return EigenvalueSet(entries, p, flagged, top)


def _subdivide(f, box: SearchRegion, count: int, dens: float):
    for off in _SPLIT_OFFSETS:
        kids = box.split(off)
        try:
            cons = [_contour(f, k, dens) for k in kids]
        except NumericalError as exc:
            if exc.code != "BOUNDARY_ZERO":
                raise
            continue
        if sum(c.winding for c in cons) == count:
            return list(zip(kids, cons))
        logger.debug("winding not conserved splitting %s (offset %g)", box, off)
    raise NumericalError("BOUNDARY_ZERO", f"could not subdivide {box} cleanly", region=box)


# ---------------------------------------------------------------------------
# experiments

@dataclass
class ContainmentReport:
    eps: float
    N: float
    lambdas: np.ndarray
    distances: np.ndarray
    max_distance: float
    passed: bool
    offenders: list[tuple[complex, float]]


def containment_report(eigs, T: SpectralSkeleton, eps: float, N: float) -> ContainmentReport:
    """Check that every eigenvalue with |lambda| <= N is within eps of T."""
    lams = eigs.lambdas if isinstance(eigs, EigenvalueSet) else np.asarray(eigs, dtype=complex)
    lams = lams[np.abs(lams) <= N]
    d = np.asarray(distance_to_skeleton(lams, T)) if lams.size else np.zeros(0)
    bad = [(complex(z), float(x)) for z, x in zip(lams, d) if x > eps]
    return ContainmentReport(eps, N, lams, d, float(d.max()) if d.size else 0.0, not bad, bad)


def conjugate_pairing(eigs) -> float:
    """Largest distance from conj(lambda) to the nearest eigenvalue.

    Zero for a spectrum symmetric about the real axis (e.g. an antisymmetric
    imaginary potential such as the jump family).
    """
    lams = eigs.lambdas if isinstance(eigs, EigenvalueSet) else np.asarray(eigs, dtype=complex)
    if lams.size == 0:
        return 0.0
    return float(np.max(np.min(np.abs(np.conj(lams)[:, None] - lams[None, :]), axis=1)))


@dataclass
class LimitRow:
    h: float
    delta: float
    eigenvalues: EigenvalueSet
    dist_single: float
    dist_double: float


@dataclass
class LimitReport:
    p: float
    rows: list[LimitRow]
    target: str
    single_decreasing: bool
    double_decreasing: bool

    @property
    def passed(self) -> bool:
        return self.single_decreasing if self.target == "single" else self.double_decreasing


def _strictly_decreasing(v) -> bool:
    return all(b < a for a, b in zip(v, v[1:]))


def limit_experiment(p: float, h_list, region: SearchRegion, V_template: Callable = jump,
                     N: float = 1.5, threads: int = 1, R_trunc: float = 10.0) -> LimitReport:
    """Spectra of the template at delta = h^{1/p} along a decreasing h list.

    For each h the one-sided Hausdorff distance (eigenvalues to set) is
    reported against the single Y(-i, i) and against the skeleton of the
    template at the current delta.  The predicted target is the single Y for
    0 < p < 1 and the two-piece skeleton for p >= 1.
    """
    if not (np.isfinite(p) and p > 0):
        raise ValidationError("BAD_PARAMETER", f"p must be positive, got {p}")
    hs = [float(h) for h in h_list]
    if not hs or any(h <= 0 for h in hs) or any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValidationError("BAD_PARAMETER", f"h list must be positive and strictly decreasing: {hs}")
    single = skeleton(linear(1j), R_trunc)

    def run(h):
        delta = h ** (1.0 / p)
        V = V_template(delta)
        eig = solve_spectrum(V, h, region, params={"delta": delta, "p": p})
        T = skeleton(V, R_trunc)
        ds = containment_report(eig, single, np.inf, N).max_distance
        dd = containment_report(eig, T, np.inf, N).max_distance
        return LimitRow(h, delta, eig, ds, dd)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        rows = list(ex.map(run, hs))
    return LimitReport(p, rows, "single" if p < 1 else "double",
                       _strictly_decreasing([r.dist_single for r in rows]),
                       _strictly_decreasing([r.dist_double for r in rows]))


def eigen_records(eigs: EigenvalueSet, T: SpectralSkeleton | None = None) -> list[dict]:
    """Rows ``{h, delta, lambda_re, lambda_im, residual_log, dist_to_skeleton}``."""
    h = eigs.params.get("h")
    delta = eigs.params.get("delta")
    lams = eigs.lambdas
    d = distance_to_skeleton(lams, T) if (T is not None and lams.size) else np.full(lams.shape, np.nan)
    return [{"h": h, "delta": delta, "lambda_re": float(e.lam.real), "lambda_im": float(e.lam.imag),
             "residual_log": e.residual_log, "dist_to_skeleton": float(x)}
            for e, x in zip(eigs.entries, np.atleast_1d(d))]
