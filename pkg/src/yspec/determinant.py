"""Characteristic determinant of the piecewise Airy ansatz.

On segment i the two basis functions are

    u(x) = Ai(e^{-2k pi i/3} w(x)),   w = h^{-2/3} m^{-2/3} (m x + l - lambda),

for two distinct rotation indices k.  Boundary rows impose u(-1) = u(1) = 0
and each interior node contributes a value row and a derivative row.  The
matrix entries span exp(+-O(1/h)), so every entry is carried as a log
magnitude plus phase and the determinant is formed by partial-pivoted
elimination on (mantissa, exponent) pairs.

Two bases of the same segment differ by a fixed 2x2 matrix C coming from the
three-solution identity Ai_0 + e^{-2pi i/3} Ai_1 + e^{2pi i/3} Ai_{-1} = 0.
Dividing by det C of every segment gives the determinant in the reference
basis (k = 0, 1), which is independent of the basis actually used and is
what the zero finder works with.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .airy import OMEGA, RotationIndex, airy_log, principal_power, rotated_arg, _as_index
from .errors import NumericalError, ValidationError
from .potential import PiecewiseLinearPotential, Segment

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-13
TURNING_TOL = 1e-12
_MARGIN_DIGITS = 10
_LN2 = np.log(2.0)

_ORDER = {0: 0, 1: 1, -1: 2}
# ordered pairs (decaying toward the right end, growing toward the right end),
# listed in tie-break order
PAIRS = sorted(((j, k) for j in (-1, 0, 1) for k in (-1, 0, 1) if j != k),
               key=lambda p: (abs(p[0]), _ORDER[p[0]], abs(p[1]), _ORDER[p[1]]))

# coefficients of Ai_k in the reference basis (Ai_0, Ai_1)
_COEF = {0: np.array([1.0, 0.0], dtype=complex),
         1: np.array([0.0, 1.0], dtype=complex),
         -1: np.array([-OMEGA ** 2, -OMEGA])}


def basis_change_det(pair) -> complex:
    """det C for the basis (Ai_j, Ai_k) expressed in (Ai_0, Ai_1)."""
    j, k = (int(p) for p in pair)
    a, b = _COEF[j], _COEF[k]
    return complex(a[0] * b[1] - a[1] * b[0])


@dataclass(frozen=True)
class BasisChoice:
    """Per-segment ordered pair of distinct rotation indices."""

    pairs: tuple[tuple[RotationIndex, RotationIndex], ...]

    def __post_init__(self):
        fixed = []
        for p in self.pairs:
            if len(p) != 2:
                raise ValidationError("BAD_BASIS", f"basis pair must have two indices, got {p!r}")
            j, k = _as_index(p[0]), _as_index(p[1])
            if j == k:
                raise ValidationError("BAD_BASIS", f"basis indices must differ, got ({j}, {k})")
            fixed.append((j, k))
        object.__setattr__(self, "pairs", tuple(fixed))

    @classmethod
    def reference(cls, n: int) -> "BasisChoice":
        return cls(tuple((RotationIndex.ZERO, RotationIndex.PLUS) for _ in range(n)))

    def canonical_factor(self) -> complex:
        """Product of det C over segments; D_choice = factor * D_reference."""
        f = 1.0 + 0j
        for p in self.pairs:
            f *= basis_change_det(p)
        return f


@dataclass(frozen=True)
class ScaledDeterminant:
    """Determinant value = mantissa * exp(log_scale).

    ``relative_log`` is log|det| of the row-normalised matrix (every row has
    largest entry of modulus one), i.e. how far from singular the matrix is
    on a scale-free footing.
    """

    mantissa: complex
    log_scale: float
    relative_log: float
    singular: bool
    choice: BasisChoice | None = None

    @property
    def log_abs(self) -> float:
        if self.mantissa == 0:
            return -np.inf
        return float(np.log(abs(self.mantissa)) + self.log_scale)

    @property
    def phase(self) -> float:
        return float(np.angle(self.mantissa))

    @property
    def value(self) -> complex:
        return complex(self.mantissa * np.exp(self.log_scale))


# ---------------------------------------------------------------------------
# scalar building blocks

def scaled_argument(m, l, h: float, lam, x):
    """w = h^{-2/3} m^{-2/3} (m x + l - lambda), principal m^{-2/3}."""
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    if m == 0:
        raise ValidationError("ZERO_SLOPE", "slope must be nonzero")
    return h ** (-2.0 / 3.0) * principal_power(m, -2.0 / 3.0) * (m * np.asarray(x) + l - np.asarray(lam))


def _chain_factor(m, h):
    """dw/dx = h^{-2/3} m m^{-2/3}."""
    return h ** (-2.0 / 3.0) * m * principal_power(m, -2.0 / 3.0)


def basis_value(seg: Segment, k, h: float, lam, x):
    """(log|u(x)|, arg u(x)) for u = Ai_k(w(x)) on segment ``seg``."""
    k = _as_index(k)
    w = scaled_argument(seg.m, seg.l, h, lam, x)
    la, pa, _, _ = airy_log(k.factor * w)
    return (float(la), float(pa)) if np.ndim(la) == 0 else (la, pa)


def basis_derivative(seg: Segment, k, h: float, lam, x):
    """(log|u'(x)|, arg u'(x)), exact chain rule through Ai'."""
    k = _as_index(k)
    w = scaled_argument(seg.m, seg.l, h, lam, x)
    _, _, lp, pp = airy_log(k.factor * w)
    c = k.factor * _chain_factor(seg.m, h)
    lp = lp + np.log(abs(c))
    pp = pp + np.angle(c)
    return (float(lp), float(pp)) if np.ndim(lp) == 0 else (lp, pp)


def wkb_derivative_factor(seg: Segment, k, lam, x) -> complex:
    """h-independent c with u'(x) ~ h^{-1} c u(x) as h -> 0.

    From Ai'(z)/Ai(z) ~ -z^{1/2}:  c = -e^{-2k pi i/3} m^{1/3} (e^{-2k pi i/3} m^{-2/3}(V - lambda))^{1/2},
    which equals -(V - lambda)^{1/2} for k = 0 and +(V - lambda)^{1/2} for k = +-1
    whenever the principal branches line up.
    """
    k = _as_index(k)
    d = complex(seg(x) - lam)
    if abs(d) <= TURNING_TOL:
        raise ValidationError("TURNING_POINT", f"V({x}) = lambda = {lam}")
    mm = complex(principal_power(seg.m, -2.0 / 3.0))
    return complex(-k.factor * seg.m * mm * principal_power(k.factor * mm * d, 0.5))


# ---------------------------------------------------------------------------
# basis selection

def _h_free_args(V: PiecewiseLinearPotential, lams: np.ndarray):
    """m^{-2/3}(V - lambda) at both ends of every segment: shape (B, n, 2)."""
    out = np.empty((lams.size, V.n, 2), dtype=complex)
    for i, s in enumerate(V.segments):
        mm = principal_power(s.m, -2.0 / 3.0)
        out[:, i, 0] = mm * (s(s.x_lo) - lams)
        out[:, i, 1] = mm * (s(s.x_hi) - lams)
    return out


def _growth_tables(V, lams):
    """Allowability and Re(rotated arg)^{3/2} for every index: shape (B, n, 2, 3)."""
    w = _h_free_args(V, lams)
    r15 = np.abs(w) ** 1.5
    allow = np.empty(w.shape + (3,), dtype=bool)
    rho = np.empty(w.shape + (3,))
    for c, k in enumerate((-1, 0, 1)):
        ra = rotated_arg(k, w)
        allow[..., c] = (np.abs(ra) < np.pi - 1e-12) | (w == 0)
        rho[..., c] = r15 * np.cos(1.5 * ra)
    return allow, rho


def _pair_scores(V, lams):
    """Margins and admissibility for each pair in PAIRS: shapes (B, n, P)."""
    allow, rho = _growth_tables(V, lams)
    col = {-1: 0, 0: 1, 1: 2}
    margins = np.empty(allow.shape[:2] + (len(PAIRS),))
    ok = np.empty(margins.shape, dtype=bool)
    for p, (j, k) in enumerate(PAIRS):
        cj, ck = col[j], col[k]
        ok[..., p] = allow[..., 0, cj] & allow[..., 1, cj] & allow[..., 0, ck] & allow[..., 1, ck]
        margins[..., p] = np.minimum(rho[..., 1, cj] - rho[..., 0, cj], rho[..., 0, ck] - rho[..., 1, ck])
    return np.round(margins, _MARGIN_DIGITS), ok


def _ranked_pairs(margins_i, ok_i):
    """Pair indices for one segment sorted by preference (admissible only)."""
    idx = [p for p in range(len(PAIRS)) if ok_i[p]]
    return sorted(idx, key=lambda p: (-margins_i[p], p))


def choose_basis(V: PiecewiseLinearPotential, h: float, lam: complex) -> BasisChoice:
    """Select an allowable, dominance-ordered basis pair per segment.

    The first index of each pair decays from the left end to the right end of
    the segment and the second grows; among admissible pairs the one with the
    largest growth margin wins, ties going to smaller |k| with 0 before 1
    before -1.  At continuous joins the WKB factors of the two solutions that
    dominate at the node must differ; if the preferred pair violates this the
    next candidates are tried.
    """
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    lam = complex(lam)
    margins, ok = _pair_scores(V, np.array([lam]))
    ranked = []
    for i in range(V.n):
        r = _ranked_pairs(margins[0, i], ok[0, i])
        if not r:
            raise NumericalError(
                "NO_ALLOWABLE_PAIR",
                f"segment {i}: fewer than two rotation indices are allowable at both ends for lambda={lam}",
                segment=i, hint="perturb lambda off the Stokes image by ~1e-9")
        ranked.append(r)
    best = tuple(r[0] for r in ranked)
    joins = [i for i in range(V.n - 1) if _continuous_join(V, i)]
    if joins and not _signs_ok(V, lam, best, joins):
        for combo in itertools.product(*[r[:3] for r in ranked]):
            if _signs_ok(V, lam, combo, joins):
                best = combo
                break
        else:
            logger.warning("no basis satisfies the join sign rule at lambda=%s; using the best-margin pair", lam)
    return BasisChoice(tuple(PAIRS[p] for p in best))


def _continuous_join(V, i) -> bool:
    a, b = V.segments[i], V.segments[i + 1]
    x = a.x_hi
    return abs(a(x) - b(x)) <= 1e-12 * (1 + abs(a(x)))


def _signs_ok(V, lam, combo, joins) -> bool:
    for i in joins:
        a, b = V.segments[i], V.segments[i + 1]
        x = a.x_hi
        try:
            cl = wkb_derivative_factor(a, PAIRS[combo[i]][1], lam, x)
            cr = wkb_derivative_factor(b, PAIRS[combo[i + 1]][0], lam, x)
        except ValidationError:
            return True  # turning point at the node: rule not applicable
        if abs(cl - cr) <= 1e-9 * (abs(cl) + abs(cr)):
            return False
    return True


def _batch_choice(V, lams) -> np.ndarray:
    """Best pair index per (lambda, segment) without raising; shape (B, n)."""
    margins, ok = _pair_scores(V, lams)
    key = np.where(ok, margins, -np.inf)
    # fall back to raw margins when nothing is admissible (exact evaluation does not need it)
    none = ~ok.any(axis=-1, keepdims=True)
    key = np.where(none, margins, key)
    return np.argmax(key, axis=-1)  # first maximum = tie-break order


# ---------------------------------------------------------------------------
# assembly

def _entries(V, h, lams, choice_idx):
    """Log-magnitude and phase of u, u' at both ends of each segment.

    Returns arrays of shape (B, n, 2 ends, 2 functions) for value and derivative.
    """
    B, n = choice_idx.shape
    facs = np.array([[RotationIndex(p[0]).factor, RotationIndex(p[1]).factor] for p in PAIRS])
    fsel = facs[choice_idx]                      # (B, n, 2)
    xi = np.empty((B, n, 2, 2), dtype=complex)
    chain = np.empty(n, dtype=complex)
    for i, s in enumerate(V.segments):
        for e, x in enumerate((s.x_lo, s.x_hi)):
            w = scaled_argument(s.m, s.l, h, lams, x)
            xi[:, i, e, :] = fsel[:, i, :] * w[:, None]
        chain[i] = _chain_factor(s.m, h)
    la, pa, lp, pp = airy_log(xi)
    dfac = fsel[:, :, None, :] * chain[None, :, None, None]
    lp = lp + np.log(np.abs(dfac))
    pp = pp + np.angle(dfac)
    return la, pa, lp, pp


def _assemble(V, h, lams, choice_idx):
    B, n = choice_idx.shape
    N = 2 * n
    L = np.full((B, N, N), -np.inf)
    P = np.zeros((B, N, N))
    la, pa, lp, pp = _entries(V, h, lams, choice_idx)
    L[:, 0, 0:2], P[:, 0, 0:2] = la[:, 0, 0, :], pa[:, 0, 0, :]
    for i in range(n - 1):
        rv, rd = 2 * i + 1, 2 * i + 2
        cl, cr = 2 * i, 2 * i + 2
        L[:, rv, cl:cl + 2], P[:, rv, cl:cl + 2] = la[:, i, 1, :], pa[:, i, 1, :]
        L[:, rv, cr:cr + 2], P[:, rv, cr:cr + 2] = la[:, i + 1, 0, :], pa[:, i + 1, 0, :] + np.pi
        L[:, rd, cl:cl + 2], P[:, rd, cl:cl + 2] = lp[:, i, 1, :], pp[:, i, 1, :]
        L[:, rd, cr:cr + 2], P[:, rd, cr:cr + 2] = lp[:, i + 1, 0, :], pp[:, i + 1, 0, :] + np.pi
    L[:, N - 1, N - 2:], P[:, N - 1, N - 2:] = la[:, n - 1, 1, :], pa[:, n - 1, 1, :]
    return L, P


def _row_normalize(L):
    """Subtract each row's largest log-magnitude; returns scaled L and the row logs."""
    row = np.max(L, axis=2)
    row = np.where(np.isfinite(row), row, 0.0)
    return L - row[:, :, None], row


def assemble_matrix(V: PiecewiseLinearPotential, h: float, lam: complex, choice: BasisChoice | None = None):
    """Row-normalised matrix entries as (log_magnitude, phase) plus the row scales.

    Returns
    -------
    log_mag, phase : ndarray, shape (2n, 2n)
        Structural zeros have ``log_mag = -inf``.
    row_scales : ndarray, shape (2n,)
        Natural-log factor removed from each row.
    """
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    if choice is None:
        choice = choose_basis(V, h, lam)
    idx = np.array([[PAIRS.index((int(j), int(k))) for j, k in choice.pairs]])
    L, P = _assemble(V, h, np.array([complex(lam)]), idx)
    row = np.max(L[0], axis=1)
    return L[0] - row[:, None], P[0], row


# ---------------------------------------------------------------------------
# log-domain elimination

def _normalize(m, e):
    a = np.abs(m)
    zero = a == 0
    _, q = np.frexp(np.where(zero, 1.0, a))
    p = q - 1
    m = np.where(zero, 0.0, m * np.ldexp(1.0, -p))
    e = np.where(zero, -np.inf, e + p * _LN2)
    return m, e


def _add(m1, e1, m2, e2):
    """(m1 e^{e1}) + (m2 e^{e2}) in normalised form."""
    e = np.maximum(e1, e2)
    fin = np.isfinite(e)
    es = np.where(fin, e, 0.0)
    with np.errstate(invalid="ignore"):
        s1 = np.where(np.isfinite(e1), np.exp(np.where(np.isfinite(e1), e1, 0.0) - es), 0.0)
        s2 = np.where(np.isfinite(e2), np.exp(np.where(np.isfinite(e2), e2, 0.0) - es), 0.0)
    m = m1 * s1 + m2 * s2
    return _normalize(np.where(fin, m, 0.0), np.where(fin, e, -np.inf))


def log_det(L, P):
    """Determinant of matrices given entrywise as exp(L + iP).

    Partial pivoting on log-magnitude, ties to the lowest row index.

    Returns
    -------
    mantissa : complex ndarray, |mantissa| in [1, 2) or 0
    log_scale : float ndarray
    """
    L = np.array(L, dtype=float)
    B, N, _ = L.shape
    M = np.where(np.isfinite(L), np.exp(1j * np.asarray(P)), 0.0)
    E = np.where(np.isfinite(L), L, -np.inf)
    M, E = _normalize(M, E)
    det_m = np.ones(B, dtype=complex)
    det_e = np.zeros(B)
    bidx = np.arange(B)
    for k in range(N):
        mag = np.where(M[:, k:, k] != 0, np.log(np.abs(np.where(M[:, k:, k] != 0, M[:, k:, k], 1.0))) + E[:, k:, k], -np.inf)
        piv = k + np.argmax(mag, axis=1)
        swap = piv != k
        if np.any(swap):
            rows_k = M[bidx, k].copy(), E[bidx, k].copy()
            M[bidx, k], E[bidx, k] = M[bidx, piv], E[bidx, piv]
            M[bidx, piv], E[bidx, piv] = rows_k
            det_m = np.where(swap, -det_m, det_m)
        pm, pe = M[:, k, k], E[:, k, k]
        det_m, det_e = _normalize(det_m * pm, det_e + np.where(np.isfinite(pe), pe, 0.0))
        det_e = np.where(pm == 0, -np.inf, det_e)
        if k == N - 1:
            break
        safe = pm != 0
        fm = np.where(safe[:, None], M[:, k + 1:, k] / np.where(safe, pm, 1.0)[:, None], 0.0)
        fe = np.where(safe[:, None], E[:, k + 1:, k] - np.where(np.isfinite(pe), pe, 0.0)[:, None], -np.inf)
        tm = fm[:, :, None] * M[:, None, k, k + 1:]
        te = fe[:, :, None] + E[:, None, k, k + 1:]
        M[:, k + 1:, k + 1:], E[:, k + 1:, k + 1:] = _add(M[:, k + 1:, k + 1:], E[:, k + 1:, k + 1:], -tm, te)
        M[:, k + 1:, k], E[:, k + 1:, k] = 0.0, -np.inf
    det_e = np.where(det_m == 0, -np.inf, det_e)
    return det_m, det_e


def _log_abs(m, e):
    return np.where(m == 0, -np.inf, np.log(np.where(m == 0, 1.0, np.abs(m))) + e)


def _evaluate(V, h, lams, choice_idx):
    """Mantissa, log scale and row-normalised log|det|."""
    L, P = _assemble(V, h, lams, choice_idx)
    Ls, row = _row_normalize(L)
    m, e = log_det(Ls, P)
    return m, e + row.sum(axis=1), _log_abs(m, e)


def chardet(V: PiecewiseLinearPotential, h: float, lam: complex, choice: BasisChoice | None = None,
            canonical: bool = False) -> ScaledDeterminant:
    """Characteristic determinant at one spectral parameter.

    Parameters
    ----------
    choice : BasisChoice, optional
        Defaults to :func:`choose_basis`.
    canonical : bool
        Divide by the basis-change factor so the result is expressed in the
        reference basis (k = 0, 1) on every segment.
    """
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    if choice is None:
        choice = choose_basis(V, h, lam)
    if len(choice.pairs) != V.n:
        raise ValidationError("BAD_BASIS", f"basis has {len(choice.pairs)} pairs for {V.n} segments")
    idx = np.array([[PAIRS.index((int(j), int(k))) for j, k in choice.pairs]])
    m, e, rel = _evaluate(V, h, np.array([complex(lam)]), idx)
    mant = complex(m[0])
    if canonical:
        mant = mant / choice.canonical_factor()
    rel = float(rel[0])
    return ScaledDeterminant(mant, float(e[0]), rel, bool(rel < np.log(SINGULAR_TOL)), choice)


def log_chardet(V: PiecewiseLinearPotential, h: float, lams):
    """Vectorised reference-basis log-determinant.

    Returns
    -------
    logd : complex ndarray
        log|D| + i arg D with D expressed in the reference basis.
    relative_log : float ndarray
        Row-normalised log|det| (singularity measure).
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    shape = lams.shape
    lams = lams.ravel()
    idx = _batch_choice(V, lams)
    m, e, rel = _evaluate(V, h, lams, idx)
    canon = np.array([basis_change_det(p) for p in PAIRS])
    fac = np.prod(canon[idx], axis=1)
    m = m / fac
    with np.errstate(divide="ignore"):
        logd = np.log(np.abs(m)) + e + 1j * np.angle(m)
    return logd.reshape(shape), rel.reshape(shape)


def sweep_records(V, h, lams) -> list[dict]:
    """Rows ``{lambda_re, lambda_im, log_abs_D, arg_D}`` for heat maps."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex)).ravel()
    logd, _ = log_chardet(V, h, lams)
    return [{"lambda_re": float(z.real), "lambda_im": float(z.imag),
             "log_abs_D": float(d.real), "arg_D": float(d.imag)} for z, d in zip(lams, logd)]
