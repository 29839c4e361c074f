"""Complex Airy function Ai, its derivative, rotated solutions and sector tests.

Evaluation zones (r = |z|, phi = Arg z):

* ``r <= R_SWITCH`` outside the cone ``|phi| < CONE_HALF_ANGLE``: Maclaurin series.
* ``R_CONE_SERIES < r <= R_SWITCH`` inside the cone: the series cancels badly
  there (Ai is exponentially small), so the value is obtained by Taylor
  continuation of the ODE ``y'' = z y`` inward from an anchor on the same ray
  where the asymptotic expansion is accurate to rounding.
* ``r > R_SWITCH``: asymptotic expansion with optimal truncation for
  ``|phi| <= 2pi/3``; beyond that the connection identity
  ``Ai(z) = -w Ai(wz) - w^2 Ai(w^2 z)`` (w = exp(2pi i/3)) is used so that
  both rotated arguments stay away from their branch cuts.

Values in the far field are carried in scaled form ``E = Ai(z) exp(zeta)`` with
``zeta = (2/3) z^{3/2}`` (principal branch) so that log-magnitudes are
available without overflow.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

AI0 = 0.355028053887817239260063186004183558
MAIP0 = 0.258819403792806798405183560189203963  # -Ai'(0)
SQRT_PI = 1.772453850905516027298167483341145183

R_SWITCH = 7.5
R_ANCHOR = 11.0
R_CONE_SERIES = 4.0
CONE_HALF_ANGLE = 0.4 * np.pi
CUT_MARGIN = 0.05
SECTOR_TOL = 1e-12
ALLOW_TOL = 1e-12

OMEGA = np.exp(2j * np.pi / 3)
LOG_MAX = 709.0  # exp() overflows past this

_N_SERIES = 120
_N_ASYM = 60
_N_TAYLOR = 40
_N_STEPS = 7


class RotationIndex(enum.IntEnum):
    """Index k of the rotated solution Ai_k(z) = Ai(exp(-2k pi i/3) z)."""

    MINUS = -1
    ZERO = 0
    PLUS = 1

    @property
    def factor(self) -> complex:
        """Multiplier exp(-2k pi i/3) applied to the argument."""
        return _ROT[int(self)]


_ROT = {k: complex(np.exp(-2j * k * np.pi / 3)) for k in (-1, 0, 1)}
_ROT[0] = 1.0 + 0.0j


class Sector(str, enum.Enum):
    S0 = "S0"
    S1 = "S1"
    SM1 = "Sm1"
    STOKES_BOUNDARY = "STOKES_BOUNDARY"


class StokesRay(str, enum.Enum):
    ARG_PI_OVER_3 = "ARG_PI_OVER_3"
    ARG_MINUS_PI_OVER_3 = "ARG_MINUS_PI_OVER_3"
    ARG_PI = "ARG_PI"


@dataclass(frozen=True)
class SectorClass:
    tag: Sector
    boundary_ray: StokesRay | None = None


# ---------------------------------------------------------------------------
# branch conventions

def principal_arg(z):
    """Principal argument in (-pi, pi].

    ``np.angle`` returns -pi for negative reals carrying a negative-zero
    imaginary part; that value is mapped to +pi so the cut is one-sided.
    """
    a = np.angle(z)
    return np.where(a == -np.pi, np.pi, a)


def principal_power(z, p: float):
    """Principal branch of z**p, with 0**p = 0 for p > 0."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r ** p * np.exp(1j * p * principal_arg(z))
    if p > 0:
        out = np.where(r == 0, 0.0, out)
    return out


def wrap_angle(a):
    """Map angles into (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(w <= -np.pi, w + 2 * np.pi, w)


def zeta_of(z):
    """(2/3) z^{3/2}, principal branch."""
    return (2.0 / 3.0) * principal_power(z, 1.5)


def _as_index(k) -> RotationIndex:
    if isinstance(k, RotationIndex):
        return k
    if isinstance(k, (bool, np.bool_)) or int(k) != k:
        raise ValidationError("BAD_INDEX", f"rotation index must be -1, 0 or 1, got {k!r}")
    try:
        return RotationIndex(int(k))
    except ValueError:
        raise ValidationError("BAD_INDEX", f"rotation index must be -1, 0 or 1, got {k!r}") from None


# ---------------------------------------------------------------------------
# near field

def _series(z):
    """Maclaurin series for Ai and Ai'."""
    z = np.asarray(z, dtype=complex)
    z3 = z ** 3
    f = np.ones_like(z)
    g = z.copy()
    fp = z * z / 2.0
    gp = np.ones_like(z)
    sf, sg, sfp, sgp = f.copy(), g.copy(), fp.copy(), gp.copy()
    for k in range(1, _N_SERIES):
        f = f * z3 / ((3 * k - 1) * (3 * k))
        g = g * z3 / ((3 * k) * (3 * k + 1))
        gp = gp * z3 / ((3 * k) * (3 * k - 2))
        if k >= 2:
            fp = fp * z3 / ((3 * k - 1) * (3 * k - 3))
            sfp += fp
        sf += f
        sg += g
        sgp += gp
        small = (np.abs(f) + np.abs(g) + np.abs(fp) + np.abs(gp)
                 <= 1e-17 * (np.abs(sf) + np.abs(sg) + np.abs(sfp) + np.abs(sgp)))
        if np.all(small):
            break
    return AI0 * sf - MAIP0 * sg, AI0 * sfp - MAIP0 * sgp


def _taylor_step(z0, y, yp, t):
    """Advance (y, y') of y'' = z y from z0 to z0 + t by a Taylor polynomial."""
    t2 = t * t
    t3 = t2 * t
    b_prev = y                    # b_0 = a_0
    b_cur = yp * t                # b_1 = a_1 t
    b_next = z0 * y * t2 / 2.0    # b_2
    sy = b_prev + b_cur + b_next
    sp = b_cur + 2.0 * b_next     # sum n b_n, divided by t at the end
    bm1, b0_, b1_ = b_prev, b_cur, b_next
    for n in range(1, _N_TAYLOR):
        # b_{n+2} from b_n (=b0_) and b_{n-1} (=bm1)
        bn2 = (z0 * t2 * b0_ + t3 * bm1) / ((n + 2) * (n + 1))
        sy = sy + bn2
        sp = sp + (n + 2) * bn2
        bm1, b0_, b1_ = b0_, b1_, bn2
    with np.errstate(divide="ignore", invalid="ignore"):
        ypn = np.where(t == 0, yp, sp / np.where(t == 0, 1.0, t))
    return sy, ypn


def _cone_continuation(z):
    """Ai, Ai' inside the S0 cone by inward ODE continuation from R_ANCHOR."""
    z = np.asarray(z, dtype=complex)
    za = R_ANCHOR * z / np.abs(z)
    e, ep, zeta = _asym_scaled(za)
    damp = np.exp(-zeta)
    y, yp = e * damp, ep * damp
    t = (z - za) / _N_STEPS
    cur = za
    for _ in range(_N_STEPS):
        y, yp = _taylor_step(cur, y, yp, t)
        cur = cur + t
    return y, yp


def _near_field(z):
    """Plain Ai, Ai' for |z| up to about R_ANCHOR."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    phi = principal_arg(z)
    cone = (np.abs(phi) < CONE_HALF_ANGLE) & (r > R_CONE_SERIES)
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    if np.any(~cone):
        ai[~cone], aip[~cone] = _series(z[~cone])
    if np.any(cone):
        ai[cone], aip[cone] = _cone_continuation(z[cone])
    return ai, aip


# ---------------------------------------------------------------------------
# far field

def _asym_coefficients(n):
    u = np.empty(n)
    v = np.empty(n)
    u[0] = v[0] = 1.0
    for k in range(1, n):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1))
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


_U, _V = _asym_coefficients(_N_ASYM)


def _asym_scaled(z):
    """Asymptotic expansion, optimally truncated; returns (E, E', zeta)."""
    z = np.asarray(z, dtype=complex)
    zeta = zeta_of(z)
    inv = -1.0 / zeta
    su = np.ones_like(z)
    sv = np.ones_like(z)
    pw = np.ones_like(z)
    last_u = np.ones(z.shape)
    last_v = np.ones(z.shape)
    on_u = np.ones(z.shape, dtype=bool)
    on_v = np.ones(z.shape, dtype=bool)
    for k in range(1, _N_ASYM):
        pw = pw * inv
        tu = _U[k] * pw
        tv = _V[k] * pw
        au, av = np.abs(tu), np.abs(tv)
        on_u &= au < last_u
        on_v &= av < last_v
        su = np.where(on_u, su + tu, su)
        sv = np.where(on_v, sv + tv, sv)
        on_u &= au > 1e-17 * np.abs(su)
        on_v &= av > 1e-17 * np.abs(sv)
        last_u, last_v = au, av
        if not (on_u.any() or on_v.any()):
            break
    q = principal_power(z, 0.25)
    e = su / (2.0 * SQRT_PI * q)
    ep = -q * sv / (2.0 * SQRT_PI)
    return e, ep, zeta


def _far_scaled(z):
    """Scaled Ai, Ai' valid for all arguments with |z| large."""
    z = np.asarray(z, dtype=complex)
    phi = principal_arg(z)
    near_cut = np.abs(phi) > 2 * np.pi / 3
    e, ep, zeta = _asym_scaled(z)
    if np.any(near_cut):
        zc = z[near_cut]
        zt = zeta[near_cut]
        e1, ep1, z1 = _asym_scaled(OMEGA * zc)
        e2, ep2, z2 = _asym_scaled(OMEGA ** 2 * zc)
        f1 = np.exp(zt - z1)
        f2 = np.exp(zt - z2)
        e[near_cut] = -OMEGA * e1 * f1 - OMEGA ** 2 * e2 * f2
        ep[near_cut] = -OMEGA ** 2 * ep1 * f1 - OMEGA * ep2 * f2
    return e, ep, zeta


# ---------------------------------------------------------------------------
# public evaluation

def airy_scaled(z):
    """Scaled pair (Ai e^zeta, Ai' e^zeta) and zeta = (2/3) z^{3/2}.

    Ai(z) = E exp(-zeta); the split keeps log|Ai| finite for any size of z.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    zeta = zeta_of(z)
    e = np.empty_like(z)
    ep = np.empty_like(z)
    far = np.abs(z) > R_SWITCH
    if np.any(far):
        e[far], ep[far], _ = _far_scaled(z[far])
    if np.any(~far):
        a, ap = _near_field(z[~far])
        s = np.exp(zeta[~far])
        e[~far], ep[~far] = a * s, ap * s
    return e.reshape(shape), ep.reshape(shape), zeta.reshape(shape)


def airy_log(z):
    """Log-magnitudes and phases of Ai(z) and Ai'(z).

    Returns
    -------
    log_ai, arg_ai, log_aip, arg_aip : ndarray
        ``Ai = exp(log_ai + 1j*arg_ai)`` and likewise for the derivative.
        Exact zeros give ``-inf`` log-magnitude.
    """
    e, ep, zeta = airy_scaled(z)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(e)) - zeta.real
        lp = np.log(np.abs(ep)) - zeta.real
    return la, np.angle(e) - zeta.imag, lp, np.angle(ep) - zeta.imag


def _plain(scaled, zeta, return_overflow):
    expo = -zeta.real
    over = expo > LOG_MAX
    with np.errstate(over="ignore", invalid="ignore"):
        val = scaled * np.exp(-zeta)
    ph = np.angle(scaled) - zeta.imag
    sentinel = np.empty(np.shape(ph), dtype=complex)
    sentinel.real = np.copysign(np.inf, np.cos(ph))
    sentinel.imag = np.copysign(np.inf, np.sin(ph))
    val = np.where(over, sentinel, val)
    if val.ndim == 0:
        val = complex(val)
        over = bool(over)
    if return_overflow:
        return val, over
    return val


def ai(z, return_overflow: bool = False):
    """Ai(z) for complex scalar or array ``z``.

    If ``return_overflow`` is true a second value flags entries whose
    magnitude exceeds the float range (those entries are returned as a
    signed infinity carrying the correct phase).
    """
    e, _, zeta = airy_scaled(z)
    return _plain(e, zeta, return_overflow)


def ai_prime(z, return_overflow: bool = False):
    """Ai'(z); see :func:`ai` for the overflow convention."""
    _, ep, zeta = airy_scaled(z)
    return _plain(ep, zeta, return_overflow)


def ai_rotated(k, z, return_overflow: bool = False):
    """Ai_k(z) = Ai(exp(-2k pi i/3) z)."""
    k = _as_index(k)
    z = np.asarray(z, dtype=complex)
    return ai(z if k == 0 else k.factor * z, return_overflow)


def ai_prime_rotated(k, z, return_overflow: bool = False):
    """Derivative of Ai_k with respect to its own argument z."""
    k = _as_index(k)
    z = np.asarray(z, dtype=complex)
    val = ai_prime(z if k == 0 else k.factor * z, return_overflow)
    if return_overflow:
        return val[0] * k.factor, val[1]
    return val * k.factor


def log_ai_asymptotic(z, margin: float = CUT_MARGIN):
    """log|Ai(z)| and Arg Ai(z) from the large-|z| expansion.

    Parameters
    ----------
    z : complex
        Must satisfy ``|z| >= R_SWITCH`` and ``|Arg z| < pi - margin``.

    Returns
    -------
    (log_magnitude, phase) : tuple of float
    """
    z = complex(z)
    phi = float(principal_arg(z))
    if abs(z) < R_SWITCH * (1 - 1e-12):
        raise ValidationError("DOMAIN", f"|z| = {abs(z):.3g} is below the asymptotic radius {R_SWITCH}")
    if abs(phi) >= np.pi - margin:
        raise ValidationError("DOMAIN", f"Arg z = {phi:.6g} lies within {margin} of the branch cut")
    e, _, zeta = _far_scaled(np.array([z]))
    return float(np.log(abs(e[0])) - zeta[0].real), float(wrap_angle(np.angle(e[0]) - zeta[0].imag))


# ---------------------------------------------------------------------------
# sectors

def sector_of(z, tol: float = SECTOR_TOL) -> SectorClass:
    """Classify z against the Stokes sectors S0, S1, S-1."""
    z = complex(z)
    if z == 0:
        return SectorClass(Sector.STOKES_BOUNDARY)
    a = float(principal_arg(z))
    third = np.pi / 3
    if abs(a - third) <= tol:
        return SectorClass(Sector.STOKES_BOUNDARY, StokesRay.ARG_PI_OVER_3)
    if abs(a + third) <= tol:
        return SectorClass(Sector.STOKES_BOUNDARY, StokesRay.ARG_MINUS_PI_OVER_3)
    if np.pi - abs(a) <= tol:
        return SectorClass(Sector.STOKES_BOUNDARY, StokesRay.ARG_PI)
    if abs(a) < third:
        return SectorClass(Sector.S0)
    return SectorClass(Sector.S1 if a > 0 else Sector.SM1)


def rotated_arg(k, z):
    """Principal Arg of exp(-2k pi i/3) z computed by angle arithmetic."""
    k = _as_index(k)
    return wrap_angle(principal_arg(z) - 2 * np.pi * int(k) / 3)


def is_allowable(k, z, tol: float = ALLOW_TOL) -> bool:
    """True when the rotated argument stays strictly inside (-pi, pi).

    Arguments within ``tol`` of the cut count as on it.  z = 0 is allowable.
    """
    z = complex(z)
    if z == 0:
        return True
    return bool(abs(float(rotated_arg(k, z))) < np.pi - tol)
