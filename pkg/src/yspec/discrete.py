"""Finite-difference discretisation, dense eigenvalues and pseudospectra.

The operator -h^2 d^2/dx^2 + V on (-1, 1) with Dirichlet conditions becomes
the complex-symmetric tridiagonal matrix with diagonal V(x_j) + 2h^2/dx^2 and
constant off-diagonal -h^2/dx^2 on the interior grid x_j = -1 + j dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError
from .potential import PiecewiseLinearPotential
from .solver import SearchRegion

MAX_N = 6000
SIGMA_RTOL = 1e-12
SIGMA_MAXIT = 600
_DEFLATE = 1e-16


@dataclass(frozen=True)
class DiscreteOperator:
    """Tridiagonal matrix ``diag`` on the diagonal and ``off`` on both off-diagonals."""

    N: int
    h: float
    diag: np.ndarray
    off: float
    dx: float

    @property
    def x(self) -> np.ndarray:
        return -1.0 + self.dx * np.arange(1, self.N + 1)

    @property
    def scale(self) -> float:
        """Maximum absolute row sum."""
        return float(np.max(np.abs(self.diag)) + 2 * abs(self.off))

    def dense(self) -> np.ndarray:
        A = np.diag(self.diag.astype(complex))
        i = np.arange(self.N - 1)
        A[i, i + 1] = self.off
        A[i + 1, i] = self.off
        return A

    def shifted(self, c: complex) -> "DiscreteOperator":
        return DiscreteOperator(self.N, self.h, self.diag + c, self.off, self.dx)


def discretize(V: PiecewiseLinearPotential, h: float, N: int, jump_convention: str = "left") -> DiscreteOperator:
    """Second-order central differences on N interior nodes.

    Parameters
    ----------
    jump_convention : {"left", "midpoint"}
        Value used where an interior breakpoint falls exactly on a node: the
        left limit, or the mean of both one-sided limits.
    """
    if int(N) != N or N < 3:
        raise ValidationError("BAD_PARAMETER", f"N must be an integer >= 3, got {N}")
    if not h > 0:
        raise ValidationError("BAD_PARAMETER", f"h must be positive, got {h}")
    if jump_convention not in ("left", "midpoint"):
        raise ValidationError("BAD_PARAMETER", f"unknown jump convention {jump_convention!r}")
    N = int(N)
    dx = 2.0 / (N + 1)
    x = -1.0 + dx * np.arange(1, N + 1)
    v = V.evaluate(x)
    if jump_convention == "midpoint":
        for b, (left, right) in zip(V.interior_breakpoints, zip(V.segments, V.segments[1:])):
            on = np.abs(x - b) <= 1e-14
            v[on] = 0.5 * (left(x[on]) + right(x[on]))
    k = h * h / (dx * dx)
    return DiscreteOperator(N, float(h), (v + 2 * k).astype(complex), -k, dx)


# ---------------------------------------------------------------------------
# eigenvalues

@numba.njit(cache=True)
def _ql_eig(d, off, maxit):
    """Implicit-shift QL for a complex-symmetric tridiagonal matrix.

    Complex orthogonal rotations (c^2 + s^2 = 1) keep the matrix complex
    symmetric and tridiagonal.  The shift comes from the leading 2x2 block of
    the active window.  Returns the eigenvalues and the iteration count, or
    -1 when the budget is exhausted.
    """
    n = d.shape[0]
    d = d.copy()
    e = np.zeros(n, dtype=np.complex128)
    e[:n - 1] = off
    total = 0
    for l in range(n):
        stuck = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= _DEFLATE * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            total += 1
            stuck += 1
            if total > maxit:
                return d, -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.sqrt(g * g + 1.0)
            if abs(g - r) > abs(g + r):
                r = -r
            if stuck % 11 == 10 or g + r == 0:
                # exceptional shift to break cycles
                g = d[m] - d[l] + 0.75 * abs(e[l]) * (1.0 + 0.5j)
            else:
                g = d[m] - d[l] + e[l] / (g + r)
            s = 1.0 + 0j
            c = 1.0 + 0j
            p = 0.0j
            i = m - 1
            broke = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.sqrt(f * f + g * g)
                e[i + 1] = r
                if abs(r) < 1e-300:
                    d[i + 1] -= p
                    e[m] = 0.0
                    broke = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if broke:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, total


def eig_all(A: DiscreteOperator, method: str = "ql", max_n: int = MAX_N) -> np.ndarray:
    """All N eigenvalues, sorted by real then imaginary part.

    Parameters
    ----------
    method : {"ql", "lapack"}
        Tridiagonal complex-symmetric QL (default, O(N^2)) or LAPACK's dense
        Hessenberg QR (O(N^3), kept as a cross-check).

    Raises
    ------
    NumericalError
        ``QR_STAGNATION`` when deflation needs more than 40 N iterations.
    """
    if A.N > max_n:
        raise ValidationError("TOO_LARGE", f"N = {A.N} exceeds the limit {max_n}")
    if method == "lapack":
        ev = scipy.linalg.eigvals(A.dense())
    elif method == "ql":
        ev, its = _ql_eig(A.diag.astype(np.complex128), complex(A.off), 40 * A.N)
        if its < 0:
            raise NumericalError("QR_STAGNATION", f"no deflation within {40 * A.N} iterations", N=A.N)
    else:
        raise ValidationError("BAD_PARAMETER", f"unknown method {method!r}")
    return ev[np.lexsort((ev.imag, ev.real))]


# ---------------------------------------------------------------------------
# smallest singular value

@numba.njit(cache=True)
def _lu(d, off, z, tiny):
    """Unpivoted tridiagonal LU of A - z; returns (multipliers, pivots, ok)."""
    n = d.shape[0]
    piv = np.empty(n, dtype=np.complex128)
    mul = np.empty(n, dtype=np.complex128)
    piv[0] = d[0] - z
    mul[0] = 0.0
    for i in range(1, n):
        if abs(piv[i - 1]) <= tiny:
            return mul, piv, False
        mul[i] = off / piv[i - 1]
        piv[i] = d[i] - z - mul[i] * off
    if abs(piv[n - 1]) <= tiny:
        return mul, piv, False
    return mul, piv, True


@numba.njit(cache=True)
def _lu_solve(mul, piv, off, b):
    """Solve (A - z) y = b from the LU factors."""
    n = b.shape[0]
    y = b.copy()
    for i in range(1, n):
        y[i] -= mul[i] * y[i - 1]
    y[n - 1] /= piv[n - 1]
    for i in range(n - 2, -1, -1):
        y[i] = (y[i] - off * y[i + 1]) / piv[i]
    return y


@numba.njit(cache=True)
def _lu_solve_h(mul, piv, off, b):
    """Solve (A - z)^H y = b from the LU factors of A - z."""
    n = b.shape[0]
    y = b.copy()
    # U^H forward
    y[0] /= np.conj(piv[0])
    for i in range(1, n):
        y[i] = (y[i] - np.conj(off) * y[i - 1]) / np.conj(piv[i])
    # L^H backward
    for i in range(n - 2, -1, -1):
        y[i] -= np.conj(mul[i + 1]) * y[i + 1]
    return y


@numba.njit(cache=True)
def _qr(d, off, z):
    """Givens QR of the tridiagonal A - z.

    Returns rotations (c, s) and the three bands of R (diagonal, first and
    second superdiagonal).
    """
    n = d.shape[0]
    a = d - z
    r0 = a.copy()
    r1 = np.zeros(n, dtype=np.complex128)
    r2 = np.zeros(n, dtype=np.complex128)
    for i in range(n - 1):
        r1[i] = off
    sub = np.full(n, off + 0j)
    cs = np.empty(n, dtype=np.complex128)
    sn = np.empty(n, dtype=np.complex128)
    for i in range(n - 1):
        x, y = r0[i], sub[i]
        nrm = math.sqrt(abs(x) ** 2 + abs(y) ** 2)
        if nrm == 0:
            c, s = 1.0 + 0j, 0.0j
        else:
            c, s = x / nrm, y / nrm
        cs[i], sn[i] = c, s
        # rows i and i+1 of columns i, i+1, i+2
        r0[i] = nrm
        t1, t2 = r1[i], r0[i + 1]
        r1[i] = np.conj(c) * t1 + np.conj(s) * t2
        r0[i + 1] = -s * t1 + c * t2
        if i + 2 < n:
            t1, t2 = r2[i], r1[i + 1]
            r2[i] = np.conj(c) * t1 + np.conj(s) * t2
            r1[i + 1] = -s * t1 + c * t2
    return cs, sn, r0, r1, r2


@numba.njit(cache=True)
def _qr_solve(cs, sn, r0, r1, r2, b):
    """Solve (A - z) y = b given its QR factors."""
    n = b.shape[0]
    y = b.copy()
    for i in range(n - 1):
        t1, t2 = y[i], y[i + 1]
        y[i] = np.conj(cs[i]) * t1 + np.conj(sn[i]) * t2
        y[i + 1] = -sn[i] * t1 + cs[i] * t2
    for i in range(n - 1, -1, -1):
        acc = y[i]
        if i + 1 < n:
            acc -= r1[i] * y[i + 1]
        if i + 2 < n:
            acc -= r2[i] * y[i + 2]
        y[i] = acc / r0[i]
    return y


@numba.njit(cache=True)
def _qr_solve_h(cs, sn, r0, r1, r2, b):
    """Solve (A - z)^H y = b given the QR factors of A - z."""
    n = b.shape[0]
    y = b.copy()
    for i in range(n):
        acc = y[i]
        if i >= 1:
            acc -= np.conj(r1[i - 1]) * y[i - 1]
        if i >= 2:
            acc -= np.conj(r2[i - 2]) * y[i - 2]
        y[i] = acc / np.conj(r0[i])
    for i in range(n - 2, -1, -1):
        t1, t2 = y[i], y[i + 1]
        y[i] = cs[i] * t1 - np.conj(sn[i]) * t2
        y[i + 1] = sn[i] * t1 + np.conj(cs[i]) * t2
    return y


@numba.njit(cache=True)
def _start_vector(n):
    # fixed deterministic pattern with components along every singular vector
    v = np.empty(n, dtype=np.complex128)
    for j in range(n):
        v[j] = math.sin(0.7 * j + 0.3) + 1j * math.cos(1.3 * j + 0.1) + 0.05
    return v / np.linalg.norm(v)


@numba.njit(cache=True)
def _apply(mode, mul, piv, off, cs, sn, r0, r1, r2, x):
    """((A - z)^H (A - z))^{-1} x."""
    if mode == 0:
        return _lu_solve_h(mul, piv, off, _lu_solve(mul, piv, off, x))
    return _qr_solve_h(cs, sn, r0, r1, r2, _qr_solve(cs, sn, r0, r1, r2, x))


@numba.njit(cache=True)
def _sigma_min(d, off, z, scale, rtol, maxit):
    """Largest eigenvalue of ((A - z)^H (A - z))^{-1} by restarted Lanczos.

    Returns (sigma, mode, operator applications); mode 0 is the LU path,
    1 the QR fallback, 2 an exactly singular matrix.
    """
    n = d.shape[0]
    mul, piv, ok = _lu(d, off, z, 1e-14 * scale)
    mode = 0
    cs = sn = r0 = r1 = r2 = np.zeros(1, dtype=np.complex128)
    if not ok:
        cs, sn, r0, r1, r2 = _qr(d, off, z)
        mode = 1
        for i in range(n):
            if r0[i] == 0:
                return 0.0, 2, 0
    m = min(n, 30)
    Q = np.zeros((m + 1, n), dtype=np.complex128)
    x = _start_vector(n)
    used = 0
    theta = 0.0
    while used < maxit:
        Q[0] = x
        T = np.zeros((m, m))
        k = 0
        beta = 0.0
        for j in range(m):
            w = _apply(mode, mul, piv, off, cs, sn, r0, r1, r2, Q[j])
            used += 1
            if not np.all(np.isfinite(w)):
                return 0.0, 2, used
            # full reorthogonalisation (twice) keeps the basis orthonormal
            for _ in range(2):
                for i in range(j + 1):
                    c = np.vdot(Q[i], w)
                    w = w - c * Q[i]
                    if _ == 0 and i == j:
                        T[j, j] = c.real
            beta = np.linalg.norm(w)
            k = j + 1
            if j + 1 < m:
                T[j, j + 1] = beta
                T[j + 1, j] = beta
            vals, vecs = np.linalg.eigh(T[:k, :k])
            theta = vals[k - 1]
            y = vecs[:, k - 1]
            if theta <= 0:
                return 0.0, 2, used
            # Ritz residual bound for the dominant pair
            if beta * abs(y[k - 1]) <= rtol * theta or k == n or beta <= 1e-300:
                return 1.0 / math.sqrt(theta), mode, used
            Q[j + 1] = w / beta
        x = np.zeros(n, dtype=np.complex128)
        for i in range(k):
            x += y[i] * Q[i]
        x /= np.linalg.norm(x)
    return 1.0 / math.sqrt(theta), mode, used


def sigma_min(A: DiscreteOperator, z: complex, rtol: float = SIGMA_RTOL, maxit: int = SIGMA_MAXIT) -> float:
    """Smallest singular value of A - z I.

    Inverse iteration on the normal-equations operator, accelerated by a
    restarted Lanczos basis.  Each application solves with (A - z) and its
    adjoint using a tridiagonal LU; a Givens QR factorisation takes over when
    the LU meets a vanishing pivot.
    """
    s, _, _ = _sigma_min(A.diag.astype(np.complex128), float(A.off), complex(z), A.scale, rtol, maxit)
    return float(s)


@numba.njit(cache=True, parallel=True)
def _grid(d, off, zs, scale, rtol, maxit):
    out = np.empty(zs.shape[0])
    for i in numba.prange(zs.shape[0]):
        out[i] = _sigma_min(d, off, zs[i], scale, rtol, maxit)[0]
    return out


@dataclass(frozen=True)
class PseudospectrumGrid:
    """sigma_min(A - z) on the lattice ``re`` x ``im``; ``sigma[j, i]`` belongs to re[i] + i im[j]."""

    re: np.ndarray
    im: np.ndarray
    sigma: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.re[None, :] + 1j * self.im[:, None]

    def records(self) -> list[dict]:
        """Rows ``{z_re, z_im, log10_sigma_min}`` in row-major order."""
        with np.errstate(divide="ignore"):
            lg = np.log10(self.sigma)
        return [{"z_re": float(x), "z_im": float(y), "log10_sigma_min": float(lg[j, i])}
                for j, y in enumerate(self.im) for i, x in enumerate(self.re)]


def pseudospectra_grid(A: DiscreteOperator, region: SearchRegion, resolution, threads: int = 0,
                       rtol: float = 1e-8) -> PseudospectrumGrid:
    """sigma_min over a rectangular lattice including the region's corners.

    Parameters
    ----------
    resolution : int or (int, int)
        Points along the real and imaginary directions, each at least 2.
    threads : int
        Worker threads for the lattice sweep (0 keeps numba's default).
    """
    nx, ny = (resolution, resolution) if np.ndim(resolution) == 0 else resolution
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise ValidationError("BAD_PARAMETER", f"grid resolution must be >= 2, got {resolution}")
    re = np.linspace(region.re_lo, region.re_hi, int(nx))
    im = np.linspace(region.im_lo, region.im_hi, int(ny))
    zs = (re[None, :] + 1j * im[:, None]).ravel()
    prev = numba.get_num_threads()
    if threads:
        numba.set_num_threads(min(int(threads), numba.config.NUMBA_NUM_THREADS))
    try:
        s = _grid(A.diag.astype(np.complex128), float(A.off), zs, A.scale, rtol, SIGMA_MAXIT)
    finally:
        numba.set_num_threads(prev)
    return PseudospectrumGrid(re, im, s.reshape(int(ny), int(nx)))


def eigenvalue_records(ev, h: float, delta: float | None = None) -> list[dict]:
    """Rows ``{h, delta, lambda_re, lambda_im}``."""
    return [{"h": h, "delta": delta, "lambda_re": float(z.real), "lambda_im": float(z.imag)} for z in ev]
