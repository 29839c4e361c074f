"""Independent reference evaluators used only by the tests (mpmath based)."""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 40


def rot(k):
    return mp.exp(-2j * mp.pi * k / 3)


def airy_basis(seg, k, h, lam):
    """Closures u(x), u'(x) for Ai(e^{-2k pi i/3} w(x)) on one linear piece, in mpmath."""
    m, l = mp.mpc(seg.m), mp.mpc(seg.l)
    hh = mp.mpf(h)
    c = hh ** (-mp.mpf(2) / 3) * mp.power(m, -mp.mpf(2) / 3)
    r = rot(int(k))

    def w(x):
        return c * (m * mp.mpf(x) + l - mp.mpc(lam))

    def u(x):
        return mp.airyai(r * w(x))

    def du(x):
        return mp.airyai(r * w(x), derivative=1) * r * c * m

    return u, du


def expansion_two(V, h, lam, pairs):
    """Two-piece determinant written as the two-product expansion."""
    (s1, s2) = V.segments
    x1 = s1.x_hi
    u11, d11 = airy_basis(s1, pairs[0][0], h, lam)
    u12, d12 = airy_basis(s1, pairs[0][1], h, lam)
    u21, d21 = airy_basis(s2, pairs[1][0], h, lam)
    u22, d22 = airy_basis(s2, pairs[1][1], h, lam)
    a, b = -1, 1
    return ((u11(a) * u12(x1) - u12(a) * u11(x1)) * (d22(x1) * u21(b) - d21(x1) * u22(b))
            - (u11(a) * d12(x1) - u12(a) * d11(x1)) * (u22(x1) * u21(b) - u21(x1) * u22(b)))


def expansion_three(V, h, lam, pairs):
    """Three-piece determinant written as the four-product expansion."""
    s1, s2, s3 = V.segments
    x1, x2 = s1.x_hi, s2.x_hi
    u11, d11 = airy_basis(s1, pairs[0][0], h, lam)
    u12, d12 = airy_basis(s1, pairs[0][1], h, lam)
    u21, d21 = airy_basis(s2, pairs[1][0], h, lam)
    u22, d22 = airy_basis(s2, pairs[1][1], h, lam)
    u31, d31 = airy_basis(s3, pairs[2][0], h, lam)
    u32, d32 = airy_basis(s3, pairs[2][1], h, lam)
    a, b = -1, 1
    A = u11(a) * u12(x1) - u12(a) * u11(x1)
    Ap = u11(a) * d12(x1) - u12(a) * d11(x1)
    B = u31(b) * d32(x2) - d31(x2) * u32(b)
    Bv = u31(b) * u32(x2) - u31(x2) * u32(b)
    return (A * (d22(x1) * u21(x2) - d21(x1) * u22(x2)) * B
            - A * (d22(x1) * d21(x2) - d21(x1) * d22(x2)) * Bv
            + Ap * (u22(x1) * d21(x2) - u21(x1) * d22(x2)) * Bv
            - Ap * (u22(x1) * u21(x2) - u21(x1) * u22(x2)) * B)


def direct_determinant(V, h, lam, pairs):
    """Full 2n x 2n matching determinant built entry by entry in mpmath."""
    n = V.n
    M = mp.zeros(2 * n, 2 * n)
    fns = [[airy_basis(s, k, h, lam) for k in p] for s, p in zip(V.segments, pairs)]
    for c in range(2):
        M[0, c] = fns[0][c][0](-1)
        M[2 * n - 1, 2 * n - 2 + c] = fns[-1][c][0](1)
    for i in range(n - 1):
        x = V.segments[i].x_hi
        for c in range(2):
            M[2 * i + 1, 2 * i + c] = fns[i][c][0](x)
            M[2 * i + 2, 2 * i + c] = fns[i][c][1](x)
            M[2 * i + 1, 2 * i + 2 + c] = -fns[i + 1][c][0](x)
            M[2 * i + 2, 2 * i + 2 + c] = -fns[i + 1][c][1](x)
    return mp.det(M)
