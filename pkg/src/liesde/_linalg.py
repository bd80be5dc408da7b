"""Small dense matrix kernels compiled with numba.

Everything here works on raw ``float64`` or ``complex128`` square arrays of
modest size (n <= ~8) and avoids BLAS/LAPACK calls, whose per-call overhead
dominates at these sizes.
"""

import numpy as np
from numba import njit

# Backward-error thresholds for the [m/m] Pade approximants, m = 3, 5, 7, 9, 13
# (Higham 2005, double precision).
THETA3 = 1.495585217958292e-2
THETA5 = 2.539398330063230e-1
THETA7 = 9.504178996162932e-1
THETA9 = 2.097847961257068e0
THETA13 = 5.371920351148152e0

_B3 = np.array([120.0, 60.0, 12.0, 1.0])
_B5 = np.array([30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0])
_B7 = np.array([17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0])
_B9 = np.array([
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0, 110880.0, 3960.0, 90.0, 1.0,
])
_B13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
    16380.0, 182.0, 1.0,
])


@njit(cache=True, nogil=True)
def mm(a, b):
    n = a.shape[0]
    k = a.shape[1]
    p = b.shape[1]
    out = np.zeros((n, p), dtype=a.dtype)
    for i in range(n):
        for r in range(k):
            air = a[i, r]
            for j in range(p):
                out[i, j] += air * b[r, j]
    return out


@njit(cache=True, nogil=True)
def ct(a):
    """Conjugate transpose (plain transpose copy for real input)."""
    return np.conj(a.T).copy()


@njit(cache=True, nogil=True)
def comm(a, b):
    return mm(a, b) - mm(b, a)


@njit(cache=True, nogil=True)
def eye_like(a):
    n = a.shape[0]
    out = np.zeros((n, n), dtype=a.dtype)
    for i in range(n):
        out[i, i] = 1.0
    return out


@njit(cache=True, nogil=True)
def norm1(a):
    n = a.shape[0]
    best = 0.0
    for j in range(a.shape[1]):
        s = 0.0
        for i in range(n):
            s += abs(a[i, j])
        if s > best:
            best = s
    return best


@njit(cache=True, nogil=True)
def frob(a):
    s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            v = a[i, j]
            s += v.real * v.real + v.imag * v.imag
    return np.sqrt(s)


@njit(cache=True, nogil=True)
def lu_solve(a, b):
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting."""
    n = a.shape[0]
    lu = a.copy()
    x = b.copy()
    p = b.shape[1]
    for c in range(n):
        piv = c
        best = abs(lu[c, c])
        for r in range(c + 1, n):
            v = abs(lu[r, c])
            if v > best:
                best = v
                piv = r
        if piv != c:
            for j in range(n):
                tmp = lu[c, j]
                lu[c, j] = lu[piv, j]
                lu[piv, j] = tmp
            for j in range(p):
                tmp = x[c, j]
                x[c, j] = x[piv, j]
                x[piv, j] = tmp
        d = lu[c, c]
        for r in range(c + 1, n):
            f = lu[r, c] / d
            if f != 0:
                for j in range(c, n):
                    lu[r, j] -= f * lu[c, j]
                for j in range(p):
                    x[r, j] -= f * x[c, j]
    for c in range(n - 1, -1, -1):
        for j in range(p):
            s = x[c, j]
            for k in range(c + 1, n):
                s -= lu[c, k] * x[k, j]
            x[c, j] = s / lu[c, c]
    return x


@njit(cache=True, nogil=True)
def det(a):
    n = a.shape[0]
    lu = a.copy()
    sign = 1.0
    for c in range(n):
        piv = c
        best = abs(lu[c, c])
        for r in range(c + 1, n):
            v = abs(lu[r, c])
            if v > best:
                best = v
                piv = r
        if best == 0.0:
            return lu[0, 0] * 0.0
        if piv != c:
            sign = -sign
            for j in range(n):
                tmp = lu[c, j]
                lu[c, j] = lu[piv, j]
                lu[piv, j] = tmp
        for r in range(c + 1, n):
            f = lu[r, c] / lu[c, c]
            for j in range(c, n):
                lu[r, j] -= f * lu[c, j]
    out = lu[0, 0] * sign
    for c in range(1, n):
        out *= lu[c, c]
    return out


@njit(cache=True, nogil=True)
def _solve_inplace(lu, x):
    """Overwrite ``x`` with ``lu^{-1} x`` (``lu`` is destroyed)."""
    n = lu.shape[0]
    for c in range(n):
        piv = c
        best = abs(lu[c, c])
        for r in range(c + 1, n):
            v = abs(lu[r, c])
            if v > best:
                best = v
                piv = r
        if piv != c:
            for j in range(n):
                tmp = lu[c, j]
                lu[c, j] = lu[piv, j]
                lu[piv, j] = tmp
                tmp = x[c, j]
                x[c, j] = x[piv, j]
                x[piv, j] = tmp
        d = lu[c, c]
        for r in range(c + 1, n):
            f = lu[r, c] / d
            if f != 0:
                for j in range(c, n):
                    lu[r, j] -= f * lu[c, j]
                for j in range(n):
                    x[r, j] -= f * x[c, j]
    for c in range(n - 1, -1, -1):
        for j in range(n):
            s = x[c, j]
            for k in range(c + 1, n):
                s -= lu[c, k] * x[k, j]
            x[c, j] = s / lu[c, c]
    return x


@njit(cache=True, nogil=True)
def _pade_low(a, b, order):
    n = a.shape[0]
    a2 = mm(a, a)
    ui = np.empty_like(a)
    v = np.empty_like(a)
    if order == 3:
        for i in range(n):
            for j in range(n):
                ui[i, j] = b[3] * a2[i, j]
                v[i, j] = b[2] * a2[i, j]
    else:
        a4 = mm(a2, a2)
        if order == 5:
            for i in range(n):
                for j in range(n):
                    ui[i, j] = b[3] * a2[i, j] + b[5] * a4[i, j]
                    v[i, j] = b[2] * a2[i, j] + b[4] * a4[i, j]
        else:
            a6 = mm(a4, a2)
            if order == 7:
                for i in range(n):
                    for j in range(n):
                        ui[i, j] = b[3] * a2[i, j] + b[5] * a4[i, j] + b[7] * a6[i, j]
                        v[i, j] = b[2] * a2[i, j] + b[4] * a4[i, j] + b[6] * a6[i, j]
            else:
                a8 = mm(a6, a2)
                for i in range(n):
                    for j in range(n):
                        ui[i, j] = b[3] * a2[i, j] + b[5] * a4[i, j] + b[7] * a6[i, j] + b[9] * a8[i, j]
                        v[i, j] = b[2] * a2[i, j] + b[4] * a4[i, j] + b[6] * a6[i, j] + b[8] * a8[i, j]
    for i in range(n):
        ui[i, i] += b[1]
        v[i, i] += b[0]
    u = mm(a, ui)
    for i in range(n):
        for j in range(n):
            p = v[i, j]
            q = u[i, j]
            v[i, j] = p - q
            u[i, j] = p + q
    return _solve_inplace(v, u)

@njit(cache=True, nogil=True)
def _pade13(a):
    b = _B13
    ident = eye_like(a)
    a2 = mm(a, a)
    a4 = mm(a2, a2)
    a6 = mm(a4, a2)
    u = mm(a6, b[13] * a6 + b[11] * a4 + b[9] * a2)
    u = u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
    u = mm(a, u)
    v = mm(a6, b[12] * a6 + b[10] * a4 + b[8] * a2)
    v = v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    return lu_solve(v - u, v + u)


@njit(cache=True, nogil=True)
def expm(a):
    """Matrix exponential by scaling and squaring (Higham 2005).

    The Pade degree is picked from {3, 5, 7, 9, 13} by the 1-norm of ``a``;
    above the degree-13 threshold the matrix is scaled by 2**-s first.
    """
    nrm = norm1(a)
    if nrm <= THETA3:
        return _pade_low(a, _B3, 3)
    if nrm <= THETA5:
        return _pade_low(a, _B5, 5)
    if nrm <= THETA7:
        return _pade_low(a, _B7, 7)
    if nrm <= THETA9:
        return _pade_low(a, _B9, 9)
    s = 0
    if nrm > THETA13:
        s = int(np.ceil(np.log2(nrm / THETA13)))
    x = _pade13(a / (2.0 ** s))
    for _ in range(s):
        x = mm(x, x)
    return x


@njit(cache=True, nogil=True)
def unitary_defect(g):
    """Frobenius norm of ``g^H g - I``."""
    return frob(mm(ct(g), g) - eye_like(g))


@njit(cache=True, nogil=True)
def polar_unitary(g):
    """Unitary (orthogonal for real input) polar factor of a near-unitary matrix.

    Newton-Schulz iteration ``u <- u (3I - u^H u) / 2``; converges
    quadratically when the singular values of ``g`` lie in (0, sqrt(3)).
    """
    n = g.shape[0]
    ident = eye_like(g)
    u = g.copy()
    floor = 4.0 * n * 2.220446049250313e-16
    prev = np.inf
    for _ in range(100):
        uhu = mm(ct(u), u)
        d = frob(uhu - ident)
        if d <= floor or d >= prev:
            break
        prev = d
        u = 0.5 * mm(u, 3.0 * ident - uhu)
    return u


@njit(cache=True, nogil=True)
def project_skew(m, traceless):
    """Frobenius-orthogonal projection onto skew-Hermitian (traceless) matrices."""
    p = 0.5 * (m - ct(m))
    if traceless:
        n = m.shape[0]
        tr = p[0, 0]
        for i in range(1, n):
            tr += p[i, i]
        tr = tr / n
        for i in range(n):
            p[i, i] -= tr
    return p


@njit(cache=True, nogil=True)
def combine(basis, coeffs):
    """``sum_i coeffs[i] * basis[i]``."""
    d, n, _ = basis.shape
    out = np.zeros((n, n), dtype=basis.dtype)
    for k in range(d):
        c = coeffs[k]
        for i in range(n):
            for j in range(n):
                out[i, j] += c * basis[k, i, j]
    return out


@njit(cache=True, nogil=True)
def coefficients(basis, x, scale):
    """Coordinates of ``x`` in a Q-orthonormal basis, ``Q = scale * Re tr(a^H b)``."""
    d, n, _ = basis.shape
    out = np.zeros(d)
    for k in range(d):
        s = 0.0
        for i in range(n):
            for j in range(n):
                b = basis[k, i, j]
                v = x[i, j]
                s += b.real * v.real + b.imag * v.imag
        out[k] = scale * s
    return out


@njit(cache=True, nogil=True)
def expm_batch(xs):
    out = np.empty_like(xs)
    for k in range(xs.shape[0]):
        out[k] = expm(xs[k])
    return out
