"""Compiled inner loops for the integrators.

Potentials enter as an integer ``kind`` plus a parameter array and are
evaluated by :func:`group_gradient` / :func:`euclid_gradient`. Passing
functions as arguments would defeat numba's on-disk cache (their types are
per-process). Arbitrary Python gradients run through :func:`python_kernel`.
"""

import types

import numpy as np
from numba import njit

from liesde._linalg import combine, ct, det, expm, mm, polar_unitary, project_skew


@njit(cache=True, nogil=True)
def grad_zero(g, A, scale, traceless):
    return np.zeros_like(g)


@njit(cache=True, nogil=True)
def grad_trace(g, A, scale, traceless):
    # V = -Re tr(A^H g); left-trivialised gradient -Pi(g^H A) / scale
    return -project_skew(mm(ct(g), A), traceless) / scale


@njit(cache=True, nogil=True)
def grad_quadratic(q, k, scale, traceless):
    return k * q / scale


ZERO, TRACE, QUADRATIC, CUSTOM = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def group_gradient(kind, g, A, scale, traceless):
    if kind == TRACE:
        return grad_trace(g, A, scale, traceless)
    return np.zeros_like(g)


@njit(cache=True, nogil=True)
def euclid_gradient(kind, q, k, scale):
    if kind == QUADRATIC:
        return grad_quadratic(q, k, scale, False)
    return np.zeros_like(q)


def python_kernel(fn, gradient):
    """Interpreted copy of kernel ``fn`` whose potential gradient is ``gradient``.

    ``gradient`` takes the same arguments as :func:`group_gradient` (or
    :func:`euclid_gradient` for the Euclidean kernels).
    """
    f = fn.py_func
    env = dict(f.__globals__)
    env["group_gradient"] = gradient
    env["euclid_gradient"] = gradient
    return types.FunctionType(f.__code__, env, f.__name__, f.__defaults__, f.__closure__)


@njit(cache=True, nogil=True)
def reproject_group(g, traceless):
    u = polar_unitary(g)
    if traceless:
        d = det(u)
        phase = d / abs(d)
        u = u * phase ** (-1.0 / u.shape[0])
    return u


# -- Riemannian Brownian motion ------------------------------------------------


@njit(cache=True, nogil=True)
def rbm_run(g, noise, sqrt_h, basis, traceless, record_every, reproject_every, step0, out, n_out):
    """Advance ``g`` through ``noise.shape[0]`` steps, recording into ``out``.

    ``step0`` is the global index of the first step in this block; a state is
    recorded after global step ``k`` when ``k % record_every == 0``.
    """
    for s in range(noise.shape[0]):
        g = mm(g, expm(combine(basis, sqrt_h * noise[s])))
        k = step0 + s + 1
        if reproject_every > 0 and k % reproject_every == 0:
            g = reproject_group(g, traceless)
        if record_every > 0 and k % record_every == 0:
            out[n_out] = g
            n_out += 1
    return g, n_out


@njit(cache=True, nogil=True)
def rbm_terminal(g, noise, sqrt_h, basis, traceless, reproject_every):
    for s in range(noise.shape[0]):
        g = mm(g, expm(combine(basis, sqrt_h * noise[s])))
        if reproject_every > 0 and (s + 1) % reproject_every == 0:
            g = reproject_group(g, traceless)
    return reproject_group(g, traceless)


# -- Langevin on matrix groups -------------------------------------------------


@njit(cache=True, nogil=True)
def langevin_step(g, m, zw, zwt, h, beta, gamma1, gamma2, basis, scale, traceless, kind, A):
    """One B-A-O-P-A-B step.

    B: half kick by the potential, A: half geodesic move, O: exact OU update
    of the momentum (independent block ``zwt``), P: Stratonovich Heun step of
    the position-noise system driven by ``zw``. With ``gamma2 == 0`` this is
    BAOAB; with ``gamma1 == 0`` the O part is skipped.
    """
    half = 0.5 * h
    m = m - half * group_gradient(kind, g, A, scale, traceless)
    g = mm(g, expm(half * m))
    if gamma1 > 0.0:
        x = -np.expm1(-2.0 * beta * gamma1 * h)
        c = np.exp(-beta * gamma1 * h)
        m = c * m + np.sqrt(x / beta) * combine(basis, zwt)
    if gamma2 > 0.0:
        noise = np.sqrt(2.0 * gamma2 * h) * combine(basis, zw)
        k = beta * gamma2 * h
        b0 = noise - k * group_gradient(kind, g, A, scale, traceless)
        b1 = noise - k * group_gradient(kind, mm(g, expm(b0)), A, scale, traceless)
        e = expm(0.5 * (b0 + b1))
        # m <- e^{-b} m e^{b}: the Stratonovich flow dm = [m, db]
        m = mm(mm(ct(e), m), e)
        g = mm(g, e)
    g = mm(g, expm(half * m))
    m = m - half * group_gradient(kind, g, A, scale, traceless)
    return g, m


@njit(cache=True, nogil=True)
def langevin_run(g, m, noise, h, beta, gamma1, gamma2, basis, scale, traceless, kind, A,
                 record_every, reproject_every, step0, g_out, m_out, n_out):
    for s in range(noise.shape[0]):
        g, m = langevin_step(g, m, noise[s, 0], noise[s, 1], h, beta, gamma1, gamma2,
                             basis, scale, traceless, kind, A)
        k = step0 + s + 1
        if reproject_every > 0 and k % reproject_every == 0:
            g = reproject_group(g, traceless)
            m = project_skew(m, traceless)
        if record_every > 0 and k % record_every == 0:
            g_out[n_out] = g
            m_out[n_out] = m
            n_out += 1
    return g, m, n_out


# -- Langevin on R^n -----------------------------------------------------------


@njit(cache=True, nogil=True)
def euclid_step(q, p, zw, zwt, h, beta, gamma1, gamma2, scale, kind, k):
    """Euclidean analogue of :func:`langevin_step` (exp = identity, bracket = 0)."""
    half = 0.5 * h
    unit = 1.0 / np.sqrt(scale)  # length of an orthonormal basis vector
    p = p - half * euclid_gradient(kind, q, k, scale)
    q = q + half * p
    if gamma1 > 0.0:
        x = -np.expm1(-2.0 * beta * gamma1 * h)
        c = np.exp(-beta * gamma1 * h)
        p = c * p + np.sqrt(x / beta) * unit * zwt
    if gamma2 > 0.0:
        noise = np.sqrt(2.0 * gamma2 * h) * unit * zw
        kk = beta * gamma2 * h
        b0 = noise - kk * euclid_gradient(kind, q, k, scale)
        b1 = noise - kk * euclid_gradient(kind, q + b0, k, scale)
        q = q + 0.5 * (b0 + b1)
    q = q + half * p
    p = p - half * euclid_gradient(kind, q, k, scale)
    return q, p


@njit(cache=True, nogil=True)
def euclid_run(q, p, noise, h, beta, gamma1, gamma2, scale, kind, k,
               record_every, step0, q_out, p_out, n_out):
    for s in range(noise.shape[0]):
        q, p = euclid_step(q, p, noise[s, 0], noise[s, 1], h, beta, gamma1, gamma2,
                           scale, kind, k)
        kk = step0 + s + 1
        if record_every > 0 and kk % record_every == 0:
            q_out[n_out] = q
            p_out[n_out] = p
            n_out += 1
    return q, p, n_out


# -- Lie-Poisson / isospectral ---------------------------------------------------


@njit(cache=True, nogil=True)
def inertia_apply(m, basis, scale, inv_inertia, biinvariant):
    if biinvariant:
        return m.copy()
    d, n, _ = basis.shape
    out = np.zeros_like(m)
    for a in range(d):
        s = 0.0
        for i in range(n):
            for j in range(n):
                b = basis[a, i, j]
                v = m[i, j]
                s += b.real * v.real + b.imag * v.imag
        c = scale * s * inv_inertia[a]
        for i in range(n):
            for j in range(n):
                out[i, j] += c * basis[a, i, j]
    return out


@njit(cache=True, nogil=True)
def conjugate(m, b):
    """``e^{-b} m e^{b}`` for skew-Hermitian ``b``."""
    e = expm(b)
    return mm(mm(ct(e), m), e)


@njit(cache=True, nogil=True)
def lie_poisson_midpoint(m, h, basis, scale, inv_inertia, biinvariant, traceless, tol, max_iter):
    """Deterministic step ``m <- e^{-hB} m e^{hB}``, ``B = I^{-1}((m + m_new)/2)``.

    Fixed-point iteration on ``m_new``; returns the new momentum and the
    converged coefficient ``B`` (needed by the coupled group update).
    """
    if biinvariant:
        return m.copy(), m.copy()
    new = m.copy()
    b = inertia_apply(m, basis, scale, inv_inertia, biinvariant)
    size = 0.0
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            size = max(size, abs(m[i, j]))
    prev = np.inf
    for _ in range(max_iter):
        b = inertia_apply(0.5 * (m + new), basis, scale, inv_inertia, biinvariant)
        cand = conjugate(m, h * b)
        diff = 0.0
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                diff = max(diff, abs(cand[i, j] - new[i, j]))
        new = cand
        # stop at the tolerance or once rounding noise stops the contraction
        if diff <= tol * (1.0 + size) or diff >= prev:
            break
        prev = diff
    return project_skew(new, traceless), b


@njit(cache=True, nogil=True)
def lie_poisson_heun(m, h, dw, noise_dirs, basis, scale, inv_inertia, biinvariant, traceless):
    """Stochastic step with linear noise Hamiltonians ``Q(m, Y_a)``.

    Heun in the coefficient ``B = h I^{-1} m + sum_a Y_a dW_a`` followed by
    one conjugation, so the spectrum is preserved exactly.
    """
    lin = np.zeros_like(m)
    for a in range(noise_dirs.shape[0]):
        lin = lin + dw[a] * noise_dirs[a]
    b0 = h * inertia_apply(m, basis, scale, inv_inertia, biinvariant) + lin
    mp = conjugate(m, b0)
    b1 = h * inertia_apply(mp, basis, scale, inv_inertia, biinvariant) + lin
    return project_skew(conjugate(m, 0.5 * (b0 + b1)), traceless)


@njit(cache=True, nogil=True)
def lie_poisson_run(m, h, dws, noise_dirs, basis, scale, inv_inertia, biinvariant, traceless,
                    tol, max_iter, record_every, step0, out, n_out):
    for s in range(dws.shape[0]):
        if noise_dirs.shape[0] == 0:
            m, _ = lie_poisson_midpoint(m, h, basis, scale, inv_inertia, biinvariant,
                                        traceless, tol, max_iter)
        else:
            m = lie_poisson_heun(m, h, dws[s], noise_dirs, basis, scale, inv_inertia,
                                 biinvariant, traceless)
        k = step0 + s + 1
        if record_every > 0 and k % record_every == 0:
            out[n_out] = m
            n_out += 1
    return m, n_out


@njit(cache=True, nogil=True)
def symplectic_drift(g, m, h, basis, scale, inv_inertia, biinvariant, traceless, kind, A,
                     tol, max_iter):
    """Kick-drift-kick with a midpoint Lie-Poisson drift for the kinetic part."""
    half = 0.5 * h
    m = m - half * group_gradient(kind, g, A, scale, traceless)
    m, b = lie_poisson_midpoint(m, h, basis, scale, inv_inertia, biinvariant, traceless,
                                tol, max_iter)
    g = mm(g, expm(h * b))
    m = m - half * group_gradient(kind, g, A, scale, traceless)
    return g, m


@njit(cache=True, nogil=True)
def symplectic_drift_run(g, m, h, n_steps, basis, scale, inv_inertia, biinvariant, traceless,
                         kind, A, tol, max_iter, reproject_every, record_every, g_out, m_out):
    n_out = 0
    for s in range(n_steps):
        g, m = symplectic_drift(g, m, h, basis, scale, inv_inertia, biinvariant, traceless,
                                kind, A, tol, max_iter)
        if reproject_every > 0 and (s + 1) % reproject_every == 0:
            g = reproject_group(g, traceless)
        if record_every > 0 and (s + 1) % record_every == 0:
            g_out[n_out] = g
            m_out[n_out] = m
            n_out += 1
    return g, m, n_out
