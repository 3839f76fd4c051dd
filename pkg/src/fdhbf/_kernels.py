"""Compiled inner loops of the precoder search.

The reduced problems are tiny (``L_t x N_s`` unknowns) so interpreter
overhead dominates; these kernels keep the whole penalty minimization and
the multiplier bisection inside one compiled call.
"""

import math

import numpy as np
from numba import njit

_LN2 = math.log(2.0)


@njit(cache=True, nogil=True)
def _pack(f):
    n, k = f.shape
    m = n * k
    x = np.empty(2 * m)
    for i in range(n):
        for j in range(k):
            x[i * k + j] = f[i, j].real
            x[m + i * k + j] = f[i, j].imag
    return x


@njit(cache=True, nogil=True)
def _unpack(x, n, k):
    m = n * k
    f = np.empty((n, k), dtype=np.complex128)
    for i in range(n):
        for j in range(k):
            f[i, j] = x[i * k + j] + 1j * x[m + i * k + j]
    return f


@njit(cache=True, nogil=True)
def _lam_top(a):
    lam, vec = np.linalg.eigh(a)
    return lam[-1], vec


@njit(cache=True, nogil=True)
def penalized_value_grad(f, c, g_lna, eta_lna, g_adc, eta_adc, nu):
    """Penalized objective and its real gradient (twice the conjugate derivative).

    Infinite limits disable their term. Limits must be positive.
    """
    k = f.shape[1]
    fh = np.ascontiguousarray(f.conj().T)
    cf = c @ f
    m = np.eye(k, dtype=np.complex128) + fh @ cf
    sign, logdet = np.linalg.slogdet(m)
    val = -logdet.real / _LN2
    grad = (-2.0 / _LN2) * (cf @ np.linalg.inv(m))
    p = 0.0
    for v in f.ravel():
        p += v.real * v.real + v.imag * v.imag
    if p > 1.0:
        val += nu * (p - 1.0)
        grad = grad + (2.0 * nu) * f
    for t in range(2):
        g = g_lna if t == 0 else g_adc
        eta = eta_lna if t == 0 else eta_adc
        if math.isinf(eta):
            continue
        gf = g @ f
        lam, vec = np.linalg.eigh(fh @ gf)
        if lam[-1] > eta:
            w = nu / eta
            u = np.ascontiguousarray(vec[:, k - 1])
            val += w * (lam[-1] - eta)
            grad = grad + (2.0 * w) * np.outer(gf @ u, u.conj())
    return val, grad


@njit(cache=True, nogil=True)
def penalized_value(f, c, g_lna, eta_lna, g_adc, eta_adc, nu):
    val, _ = penalized_value_grad(f, c, g_lna, eta_lna, g_adc, eta_adc, nu)
    return val


@njit(cache=True, nogil=True)
def bfgs_minimize(
    f0, c, g_lna, eta_lna, g_adc, eta_adc, nu, hess, max_iters, tol, c1, c2, shrink, grow, max_ls
):
    """Quasi-Newton descent with a weak-Wolfe bracketing line search.

    Every accepted step satisfies the sufficient-decrease condition, so the
    objective never increases. ``hess`` is an inverse-Hessian estimate in
    packed real coordinates; pass an empty array to start from a scaled
    identity. Returns ``(f, value, converged, iterations, hess)``.
    """
    n, k = f0.shape
    x = _pack(f0)
    dim = x.size
    val, gc = penalized_value_grad(f0, c, g_lna, eta_lna, g_adc, eta_adc, nu)
    g = _pack(gc)
    scale = max(1.0, math.sqrt(np.sum(x * x)))
    have_h = hess.shape[0] == dim
    h = hess.copy() if have_h else np.eye(dim)
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        gn = math.sqrt(np.sum(g * g))
        if gn == 0.0:
            converged = True
            break
        if not have_h:
            h = np.eye(dim) * (0.1 * scale / gn)
        d = -(h @ g)
        gd = np.sum(g * d)
        if gd >= 0.0:
            have_h = False
            h = np.eye(dim) * (0.1 * scale / gn)
            d = -(h @ g)
            gd = np.sum(g * d)
        lo = 0.0
        hi = np.inf
        t = 1.0
        ok = False
        xn = x
        fn = val
        gnew = g
        for _ in range(max_ls):
            xn = x + t * d
            fn, gcn = penalized_value_grad(_unpack(xn, n, k), c, g_lna, eta_lna, g_adc, eta_adc, nu)
            gnew = _pack(gcn)
            if fn > val + c1 * t * gd:
                hi = t
            elif np.sum(gnew * d) < c2 * gd:
                lo = t
            else:
                ok = True
                break
            if math.isinf(hi):
                t = grow * lo
            else:
                t = lo + shrink * (hi - lo)
        if not ok:
            if lo > 0.0:
                xn = x + lo * d
                fn, gcn = penalized_value_grad(
                    _unpack(xn, n, k), c, g_lna, eta_lna, g_adc, eta_adc, nu
                )
                gnew = _pack(gcn)
            else:
                # no sufficient decrease along d at working precision
                converged = True
                break
        s = xn - x
        y = gnew - g
        sy = np.sum(s * y)
        decrease = val - fn
        x = xn
        val = fn
        g = gnew
        if sy > 0.0:
            if not have_h:
                h = np.eye(dim) * (sy / np.sum(y * y))
                have_h = True
            rho = 1.0 / sy
            hy = h @ y
            h = (
                h
                - rho * (np.outer(s, hy) + np.outer(hy, s))
                + (rho * rho * np.sum(y * hy) + rho) * np.outer(s, s)
            )
        if decrease <= tol * max(1.0, abs(val)):
            converged = True
            break
    return _unpack(x, n, k), val, converged, it, h


@njit(cache=True, nogil=True)
def constraint_values(f, g_lna, g_adc):
    fh = np.ascontiguousarray(f.conj().T)
    p = 0.0
    for v in f.ravel():
        p += v.real * v.real + v.imag * v.imag
    lna = max(0.0, np.linalg.eigvalsh(fh @ g_lna @ f)[-1])
    adc = max(0.0, np.linalg.eigvalsh(fh @ g_adc @ f)[-1])
    return p, lna, adc


@njit(cache=True, nogil=True)
def meets_tolerance(f, g_lna, eta_lna, g_adc, eta_adc, eps_pow, eps_lna, eps_adc):
    """Bisection predicate: each violation within its relative tolerance."""
    p, lna, adc = constraint_values(f, g_lna, g_adc)
    if p - 1.0 > eps_pow:
        return False
    if not math.isinf(eta_lna) and lna - eta_lna > eps_lna * eta_lna:
        return False
    if not math.isinf(eta_adc) and adc - eta_adc > eps_adc * eta_adc:
        return False
    return True


@njit(cache=True, nogil=True)
def nu_bisection(
    f0, c, g_lna, eta_lna, g_adc, eta_adc, nu_min, nu_max, n_nu, eps_pow, eps_lna, eps_adc,
    max_iters, tol, c1, c2, shrink, grow, max_ls,
):
    """Log-domain bisection on the penalty scale with warm starts.

    Returns ``(f, nu, saturated, converged)`` where ``f`` is the output of
    the smallest multiplier meeting the tolerances, or the last iterate if
    none did.
    """
    lo = math.log(nu_min)
    hi = math.log(nu_max)
    f = f0.copy()
    hess = np.empty((0, 0))
    best = f0.copy()
    best_nu = nu_max
    found = False
    best_conv = True
    last_conv = True
    for _ in range(n_nu):
        mid = 0.5 * (lo + hi)
        nu = math.exp(mid)
        f, val, conv, it, hess = bfgs_minimize(
            f, c, g_lna, eta_lna, g_adc, eta_adc, nu, hess, max_iters, tol, c1, c2, shrink, grow,
            max_ls,
        )
        last_conv = conv
        if meets_tolerance(f, g_lna, eta_lna, g_adc, eta_adc, eps_pow, eps_lna, eps_adc):
            hi = mid
            best = f.copy()
            best_nu = nu
            best_conv = conv
            found = True
        else:
            lo = mid
    if not found:
        return f, math.exp(lo), True, last_conv
    return best, best_nu, False, best_conv
