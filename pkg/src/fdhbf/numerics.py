"""Dense complex linear algebra, seeded randomness and water-filling."""

import numpy as np

from .exceptions import (
    DegenerateInputError,
    NumericFailure,
    ParameterError,
    RankDeficiencyError,
)
from .validation import check_matrix, check_positive

__all__ = [
    "db2lin",
    "lin2db",
    "make_rng",
    "svd",
    "sigma_max_sq",
    "water_fill",
    "inv_sqrtm_psd",
    "gram_inv_sqrt",
    "log2det_eye_plus",
]

# relative eigenvalue floor below which a Gram matrix is declared singular
_RANK_TOL = 1e-12


def db2lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


def make_rng(seed):
    """Return a PCG64-backed generator; identical seeds give identical streams."""
    if seed is None or int(seed) < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def svd(a):
    """Thin SVD ``a = U @ diag(S) @ V^H`` with ``S`` descending.

    Returns ``(U, S, V)``; note ``V`` (not ``V^H``).
    """
    a = check_matrix(a, "A")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    return u, s, vh.conj().T


def sigma_max_sq(a):
    """Squared spectral norm of ``a``."""
    a = check_matrix(a, "A")
    if not np.any(a):
        return 0.0
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    return float(s[0] ** 2)


def water_fill(gains, budget, tol=1e-12):
    """Water-filling power allocation over parallel channels.

    Maximizes ``sum(log(1 + g_i p_i))`` subject to ``sum(p_i) = budget`` and
    ``p_i >= 0``; the solution is ``p_i = max(0, mu - 1/g_i)``. The water
    level ``mu`` is bracketed by bisection and then recomputed exactly on the
    resulting active set.

    Parameters
    ----------
    gains : array_like
        Non-negative channel gains. Zero gains receive zero power.
    budget : float
        Total power, strictly positive.

    Returns
    -------
    numpy.ndarray
        Allocated powers, in the order of ``gains``.
    """
    g = np.asarray(gains, dtype=float).ravel()
    budget = check_positive(budget, "budget")
    if g.size == 0 or np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ParameterError("gains must be a non-empty list of finite values >= 0")
    active = g > 0
    if not np.any(active):
        raise DegenerateInputError("all gains are zero")
    inv = np.full_like(g, np.inf)
    # subnormal gains overflow to an infinite inverse, i.e. never active
    with np.errstate(over="ignore"):
        inv[active] = 1.0 / g[active]

    def allocated(mu):
        return np.maximum(0.0, mu - inv).sum()

    lo, hi = 0.0, budget + inv[active].min()
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if allocated(mid) > budget:
            hi = mid
        else:
            lo = mid
    on = inv < 0.5 * (lo + hi)
    if not np.any(on):
        on = inv == inv[active].min()
    # exact water level on the active set removes bisection residue
    mu = (budget + inv[on].sum()) / on.sum()
    p = np.where(on, np.maximum(0.0, mu - inv), 0.0)
    return p * (budget / p.sum())


def inv_sqrtm_psd(gram):
    """Inverse square root of a Hermitian positive definite matrix."""
    gram = check_matrix(gram, "gram")
    gram = 0.5 * (gram + gram.conj().T)
    lam, vec = np.linalg.eigh(gram)
    if lam[-1] <= 0 or lam[0] <= _RANK_TOL * lam[-1]:
        raise RankDeficiencyError("Gram matrix is singular or indefinite")
    return (vec / np.sqrt(lam)) @ vec.conj().T


def gram_inv_sqrt(w):
    """Return ``(W^H W)^{-1/2}``, the whitening transform for noise seen through ``W``."""
    w = check_matrix(w, "W")
    return inv_sqrtm_psd(w.conj().T @ w)


def log2det_eye_plus(a):
    """``log2 det(I + A)`` for Hermitian PSD ``A`` (real part, clipped at zero)."""
    a = np.asarray(a, dtype=np.complex128)
    m = np.eye(a.shape[0]) + 0.5 * (a + a.conj().T)
    sign, logdet = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise NumericFailure("I + A is not positive definite")
    return max(0.0, float(logdet) / np.log(2.0))
