"""Transmit digital precoder design under power, LNA and ADC constraints.

For a fixed analog pair the problem is solved on the small digital channel.
Every quantity is reduced to ``L_t x L_t`` Gram matrices up front::

    C     = (snr / ns) * h_eff^H (W^H W)^{-1} h_eff
    G_lna = (H_ii F_RF)^H (H_ii F_RF) / ns
    G_adc = (W_i^H H_ii F_RF)^H (W_i^H H_ii F_RF) / ns

so that ``I = log2 det(I + F^H C F)`` and each constraint value is
``lambda_max(F^H G F)``. The constraints are moved into hinge penalties
scaled by a single multiplier ``nu``, found by bisection, and a final
scaling makes the result exactly feasible.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constraints import ConstraintReport, adc_constraint_value, lna_constraint_value
from .exceptions import DegenerateInputError, ParameterError, ShapeError
from .numerics import inv_sqrtm_psd, log2det_eye_plus, svd, water_fill
from .validation import check_conformable, check_matrix, check_positive, check_streams

PATH_FAST = "waterfill_fast_path"
PATH_PENALTY = "penalty_bisection"
PATH_SHUTDOWN = "shutdown"

# keeps projected precoders strictly inside the feasible set despite rounding
_PROJ_MARGIN = 1.0 - 1e-12
# relative eigenvalue level treated as an exact null direction
_NULL_TOL = 1e-12


@dataclass(frozen=True)
class SolverSettings:
    """Tuning knobs for the penalty and bisection search.

    Attributes
    ----------
    nu_min, nu_max : float
        Bisection interval for the penalty scale (searched in log domain).
    n_nu : int
        Number of bisection steps.
    eps_pow, eps_lna, eps_adc : float
        Relative violation accepted by the bisection predicate.
    max_inner_iters : int
        Quasi-Newton iterations per penalized solve.
    inner_tol : float
        Relative objective decrease below which a penalized solve stops.
    step_shrink, armijo_c : float
        Bracketing contraction and sufficient-decrease constant of the line search.
    wolfe_c2 : float
        Curvature constant of the weak Wolfe condition.
    step_grow : float
        Expansion factor while the curvature condition is unmet.
    max_line_search : int
        Trial steps per line search.
    """

    nu_min: float = 1e-3
    nu_max: float = 1e6
    n_nu: int = 30
    eps_pow: float = 1e-6
    eps_lna: float = 1e-6
    eps_adc: float = 1e-6
    max_inner_iters: int = 200
    inner_tol: float = 1e-10
    step_shrink: float = 0.5
    armijo_c: float = 1e-4
    wolfe_c2: float = 0.9
    step_grow: float = 2.0
    max_line_search: int = 60

    def __post_init__(self):
        if not 0 < self.nu_min < self.nu_max:
            raise ParameterError("need 0 < nu_min < nu_max")
        if self.n_nu < 1 or self.max_inner_iters < 1 or self.max_line_search < 1:
            raise ParameterError("iteration counts must be >= 1")
        if min(self.eps_pow, self.eps_lna, self.eps_adc, self.inner_tol) < 0:
            raise ParameterError("tolerances must be >= 0")
        if not 0 < self.step_shrink < 1 or not 0 < self.armijo_c < self.wolfe_c2 < 1:
            raise ParameterError("need 0 < step_shrink < 1 and 0 < armijo_c < wolfe_c2 < 1")
        if self.step_grow <= 1:
            raise ParameterError("step_grow must be > 1")

    def _inner_args(self):
        return (
            self.max_inner_iters,
            self.inner_tol,
            self.armijo_c,
            self.wolfe_c2,
            self.step_shrink,
            self.step_grow,
            self.max_line_search,
        )


@dataclass
class PrecoderSolution:
    """Result of one constrained precoder design.

    ``path`` records how it was obtained; ``saturated`` is set when even
    ``nu_max`` left violations above tolerance and feasibility came from
    the final projection alone.
    """

    f_bb: np.ndarray
    objective_bits: float
    report: ConstraintReport
    path: str
    converged: bool = True
    saturated: bool = False
    nu: float = 0.0


@dataclass
class PenalizedResult:
    f_bb: np.ndarray
    objective: float
    converged: bool
    iterations: int


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _lam_max(a):
    return max(0.0, float(np.linalg.eigvalsh(_herm(a))[-1]))


class PairProblem:
    """Digital precoder problem for one (transmit candidate, receive candidate) pair.

    Parameters
    ----------
    h_eff : array_like
        ``W_RF(j)^H H_ij F_RF(i)``, shape ``(L_r, L_t)``.
    w_gram : array_like
        ``W_RF(j)^H W_RF(j)``.
    a_lna : array_like
        ``H_ii F_RF(i)``, shape ``(N_r, L_t)``.
    b_adc : array_like
        ``W_RF(i)^H H_ii F_RF(i)``, shape ``(L_r(i), L_t)``.
    snr : float
        Linear SNR of the transmit link.
    limits : SaturationLimits
    """

    def __init__(self, h_eff, w_gram, a_lna, b_adc, snr, limits):
        self.h_eff = check_matrix(h_eff, "h_eff")
        self.w_gram = check_matrix(w_gram, "w_gram")
        self.a_lna = check_matrix(a_lna, "H_ii F_RF")
        self.b_adc = check_matrix(b_adc, "W_RF^H H_ii F_RF")
        check_conformable(self.w_gram, self.h_eff, ("w_gram", "h_eff"))
        lt = self.h_eff.shape[1]
        if self.a_lna.shape[1] != lt or self.b_adc.shape[1] != lt:
            raise ShapeError("self-interference products must have L_t columns")
        self.snr = check_positive(snr, "snr", strict=False)
        self.limits = limits
        self.ns = limits.ns
        if self.ns > min(self.h_eff.shape):
            raise ShapeError(f"ns={self.ns} exceeds min{self.h_eff.shape}")
        hw = np.linalg.solve(self.w_gram, self.h_eff)
        self.c = _herm((self.snr / self.ns) * (self.h_eff.conj().T @ hw))
        self.g_lna = _herm(self.a_lna.conj().T @ self.a_lna) / self.ns
        self.g_adc = _herm(self.b_adc.conj().T @ self.b_adc) / self.ns

    @classmethod
    def from_matrices(cls, h_eff, w_rf_j, h_ii, f_rf, w_rf_i, snr, limits):
        w_rf_j = check_matrix(w_rf_j, "W_RF(j)")
        a = check_matrix(h_ii, "H_ii") @ check_matrix(f_rf, "F_RF")
        b = check_matrix(w_rf_i, "W_RF(i)").conj().T @ a
        return cls(h_eff, w_rf_j.conj().T @ w_rf_j, a, b, snr, limits)

    @property
    def n_tx(self):
        return self.h_eff.shape[1]

    def mutual_info(self, f):
        return log2det_eye_plus(f.conj().T @ self.c @ f)

    def constraint_values(self, f):
        """``(power, lna, adc)`` values of precoder ``f``."""
        return (
            float(np.sum(np.abs(f) ** 2)),
            _lam_max(f.conj().T @ self.g_lna @ f),
            _lam_max(f.conj().T @ self.g_adc @ f),
        )

    def report(self, f, rtol=1e-6):
        power, lna, adc = self.constraint_values(f)
        rep = ConstraintReport(
            power_value=power,
            lna_value=lna,
            adc_value=adc,
            per_antenna_values=np.sum(np.abs(self.a_lna @ f) ** 2, axis=1) / self.ns,
            per_chain_values=np.sum(np.abs(self.b_adc @ f) ** 2, axis=1) / self.ns,
        )
        rep.tight_flags = tuple(s <= rtol for s in rep.slacks(self.limits))
        return rep

    def restricted(self, basis):
        """Same problem with the precoder confined to ``range(basis)``."""
        sub = object.__new__(PairProblem)
        sub.__dict__.update(self.__dict__)
        bh = basis.conj().T
        sub.c = _herm(bh @ self.c @ basis)
        sub.g_lna = _herm(bh @ self.g_lna @ basis)
        sub.g_adc = _herm(bh @ self.g_adc @ basis)
        sub.a_lna = self.a_lna @ basis
        sub.b_adc = self.b_adc @ basis
        return sub


def mutual_info_ij(h_eff, f_bb, snr, ns, w_gram):
    """Transmit-link mutual information in bits/s/Hz for a fixed analog pair.

    ``log2 det(I + (snr/ns) h f f^H h^H w_gram^{-1})``.
    """
    h_eff = check_matrix(h_eff, "h_eff")
    f_bb = check_matrix(f_bb, "f_bb")
    ns = check_streams(ns)
    check_conformable(h_eff, f_bb, ("h_eff", "f_bb"))
    hf = inv_sqrtm_psd(w_gram) @ h_eff @ f_bb
    return log2det_eye_plus((snr / ns) * (hf.conj().T @ hf))


def _hinges(power, lna, adc, limits):
    return (
        max(0.0, power - 1.0),
        max(0.0, lna - limits.eta_lna),
        max(0.0, adc - limits.eta_adc),
    )


def hinge_penalties(f_bb, h_ii, f_rf, w_rf, limits):
    """Hinge violations ``([P-1]+, [lna-eta_lna]+, [adc-eta_adc]+)``."""
    f_bb = check_matrix(f_bb, "f_bb")
    power = float(np.sum(np.abs(f_bb) ** 2))
    lna = lna_constraint_value(h_ii, f_rf, f_bb, limits.ns)
    adc = adc_constraint_value(w_rf, h_ii, f_rf, f_bb, limits.ns)
    return _hinges(power, lna, adc, limits)


def penalty_objective(f_bb, nu, problem):
    """``-I + nu * (c_pow + c_lna/eta_lna + c_adc/eta_adc)``.

    Unbounded limits carry no term; a zero limit acts as a barrier, so any
    violation of it makes the value infinite.
    """
    f_bb = check_matrix(f_bb, "f_bb")
    mi = problem.mutual_info(f_bb)
    if nu == 0:
        return -mi
    c_pow, c_lna, c_adc = _hinges(*problem.constraint_values(f_bb), problem.limits)
    pen = c_pow
    for c, eta in ((c_lna, problem.limits.eta_lna), (c_adc, problem.limits.eta_adc)):
        if c > 0:
            pen += math.inf if eta == 0 else c / eta
    return -mi + nu * pen


def solve_penalized(nu, init_f_bb, problem, settings=None):
    """Minimize the penalized objective at a fixed ``nu`` from ``init_f_bb``.

    Returns
    -------
    PenalizedResult
        ``converged`` is False when the iteration cap was hit first; the
        last accepted iterate is returned either way.
    """
    settings = settings or SolverSettings()
    f0 = check_matrix(init_f_bb, "init_f_bb")
    lim = problem.limits
    if lim.eta_lna == 0 or lim.eta_adc == 0:
        raise ParameterError("zero limits need the null-space restriction of solve_constrained_precoder")
    if nu < 0:
        raise ParameterError(f"nu must be >= 0, got {nu}")
    f, val, conv, it, _ = _kernels.bfgs_minimize(
        f0, problem.c, problem.g_lna, float(lim.eta_lna), problem.g_adc, float(lim.eta_adc),
        float(nu), np.empty((0, 0)), *settings._inner_args(),
    )
    return PenalizedResult(f, float(val), bool(conv), int(it))


def _eigen_waterfill(c, ns):
    """Water-filled eigenvectors of ``c`` as an ``(n, ns)`` unit-power precoder.

    Streams beyond the rank of ``c`` get zero columns; returns None if ``c`` is zero.
    """
    lam, vec = np.linalg.eigh(c)
    k = min(ns, lam.size)
    gains = np.maximum(lam[::-1][:k], 0.0)
    if not np.any(gains > 0):
        return None
    f = np.zeros((c.shape[0], ns), dtype=np.complex128)
    f[:, :k] = vec[:, ::-1][:, :k] * np.sqrt(water_fill(gains, 1.0))[None, :]
    return f


def waterfilled_eigen_precoder(h_eff, w_gram, snr, ns):
    """Unit-power eigen precoder with water-filled stream powers.

    Right singular vectors of ``w_gram^{-1/2} h_eff`` carry the streams;
    powers come from water-filling over ``(snr/ns) * sigma_k^2``.
    """
    h_eff = check_matrix(h_eff, "h_eff")
    ns = check_streams(ns)
    if ns > min(h_eff.shape):
        raise ShapeError(f"ns={ns} exceeds min{h_eff.shape}")
    if not np.any(h_eff):
        raise DegenerateInputError("effective channel is zero")
    _, s, v = svd(inv_sqrtm_psd(w_gram) @ h_eff)
    p = water_fill((snr / ns) * s[:ns] ** 2, 1.0)
    return v[:, :ns] * np.sqrt(p)[None, :]


def _scalings(f, problem):
    power, lna, adc = problem.constraint_values(f)
    lim = problem.limits
    out = [1.0 / math.sqrt(power) if power > 0 else math.inf]
    for value, eta, g in ((lna, lim.eta_lna, problem.g_lna), (adc, lim.eta_adc, problem.g_adc)):
        if math.isinf(eta) or value <= 0:
            out.append(math.inf)
        elif eta == 0:
            # roundoff leakage through an exact null space is not a violation
            out.append(math.inf if value <= _NULL_TOL * _lam_max(g) * power else 0.0)
        else:
            out.append(math.sqrt(eta / value))
    return out


def final_projection(f_bb, problem):
    """Scale ``f_bb`` by ``min(g_pow, g_lna, g_adc)`` so one constraint is tight.

    Scales up as well as down. A zero input is returned unchanged.
    """
    f_bb = check_matrix(f_bb, "f_bb")
    if not np.any(f_bb):
        return f_bb.copy()
    return f_bb * (min(_scalings(f_bb, problem)) * _PROJ_MARGIN)


def _null_basis(problem):
    """Orthonormal basis of precoders producing no SI where a limit is zero."""
    lim = problem.limits
    gram = np.zeros_like(problem.c)
    for g, eta in ((problem.g_lna, lim.eta_lna), (problem.g_adc, lim.eta_adc)):
        top = _lam_max(g)
        if eta == 0 and top > 0:
            gram = gram + g / top
    lam, vec = np.linalg.eigh(gram)
    return vec[:, lam <= _NULL_TOL]


def _shutdown(problem):
    f = np.zeros((problem.n_tx, problem.ns), dtype=np.complex128)
    return PrecoderSolution(f, 0.0, problem.report(f), PATH_SHUTDOWN)


def is_unconstrained(problem):
    """Both SI constraints are implied by the power constraint for this pair."""
    lim = problem.limits
    lna = math.isinf(lim.eta_lna) or lim.eta_lna >= _lam_max(problem.g_lna)
    adc = math.isinf(lim.eta_adc) or lim.eta_adc >= _lam_max(problem.g_adc)
    return lna and adc


def solve_constrained_precoder(problem, settings=None):
    """Best digital precoder for one analog pair under all three constraints.

    Uses the water-filled eigen precoder when the LNA and ADC constraints
    are implied by the power constraint; otherwise bisects the penalty
    scale. A zero limit confines the precoder to the null space of the
    corresponding SI product, or shuts the transmitter off if there is
    none. The output always passes through :func:`final_projection`.
    """
    settings = settings or SolverSettings()
    lim = problem.limits
    if not np.any(problem.c):
        return _shutdown(problem)
    if is_unconstrained(problem):
        f = final_projection(_eigen_waterfill(problem.c, problem.ns), problem)
        return PrecoderSolution(f, problem.mutual_info(f), problem.report(f), PATH_FAST)

    work, basis = problem, None
    if lim.eta_lna == 0 or lim.eta_adc == 0:
        basis = _null_basis(problem)
        if basis.shape[1] == 0:
            return _shutdown(problem)
        work = problem.restricted(basis)
        # the zero limits now hold identically
        work.limits = type(lim)(
            math.inf if lim.eta_lna == 0 else lim.eta_lna,
            math.inf if lim.eta_adc == 0 else lim.eta_adc,
            lim.ns,
        )
    f0 = _eigen_waterfill(work.c, work.ns)
    if f0 is None:
        return _shutdown(problem)
    wl = work.limits
    f, nu, saturated, converged = _kernels.nu_bisection(
        0.5 * f0, work.c, work.g_lna, float(wl.eta_lna), work.g_adc, float(wl.eta_adc),
        settings.nu_min, settings.nu_max, settings.n_nu,
        settings.eps_pow, settings.eps_lna, settings.eps_adc, *settings._inner_args(),
    )
    if basis is not None:
        f = basis @ f
    f = final_projection(f, problem)
    return PrecoderSolution(
        f, problem.mutual_info(f), problem.report(f), PATH_PENALTY,
        bool(converged), bool(saturated), float(nu),
    )


@dataclass
class SearchResult:
    """Outcome of the search over analog candidate pairs."""

    tx_index: int
    rx_index: int
    solution: PrecoderSolution
    pair_values: dict


def outer_search(problems, settings=None, *, upper_bounds=None):
    """Pick the analog pair and digital precoder with the largest ``I_ij``.

    Parameters
    ----------
    problems : dict
        ``{(t, r): PairProblem}`` over the transmit and receive candidates.
    upper_bounds : dict, optional
        Per-pair values that no feasible precoder can exceed (the
        water-filled values). Pairs whose bound cannot beat the incumbent
        are skipped; this never changes the returned pair.

    Ties go to the lowest ``t`` and then the lowest ``r``.
    """
    settings = settings or SolverSettings()
    if not problems:
        raise ParameterError("no candidate pairs to search")
    keys = sorted(problems)
    if upper_bounds is not None:
        # most promising first so the bound prunes early
        keys.sort(key=lambda k: (-upper_bounds[k], k))
    best_key, best = None, None
    values = {}
    for key in keys:
        if best is not None and upper_bounds is not None:
            bound = upper_bounds[key]
            if bound < best.objective_bits or (bound == best.objective_bits and key > best_key):
                continue
        sol = solve_constrained_precoder(problems[key], settings)
        values[key] = sol.objective_bits
        if (
            best is None
            or sol.objective_bits > best.objective_bits
            or (sol.objective_bits == best.objective_bits and key < best_key)
        ):
            best_key, best = key, sol
    return SearchResult(best_key[0], best_key[1], best, values)
