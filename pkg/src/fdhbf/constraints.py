"""Per-antenna (LNA) and per-RF-chain (ADC) self-interference constraints.

All limits are unitless: the maximum self-interference power divided by the
transmit power and the self-interference channel's large-scale gain. The
canonical constraint form uses the squared spectral norm, which upper-bounds
every per-antenna or per-chain power; the element-wise forms are provided for
verification.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .numerics import sigma_max_sq
from .validation import check_conformable, check_matrix, check_positive, check_streams

NO_LIMIT = math.inf


@dataclass(frozen=True)
class SaturationLimits:
    """Unitless LNA/ADC limits; ``NO_LIMIT`` disables a constraint."""

    eta_lna: float
    eta_adc: float
    ns: int

    def __post_init__(self):
        for name in ("eta_lna", "eta_adc"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ParameterError(f"{name} must be >= 0, got {v!r}")
        check_streams(self.ns)

    @classmethod
    def from_db(cls, eta_lna_db, eta_adc_db, ns):
        return cls(_db_or_inf(eta_lna_db), _db_or_inf(eta_adc_db), ns)


def _db_or_inf(x_db):
    if x_db is None or x_db == math.inf:
        return NO_LIMIT
    return 10.0 ** (x_db / 10.0)


@dataclass
class ConstraintReport:
    power_value: float
    lna_value: float
    adc_value: float
    per_antenna_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    per_chain_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tight_flags: tuple = (False, False, False)

    def slacks(self, limits):
        """Relative slacks ``1 - value/limit`` (power, LNA, ADC); ``inf`` when unlimited."""
        return (
            _rel_slack(self.power_value, 1.0),
            _rel_slack(self.lna_value, limits.eta_lna),
            _rel_slack(self.adc_value, limits.eta_adc),
        )

    def feasible(self, limits, rtol=0.0):
        return (
            self.power_value <= 1.0 * (1 + rtol)
            and self.lna_value <= limits.eta_lna * (1 + rtol)
            and self.adc_value <= limits.eta_adc * (1 + rtol)
        )


def _rel_slack(value, limit):
    if math.isinf(limit):
        return math.inf
    if limit == 0:
        return 0.0 if value == 0 else -math.inf
    return 1.0 - value / limit


def eta_from_powers(p_si_max_watts, p_tx_watts, gain_sq):
    """Unitless limit ``P_SI_max / (P_tx * G_ii^2)``."""
    p_si = check_positive(p_si_max_watts, "p_si_max_watts", strict=False)
    p_tx = check_positive(p_tx_watts, "p_tx_watts")
    g2 = check_positive(gain_sq, "gain_sq")
    return p_si / (p_tx * g2)


def _si_product(h_ii, f_rf, f_bb):
    h_ii = check_matrix(h_ii, "H_ii")
    f_rf = check_matrix(f_rf, "F_RF")
    f_bb = check_matrix(f_bb, "F_BB")
    check_conformable(h_ii, f_rf, ("H_ii", "F_RF"))
    check_conformable(f_rf, f_bb, ("F_RF", "F_BB"))
    return h_ii @ f_rf @ f_bb


def _combine(w_rf, x):
    w_rf = check_matrix(w_rf, "W_RF")
    check_conformable(w_rf.conj().T, x, ("W_RF^H", "H_ii F_RF F_BB"))
    return w_rf.conj().T @ x


def lna_constraint_value(h_ii, f_rf, f_bb, ns):
    """``(1/ns) * sigma_max^2(H_ii F_RF F_BB)``."""
    return sigma_max_sq(_si_product(h_ii, f_rf, f_bb)) / check_streams(ns)


def adc_constraint_value(w_rf, h_ii, f_rf, f_bb, ns):
    """``(1/ns) * sigma_max^2(W_RF^H H_ii F_RF F_BB)``."""
    return sigma_max_sq(_combine(w_rf, _si_product(h_ii, f_rf, f_bb))) / check_streams(ns)


def per_antenna_powers(h_ii, f_rf, f_bb, ns):
    """Expected self-interference power at each receive antenna (row norms)."""
    x = _si_product(h_ii, f_rf, f_bb)
    return np.sum(np.abs(x) ** 2, axis=1) / check_streams(ns)


def per_chain_powers(w_rf, h_ii, f_rf, f_bb, ns):
    """Expected self-interference power reaching each ADC."""
    x = _combine(w_rf, _si_product(h_ii, f_rf, f_bb))
    return np.sum(np.abs(x) ** 2, axis=1) / check_streams(ns)


def constraint_report(f_bb, h_ii, f_rf, w_rf, limits, rtol=1e-6):
    """Evaluate all three constraints for a digital precoder."""
    f_bb = check_matrix(f_bb, "F_BB")
    power = float(np.sum(np.abs(f_bb) ** 2))
    lna = lna_constraint_value(h_ii, f_rf, f_bb, limits.ns)
    adc = adc_constraint_value(w_rf, h_ii, f_rf, f_bb, limits.ns)
    rep = ConstraintReport(
        power_value=power,
        lna_value=lna,
        adc_value=adc,
        per_antenna_values=per_antenna_powers(h_ii, f_rf, f_bb, limits.ns),
        per_chain_values=per_chain_powers(w_rf, h_ii, f_rf, f_bb, limits.ns),
    )
    rep.tight_flags = tuple(s <= rtol for s in rep.slacks(limits))
    return rep


def lna_redundant(h_ii, f_rf, ns, eta_lna):
    """True when the power constraint alone guarantees the LNA constraint."""
    if math.isinf(eta_lna):
        return True
    h_ii = check_matrix(h_ii, "H_ii")
    f_rf = check_matrix(f_rf, "F_RF")
    return eta_lna >= sigma_max_sq(h_ii @ f_rf) / check_streams(ns)


def adc_redundant_by_power(w_rf, h_ii, f_rf, ns, eta_adc):
    """True when the power constraint alone guarantees the ADC constraint."""
    if math.isinf(eta_adc):
        return True
    w_rf = check_matrix(w_rf, "W_RF")
    h_ii = check_matrix(h_ii, "H_ii")
    f_rf = check_matrix(f_rf, "F_RF")
    return eta_adc >= sigma_max_sq(w_rf.conj().T @ h_ii @ f_rf) / check_streams(ns)


def adc_redundant_by_lna(w_rf, eta_lna, eta_adc):
    """True when meeting the LNA constraint already meets the ADC constraint."""
    if math.isinf(eta_adc):
        return True
    if math.isinf(eta_lna):
        return False
    return eta_adc >= eta_lna * sigma_max_sq(check_matrix(w_rf, "W_RF"))


@dataclass
class PairScreen:
    """Redundancy flags for one (transmit candidate, receive candidate) pair."""

    tx_index: int
    rx_index: int
    lna_redundant: bool
    adc_redundant: bool
    adc_redundant_by_lna: bool

    @property
    def unconstrained(self):
        return self.lna_redundant and self.adc_redundant


def prescreen_candidates(t_ij, t_ki, h_ii, limits, *, filter_pairs=False):
    """Annotate every (F_RF(i), W_RF(i)) pair with constraint-redundancy flags.

    With ``filter_pairs`` set, pairs where neither the LNA nor the ADC
    constraint is redundant are dropped, trading optimality for speed.
    """
    out = []
    for t in range(len(t_ij)):
        f_rf = t_ij.precoder(t)
        lna_red = lna_redundant(h_ii, f_rf, limits.ns, limits.eta_lna)
        for r in range(len(t_ki)):
            w_rf = t_ki.combiner(r)
            adc_red = adc_redundant_by_power(w_rf, h_ii, f_rf, limits.ns, limits.eta_adc)
            by_lna = adc_redundant_by_lna(w_rf, limits.eta_lna, limits.eta_adc)
            screen = PairScreen(t, r, lna_red, adc_red, by_lna)
            if filter_pairs and not (lna_red or adc_red):
                continue
            out.append(screen)
    return out
