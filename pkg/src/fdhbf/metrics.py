"""Spectral efficiencies of a finished design and codebook-restricted capacities."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, RankDeficiencyError
from .numerics import log2det_eye_plus
from .solver import mutual_info_ij, waterfilled_eigen_precoder
from .validation import check_matrix, check_streams

_RANGE_TOL = 1e-12


@dataclass
class TrialMetrics:
    """Rates and baselines of one realization, in bits/s/Hz.

    ``slacks`` are the relative slacks of the power, LNA and ADC constraints.
    """

    r_ij: float
    r_ki: float
    c_ij: float
    c_ki: float
    slacks: tuple = (0.0, 0.0, 0.0)
    tight_flags: tuple = (False, False, False)
    tx_index: int = 0
    rx_index: int = 0

    @property
    def sum_se(self):
        return self.r_ij + self.r_ki

    @property
    def hd_baseline(self):
        return max(self.c_ij, self.c_ki)


def _effective(h, f_rf, w_rf, effective):
    h = check_matrix(h, "H")
    return h if effective else w_rf.conj().T @ h @ f_rf


def _combined_rate(a, q, snr, ns):
    # a = W_BB^H h_tilde, q = post-combining noise-plus-interference covariance
    if not np.any(a):
        return 0.0
    # a lies in range(q); a switched-off stream only shrinks that range
    lam, vec = np.linalg.eigh(0.5 * (q + q.conj().T))
    keep = lam > _RANGE_TOL * max(lam[-1], 0.0)
    if lam[-1] <= 0 or not np.any(keep):
        raise RankDeficiencyError("post-combining noise covariance is zero")
    m = (vec[:, keep] / np.sqrt(lam[keep])).conj().T @ a
    return log2det_eye_plus((snr / check_streams(ns)) * (m @ m.conj().T))


def rate_ij(design, h_ij, snr_ij, ns, *, effective=False):
    """Mutual information of the transmit link after hybrid combining at ``j``.

    With ``effective`` set, ``h_ij`` is ``W_RF(j)^H H_ij F_RF(i)`` rather than
    the full channel.
    """
    h = _effective(h_ij, design.f_rf_i, design.w_rf_j, effective)
    a = design.w_bb_j.conj().T @ h @ design.f_bb_i
    return _combined_rate(a, design.q_n_j, snr_ij, ns)


def rate_ki(design, h_ki, snr_ki, ns, q_int=None, *, effective=False):
    """Mutual information of the receive link with residual quantization noise.

    ``q_int`` defaults to the design's ``Q_int(i)``; the noise covariance is
    ``Q_n(i) + Q_int(i)``.
    """
    h = _effective(h_ki, design.f_rf_k, design.w_rf_i, effective)
    a = design.w_bb_i.conj().T @ h @ design.f_bb_k
    q_int = design.q_int_i if q_int is None else check_matrix(q_int, "q_int")
    return _combined_rate(a, design.q_n_i + q_int, snr_ki, ns)


def waterfilled_capacity(h_effs, w_grams, snr, ns):
    """Largest water-filled mutual information over a list of effective channels."""
    if len(h_effs) == 0 or len(h_effs) != len(w_grams):
        raise ParameterError("need one Gram matrix per effective channel, at least one")
    best = 0.0
    for h, g in zip(h_effs, w_grams):
        if not np.any(h):
            continue
        f = waterfilled_eigen_precoder(h, g, snr, ns)
        best = max(best, mutual_info_ij(h, f, snr, ns, g))
    return best


def _capacity(cands, h, snr, ns):
    h = check_matrix(h, "H")
    effs, grams = [], []
    for f_rf, w_rf in cands.pairs:
        effs.append(w_rf.conj().T @ h @ f_rf)
        grams.append(w_rf.conj().T @ w_rf)
    return waterfilled_capacity(effs, grams, snr, ns)


def capacity_ij(t_ij, h_ij, snr_ij, ns):
    """Half-duplex transmit capacity restricted to the candidates in ``t_ij``."""
    return _capacity(t_ij, h_ij, snr_ij, ns)


def capacity_ki(t_ki, h_ki, snr_ki, ns):
    """Half-duplex receive capacity restricted to the candidates in ``t_ki``."""
    return _capacity(t_ki, h_ki, snr_ki, ns)


def trial_metrics(design, channels, t_ij, t_ki, snr_ij, snr_ki, ns_ij, ns_ki, limits):
    """Collect rates, capacities and constraint diagnostics of a design."""
    rep = design.solution.report
    return TrialMetrics(
        r_ij=rate_ij(design, channels.h_ij, snr_ij, ns_ij),
        r_ki=rate_ki(design, channels.h_ki, snr_ki, ns_ki),
        c_ij=capacity_ij(t_ij, channels.h_ij, snr_ij, ns_ij),
        c_ki=capacity_ki(t_ki, channels.h_ki, snr_ki, ns_ki),
        slacks=rep.slacks(limits),
        tight_flags=tuple(rep.tight_flags),
        tx_index=design.tx_index,
        rx_index=design.rx_index,
    )
