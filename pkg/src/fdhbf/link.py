"""Completion of the full-duplex design: baseband combiners, receive precoder,
quantization noise and digital self-interference cancellation.

All covariances are normalized to the thermal noise power, so the noise seen
through an analog combiner ``W`` is ``W^H W`` and the self-interference
strength is the interference-to-noise ratio ``INR = P_tx G_ii^2 / sigma^2``.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterError, ShapeError
from .numerics import inv_sqrtm_psd, svd, water_fill
from .solver import PairProblem, SolverSettings, _eigen_waterfill, outer_search
from .validation import check_matrix, check_positive, check_streams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LnaModel:
    """Hard-limiting stand-in for an LNA: linear up to ``p_lna_max`` watts."""

    p_lna_max: float
    gain: float = 1.0

    def __post_init__(self):
        check_positive(self.p_lna_max, "p_lna_max")
        check_positive(self.gain, "gain")


@dataclass(frozen=True)
class AdcModel:
    """Uniform mid-riser ADC with ``bits`` of resolution."""

    bits: int

    def __post_init__(self):
        if isinstance(self.bits, bool) or int(self.bits) != self.bits or self.bits < 1:
            raise ParameterError(f"bits must be a positive integer, got {self.bits!r}")

    @property
    def scale(self):
        """Quantization noise power per unit input power, ``8 / (12 * 2^(2b))``."""
        return 8.0 / (12.0 * 4.0 ** self.bits)


@dataclass
class LinkDesign:
    """The eight beamforming matrices of one full-duplex design plus diagnostics.

    ``q_n_j``, ``q_n_i`` and ``q_int_i`` are the noise and quantization
    covariances after baseband combining, normalized to the noise power.
    """

    f_bb_i: np.ndarray
    f_rf_i: np.ndarray
    w_rf_j: np.ndarray
    w_bb_j: np.ndarray
    f_rf_k: np.ndarray
    f_bb_k: np.ndarray
    w_rf_i: np.ndarray
    w_bb_i: np.ndarray
    tx_index: int
    rx_index: int
    r_quant: np.ndarray
    q_n_j: np.ndarray
    q_n_i: np.ndarray
    q_int_i: np.ndarray
    adc_cov: np.ndarray
    solution: object = None
    pair_values: dict = field(default_factory=dict)


def _inner_inverse(h, gram, extra, amp):
    m = h @ h.conj().T + gram + extra
    try:
        return np.linalg.solve(m, h) / amp
    except np.linalg.LinAlgError as exc:
        from .exceptions import RankDeficiencyError

        raise RankDeficiencyError("combiner inner matrix is singular") from exc


def lmmse_combiner_j(h_tilde_ij, w_rf_j, snr_ij, ns, amp=1.0):
    """LMMSE baseband combiner ``(1/amp) (h h^H + (ns/snr) W^H W)^{-1} h``.

    Parameters
    ----------
    h_tilde_ij : array_like
        ``W_RF(j)^H H_ij F_RF(i) F_BB(i)``, shape ``(L_r, N_s)``.
    w_rf_j : array_like
        Analog combiner at ``j``.
    amp : float
        Received amplitude ``sqrt(P_tx) G_ij``; a pure scale on the output.
    """
    h = check_matrix(h_tilde_ij, "h_tilde_ij")
    w = check_matrix(w_rf_j, "W_RF(j)")
    if w.shape[1] != h.shape[0]:
        raise ShapeError(f"W_RF(j) has {w.shape[1]} chains but h_tilde has {h.shape[0]} rows")
    snr = check_positive(snr_ij, "snr_ij")
    ns = check_streams(ns)
    return _inner_inverse(h, (ns / snr) * (w.conj().T @ w), 0.0, check_positive(amp, "amp"))


def receive_precoder_k(h_tilde_ki, w_rf_i, snr_ki, ns):
    """Water-filled eigen precoder at ``k`` for the noise-whitened channel.

    ``F_BB(k) = V[:, :ns] P`` from the SVD of ``(W^H W)^{-1/2} h``; unit power.
    """
    h = check_matrix(h_tilde_ki, "h_tilde_ki")
    w = check_matrix(w_rf_i, "W_RF(i)")
    ns = check_streams(ns)
    if ns > min(h.shape):
        raise ShapeError(f"ns={ns} exceeds min{h.shape}")
    if not np.any(h):
        from .exceptions import DegenerateInputError

        raise DegenerateInputError("receive effective channel is zero")
    _, s, v = svd(inv_sqrtm_psd(w.conj().T @ w) @ h)
    p = water_fill((snr_ki / ns) * s[:ns] ** 2, 1.0)
    return v[:, :ns] * np.sqrt(p)[None, :]


def adc_input_cov(h_des, h_si, w_rf_i, snr_ki, inr, ns_ki, ns_ij, noise_power=1.0):
    """Covariance of the samples entering the ADCs at ``i``.

    ``noise_power * ((snr/ns_ki) h_des h_des^H + (inr/ns_ij) h_si h_si^H + W^H W)``

    Parameters
    ----------
    h_des : array_like
        ``W_RF(i)^H H_ki F_RF(k) F_BB(k)``.
    h_si : array_like
        ``W_RF(i)^H H_ii F_RF(i) F_BB(i)``.
    inr : float
        Self-interference power relative to noise, before beamforming.
    """
    a = check_matrix(h_des, "h_des")
    b = check_matrix(h_si, "h_si")
    w = check_matrix(w_rf_i, "W_RF(i)")
    if not a.shape[0] == b.shape[0] == w.shape[1]:
        raise ShapeError("desired, SI and combiner dimensions disagree")
    cov = (
        (snr_ki / check_streams(ns_ki, "ns_ki")) * (a @ a.conj().T)
        + (inr / check_streams(ns_ij, "ns_ij")) * (b @ b.conj().T)
        + w.conj().T @ w
    )
    return noise_power * 0.5 * (cov + cov.conj().T)


def quant_noise_cov(adc_cov, adc):
    """Diagonal quantization-noise covariance ``scale * (I o adc_cov)``."""
    cov = check_matrix(adc_cov, "adc_cov")
    return np.diag(adc.scale * np.real(np.diag(cov))).astype(np.complex128)


def mmse_combiner_i(h_tilde_ki, w_rf_i, snr_ki, ns, r_quant, amp=1.0, ptx_gain_sq=None):
    """MMSE combiner at ``i`` after digital SI cancellation.

    ``(1/amp) (h h^H + (ns/snr) W^H W + (ns/ptx_gain_sq) R_quant)^{-1} h``.
    ``ptx_gain_sq`` is ``P_tx(k) G_ki^2`` in the units of ``r_quant``; the
    default ``snr_ki`` corresponds to ``r_quant`` normalized to the noise power.
    """
    h = check_matrix(h_tilde_ki, "h_tilde_ki")
    w = check_matrix(w_rf_i, "W_RF(i)")
    r = check_matrix(r_quant, "r_quant")
    snr = check_positive(snr_ki, "snr_ki")
    ns = check_streams(ns)
    sp = snr if ptx_gain_sq is None else check_positive(ptx_gain_sq, "ptx_gain_sq")
    if r.shape != (h.shape[0], h.shape[0]) or w.shape[1] != h.shape[0]:
        raise ShapeError("r_quant, W_RF(i) and h_tilde_ki dimensions disagree")
    return _inner_inverse(
        h, (ns / snr) * (w.conj().T @ w), (ns / sp) * r, check_positive(amp, "amp")
    )


def digital_si_cancel(y_dig, known_si):
    """Subtract the synthesized self-interference from the digital samples."""
    y = np.asarray(y_dig, dtype=np.complex128)
    s = np.asarray(known_si, dtype=np.complex128)
    if y.shape != s.shape:
        raise ShapeError(f"sample shapes differ: {y.shape} vs {s.shape}")
    return y - s


def lna_apply(x, model):
    """Apply the LNA; saturated samples are clipped in magnitude and counted.

    Returns
    -------
    out : numpy.ndarray
    saturation_count : int
    """
    x = np.asarray(x, dtype=np.complex128)
    power = np.abs(x) ** 2
    sat = power > model.p_lna_max
    out = model.gain * x
    if np.any(sat):
        lim = math.sqrt(model.p_lna_max)
        out[sat] = lim * np.exp(1j * np.angle(x[sat]))
    return out, int(np.count_nonzero(sat))


def quant_step_sq(p, bits):
    """Squared step of a ``bits``-bit quantizer loaded by a sinusoid of power ``p``."""
    if p < 0:
        raise ParameterError(f"p must be >= 0, got {p}")
    return 8.0 * p / 4.0 ** bits


def quant_power(q_sq):
    """Uniform quantization error power ``q^2 / 12``."""
    if q_sq < 0:
        raise ParameterError(f"q_sq must be >= 0, got {q_sq}")
    return q_sq / 12.0


def max_si_adc(p_noise_adc, bits, delta_des, snr_in, b_adc=1.0):
    """Largest SI power an ADC tolerates for a given SNR degradation budget.

    ``P_noise * (2^(2b) * 1.5 / B_ADC * (1 - delta)/delta - SNR_in - 1)``.
    The result can be negative when the budget is unattainable.
    """
    if not 0 < delta_des <= 1:
        raise ParameterError(f"delta_des must lie in (0, 1], got {delta_des}")
    check_positive(p_noise_adc, "p_noise_adc")
    check_positive(b_adc, "b_adc")
    return p_noise_adc * (4.0 ** bits * 1.5 / b_adc * (1 - delta_des) / delta_des - snr_in - 1)


def max_si_adc_clamped(p_noise_adc, bits, delta_des, snr_in, b_adc=1.0):
    """:func:`max_si_adc` clamped at zero, logging a warning when clamped."""
    val = max_si_adc(p_noise_adc, bits, delta_des, snr_in, b_adc)
    if val < 0:
        log.warning("SI budget %.3g is negative for b=%d, delta=%.3g; using 0", val, bits, delta_des)
        return 0.0
    return val


def _receive_side(design, h_ki, h_ii, snr_ki, inr, ns_ki, ns_ij, adc):
    w_rf_i = design.w_rf_i
    h_des = w_rf_i.conj().T @ h_ki @ design.f_rf_k @ design.f_bb_k
    h_si = w_rf_i.conj().T @ h_ii @ design.f_rf_i @ design.f_bb_i
    cov = adc_input_cov(h_des, h_si, w_rf_i, snr_ki, inr, ns_ki, ns_ij)
    r_quant = quant_noise_cov(cov, adc)
    w_bb_i = mmse_combiner_i(h_des, w_rf_i, snr_ki, ns_ki, r_quant)
    gram_i = w_rf_i.conj().T @ w_rf_i
    return replace(
        design,
        w_bb_i=w_bb_i,
        r_quant=r_quant,
        adc_cov=cov,
        q_n_i=w_bb_i.conj().T @ gram_i @ w_bb_i,
        q_int_i=w_bb_i.conj().T @ r_quant @ w_bb_i,
    )


def requantize(design, h_ki, h_ii, snr_ki, inr, adc):
    """Redo the ADC-dependent part of ``design`` for another ADC resolution.

    The transmit precoder and analog selections do not depend on the ADC,
    so only ``R_quant`` and the combiner at ``i`` change.
    """
    return _receive_side(
        design, h_ki, h_ii, snr_ki, inr, design.f_bb_k.shape[1], design.f_bb_i.shape[1], adc
    )


def pair_problems(t_ij, t_ki, heff_ij, h_ii, snr_ij, limits):
    """Build the per-pair precoder problems for every ``(t, r)`` combination."""
    problems = {}
    a_cache = {}
    for t in range(len(t_ij)):
        f_rf = t_ij.precoder(t)
        w_rf_j = t_ij.combiner(t)
        a = a_cache.setdefault(t, h_ii @ f_rf)
        gram = w_rf_j.conj().T @ w_rf_j
        for r in range(len(t_ki)):
            b = t_ki.combiner(r).conj().T @ a
            problems[(t, r)] = PairProblem(heff_ij[t], gram, a, b, snr_ij, limits)
    return problems


def design_link(
    t_ij, t_ki, h_ij, h_ki, h_ii, limits, snr_ij, snr_ki, inr, adc,
    settings=None, *, ns_ki=None, prune=True,
):
    """Run the complete design for one channel realization.

    Parameters
    ----------
    t_ij, t_ki : CandidateSet
        Analog candidates on the transmit and receive links.
    h_ij, h_ki, h_ii : numpy.ndarray
        Transmit, receive and self-interference channels.
    limits : SaturationLimits
        Limits at ``i``; ``limits.ns`` is the transmit stream count.
    snr_ij, snr_ki, inr : float
        Linear SNRs of both links and the self-interference INR.
    adc : AdcModel
    ns_ki : int, optional
        Receive-link streams, default ``limits.ns``.
    prune : bool
        Skip candidate pairs whose water-filled value cannot beat the best
        pair found so far.

    Returns
    -------
    LinkDesign
    """
    settings = settings or SolverSettings()
    ns_ij = limits.ns
    ns_ki = ns_ij if ns_ki is None else check_streams(ns_ki, "ns_ki")
    h_ij = check_matrix(h_ij, "H_ij")
    heff_ij = [t_ij.combiner(t).conj().T @ h_ij @ t_ij.precoder(t) for t in range(len(t_ij))]
    problems = pair_problems(t_ij, t_ki, heff_ij, check_matrix(h_ii, "H_ii"), snr_ij, limits)
    bounds = None
    if prune:
        wf = {}
        for t in range(len(t_ij)):
            p = problems[(t, 0)]
            f = _eigen_waterfill(p.c, p.ns)
            wf[t] = 0.0 if f is None else p.mutual_info(f)
        bounds = {key: wf[key[0]] for key in problems}
    res = outer_search(problems, settings, upper_bounds=bounds)
    t, r = res.tx_index, res.rx_index
    f_bb_i = res.solution.f_bb
    f_rf_i, w_rf_j = t_ij.precoder(t), t_ij.combiner(t)
    h_tilde_ij = heff_ij[t] @ f_bb_i
    w_bb_j = lmmse_combiner_j(h_tilde_ij, w_rf_j, snr_ij, ns_ij)
    f_rf_k, w_rf_i = t_ki.precoder(r), t_ki.combiner(r)
    h_ki = check_matrix(h_ki, "H_ki")
    f_bb_k = receive_precoder_k(w_rf_i.conj().T @ h_ki @ f_rf_k, w_rf_i, snr_ki, ns_ki)
    gram_j = w_rf_j.conj().T @ w_rf_j
    design = LinkDesign(
        f_bb_i=f_bb_i,
        f_rf_i=f_rf_i,
        w_rf_j=w_rf_j,
        w_bb_j=w_bb_j,
        f_rf_k=f_rf_k,
        f_bb_k=f_bb_k,
        w_rf_i=w_rf_i,
        w_bb_i=None,
        tx_index=t,
        rx_index=r,
        r_quant=None,
        q_n_j=w_bb_j.conj().T @ gram_j @ w_bb_j,
        q_n_i=None,
        q_int_i=None,
        adc_cov=None,
        solution=res.solution,
        pair_values=res.pair_values,
    )
    return _receive_side(design, h_ki, h_ii, snr_ki, inr, ns_ki, ns_ij, adc)
