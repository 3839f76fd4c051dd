"""Estimator-style wrapper around the full design for one channel realization."""

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .codebook import acquire_candidates, dft_codebook, measure
from .constraints import SaturationLimits
from .link import AdcModel, design_link
from .metrics import trial_metrics
from .numerics import db2lin


class FullDuplexBeamformer(BaseEstimator):
    """Design the eight beamforming matrices of a full-duplex link.

    Hyperparameters follow the usual estimator conventions, so the object
    works with ``get_params``/``set_params``/``clone``. ``fit`` takes a
    :class:`~fdhbf.channel.ChannelSet`; full DFT training codebooks are built
    from the channel dimensions.

    Parameters
    ----------
    ns : int
        Streams (and RF chains) on both links.
    k_ij, k_ki : int
        Candidate counts on the transmit and receive links.
    eta_lna_db, eta_adc_db : float or None
        Saturation limits in dB; None disables a constraint.
    snr_ij_db, snr_ki_db, inr_db : float
        Link SNRs and self-interference INR in dB.
    bits : int
        ADC resolution at the full-duplex receiver.
    solver : SolverSettings, optional

    Attributes
    ----------
    design_ : LinkDesign
    metrics_ : TrialMetrics
    limits_ : SaturationLimits
    candidates_ : tuple of CandidateSet
    """

    def __init__(
        self, ns=2, k_ij=3, k_ki=3, eta_lna_db=20.0, eta_adc_db=0.0,
        snr_ij_db=0.0, snr_ki_db=0.0, inr_db=60.0, bits=12, solver=None,
    ):
        self.ns = ns
        self.k_ij = k_ij
        self.k_ki = k_ki
        self.eta_lna_db = eta_lna_db
        self.eta_adc_db = eta_adc_db
        self.snr_ij_db = snr_ij_db
        self.snr_ki_db = snr_ki_db
        self.inr_db = inr_db
        self.bits = bits
        self.solver = solver

    def _candidates(self, channels):
        out = []
        for h, k in ((channels.h_ij, self.k_ij), (channels.h_ki, self.k_ki)):
            nr, nt = h.shape
            f_cb = dft_codebook(nt, nt, float(self.ns))
            w_cb = dft_codebook(nr, nr, float(nr))
            out.append(acquire_candidates(measure(h, f_cb, w_cb), f_cb, w_cb, self.ns, k))
        return tuple(out)

    def fit(self, X, y=None):
        """Run candidate acquisition and the constrained design on ``X``."""
        t_ij, t_ki = self._candidates(X)
        limits = SaturationLimits.from_db(self.eta_lna_db, self.eta_adc_db, self.ns)
        snr_ij = float(db2lin(self.snr_ij_db))
        snr_ki = float(db2lin(self.snr_ki_db))
        self.design_ = design_link(
            t_ij, t_ki, X.h_ij, X.h_ki, X.h_ii, limits, snr_ij, snr_ki,
            float(db2lin(self.inr_db)), AdcModel(self.bits), self.solver,
        )
        self.metrics_ = trial_metrics(
            self.design_, X, t_ij, t_ki, snr_ij, snr_ki, self.ns, self.ns, limits
        )
        self.limits_ = limits
        self.candidates_ = (t_ij, t_ki)
        return self

    def transform(self, X):
        """Beamformers of the fitted design as a dict of matrices; ``X`` is unused."""
        check_is_fitted(self, "design_")
        d = self.design_
        return {
            "f_bb_i": d.f_bb_i, "f_rf_i": d.f_rf_i, "w_rf_j": d.w_rf_j, "w_bb_j": d.w_bb_j,
            "f_rf_k": d.f_rf_k, "f_bb_k": d.f_bb_k, "w_rf_i": d.w_rf_i, "w_bb_i": d.w_bb_i,
        }

    def score(self, X=None, y=None):
        """Sum spectral efficiency of the fitted design in bits/s/Hz; ``X`` is unused."""
        check_is_fitted(self, "metrics_")
        return self.metrics_.sum_se
