import numpy as np
import pytest

from fdhbf.channel import ChannelSet
from fdhbf.codebook import CandidateSet, acquire_candidates, dft_codebook, measure
from fdhbf.constraints import NO_LIMIT, SaturationLimits
from fdhbf.link import AdcModel, design_link, requantize
from fdhbf.metrics import (
    TrialMetrics,
    capacity_ij,
    capacity_ki,
    rate_ij,
    rate_ki,
    trial_metrics,
    waterfilled_capacity,
)
from fdhbf.numerics import log2det_eye_plus
from fdhbf.solver import mutual_info_ij

from conftest import crandn


def build(rng, eta=(1.0, 0.01), k=2, bits=12, inr=1e4, n=8, ns=2, snr=1.0):
    f_cb, w_cb = dft_codebook(n, n, float(ns)), dft_codebook(n, n, float(n))
    ch = ChannelSet(crandn(rng, n, n), crandn(rng, n, n), crandn(rng, n, n))
    t_ij = acquire_candidates(measure(ch.h_ij, f_cb, w_cb), f_cb, w_cb, ns, k)
    t_ki = acquire_candidates(measure(ch.h_ki, f_cb, w_cb), f_cb, w_cb, ns, k)
    lim = SaturationLimits(*eta, ns)
    d = design_link(t_ij, t_ki, ch.h_ij, ch.h_ki, ch.h_ii, lim, snr, snr, inr, AdcModel(bits))
    return d, ch, t_ij, t_ki, lim


class TestRates:
    def test_zero_precoder(self, rng):
        d, ch, *_ = build(rng, eta=(0.0, 0.0))
        assert not np.any(d.f_bb_i)
        assert rate_ij(d, ch.h_ij, 1.0, 2) == 0.0

    def test_lossless_combiner(self, rng):
        d, ch, *_ = build(rng)
        heff = d.w_rf_j.conj().T @ ch.h_ij @ d.f_rf_i
        expected = mutual_info_ij(heff, d.f_bb_i, 1.0, 2, d.w_rf_j.conj().T @ d.w_rf_j)
        assert rate_ij(d, ch.h_ij, 1.0, 2) == pytest.approx(expected, abs=1e-9)
        assert rate_ij(d, heff, 1.0, 2, effective=True) == pytest.approx(expected, abs=1e-9)

    def test_capacity_dominance(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            d, ch, t_ij, t_ki, _ = build(rng)
            assert rate_ij(d, ch.h_ij, 1.0, 2) <= capacity_ij(t_ij, ch.h_ij, 1.0, 2) + 1e-9
            assert rate_ki(d, ch.h_ki, 1.0, 2) <= capacity_ki(t_ki, ch.h_ki, 1.0, 2) + 1e-9

    def test_no_quantization_limit(self, rng):
        d, ch, *_ = build(rng)
        h = d.w_rf_i.conj().T @ ch.h_ki @ d.f_rf_k
        gi = np.linalg.inv(d.w_rf_i.conj().T @ d.w_rf_i)
        direct = log2det_eye_plus(0.5 * d.f_bb_k.conj().T @ h.conj().T @ gi @ h @ d.f_bb_k)
        unq = requantize(d, ch.h_ki, ch.h_ii, 1.0, 1e4, AdcModel(40))
        assert rate_ki(unq, ch.h_ki, 1.0, 2, q_int=np.zeros((2, 2))) == pytest.approx(direct, abs=1e-9)

    def test_monotone_in_interference(self, rng):
        d, ch, *_ = build(rng)
        for _ in range(20):
            a = crandn(rng, 2, 2) * 0.3
            q = a @ a.conj().T
            vals = [rate_ki(d, ch.h_ki, 1.0, 2, q_int=s * q) for s in (0.0, 0.5, 1.0, 2.0)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_resolution_at_high_si(self, rng):
        d, ch, *_ = build(rng, eta=(NO_LIMIT, NO_LIMIT), inr=1e6)
        hi = requantize(d, ch.h_ki, ch.h_ii, 1.0, 1e6, AdcModel(12))
        lo = requantize(d, ch.h_ki, ch.h_ii, 1.0, 1e6, AdcModel(4))
        assert rate_ki(hi, ch.h_ki, 1.0, 2) > rate_ki(lo, ch.h_ki, 1.0, 2)

    def test_unconstrained_single_candidate(self, rng):
        for _ in range(5):
            d, ch, t_ij, _, _ = build(rng, eta=(NO_LIMIT, NO_LIMIT), k=1)
            assert rate_ij(d, ch.h_ij, 1.0, 2) == pytest.approx(capacity_ij(t_ij, ch.h_ij, 1.0, 2), abs=1e-3)


class TestCapacity:
    def test_single_candidate(self, rng):
        h = crandn(rng, 2, 2)
        g = crandn(rng, 6, 2)
        gram = g.conj().T @ g
        cap = waterfilled_capacity([h], [gram], 2.0, 2)
        hw = np.linalg.cholesky(np.linalg.inv(gram)).conj().T @ h
        s = np.linalg.svd(hw, compute_uv=False) ** 2
        # two-mode water-filling by hand
        mu = (1 + 1 / s[0] + 1 / s[1]) / 2
        p = np.maximum(mu - 1 / s, 0)
        if p[1] == 0:
            p = np.array([1.0, 0.0])
        assert cap == pytest.approx(np.sum(np.log2(1 + s * p)), abs=1e-9)

    def test_monotone(self, rng):
        hs = [crandn(rng, 2, 2) for _ in range(4)]
        gs = [np.eye(2)] * 4
        caps = [waterfilled_capacity(hs[:k], gs[:k], 1.0, 2) for k in range(1, 5)]
        assert all(b >= a for a, b in zip(caps, caps[1:]))

    def test_random_search_oracle(self, rng):
        for _ in range(3):
            h = crandn(rng, 2, 2)
            cap = waterfilled_capacity([h], [np.eye(2)], 1.0, 1)
            f = crandn(rng, 10**5, 2, 1)
            f /= np.linalg.norm(f, axis=1)[:, None, :]
            best = np.max(np.log2(1 + np.sum(np.abs(h @ f) ** 2, axis=(1, 2))))
            assert best <= cap + 1e-12
            assert cap - best <= 1e-3

    def test_candidate_sets(self, rng):
        h = crandn(rng, 6, 6)
        cands = CandidateSet([(crandn(rng, 6, 2), crandn(rng, 6, 2)) for _ in range(3)])
        c = capacity_ki(cands, h, 1.0, 2)
        direct = max(
            waterfilled_capacity([w.conj().T @ h @ f], [w.conj().T @ w], 1.0, 2) for f, w in cands.pairs
        )
        assert c == pytest.approx(direct)
        assert capacity_ij(cands, h, 1.0, 2) == c

    def test_empty(self):
        with pytest.raises(ValueError):
            waterfilled_capacity([], [], 1.0, 1)


class TestTrialMetrics:
    def test_derived_fields(self):
        m = TrialMetrics(1.0, 2.5, 3.0, 4.0)
        assert m.sum_se == 3.5 and m.hd_baseline == 4.0

    def test_from_design(self, rng):
        d, ch, t_ij, t_ki, lim = build(rng)
        m = trial_metrics(d, ch, t_ij, t_ki, 1.0, 1.0, 2, 2, lim)
        assert min(m.r_ij, m.r_ki, m.c_ij, m.c_ki) >= 0
        assert m.r_ij <= m.c_ij + 1e-9
        assert (m.tx_index, m.rx_index) == (d.tx_index, d.rx_index)
        assert min(m.slacks) <= 1e-6
