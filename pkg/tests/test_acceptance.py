"""Acceptance suite: one test per acceptance criterion.

Each test prints a PASS/FAIL line in the terminal summary. Monte Carlo
trial counts are stated next to each criterion.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from fdhbf.channel import DESIRED_RAYS, UlaGeometry, gen_nearfield, gen_sv_channel
from fdhbf.cli import main as cli_main
from fdhbf.codebook import acquire_candidates, dft_codebook
from fdhbf.constraints import (
    adc_constraint_value,
    adc_redundant_by_lna,
    adc_redundant_by_power,
    lna_constraint_value,
    lna_redundant,
)
from fdhbf.link import (
    AdcModel,
    design_link,
    max_si_adc,
    pair_problems,
    quant_noise_cov,
    quant_power,
    quant_step_sq,
)
from fdhbf.metrics import capacity_ij
from fdhbf.numerics import db2lin, make_rng
from fdhbf.simulation import SweepSpec, SystemConfig, candidates, draw_channels, preset, run_sweep
from fdhbf.solver import solve_constrained_precoder

from conftest import crandn
from oracles import greedy_reference, magnitude_grid, random_feasible_search, symbol_mse


def _design(cfg, rng):
    channels = draw_channels(cfg, rng)
    t_ij, t_ki = candidates(cfg, channels)
    design = design_link(
        t_ij, t_ki, channels.h_ij, channels.h_ki, channels.h_ii, cfg.limits(),
        float(db2lin(cfg.snr_ij_db)), float(db2lin(cfg.snr_ki_db)), float(db2lin(cfg.inr_db)),
        AdcModel(cfg.bits), cfg.solver,
    )
    return channels, t_ij, t_ki, design


def _means(records, key):
    """Mean of ``key(metrics)`` per sweep point, in sweep order."""
    groups = {}
    for rec in records:
        groups.setdefault(tuple(sorted(rec.point.items())), []).append(key(rec.metrics))
    return {pt: float(np.mean(v)) for pt, v in groups.items()}


class TestAcceptance:
    def test_01_channel_normalization(self, criterion):
        crit = criterion(1, "channel normalization")
        start = time.perf_counter()
        rng = make_rng(1)
        tx, rx = UlaGeometry(32), UlaGeometry(32)
        mean_sv = np.mean([np.linalg.norm(gen_sv_channel(tx, rx, DESIRED_RAYS, rng)) ** 2 / 1024
                           for _ in range(10**4)])
        nf_err = max(
            abs(np.linalg.norm(gen_nearfield(UlaGeometry(nt), UlaGeometry(nr, vertical_offset=d))) ** 2
                / (nt * nr) - 1.0)
            for nt, nr, d in [(32, 32, 10.0), (16, 8, 2.0), (4, 4, 0.5)]
        )
        elapsed = time.perf_counter() - start
        crit.check(
            0.95 <= mean_sv <= 1.05 and nf_err <= 1e-9 and elapsed < 10,
            f"SV mean {mean_sv:.4f}, near-field error {nf_err:.1e}, {elapsed:.1f} s",
        )

    @pytest.mark.slow
    def test_02_feasibility_and_tightness(self, criterion):
        crit = criterion(2, "solver feasibility and tightness, 500 trials")
        start = time.perf_counter()
        draw = np.random.default_rng(2)
        infeasible = loose = nonzero = 0
        for trial in range(500):
            eta_lna = draw.uniform(-30, 30)
            cfg = SystemConfig(
                eta_lna_db=eta_lna, eta_adc_db=eta_lna - draw.uniform(0, 40),
                snr_ij_db=draw.uniform(-20, 10), snr_ki_db=draw.uniform(-20, 10),
                kappa_db=draw.uniform(-10, 30),
            )
            channels, _, _, d = _design(cfg, make_rng(1000 + trial))
            lim = cfg.limits()
            power = float(np.sum(np.abs(d.f_bb_i) ** 2))
            lna = lna_constraint_value(channels.h_ii, d.f_rf_i, d.f_bb_i, cfg.ns_ij)
            adc = adc_constraint_value(d.w_rf_i, channels.h_ii, d.f_rf_i, d.f_bb_i, cfg.ns_ij)
            if power > 1.0 or lna > lim.eta_lna or adc > lim.eta_adc:
                infeasible += 1
            if power > 0:
                nonzero += 1
                slack = min(1 - power, 1 - lna / lim.eta_lna, 1 - adc / lim.eta_adc)
                if slack > 1e-6:
                    loose += 1
        elapsed = time.perf_counter() - start
        crit.check(
            infeasible == 0 and loose == 0 and elapsed < 300,
            f"{infeasible} infeasible, {loose}/{nonzero} nonzero without a tight constraint, {elapsed:.0f} s",
        )

    def test_03_redundancy_soundness(self, criterion):
        crit = criterion(3, "redundancy rule soundness, 10^4 cases")
        start = time.perf_counter()
        rng = np.random.default_rng(3)
        violations = 0
        active = [0, 0, 0]
        tol = 1 + 1e-12  # floating-point rounding allowance only
        for _ in range(10**4):
            nr, nt = rng.integers(1, 9, 2)
            lt, lr = rng.integers(1, 4, 2)
            ns = int(rng.integers(1, lt + 1))
            h, f_rf, w_rf = crandn(rng, nr, nt), crandn(rng, nt, lt), crandn(rng, nr, lr)
            f_bb = crandn(rng, lt, ns)
            f_bb /= np.linalg.norm(f_bb)
            if rng.random() < 0.5:
                f_bb *= math.sqrt(rng.random())
            # limits straddle each redundancy threshold
            eta_lna = np.linalg.norm(h @ f_rf, 2) ** 2 / ns * 10 ** rng.uniform(-1, 1)
            eta_adc = np.linalg.norm(w_rf.conj().T @ h @ f_rf, 2) ** 2 / ns * 10 ** rng.uniform(-1, 1)
            if lna_redundant(h, f_rf, ns, eta_lna):
                active[0] += 1
                violations += lna_constraint_value(h, f_rf, f_bb, ns) > eta_lna * tol
            if adc_redundant_by_power(w_rf, h, f_rf, ns, eta_adc):
                active[1] += 1
                violations += adc_constraint_value(w_rf, h, f_rf, f_bb, ns) > eta_adc * tol
            eta_adc_l = eta_lna * np.linalg.norm(w_rf, 2) ** 2 * 10 ** rng.uniform(-1, 1)
            lna = lna_constraint_value(h, f_rf, f_bb, ns)
            # push the LNA value onto its limit, the hardest case for the implication
            if lna == 0:
                continue
            f_lna = f_bb * math.sqrt(eta_lna / lna * (1 - 1e-12))
            if adc_redundant_by_lna(w_rf, eta_lna, eta_adc_l):
                active[2] += 1
                assert lna_constraint_value(h, f_rf, f_lna, ns) <= eta_lna
                violations += adc_constraint_value(w_rf, h, f_rf, f_lna, ns) > eta_adc_l * tol
        elapsed = time.perf_counter() - start
        crit.check(
            violations == 0 and min(active) > 1000 and elapsed < 60,
            f"{violations} violations, premises held {active[0]}/{active[1]}/{active[2]} times, {elapsed:.1f} s",
        )

    @pytest.mark.slow
    def test_04_oracle_near_optimality(self, criterion):
        crit = criterion(4, "near-optimality against 10^5-sample random search, 100 instances")
        start = time.perf_counter()
        draw = np.random.default_rng(4)
        base = SystemConfig(
            nt_i=4, nr_i=4, nt_k=4, nr_j=4, mt_i=4, mr_j=4, mt_k=4, mr_i=4,
            ns_ij=1, ns_ki=1, k_ij=1, k_ki=1,
        )
        good = 0
        worst = math.inf
        for trial in range(100):
            eta_lna = draw.uniform(-20, 20)
            cfg = base.with_values(
                eta_lna_db=eta_lna, eta_adc_db=eta_lna - draw.uniform(0, 30), snr_ij_db=draw.uniform(-20, 10)
            )
            rng = make_rng(4000 + trial)
            channels = draw_channels(cfg, rng)
            t_ij, t_ki = candidates(cfg, channels)
            heff = [t_ij.combiner(0).conj().T @ channels.h_ij @ t_ij.precoder(0)]
            problem = pair_problems(
                t_ij, t_ki, heff, channels.h_ii, float(db2lin(cfg.snr_ij_db)), cfg.limits()
            )[(0, 0)]
            sol = solve_constrained_precoder(problem, cfg.solver)
            gap = sol.objective_bits - random_feasible_search(problem, 10**5, rng)
            worst = min(worst, gap)
            good += gap >= -0.01
        elapsed = time.perf_counter() - start
        crit.check(
            good >= 99 and elapsed < 600,
            f"{good}/100 within 0.01 bits, worst margin {worst:+.2e}, {elapsed:.0f} s",
        )

    @pytest.mark.slow
    def test_05_unconstrained_collapse(self, criterion):
        crit = criterion(5, "collapse to water-filling at eta = 1e6, 100 trials")
        cfg = SystemConfig(eta_lna_db=60.0, eta_adc_db=60.0)
        worst = 0.0
        matched = 0
        for trial in range(100):
            channels, t_ij, t_ki, d = _design(cfg, make_rng(5000 + trial))
            cap = capacity_ij(t_ij, channels.h_ij, float(db2lin(cfg.snr_ij_db)), cfg.ns_ij)
            err = abs(d.solution.objective_bits - cap)
            worst = max(worst, err)
            matched += err <= 1e-3
        crit.check(matched == 100, f"{matched}/100 within 1e-3 bits, worst {worst:.1e}")

    @pytest.mark.slow
    def test_06_sum_se_vs_saturation_limits(self, criterion):
        crit = criterion(6, "sum SE increases with the limits and meets C_ki when strict, 1000 trials")
        start = time.perf_counter()
        cfg = SystemConfig(snr_ij_db=0.0, snr_ki_db=0.0, bits=12, kappa_db=10.0, k_ij=3, k_ki=3, trials=1000)
        spec = SweepSpec(((("eta_lna", "eta_adc"), [(v, v - 20.0) for v in (-20.0, 0.0, 20.0)]),))
        records = run_sweep(cfg, spec)
        se = list(_means(records, lambda m: m.sum_se).items())
        se.sort(key=lambda kv: dict(kv[0])["eta_lna"])
        values = [v for _, v in se]
        strict_pt = se[0][0]
        c_ki = _means([r for r in records if tuple(sorted(r.point.items())) == strict_pt], lambda m: m.c_ki)
        c_ki = next(iter(c_ki.values()))
        elapsed = time.perf_counter() - start
        increasing = all(a < b for a, b in zip(values, values[1:]))
        near = abs(values[0] - c_ki) <= 0.5
        crit.check(
            increasing and near and elapsed < 1200,
            f"mean sum SE {values[0]:.3f} / {values[1]:.3f} / {values[2]:.3f}, "
            f"mean C_ki {c_ki:.3f}, {elapsed:.0f} s",
        )

    @pytest.mark.slow
    def test_07_candidate_gain(self, criterion):
        crit = criterion(7, "R_ij gain of K=3 over K=1, 200 trials per point")
        start = time.perf_counter()
        cfg, _ = preset("fig_cand_snr", SystemConfig(trials=200))
        snrs = [float(s) for s in range(-20, 11, 5)]
        spec = SweepSpec(((("k_ij", "k_ki"), [(1, 1), (3, 3)]), (("snr",), [(s,) for s in snrs])))
        means = _means(run_sweep(cfg, spec), lambda m: m.r_ij)
        gains = []
        for s in snrs:
            pt = lambda k: tuple(sorted({"k_ij": k, "k_ki": k, "snr": s}.items()))
            gains.append(means[pt(3)] - means[pt(1)])
        gain = float(np.mean(gains))
        elapsed = time.perf_counter() - start
        crit.check(
            0.5 <= gain <= 2.5 and elapsed < 1200,
            f"mean gain {gain:.3f} bits, per SNR {', '.join(f'{g:.2f}' for g in gains)}, {elapsed:.0f} s",
        )

    @pytest.mark.slow
    def test_08_adc_resolution(self, criterion):
        crit = criterion(8, "R_ki versus ADC limit and resolution, 200 trials per point")
        start = time.perf_counter()
        cfg, _ = preset("fig_se_eta_bits", SystemConfig(trials=200))
        grid = [float(e) for e in range(-30, 11, 5)]
        hi = _means(run_sweep(cfg, SweepSpec.grid(bits=[12], eta_adc=grid)), lambda m: m.r_ki)
        lo = _means(run_sweep(cfg, SweepSpec.grid(bits=[4], eta_adc=[-30.0, 0.0])), lambda m: m.r_ki)
        spread = max(hi.values()) - min(hi.values())
        lo_vals = {dict(pt)["eta_adc"]: v for pt, v in lo.items()}
        drop = lo_vals[-30.0] - lo_vals[0.0]
        elapsed = time.perf_counter() - start
        crit.check(
            spread <= 0.1 and drop >= 1.0 and elapsed < 1200,
            f"b=12 spread {spread:.4f} bits, b=4 drop {drop:.3f} bits, {elapsed:.0f} s",
        )

    def test_09_combiner_optimality(self, criterion):
        crit = criterion(9, "MMSE combiners are stationary under 10^3 perturbations each")
        start = time.perf_counter()
        rng = np.random.default_rng(9)
        cfg = SystemConfig(nt_i=8, nr_i=8, nt_k=8, nr_j=8, mt_i=8, mr_j=8, mt_k=8, mr_i=8, bits=4)
        best = {"j": -math.inf, "i": -math.inf}
        for trial in range(10):
            channels, _, _, d = _design(cfg, make_rng(9000 + trial))
            snr_ij, snr_ki = float(db2lin(cfg.snr_ij_db)), float(db2lin(cfg.snr_ki_db))
            # y = sqrt(snr) h s + n (+ quantization noise at i), E[ss^H] = I/ns, unit noise
            h_j = math.sqrt(snr_ij) * d.w_rf_j.conj().T @ channels.h_ij @ d.f_rf_i @ d.f_bb_i
            h_i = math.sqrt(snr_ki) * d.w_rf_i.conj().T @ channels.h_ki @ d.f_rf_k @ d.f_bb_k
            cases = {
                "j": (d.w_bb_j / math.sqrt(snr_ij), h_j, d.w_rf_j.conj().T @ d.w_rf_j, cfg.ns_ij),
                "i": (d.w_bb_i / math.sqrt(snr_ki), h_i, d.w_rf_i.conj().T @ d.w_rf_i + d.r_quant, cfg.ns_ki),
            }
            for side, (w, h, noise, ns) in cases.items():
                base = symbol_mse(w, h, noise, ns)
                for _ in range(100):
                    scale = 10 ** rng.uniform(-6, 0) * np.linalg.norm(w)
                    gain = base - symbol_mse(w + scale * crandn(rng, *w.shape), h, noise, ns)
                    best[side] = max(best[side], gain)
        elapsed = time.perf_counter() - start
        crit.check(
            max(best.values()) <= 1e-12 and elapsed < 60,
            f"largest MSE reduction {best['j']:.1e} at j, {best['i']:.1e} at i, {elapsed:.1f} s",
        )

    def test_10_quantization_formulas(self, criterion):
        crit = criterion(10, "quantization closed forms")
        start = time.perf_counter()
        ok = True
        for p in (0.0, 0.25, 1.0, 3.0, 1e-7):
            for b in range(1, 17):
                step = quant_step_sq(p, b)
                ok &= step == float(Fraction(8) * Fraction(p) / 4**b)
                ok &= quant_power(step) == float(Fraction(step) / 12)
        for p_noise in (0.5, 1.0, 2.0):
            for b in (1, 4, 12):
                for delta in (1.0, 0.5, 0.25):
                    for snr_in in (0.0, 1.0, 8.0):
                        for b_adc in (0.5, 1.0, 2.0):
                            exact = Fraction(p_noise) * (
                                Fraction(4**b) * Fraction(3, 2) / Fraction(b_adc)
                                * (1 - Fraction(delta)) / Fraction(delta) - Fraction(snr_in) - 1
                            )
                            ok &= max_si_adc(p_noise, b, delta, snr_in, b_adc) == float(exact)
        rng = np.random.default_rng(10)
        a = crandn(rng, 4, 4)
        cov = a @ a.conj().T
        for b in range(1, 16):
            r_b = quant_noise_cov(cov, AdcModel(b))
            r_next = quant_noise_cov(cov, AdcModel(b + 1))
            closed = np.diag(8 / (12 * 4**b) * np.real(np.diag(cov)))
            ok &= np.array_equal(r_b, closed) and np.array_equal(r_next * 4, r_b)
        elapsed = time.perf_counter() - start
        crit.check(bool(ok) and elapsed < 1, f"{elapsed * 1e3:.0f} ms")

    def test_11_candidate_acquisition_oracle(self, criterion):
        crit = criterion(11, "candidate acquisition matches the reference enumerator")
        start = time.perf_counter()
        rng = np.random.default_rng(11)
        checked = mismatches = 0
        for m_r in range(1, 5):
            for m_t in range(1, 5):
                f, w = dft_codebook(4, m_t, 2.0), dft_codebook(4, m_r, 4.0)
                size = m_r * m_t
                if size <= 6:
                    mags = list(magnitude_grid((m_r, m_t), (0.0, 1.0, 2.0)))
                elif size <= 9:
                    mags = list(magnitude_grid((m_r, m_t), (0.0, 1.0)))
                else:
                    # few distinct levels so ties are frequent; plus the all-tie matrix
                    mags = [rng.integers(0, 3, (m_r, m_t)).astype(float) for _ in range(400)]
                    mags.append(np.ones((m_r, m_t)))
                for mag in mags:
                    for n_rf in range(1, min(2, m_r, m_t) + 1):
                        for k in range(1, min(3, size) + 1):
                            c = acquire_candidates(mag, f, w, n_rf, k)
                            ref = greedy_reference(mag, n_rf, k)
                            checked += 1
                            mismatches += list(zip(c.tx_indices, c.rx_indices)) != [tuple(x) for x in ref]
        elapsed = time.perf_counter() - start
        crit.check(
            mismatches == 0 and elapsed < 60,
            f"{mismatches} mismatches in {checked} cases, {elapsed:.1f} s",
        )

    def test_12_determinism(self, criterion, tmp_path, monkeypatch):
        crit = criterion(12, "byte-identical CSV for identical config and seed")
        monkeypatch.delenv("FDX_SEED", raising=False)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text('{"trials": 4, "seed": 77, "eta_lna_db": 0.0, "eta_adc_db": -20.0}')
        outs = []
        for name, extra in (("a", []), ("b", []), ("c", ["--threads", "2"])):
            out = tmp_path / f"{name}.csv"
            assert cli_main(["run", "--config", str(cfg_path), "--out", str(out), *extra]) == 0
            outs.append(out.read_bytes())
        same = outs[0] == outs[1] == outs[2]
        crit.check(same and len(outs[0]) > 0, f"{len(outs[0])} bytes, 3 runs")
