"""Configuration, the per-trial pipeline, parameter sweeps and CSV output."""

import csv
import dataclasses
import itertools
import json
import logging
import math
import numbers
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import DESIRED_RAYS, SI_RAYS, ChannelSet, UlaGeometry, gen_nearfield
from .channel import gen_si_channel, gen_sv_channel
from .codebook import acquire_candidates, dft_codebook, measure
from .constraints import SaturationLimits
from .exceptions import ConfigError, FdhbfError
from .link import AdcModel, design_link
from .metrics import trial_metrics
from .numerics import db2lin, make_rng
from .solver import SolverSettings

log = logging.getLogger(__name__)

SWEEP_VARIABLES = ("snr", "eta_lna", "eta_adc", "bits", "kappa", "k_ij", "k_ki")

# sweep variable -> config fields it sets
_FIELDS = {
    "snr": ("snr_ij_db", "snr_ki_db"),
    "eta_lna": ("eta_lna_db",),
    "eta_adc": ("eta_adc_db",),
    "bits": ("bits",),
    "kappa": ("kappa_db",),
    "k_ij": ("k_ij",),
    "k_ki": ("k_ki",),
}


@dataclass(frozen=True)
class SystemConfig:
    """Every knob of a simulation run.

    SNRs and the INR are in dB relative to thermal noise before
    beamforming. ``eta_lna_db``/``eta_adc_db`` of None mean no limit.
    ``mt_*``/``mr_*`` are training codebook sizes at each array. The
    bandwidth and symbol period are informational and only used when
    converting absolute powers.
    """

    nt_i: int = 32
    nr_i: int = 32
    nt_k: int = 32
    nr_j: int = 32
    ns_ij: int = 2
    ns_ki: int = 2
    mt_i: int = 32
    mr_j: int = 32
    mt_k: int = 32
    mr_i: int = 32
    snr_ij_db: float = 0.0
    snr_ki_db: float = 0.0
    eta_lna_db: float | None = 20.0
    eta_adc_db: float | None = 0.0
    kappa_db: float = 10.0
    bits: int = 12
    k_ij: int = 3
    k_ki: int = 3
    ptx_dbm: float = 30.0
    noise_dbm: float = -85.0
    si_gain_db: float = -55.0
    si_separation: float = 10.0
    bandwidth_hz: float = 100e6
    symbol_period_s: float = 10e-9
    solver: SolverSettings = field(default_factory=SolverSettings)
    seed: int = 0
    trials: int = 1000

    def __post_init__(self):
        for name in ("nt_i", "nr_i", "nt_k", "nr_j", "mt_i", "mr_j", "mt_k", "mr_i",
                     "ns_ij", "ns_ki", "bits", "k_ij", "k_ki", "trials"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for name in ("snr_ij_db", "snr_ki_db", "kappa_db", "ptx_dbm", "noise_dbm",
                     "si_gain_db", "si_separation", "bandwidth_hz", "symbol_period_s"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
                raise ConfigError(f"{name} must be a number, got {v!r}")
        for name in ("eta_lna_db", "eta_adc_db"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, (int, float)) or math.isnan(v)):
                raise ConfigError(f"{name} must be a number or null, got {v!r}")
        for ns, l_t, l_r, link in ((self.ns_ij, self.mt_i, self.mr_j, "ij"),
                                   (self.ns_ki, self.mt_k, self.mr_i, "ki")):
            if ns > min(l_t, l_r):
                raise ConfigError(f"ns_{link}={ns} exceeds the training codebook sizes")
        if self.mt_i > self.nt_i or self.mr_j > self.nr_j or self.mt_k > self.nt_k or self.mr_i > self.nr_i:
            raise ConfigError("training codebooks cannot exceed the array sizes")
        if not isinstance(self.solver, SolverSettings):
            raise ConfigError("solver must be SolverSettings")

    @property
    def inr_db(self):
        """Self-interference power over noise at each receive antenna, unbeamformed."""
        return self.ptx_dbm + self.si_gain_db - self.noise_dbm

    def limits(self):
        return SaturationLimits.from_db(self.eta_lna_db, self.eta_adc_db, self.ns_ij)

    def with_values(self, **values):
        return dataclasses.replace(self, **values)

    def to_dict(self):
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, data):
        """Build from a JSON-style mapping; unknown keys are rejected."""
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        if "solver" in data:
            s = data["solver"]
            if not isinstance(s, dict):
                raise ConfigError("solver must be an object")
            snames = {f.name for f in dataclasses.fields(SolverSettings)}
            bad = sorted(set(s) - snames)
            if bad:
                raise ConfigError(f"unknown solver keys: {', '.join(bad)}")
            try:
                data["solver"] = SolverSettings(**s)
            except (TypeError, FdhbfError) as exc:
                raise ConfigError(f"invalid solver settings: {exc}") from exc
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class TrialRecord:
    trial: int
    seed: int
    point: dict
    metrics: object
    path: str
    saturated: bool
    converged: bool
    nu: float
    wall_time: float = 0.0


@lru_cache(maxsize=32)
def _codebooks(n, m, norm_target):
    return dft_codebook(n, m, norm_target)


@lru_cache(maxsize=8)
def _si_nearfield(nt, nr, separation):
    return gen_nearfield(UlaGeometry(nt), UlaGeometry(nr, vertical_offset=separation))


def draw_channels(config, rng):
    """Draw ``H_ij``, ``H_ki`` and ``H_ii`` (in that order) from ``rng``."""
    tx_i, rx_j = UlaGeometry(config.nt_i), UlaGeometry(config.nr_j)
    tx_k = UlaGeometry(config.nt_k)
    rx_i = UlaGeometry(config.nr_i, vertical_offset=config.si_separation)
    kappa = float(db2lin(config.kappa_db))
    h_ij = gen_sv_channel(tx_i, rx_j, DESIRED_RAYS, rng)
    h_ki = gen_sv_channel(tx_k, UlaGeometry(config.nr_i), DESIRED_RAYS, rng)
    h_nf = _si_nearfield(config.nt_i, config.nr_i, config.si_separation)
    h_ii = gen_si_channel(kappa, tx_i, rx_i, SI_RAYS, rng, h_nf=h_nf)
    return ChannelSet(h_ij, h_ki, h_ii, kappa)


def candidates(config, channels):
    """Acquire both candidate sets from noiseless training measurements."""
    f_i = _codebooks(config.nt_i, config.mt_i, float(config.ns_ij))
    w_j = _codebooks(config.nr_j, config.mr_j, float(config.nr_j))
    f_k = _codebooks(config.nt_k, config.mt_k, float(config.ns_ki))
    w_i = _codebooks(config.nr_i, config.mr_i, float(config.nr_i))
    t_ij = acquire_candidates(measure(channels.h_ij, f_i, w_j), f_i, w_j, config.ns_ij, config.k_ij)
    t_ki = acquire_candidates(measure(channels.h_ki, f_k, w_i), f_k, w_i, config.ns_ki, config.k_ki)
    return t_ij, t_ki


def run_trial(config, rng, *, trial=0, seed=None, point=None):
    """Generate one realization and evaluate the full design on it.

    Errors from the pipeline are re-raised with the trial index prepended.
    """
    start = time.perf_counter()
    try:
        channels = draw_channels(config, rng)
        t_ij, t_ki = candidates(config, channels)
        limits = config.limits()
        snr_ij = float(db2lin(config.snr_ij_db))
        snr_ki = float(db2lin(config.snr_ki_db))
        design = design_link(
            t_ij, t_ki, channels.h_ij, channels.h_ki, channels.h_ii, limits,
            snr_ij, snr_ki, float(db2lin(config.inr_db)), AdcModel(config.bits),
            config.solver, ns_ki=config.ns_ki,
        )
        metrics = trial_metrics(
            design, channels, t_ij, t_ki, snr_ij, snr_ki, config.ns_ij, config.ns_ki, limits
        )
    except FdhbfError as exc:
        raise type(exc)(f"trial {trial}: {exc}") from exc
    sol = design.solution
    return TrialRecord(
        trial=trial,
        seed=seed,
        point=dict(point or {}),
        metrics=metrics,
        path=sol.path,
        saturated=sol.saturated,
        converged=sol.converged,
        nu=sol.nu,
        wall_time=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class SweepSpec:
    """Sweep points as the Cartesian product of axes.

    Each axis is ``(variables, values)``: a tuple of sweep variable names
    and a list of equally long value tuples, so linked variables (such as
    ``eta_lna`` and ``eta_adc`` moving together) share one axis.
    """

    axes: tuple = ()

    def __post_init__(self):
        for names, values in self.axes:
            for n in names:
                if n not in SWEEP_VARIABLES:
                    raise ConfigError(
                        f"unknown sweep variable {n!r}; expected one of {', '.join(SWEEP_VARIABLES)}"
                    )
            for v in values:
                if len(v) != len(names):
                    raise ConfigError(f"sweep values {v!r} do not match variables {names!r}")

    @classmethod
    def grid(cls, **variables):
        """One independent axis per keyword, e.g. ``grid(snr=[-10, 0])``."""
        return cls(tuple(((k,), [(v,) for v in vals]) for k, vals in variables.items()))

    def points(self):
        """Sweep points as ``{variable: value}`` dicts in deterministic order."""
        if not self.axes:
            return [{}]
        out = []
        for combo in itertools.product(*[vals for _, vals in self.axes]):
            pt = {}
            for (names, _), vals in zip(self.axes, combo):
                pt.update(zip(names, vals))
            out.append(pt)
        return out

    def __len__(self):
        return len(self.points())


def apply_point(config, point):
    values = {}
    for var, v in point.items():
        for f in _FIELDS[var]:
            values[f] = int(v) if f in ("bits", "k_ij", "k_ki") else v
    return config.with_values(**values)


def _eta_pairs(lna_values, offset=-20.0):
    return (("eta_lna", "eta_adc"), [(v, v + offset) for v in lna_values])


_SNR_GRID = [(float(s),) for s in range(-20, 11, 5)]
_ETA_ADC_GRID = [(float(e),) for e in range(-30, 11, 5)]

PRESETS = {
    "fig_se_snr": (
        {"k_ij": 3, "k_ki": 3, "bits": 12, "kappa_db": 10.0},
        SweepSpec((_eta_pairs([-20.0, -10.0, 0.0, 10.0, 20.0]), (("snr",), _SNR_GRID))),
    ),
    "fig_cand_snr": (
        {"eta_lna_db": 15.0, "eta_adc_db": -5.0, "bits": 12, "kappa_db": 10.0},
        SweepSpec((
            (("k_ij", "k_ki"), [(1, 1), (3, 1), (1, 3), (3, 3)]),
            (("snr",), _SNR_GRID),
        )),
    ),
    "fig_se_eta": (
        {"k_ij": 1, "k_ki": 1, "bits": 12, "kappa_db": 10.0, "snr_ij_db": -10.0, "snr_ki_db": -10.0},
        SweepSpec((
            (("eta_lna",), [(0.0,), (10.0,), (20.0,), (30.0,)]),
            (("eta_adc",), _ETA_ADC_GRID),
        )),
    ),
    "fig_se_eta_bits": (
        {"k_ij": 1, "k_ki": 1, "eta_lna_db": 20.0, "kappa_db": 10.0,
         "snr_ij_db": -10.0, "snr_ki_db": -10.0},
        SweepSpec(((("bits",), [(4,), (6,), (8,), (12,)]), (("eta_adc",), _ETA_ADC_GRID))),
    ),
    "fig_se_kappa": (
        {"k_ij": 1, "k_ki": 1, "bits": 12, "snr_ij_db": -10.0, "snr_ki_db": -10.0},
        SweepSpec((
            _eta_pairs([0.0, 10.0, 20.0]),
            (("kappa",), [(float(k),) for k in range(-10, 31, 5)]),
        )),
    ),
}


def preset(name, config=None):
    """Return ``(config, SweepSpec)`` for a named figure preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(sorted(PRESETS))}")
    overrides, spec = PRESETS[name]
    base = config or SystemConfig()
    return base.with_values(**overrides), spec


def run_sweep(config, sweep_spec=None, *, threads=1):
    """Run ``config.trials`` trials at every sweep point.

    Trial ``t`` uses seed ``config.seed + t`` at every point, so all points
    see the same channel realizations. Rows are ordered by (point, trial)
    regardless of ``threads``.
    """
    spec = sweep_spec or SweepSpec()
    jobs = []
    for pt in spec.points():
        cfg = apply_point(config, pt)
        for t in range(config.trials):
            jobs.append((cfg, pt, t, config.seed + t))

    def work(job):
        cfg, pt, t, seed = job
        return run_trial(cfg, make_rng(seed), trial=t, seed=seed, point=pt)

    if threads <= 1:
        return [work(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, jobs))


POINT_COLUMNS = (
    "snr_ij_db", "snr_ki_db", "eta_lna_db", "eta_adc_db", "bits", "kappa_db", "k_ij", "k_ki",
)
CSV_COLUMNS = POINT_COLUMNS + (
    "trial", "seed", "r_ij", "r_ki", "sum_se", "c_ij", "c_ki", "hd_baseline",
    "tx_index", "rx_index", "slack_pow", "slack_lna", "slack_adc",
    "tight_pow", "tight_lna", "tight_adc", "path", "saturated", "converged",
)


def _fmt(v):
    # None marks an unlimited eta; floats use the shortest round-trip repr
    if v is None:
        return "inf"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        return repr(float(v))
    return str(v)


def record_row(record, config):
    """CSV fields of one record; ``config`` supplies values not swept."""
    cfg = apply_point(config, record.point)
    m = record.metrics
    row = {c: getattr(cfg, c) for c in POINT_COLUMNS}
    row.update(
        trial=record.trial, seed=record.seed, r_ij=m.r_ij, r_ki=m.r_ki, sum_se=m.sum_se,
        c_ij=m.c_ij, c_ki=m.c_ki, hd_baseline=m.hd_baseline,
        tx_index=m.tx_index, rx_index=m.rx_index,
        slack_pow=m.slacks[0], slack_lna=m.slacks[1], slack_adc=m.slacks[2],
        tight_pow=m.tight_flags[0], tight_lna=m.tight_flags[1], tight_adc=m.tight_flags[2],
        path=record.path, saturated=record.saturated, converged=record.converged,
    )
    return [_fmt(row[c]) for c in CSV_COLUMNS]


def emit_csv(records, path, config):
    """Write records as UTF-8 CSV with a fixed header. Wall time is omitted."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for rec in records:
                w.writerow(record_row(rec, config))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
