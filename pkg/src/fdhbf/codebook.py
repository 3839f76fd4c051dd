"""DFT codebooks, beam-training measurements and greedy candidate acquisition."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import AcquisitionExhaustedError, ConfigError
from .validation import check_conformable, check_matrix


@dataclass(frozen=True)
class Codebook:
    """Beams stored as the columns of ``beams``; each has squared norm ``norm_target``."""

    beams: np.ndarray
    norm_target: float

    @property
    def n_antennas(self):
        return self.beams.shape[0]

    @property
    def size(self):
        return self.beams.shape[1]


@dataclass
class CandidateSet:
    """Ordered analog precoder/combiner pairs for one link.

    ``tx_indices[k]`` and ``rx_indices[k]`` are the 0-based training-codebook
    columns that make up candidate ``k``.
    """

    pairs: list = field(default_factory=list)
    tx_indices: list = field(default_factory=list)
    rx_indices: list = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    def precoder(self, k):
        return self.pairs[k][0]

    def combiner(self, k):
        return self.pairs[k][1]


def dft_codebook(n, m, norm_target):
    """``m`` DFT beams over ``n`` antennas scaled to squared norm ``norm_target``.

    Column ``k`` has entries ``sqrt(norm_target / n) * exp(j 2 pi p k / m)``.
    """
    if not 1 <= m <= n:
        raise ConfigError(f"codebook needs 1 <= m <= n, got m={m}, n={n}")
    if not norm_target > 0:
        raise ConfigError(f"norm_target must be > 0, got {norm_target}")
    p = np.arange(n)[:, None]
    k = np.arange(m)[None, :]
    beams = np.sqrt(norm_target / n) * np.exp(2j * np.pi * p * k / m)
    return Codebook(beams, float(norm_target))


def measure(h, f_train, w_train, amplitude=1.0):
    """Noiseless training measurements ``amplitude * W_tr^H H F_tr`` (rx x tx)."""
    h = check_matrix(h, "H")
    check_conformable(w_train.beams.conj().T, h, ("W_train^H", "H"))
    check_conformable(h, f_train.beams, ("H", "F_train"))
    return amplitude * (w_train.beams.conj().T @ h @ f_train.beams)


def _ranked_entries(mag):
    """Flat (t, r) pairs sorted by descending magnitude, ties to lower t then r."""
    m_r, m_t = mag.shape
    r_idx, t_idx = np.meshgrid(np.arange(m_r), np.arange(m_t), indexing="ij")
    order = np.lexsort((r_idx.ravel(), t_idx.ravel(), -mag.ravel()))
    return t_idx.ravel()[order], r_idx.ravel()[order]


def acquire_candidates(m, f_train, w_train, n_rf, n_candidates):
    """Greedy beam candidate acquisition.

    Candidate ``k`` starts from the ``k``-th strongest entry of ``|M|``; each
    further beam is the strongest entry whose transmit and receive indices are
    both still unused within that candidate. ``M`` is indexed ``[rx, tx]``.
    """
    m = check_matrix(m, "M")
    m_r, m_t = m.shape
    if (m_t, m_r) != (f_train.size, w_train.size):
        raise ConfigError(
            f"measurement shape {m.shape} does not match codebooks "
            f"({w_train.size} rx, {f_train.size} tx)"
        )
    if n_rf < 1 or n_candidates < 1:
        raise ConfigError("n_rf and n_candidates must be >= 1")
    if n_rf > min(m_t, m_r):
        raise AcquisitionExhaustedError(
            f"cannot pick {n_rf} distinct beams from {m_t} tx x {m_r} rx"
        )
    if n_candidates > m_t * m_r:
        raise AcquisitionExhaustedError(
            f"only {m_t * m_r} measurements available for {n_candidates} candidates"
        )
    t_rank, r_rank = _ranked_entries(np.abs(m))
    out = CandidateSet()
    for k in range(n_candidates):
        txs, rxs = [int(t_rank[k])], [int(r_rank[k])]
        for _ in range(n_rf - 1):
            for t, r in zip(t_rank, r_rank):
                if t not in txs and r not in rxs:
                    txs.append(int(t))
                    rxs.append(int(r))
                    break
        out.pairs.append((f_train.beams[:, txs], w_train.beams[:, rxs]))
        out.tx_indices.append(txs)
        out.rx_indices.append(rxs)
    return out


def effective_channels(h, cands):
    """Digital-domain channels ``W_RF^H H F_RF`` for every candidate."""
    h = check_matrix(h, "H")
    chans = []
    for f_rf, w_rf in cands.pairs:
        check_conformable(w_rf.conj().T, h, ("W_RF^H", "H"))
        check_conformable(h, f_rf, ("H", "F_RF"))
        chans.append(w_rf.conj().T @ h @ f_rf)
    return chans
