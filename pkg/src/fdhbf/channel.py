"""Channel generators: far-field Saleh-Valenzuela rays and the near-field
spherical-wave self-interference model."""

from dataclasses import dataclass

import numpy as np

from .exceptions import GeometryError, ParameterError
from .validation import check_positive


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array.

    ``spacing`` and ``vertical_offset`` are in wavelengths. The offset only
    matters for near-field modelling, where it separates a device's receive
    array from its transmit array.
    """

    n_elements: int
    spacing: float = 0.5
    vertical_offset: float = 0.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise GeometryError(f"n_elements must be >= 1, got {self.n_elements!r}")
        if not self.spacing > 0:
            raise GeometryError(f"spacing must be > 0, got {self.spacing!r}")

    def positions(self):
        """Element coordinates ``(x, y)`` in wavelengths, elements along x."""
        x = self.spacing * np.arange(self.n_elements)
        return np.column_stack([x, np.full(self.n_elements, float(self.vertical_offset))])


@dataclass(frozen=True)
class RayParams:
    n_rays_min: int = 4
    n_rays_max: int = 15
    angle_min: float = -np.pi / 2
    angle_max: float = np.pi / 2

    def __post_init__(self):
        if not 1 <= self.n_rays_min <= self.n_rays_max:
            raise ParameterError(
                f"need 1 <= n_rays_min <= n_rays_max, got {self.n_rays_min}, {self.n_rays_max}"
            )
        if not self.angle_min <= self.angle_max:
            raise ParameterError("angle_min must not exceed angle_max")


DESIRED_RAYS = RayParams(4, 15)
SI_RAYS = RayParams(1, 15)


@dataclass
class ChannelSet:
    """One realization of the transmit, receive and self-interference channels."""

    h_ij: np.ndarray
    h_ki: np.ndarray
    h_ii: np.ndarray
    kappa: float = 0.0


def array_response(geom, angle):
    """ULA steering vector as a column; squared norm equals ``n_elements``."""
    n = np.arange(geom.n_elements)
    return np.exp(2j * np.pi * geom.spacing * n * np.sin(angle)).reshape(-1, 1)


def _steering(geom, angles):
    n = np.arange(geom.n_elements)[:, None]
    return np.exp(2j * np.pi * geom.spacing * n * np.sin(np.asarray(angles))[None, :])


def gen_sv_channel(tx, rx, rays, rng, *, n_rays=None, gains=None, aod=None, aoa=None):
    """Saleh-Valenzuela narrowband channel of shape ``(rx.n, tx.n)``.

    ``H = sqrt(1/N) * sum_u beta_u a_rx(AoA_u) a_tx(AoD_u)^H`` with
    ``beta_u ~ CN(0, 1)``, so ``E||H||_F^2 = Nt * Nr``. The keyword overrides
    pin individual random draws (useful for deterministic tests).
    """
    if n_rays is None:
        n_rays = int(rng.integers(rays.n_rays_min, rays.n_rays_max + 1))
    if gains is None:
        gains = (rng.standard_normal(n_rays) + 1j * rng.standard_normal(n_rays)) / np.sqrt(2)
    if aod is None:
        aod = rng.uniform(rays.angle_min, rays.angle_max, n_rays)
    if aoa is None:
        aoa = rng.uniform(rays.angle_min, rays.angle_max, n_rays)
    gains = np.broadcast_to(np.asarray(gains, dtype=np.complex128), (n_rays,))
    a_rx = _steering(rx, np.broadcast_to(aoa, (n_rays,)))
    a_tx = _steering(tx, np.broadcast_to(aod, (n_rays,)))
    return np.sqrt(1.0 / n_rays) * (a_rx * gains) @ a_tx.conj().T


def nearfield_distances(tx, rx):
    """Distances ``r[v, u]`` (wavelengths) from transmit element u to receive element v."""
    pt = tx.positions()
    pr = rx.positions()
    diff = pr[:, None, :] - pt[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def gen_nearfield(tx, rx):
    """Deterministic spherical-wave channel normalized to ``||H||_F^2 = Nt * Nr``."""
    r = nearfield_distances(tx, rx)
    if np.any(r <= 0):
        raise GeometryError("coincident transmit and receive elements")
    h = np.exp(-2j * np.pi * r) / r
    gamma = np.sqrt(tx.n_elements * rx.n_elements) / np.linalg.norm(h)
    return gamma * h


def gen_si_channel(kappa, tx, rx, rays, rng, *, h_nf=None):
    """Rician mix of near-field and far-field self-interference.

    ``kappa`` is linear. ``h_nf`` can be passed to reuse a precomputed
    near-field component for a fixed geometry.
    """
    kappa = check_positive(kappa, "kappa", strict=False)
    if h_nf is None:
        h_nf = gen_nearfield(tx, rx)
    h_ff = gen_sv_channel(tx, rx, rays, rng)
    if np.isinf(kappa):
        return h_nf.copy()
    return np.sqrt(kappa / (kappa + 1.0)) * h_nf + np.sqrt(1.0 / (kappa + 1.0)) * h_ff


def snr_from_powers(ptx_watts, gain_sq, noise_psd_w_per_hz, bandwidth_hz):
    """Link SNR ``Ptx * G^2 / (N0 * B)`` without beamforming gain."""
    ptx = check_positive(ptx_watts, "ptx_watts")
    g2 = check_positive(gain_sq, "gain_sq")
    n0 = check_positive(noise_psd_w_per_hz, "noise_psd_w_per_hz")
    bw = check_positive(bandwidth_hz, "bandwidth_hz")
    return ptx * g2 / (n0 * bw)
