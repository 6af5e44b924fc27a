"""Channel models: path loss, shadowing, local Rayleigh links, ducted links.

Local (same-system) links are i.i.d. Rayleigh with lognormal shadowing on
top of a power-law path loss. The cross-system duct link is Rician: a
rank-one line-of-sight term on the arrival/departure steering pair plus
an i.i.d. NLoS part with unit-variance entries, the duct attenuation
collected in the common prefactor.
"""

from dataclasses import dataclass

import numpy as np

from .backend import steering_matrix

PATH_LOSS_COEFF_LOG10 = -11.2427
PATH_LOSS_EXPONENT = 3.8


def path_loss(distance_km):
    """Power path-loss 10^-11.2427 * d^-3.8 with d in kilometers."""
    d = np.asarray(distance_km, dtype=np.float64)
    if np.any(d <= 0):
        raise ValueError("path_loss: distance must be positive")
    return 10.0 ** PATH_LOSS_COEFF_LOG10 * d ** -PATH_LOSS_EXPONENT


def draw_shadowing(rng, sigma_db, size=None):
    """Lognormal shadowing factors: 10^(sigma_db * N(0,1) / 10)."""
    return 10.0 ** (sigma_db * rng.standard_normal(size) / 10.0)


def steering_vector(angle, m, spacing_ratio):
    """ULA steering vector at one angle (radians); entry i is
    exp(j*2*pi*i*spacing_ratio*sin(angle))."""
    return steering_matrix(angle, m, spacing_ratio)[:, 0]


def complex_normal(rng, size=None, scale=1.0):
    """Circularly-symmetric complex Gaussian draws with variance scale**2."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (scale / np.sqrt(2.0)) * (re + 1j * im)


@dataclass(frozen=True)
class LocalChannel:
    """One BS-to-UE link: h = sqrt(beta * psi) * g with g ~ CN(0, I)."""

    beta: float
    psi: float
    g: np.ndarray

    @property
    def h(self):
        return np.sqrt(self.beta * self.psi) * self.g


def draw_local_channel(rng, distance_km, m, sigma_db):
    """Draw one local link: path loss from distance, lognormal shadowing,
    Rayleigh small-scale fading."""
    beta = float(path_loss(distance_km))
    psi = float(draw_shadowing(rng, sigma_db))
    g = complex_normal(rng, m)
    return LocalChannel(beta=beta, psi=psi, g=g)


@dataclass(frozen=True)
class DuctChannel:
    """One cross-system duct link and its generating parameters.

    matrix is the receive-side channel (m x m); aoa is the arrival angle
    at the receiver, aod the departure angle at the transmitter, both
    radians. k_factor and loss are the Rician factor and duct attenuation.
    """

    matrix: np.ndarray
    aoa: float
    aod: float
    k_factor: float
    loss: float


def duct_matrix(aoa, aod, k_factor, loss, nlos, spacing_ratio):
    """Assemble sqrt(K L/(K+1)) q_rx q_tx^H + sqrt(L/(K+1)) nlos."""
    m = nlos.shape[0]
    q_rx = steering_vector(aoa, m, spacing_ratio)
    q_tx = steering_vector(aod, m, spacing_ratio)
    los = np.outer(q_rx, q_tx.conj())
    k = k_factor
    return np.sqrt(k * loss / (k + 1.0)) * los + np.sqrt(loss / (k + 1.0)) * nlos


def draw_duct_channel(rng, aoa, aod, k_factor, loss, m, spacing_ratio):
    """Draw one duct link: deterministic LoS on the steering pair plus
    i.i.d. unit-variance NLoS entries."""
    nlos = complex_normal(rng, (m, m))
    mat = duct_matrix(aoa, aod, k_factor, loss, nlos, spacing_ratio)
    return DuctChannel(matrix=mat, aoa=float(aoa), aod=float(aod),
                       k_factor=float(k_factor), loss=float(loss))


def reverse_duct_matrix(forward_nlos, aoa, aod, k_factor, loss, spacing_ratio):
    """Reverse-link duct channel seen at the original transmitter.

    Swaps the angle roles (receive steering at aod's end) and transposes
    the NLoS part, keeping the same ULA phase convention on both ends so
    that angle estimation at either end recovers that end's own angle.
    """
    return duct_matrix(aod, aoa, k_factor, loss, forward_nlos.T, spacing_ratio)
