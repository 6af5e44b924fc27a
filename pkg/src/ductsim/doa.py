"""Guard-period snapshot collection and root-MUSIC angle estimation.

During the guard period a BS hears only the far system's DL leakage, so
the snapshots carry the duct arrival directions. The sample covariance
is eigendecomposed, the polynomial built from the noise-subspace
projector is rooted, and the roots closest to the unit circle from
inside map back to angles through the array phase.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import channels
from .backend import rootmusic_coeffs


def assemble_gp_samples(duct_to_rx, precoders, dl_power, symbols, noise):
    """Snapshot block at one receiver: for each snapshot t,
    y_t = sqrt(dl_power) * sum_s duct_to_rx[s] precoders[s] symbols[s, :, t]
    + noise[:, t].

    duct_to_rx is (S, M, M), precoders (S, M, K), symbols (S, K, P),
    noise (M, P); returns (M, P).
    """
    x = np.einsum("smk,skp->smp", precoders, symbols)
    y = np.einsum("smn,snp->mp", duct_to_rx, x, optimize=True)
    return np.sqrt(dl_power) * y + noise


def collect_gp_samples(duct_to_rx, precoders, dl_power, noise_power,
                       snapshots, rng):
    """Draw symbols and noise for `snapshots` guard-period samples at one
    receiver and assemble them. Draw order: symbols, then noise."""
    rng = np.random.default_rng(rng)
    s_n, _, k_n = precoders.shape
    m = duct_to_rx.shape[1]
    symbols = channels.complex_normal(rng, (s_n, k_n, snapshots))
    noise = channels.complex_normal(rng, (m, snapshots),
                                    scale=np.sqrt(noise_power))
    return assemble_gp_samples(duct_to_rx, precoders, dl_power, symbols, noise)


def noise_subspace(samples, source_count):
    """Noise-subspace basis of the snapshot sample covariance.

    Returns (basis, eigvals): basis is (M, M - source_count) spanning the
    eigenvectors of the M smallest eigenvalues, eigvals all M sample
    covariance eigenvalues in ascending order.
    """
    samples = np.asarray(samples)
    m, p = samples.shape
    if not 0 < source_count < m:
        raise ValueError(
            f"source_count must lie in (0, M), got {source_count} with M={m}")
    cov = samples @ samples.conj().T / p
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvecs[:, : m - source_count], eigvals


@dataclass(frozen=True)
class AoaEstimate:
    """Root-MUSIC output: angles (radians, ascending), the selected
    roots, and the snapshot covariance spectrum (ascending)."""

    angles: np.ndarray
    roots: np.ndarray
    eigvals: np.ndarray


def rootmusic_angles(basis, spacing_ratio, source_count):
    """Angles from a noise-subspace basis via polynomial rooting.

    Roots the conjugate-symmetric polynomial of the projector
    basis basis^H, keeps the source_count roots inside the unit disk
    closest to the circle, and maps each to
    theta = arcsin(-arg(z) / (2 pi spacing_ratio)).

    Returns (angles, roots), angles ascending with roots in matching
    order.
    """
    proj = basis @ basis.conj().T
    coeffs = rootmusic_coeffs(proj)
    roots = np.roots(coeffs[::-1])
    inside = roots[np.abs(roots) <= 1.0 + 1e-9]
    if inside.size < source_count:
        raise ValueError(
            f"root selection found {inside.size} candidate roots for "
            f"{source_count} sources")
    order = np.argsort(1.0 - np.abs(inside))
    picked = inside[order[:source_count]]
    sin_theta = -np.angle(picked) / (2.0 * np.pi * spacing_ratio)
    clipped = np.clip(sin_theta, -1.0, 1.0)
    if np.any(np.abs(sin_theta) > 1.0 + 1e-6):
        warnings.warn(
            "root-MUSIC root maps outside the visible region; clipping",
            RuntimeWarning)
    angles = np.arcsin(clipped)
    order = np.argsort(angles)
    return angles[order], picked[order]


def estimate_aoa(samples, source_count, spacing_ratio):
    """Full chain: subspace split, rooting, angle mapping.

    Warns when the weakest source eigenvalue sits within 3 dB of the
    noise floor (mean of the noise eigenvalues), where the subspace
    split is unreliable.
    """
    basis, eigvals = noise_subspace(samples, source_count)
    m = samples.shape[0]
    floor = float(np.mean(eigvals[: m - source_count]))
    weakest = float(eigvals[m - source_count])
    if floor > 0 and weakest < 2.0 * floor:
        warnings.warn(
            f"weakest source eigenvalue {weakest:.3e} is within 3 dB of the "
            f"noise floor {floor:.3e}; angle estimates may be unreliable",
            RuntimeWarning)
    angles, roots = rootmusic_angles(basis, spacing_ratio, source_count)
    return AoaEstimate(angles=angles, roots=roots, eigvals=eigvals)
