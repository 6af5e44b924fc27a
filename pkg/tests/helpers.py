"""Shared builders and oracles for the test suite."""

from pathlib import Path

import numpy as np

from ductsim import engine, estimation
from ductsim.backend import steering_matrix
from ductsim.channels import complex_normal
from ductsim.config import SystemConfig, load_config

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


def small_config(**overrides):
    """Fast two-cell setup for unit tests."""
    base = dict(
        num_victim_bs=2, num_aggressor_bs=2, antennas_per_bs=8,
        ues_per_cell=2, pilot_len=8, trials=4, rng_seed=7,
        fp_max_iters=40,
    )
    base.update(overrides)
    return SystemConfig(**base).validate()


def desk_config(**overrides):
    """The checked-in desk-scale run configuration."""
    cfg = load_config(CONFIG_DIR / "desk.cfg")
    return cfg.replace(**overrides) if overrides else cfg


def paper_config(**overrides):
    """The checked-in full-scale run configuration."""
    cfg = load_config(CONFIG_DIR / "paper.cfg")
    return cfg.replace(**overrides) if overrides else cfg


def build_fp_problem(config, seed, true_angles=False):
    """One trial's assembled FP problem plus its context, exactly as the
    engine pipelines build them."""
    draws = engine.make_trial_draws(config, seed)
    ctx = engine.prepare_context(draws, true_angles)
    return engine._fp_problem(ctx), ctx


def lmmse_mse_pair(regime, n_draws, seed, m=8, num_aggressors=2):
    """Empirical MSE of the closed-form estimator against a linear
    estimator fitted from sample covariances of the same draws.

    Draws are generated under the regime's assumed second-order model
    (target channel, aggregated copilot channels, filtered noise, and
    the regime's interference residual), so the closed form should be
    MSE-optimal up to sampling noise. Returns (closed_mse, oracle_mse).
    """
    rng = np.random.default_rng(seed)
    tau = 8
    betapsi = 2e-12
    copilot = 3.2e-12  # target plus one weaker copilot UE
    ul_power = 10.0 ** -1.6
    dl_power = 10.0
    noise_power = 1e-14
    k_factor = 1000.0
    loss = 3e-9
    angles = np.deg2rad(np.linspace(-3.0, 2.0, num_aggressors))
    steer = steering_matrix(angles, m, 0.5).T  # (S, M)
    model = estimation.CeModel(
        betapsi=betapsi, copilot_betapsi_sum=copilot, pilot_len=tau,
        ul_power=ul_power, dl_power=dl_power, noise_power=noise_power,
        rician_k=k_factor, duct_loss=loss, num_aggressors=num_aggressors,
        m=m, rx_steering=steer if regime == "ri_aware" else None)

    h = complex_normal(rng, (n_draws, m), scale=np.sqrt(betapsi))
    others = complex_normal(rng, (n_draws, m), scale=np.sqrt(copilot - betapsi))
    mf_noise = complex_normal(rng, (n_draws, m),
                              scale=np.sqrt(noise_power * tau / ul_power))
    y = tau * (h + others) + mf_noise
    ratio = dl_power / ul_power
    if regime == "ri_aware":
        los = complex_normal(rng, (n_draws, num_aggressors))
        diffuse = complex_normal(rng, (n_draws, num_aggressors, m))
        ri = np.sqrt(k_factor * loss / (k_factor + 1.0)) * (los @ steer)
        ri = ri + np.sqrt(loss / (k_factor + 1.0)) * diffuse.sum(axis=1)
        y = y + np.sqrt(ratio * tau) * ri
    elif regime == "null":
        scalar = ratio * tau * num_aggressors * loss / (k_factor + 1.0)
        y = y + complex_normal(rng, (n_draws, m), scale=np.sqrt(scalar))
    elif regime != "ignore":
        raise ValueError(f"unknown regime {regime!r}")

    est = estimation.lmmse_estimate(y.T, model, regime)
    closed = float(np.mean(np.sum(np.abs(est.h_hat.T - h) ** 2, axis=1)))

    s_hy = h.T @ y.conj() / n_draws
    s_yy = y.T @ y.conj() / n_draws
    gain = s_hy @ np.linalg.inv(s_yy)
    oracle_hat = (gain @ y.T).T
    oracle = float(np.mean(np.sum(np.abs(oracle_hat - h) ** 2, axis=1)))
    return closed, oracle


def spectral_music_peak_deg(basis, spacing_ratio, grid_deg):
    """Grid-search MUSIC oracle: the grid angle (degrees) minimizing the
    projection of its steering vector onto the noise subspace."""
    a = steering_matrix(np.deg2rad(grid_deg), basis.shape[0], spacing_ratio)
    denom = np.sum(np.abs(basis.conj().T @ a) ** 2, axis=0)
    return float(grid_deg[np.argmin(denom)])


def total_power(precoders):
    """Sum of squared column norms per aggressor, shape (S,)."""
    return np.sum(np.abs(precoders) ** 2, axis=(1, 2))
