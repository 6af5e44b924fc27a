"""Channel-estimation phase: observation assembly, match filtering, LMMSE.

The estimator works from modeled second-order statistics in one of three
regimes. "ignore" models local pilots and noise only; "ri_aware" adds
the cross-system interference covariance, a rank-one term on each
arrival steering vector plus an isotropic scattered term, scaled by the
power ratio; "null" assumes the aggressors' LoS has been nulled and
keeps only the isotropic scattered residual. Estimate and error
covariances follow from the same assumed statistics, so each regime's
outputs describe what that receiver believes, not the realized errors.
"""

from dataclasses import dataclass

import numpy as np

from . import channels

REGIMES = ("ignore", "ri_aware", "null")


def ce_observation(h, pilots, pilot_book, ul_power, noise,
                   duct_h=None, precoders=None, symbols=None, dl_power=None):
    """Assemble the CE-phase observation at every BS of one system.

    Y[b] = sqrt(ul_power) * sum_{c,u} h[b,c,u] phi_{pilots[c,u]}^T
           (+ sqrt(dl_power) * sum_s duct_h[b,s] precoders[s] symbols[s])
           + noise[b]

    Parameters
    ----------
    h : ndarray, shape (B, C, U, M)
        Local channels from every BS to every UE of the system.
    pilots : ndarray, shape (C, U)
        Pilot index per UE.
    pilot_book : ndarray, shape (pilot_len, pilot_len)
    ul_power, dl_power : float
    noise : ndarray, shape (B, M, pilot_len)
        Pre-drawn noise, entries CN(0, noise_power).
    duct_h : ndarray, shape (B, S, M, M), optional
        Cross-system channels; None for an interference-free system.
    precoders : ndarray, shape (S, M, K), optional
    symbols : ndarray, shape (S, K, pilot_len), optional
        Unit-power DL symbols sent by the interfering BSs.

    Returns
    -------
    ndarray, shape (B, M, pilot_len)
    """
    phi = pilot_book[pilots]  # (C, U, tau)
    y = np.sqrt(ul_power) * np.einsum("bcum,cut->bmt", h, phi, optimize=True)
    if duct_h is not None:
        x = np.einsum("smk,skt->smt", precoders, symbols)
        y = y + np.sqrt(dl_power) * np.einsum("bsmn,snt->bmt", duct_h, x, optimize=True)
    return y + noise


def receive_ce_signal(scenario, precoders, pilot_book, rng):
    """Draw symbols and noise and assemble the victim-side CE observation.

    Draw order: aggressor DL symbols, then noise. Returns (Y, symbols,
    noise) so callers can re-assemble under different precoders.
    """
    cfg = scenario.config
    rng = np.random.default_rng(rng)
    s_n, u_n = cfg.num_aggressor_bs, cfg.ues_per_cell
    m, tau = cfg.antennas_per_bs, cfg.pilot_len
    symbols = channels.complex_normal(rng, (s_n, u_n, tau))
    noise = channels.complex_normal(rng, (cfg.num_victim_bs, m, tau),
                                    scale=np.sqrt(cfg.noise_power))
    y = ce_observation(scenario.victim_h, scenario.victim_pilots, pilot_book,
                       cfg.ul_power, noise, duct_h=scenario.duct_h,
                       precoders=precoders, symbols=symbols,
                       dl_power=cfg.dl_power)
    return y, symbols, noise


def match_filter(y_ce, pilot_seq, ul_power):
    """Correlate the CE observation with one pilot: Y phi^* / sqrt(p_ul).

    y_ce may be (M, tau) or batched (..., M, tau); returns (..., M).
    """
    return np.asarray(y_ce) @ np.conj(pilot_seq) / np.sqrt(ul_power)


@dataclass(frozen=True)
class CeModel:
    """Assumed statistics for one link's LMMSE estimate.

    betapsi is the target UE's large-scale gain toward this BS;
    copilot_betapsi_sum sums the gain over the whole copilot set
    (target included). rx_steering holds the per-aggressor arrival
    steering vectors (num_aggressors, M), needed only by "ri_aware";
    the engine feeds estimated or true angles as configured.
    """

    betapsi: float
    copilot_betapsi_sum: float
    pilot_len: int
    ul_power: float
    dl_power: float
    noise_power: float
    rician_k: float
    duct_loss: float
    num_aggressors: int
    m: int
    ues_per_aggressor: int = 1
    rx_steering: np.ndarray | None = None
    paper_literal_null_scalar: bool = False


@dataclass(frozen=True)
class ChannelEstimate:
    """LMMSE output and the covariances claimed by its regime."""

    h_hat: np.ndarray
    est_cov: np.ndarray
    err_cov: np.ndarray
    regime: str

    @property
    def eps(self):
        """Isotropic error level trace(err_cov)/M."""
        return float(np.trace(self.err_cov).real) / self.h_hat.shape[-1]


def _base_scalar(model):
    tau = model.pilot_len
    return tau * tau * model.copilot_betapsi_sum + \
        model.noise_power * tau / model.ul_power


def _null_ri_scalar(model):
    tau, k, ls = model.pilot_len, model.rician_k, model.duct_loss
    if model.paper_literal_null_scalar:
        return model.ul_power * tau * model.num_aggressors * \
            (model.ues_per_aggressor - 1) * ls / (model.dl_power * (k + 1.0))
    return (model.dl_power / model.ul_power) * tau * \
        model.num_aggressors * ls / (k + 1.0)


def observation_cov(model, regime):
    """Covariance of the match-filtered observation under the regime's
    assumed statistics, (M, M)."""
    if regime not in REGIMES:
        raise ValueError(f"unknown estimation regime {regime!r}")
    m = model.m
    a = _base_scalar(model)
    if regime == "ignore":
        return a * np.eye(m, dtype=np.complex128)
    if regime == "null":
        return (a + _null_ri_scalar(model)) * np.eye(m, dtype=np.complex128)
    if model.rx_steering is None:
        raise ValueError("ri_aware regime needs rx_steering in the CeModel")
    tau, k, ls = model.pilot_len, model.rician_k, model.duct_loss
    ratio = model.dl_power / model.ul_power
    q = np.asarray(model.rx_steering)
    cov = a * np.eye(m, dtype=np.complex128)
    cov += ratio * tau * (k * ls / (k + 1.0)) * np.einsum("sm,sn->mn", q, q.conj())
    cov += ratio * tau * (model.num_aggressors * ls / (k + 1.0)) * np.eye(m)
    return cov


def lmmse_estimate(y_mf, model, regime):
    """LMMSE channel estimate from a match-filtered observation.

    h_hat = tau_p * betapsi * Cov_y^{-1} y_mf with Cov_y the regime's
    assumed observation covariance; the estimate covariance is
    (tau_p * betapsi)^2 Cov_y^{-1} and the error covariance
    betapsi I - est_cov.
    """
    cov_y = observation_cov(model, regime)
    tau_bp = model.pilot_len * model.betapsi
    m = model.m
    if regime == "ri_aware":
        h_hat = tau_bp * np.linalg.solve(cov_y, y_mf)
        est_cov = tau_bp * tau_bp * np.linalg.inv(cov_y)
    else:
        a = cov_y[0, 0].real
        h_hat = (tau_bp / a) * y_mf
        est_cov = (tau_bp * tau_bp / a) * np.eye(m, dtype=np.complex128)
    err_cov = model.betapsi * np.eye(m, dtype=np.complex128) - est_cov
    return ChannelEstimate(h_hat=h_hat, est_cov=est_cov, err_cov=err_cov,
                           regime=regime)


def nmse(h_true, h_hat):
    """Per-draw normalized error ||h_hat - h||^2 / ||h||^2 over the last
    axis."""
    h_true = np.asarray(h_true)
    h_hat = np.asarray(h_hat)
    num = np.sum(np.abs(h_hat - h_true) ** 2, axis=-1)
    den = np.sum(np.abs(h_true) ** 2, axis=-1)
    return num / den
