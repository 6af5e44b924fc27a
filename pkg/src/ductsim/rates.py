"""Achievable rates, log2(1 + SINR) in bit/s/Hz.

SINRs follow the estimate-based forms: the numerator and the cross
terms use channel estimates, the residual estimation error and
out-of-cell users enter isotropically through the combiner or precoder
norm, the cross-system term uses the realized duct channels, and the
noise term is unscaled.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateReport:
    """Per-UE rates for one cell plus the SINR terms behind them.

    terms maps name -> (U,) arrays: signal, err_oob, cross, ri (uplink
    only), noise. rate_u = log2(1 + signal / (err_oob + cross [+ ri]
    + noise)).
    """

    per_ue: np.ndarray
    terms: dict

    @property
    def total(self):
        return float(np.sum(self.per_ue))


def _rates_from_terms(terms):
    denom = sum(v for k, v in terms.items() if k != "signal")
    return np.log2(1.0 + terms["signal"] / denom)


def ul_rate(h_hat, eps, combiners, *, ul_power, dl_power, noise_power,
            oob_betapsi_sum, duct_h=None, precoders=None, ri_power=None):
    """Uplink rates for one victim cell.

    h_hat and combiners are (U, M) for the cell's UEs, eps (U,) the
    modeled isotropic error levels, oob_betapsi_sum the summed
    large-scale gain of the other cells' UEs toward this BS. The
    cross-system term is p_dl * sum_s ||c^H duct_h[s] precoders[s]||^2;
    pass ri_power (U,) to supply the unscaled leakage sum
    sum_s ||c^H duct_h[s] precoders[s]||^2 precomputed, or leave duct_h
    None for an interference-free system.
    """
    h_hat = np.asarray(h_hat)
    combiners = np.asarray(combiners)
    u_n = h_hat.shape[0]
    dots = combiners.conj() @ h_hat.T  # (u, u') = c_u^H h_hat_u'
    gains = np.abs(dots) ** 2
    signal = ul_power * np.diag(gains)
    cross = ul_power * (np.sum(gains, axis=1) - np.diag(gains))
    cnorm2 = np.sum(np.abs(combiners) ** 2, axis=1)
    err_oob = ul_power * (np.sum(eps) + oob_betapsi_sum) * cnorm2
    if ri_power is None:
        if duct_h is None:
            ri = np.zeros(u_n)
        else:
            leak = np.einsum("um,smn,snk->usk", combiners.conj(), duct_h,
                             precoders, optimize=True)
            ri = dl_power * np.sum(np.abs(leak) ** 2, axis=(1, 2))
    else:
        ri = dl_power * np.asarray(ri_power)
    terms = {"signal": signal, "err_oob": err_oob, "cross": cross,
             "ri": ri, "noise": np.full(u_n, noise_power)}
    return RateReport(per_ue=_rates_from_terms(terms), terms=terms)


def dl_rate(h_hat, eps, precoder, *, dl_power, noise_power, oob_betapsi_sum):
    """Downlink rates for one aggressor cell.

    h_hat is (K, M) estimates of the cell's own links, eps (K,) their
    modeled error levels, precoder (M, K) with column k serving UE k,
    oob_betapsi_sum the summed gain of other-cell UEs toward this BS.
    """
    h_hat = np.asarray(h_hat)
    w = np.asarray(precoder)
    k_n = h_hat.shape[0]
    dots = h_hat.conj() @ w  # (k', k) = h_hat_k'^H w_k
    gains = np.abs(dots) ** 2
    signal = dl_power * np.diag(gains)
    cross = dl_power * (np.sum(gains, axis=0) - np.diag(gains))
    wnorm2 = np.sum(np.abs(w) ** 2, axis=0)
    err_oob = dl_power * (np.sum(eps) + oob_betapsi_sum) * wnorm2
    terms = {"signal": signal, "err_oob": err_oob, "cross": cross,
             "noise": np.full(k_n, noise_power)}
    return RateReport(per_ue=_rates_from_terms(terms), terms=terms)
