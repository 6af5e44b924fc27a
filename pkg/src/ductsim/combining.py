"""Uplink receive combiners.

MRC normalizes the channel estimate. The MMSE combiner inverts the
modeled receive covariance; its "aware" form optionally includes the
duct terms (rank-one arrival steering plus isotropic scattered power)
and uses each estimate's full error covariance, while the "null" form
models only the target estimate's outer product plus isotropic
contributions from everything else, matching the post-nulling
statistics.
"""

import numpy as np


def mrc_combiner(h_hat):
    """Unit-norm combiners along each estimate; (..., M) -> (..., M)."""
    h_hat = np.asarray(h_hat)
    return h_hat / np.linalg.norm(h_hat, axis=-1, keepdims=True)


def mmse_combiner_aware(h_hat, err_cov, *, ul_power, noise_power,
                        oob_betapsi_sum, dl_power=None, rician_k=None,
                        duct_loss=None, rx_steering=None, num_aggressors=0):
    """Cell-wide MMSE combiners with full interference modeling.

    h_hat is (U, M) for the cell's own UEs, err_cov (U, M, M). The
    modeled covariance sums in-cell estimate outer products and error
    covariances, out-of-cell large-scale power oob_betapsi_sum, the duct
    terms when rx_steering (num_aggressors, M) is given, and noise.
    Returns (U, M) combiners sqrt(p_ul) Cov^{-1} h_hat_u.
    """
    h_hat = np.asarray(h_hat)
    u_n, m = h_hat.shape
    cov = ul_power * (
        np.einsum("um,un->mn", h_hat, h_hat.conj())
        + np.sum(np.asarray(err_cov), axis=0)
        + oob_betapsi_sum * np.eye(m)
    )
    if rx_steering is not None:
        q = np.asarray(rx_steering)
        cov = cov + dl_power * (rician_k * duct_loss / (rician_k + 1.0)) * \
            np.einsum("sm,sn->mn", q, q.conj())
        cov = cov + dl_power * num_aggressors * duct_loss / (rician_k + 1.0) * np.eye(m)
    cov = cov + noise_power * np.eye(m)
    return np.sqrt(ul_power) * np.linalg.solve(cov, h_hat.T).T


def mmse_combiner_null(h_hat, eps, *, ul_power, noise_power,
                       other_betapsi_sum, dl_power, duct_loss, rician_k,
                       num_aggressors):
    """Per-UE MMSE combiners under the post-nulling model.

    h_hat is (U, M), eps (U,) the isotropic error levels,
    other_betapsi_sum (U,) the summed large-scale gain of every other UE
    in the whole system toward this BS. The modeled covariance keeps the
    target's outer product and treats everything else isotropically,
    with the scattered duct residual num_aggressors * L / (K+1).
    Returns (U, M).
    """
    h_hat = np.asarray(h_hat)
    u_n, m = h_hat.shape
    nlos = dl_power * num_aggressors * duct_loss / (rician_k + 1.0)
    out = np.empty_like(h_hat)
    eye = np.eye(m)
    for u in range(u_n):
        scalar = ul_power * (eps[u] + other_betapsi_sum[u]) + nlos + noise_power
        cov = ul_power * np.outer(h_hat[u], h_hat[u].conj()) + scalar * eye
        out[u] = np.sqrt(ul_power) * np.linalg.solve(cov, h_hat[u])
    return out


def mmse_combiner(h_hat, err_cov_or_eps, regime, **stats):
    """Dispatch to the aware or null MMSE form by regime name."""
    if regime == "null":
        return mmse_combiner_null(h_hat, err_cov_or_eps, **stats)
    if regime == "aware":
        return mmse_combiner_aware(h_hat, err_cov_or_eps, **stats)
    raise ValueError(f"unknown combiner regime {regime!r}")
