"""Uplink combiner behavior."""

import numpy as np
import pytest

from ductsim import combining
from ductsim.backend import steering_matrix
from ductsim.channels import complex_normal


def test_mrc_is_unit_norm_and_collinear():
    rng = np.random.default_rng(70)
    h_hat = complex_normal(rng, (3, 8))
    c = combining.mrc_combiner(h_hat)
    assert np.allclose(np.linalg.norm(c, axis=-1), 1.0, atol=1e-12)
    for u in range(3):
        cos = abs(np.vdot(c[u], h_hat[u])) / np.linalg.norm(h_hat[u])
        assert cos == pytest.approx(1.0, abs=1e-12)


def _cosine(a, b):
    return abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def test_mmse_aware_single_ue_no_interference_matches_mrc():
    rng = np.random.default_rng(71)
    m = 8
    h_hat = complex_normal(rng, (1, m), scale=1e-6)
    err_cov = np.zeros((1, m, m), dtype=np.complex128)
    c = combining.mmse_combiner_aware(
        h_hat, err_cov, ul_power=0.025, noise_power=1e-14,
        oob_betapsi_sum=0.0)
    # rank-one signal plus scaled identity: inverse keeps the direction
    assert _cosine(c[0], h_hat[0]) == pytest.approx(1.0, abs=1e-10)


def test_mmse_aware_dominates_mrc_in_modeled_sinr():
    rng = np.random.default_rng(72)
    m, u_n, draws = 8, 3, 200
    stats = dict(ul_power=0.025, dl_power=10.0, noise_power=1e-14,
                 oob_betapsi_sum=4e-12)
    wins = 0
    total = 0
    for d in range(draws):
        h_hat = complex_normal(rng, (u_n, m), scale=np.sqrt(5e-12))
        eps = rng.uniform(0.0, 2e-13, size=u_n)
        err_cov = eps[:, None, None] * np.eye(m)
        c_mmse = combining.mmse_combiner_aware(
            h_hat, err_cov, ul_power=stats["ul_power"],
            noise_power=stats["noise_power"],
            oob_betapsi_sum=stats["oob_betapsi_sum"])
        c_mrc = combining.mrc_combiner(h_hat)
        sinr_mmse = _modeled_sinr(c_mmse, h_hat, eps, stats)
        sinr_mrc = _modeled_sinr(c_mrc, h_hat, eps, stats)
        wins += int(np.all(sinr_mmse >= sinr_mrc * (1.0 - 1e-9)))
        total += 1
    assert wins / total >= 0.99


def _modeled_sinr(combiners, h_hat, eps, stats):
    """SINR under the same covariance model the aware combiner assumes."""
    p = stats["ul_power"]
    u_n, m = h_hat.shape
    sinr = np.empty(u_n)
    for u in range(u_n):
        c = combiners[u]
        cn2 = np.real(np.vdot(c, c))
        signal = p * abs(np.vdot(c, h_hat[u])) ** 2
        others = sum(p * abs(np.vdot(c, h_hat[v])) ** 2
                     for v in range(u_n) if v != u)
        err = p * float(np.sum(eps)) * cn2
        oob = p * stats["oob_betapsi_sum"] * cn2
        noise = stats["noise_power"] * cn2
        sinr[u] = signal / (others + err + oob + noise)
    return sinr


def test_mmse_null_collinear_with_estimate():
    rng = np.random.default_rng(73)
    m, u_n = 8, 3
    h_hat = complex_normal(rng, (u_n, m), scale=np.sqrt(5e-12))
    c = combining.mmse_combiner_null(
        h_hat, np.full(u_n, 1e-13), ul_power=0.025, noise_power=1e-14,
        other_betapsi_sum=np.full(u_n, 4e-12), dl_power=10.0,
        duct_loss=3e-9, rician_k=1000.0, num_aggressors=2)
    # rank-one plus identity model: each combiner keeps its estimate's
    # direction exactly
    for u in range(u_n):
        assert _cosine(c[u], h_hat[u]) == pytest.approx(1.0, abs=1e-10)


def test_null_matches_aware_when_los_vanishes():
    # with an enormous Rician factor and no steering handed to the aware
    # form, both models reduce to rank-one signal plus isotropic terms
    rng = np.random.default_rng(74)
    m = 8
    h_hat = complex_normal(rng, (1, m), scale=np.sqrt(5e-12))
    eps = 1e-13
    shared = 4e-12
    k = 1e15
    aware = combining.mmse_combiner_aware(
        h_hat, eps * np.eye(m)[None], ul_power=0.025, noise_power=1e-14,
        oob_betapsi_sum=shared)
    null = combining.mmse_combiner_null(
        h_hat, np.array([eps]), ul_power=0.025, noise_power=1e-14,
        other_betapsi_sum=np.array([shared]), dl_power=10.0,
        duct_loss=3e-9, rician_k=k, num_aggressors=2)
    assert _cosine(aware[0], null[0]) > 0.999


def test_mmse_dispatch_routes_and_validates():
    rng = np.random.default_rng(75)
    m = 4
    h_hat = complex_normal(rng, (2, m))
    err_cov = 0.1 * np.tile(np.eye(m), (2, 1, 1))
    aware_kwargs = dict(ul_power=1.0, noise_power=0.1, oob_betapsi_sum=0.2)
    direct = combining.mmse_combiner_aware(h_hat, err_cov, **aware_kwargs)
    routed = combining.mmse_combiner(h_hat, err_cov, "aware", **aware_kwargs)
    assert np.array_equal(direct, routed)

    null_kwargs = dict(ul_power=1.0, noise_power=0.1,
                       other_betapsi_sum=np.array([0.2, 0.3]), dl_power=1.0,
                       duct_loss=0.0, rician_k=1.0, num_aggressors=0)
    eps = np.array([0.05, 0.02])
    direct = combining.mmse_combiner_null(h_hat, eps, **null_kwargs)
    routed = combining.mmse_combiner(h_hat, eps, "null", **null_kwargs)
    assert np.array_equal(direct, routed)

    with pytest.raises(ValueError, match="combiner regime"):
        combining.mmse_combiner(h_hat, eps, "mrc", **null_kwargs)


def test_mmse_aware_duct_terms_steer_away():
    # a dominant modeled arrival direction should be suppressed relative
    # to a combiner built without the duct terms
    rng = np.random.default_rng(76)
    m = 16
    q = steering_matrix(np.deg2rad([7.0]), m, 0.5).T  # (1, m)
    h_hat = complex_normal(rng, (1, m), scale=np.sqrt(5e-12))
    err_cov = np.zeros((1, m, m), dtype=np.complex128)
    base = dict(ul_power=0.025, noise_power=1e-14, oob_betapsi_sum=0.0)
    plain = combining.mmse_combiner_aware(h_hat, err_cov, **base)
    ducted = combining.mmse_combiner_aware(
        h_hat, err_cov, dl_power=10.0, rician_k=1000.0, duct_loss=3e-9,
        rx_steering=q, num_aggressors=1, **base)
    leak_plain = abs(np.vdot(q[0], plain[0])) / np.linalg.norm(plain[0])
    leak_ducted = abs(np.vdot(q[0], ducted[0])) / np.linalg.norm(ducted[0])
    assert leak_ducted < 0.1 * leak_plain
