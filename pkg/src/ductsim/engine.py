"""Monte Carlo driver: draws trials, runs the compared method pipelines
on shared realizations, and sweeps the UL transmit power.

Four pipelines are compared. "no_ri" zeroes the cross-system duct and
is the interference-free reference. "ignore_ri" runs
interference-blind estimation and combining on the contaminated
observations. "null" steers the far system's transmit power off its
estimated departure directions. "fp" additionally reoptimizes the far
precoders for the joint network utility, reading its statistics from a
nulled first estimation pass.

Common random numbers: every stochastic quantity of a trial (geometry,
channels, symbols, noise) is drawn once into a TrialDraws bundle and
every pipeline consumes the same bundle, so compared methods differ
only by processing. Streams are counter-derived from the base seed and
the (grid index, trial index) pair, which makes trials independent and
aggregation order-invariant.
"""

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import channels, combining, doa, estimation, precoding, rates
from . import scenario as scenario_mod
from .pilots import dft_pilots

METHODS = ("no_ri", "ignore_ri", "null", "fp")
COMBINER_KINDS = ("mrc", "mmse")


class EngineError(RuntimeError):
    """Pipeline failure annotated with the stage that raised it."""


@contextmanager
def _stage(name):
    # keep the innermost stage label; re-wrapping would bury it
    try:
        yield
    except EngineError:
        raise
    except Exception as exc:
        raise EngineError(f"stage {name}: {exc}") from exc


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


@dataclass(frozen=True)
class TrialDraws:
    """Every random quantity of one trial, drawn once and shared by all
    method pipelines.

    Shapes use R victim cells, S aggressor cells, U UEs per cell, M
    antennas, tau pilot symbols, P listening-window snapshots.
    ce_symbols / ce_noise are the aggressor DL symbols and victim-side
    noise during the victim's pilot phase, aggressor_ce_noise the far
    system's noise during its own (clean) pilot phase. gp_* feed the
    victim's arrival-angle measurement, reverse_gp_* the aggressors'
    departure-angle measurement on the reverse duct.
    """

    scenario: scenario_mod.Scenario
    pilot_book: np.ndarray
    ce_symbols: np.ndarray
    ce_noise: np.ndarray
    aggressor_ce_noise: np.ndarray
    gp_symbols: np.ndarray
    gp_noise: np.ndarray
    reverse_gp_symbols: np.ndarray
    reverse_gp_noise: np.ndarray


def make_trial_draws(config, seed):
    """Realize one trial's randomness in a fixed draw order.

    Order: geometry, channel realizations, CE symbols, victim CE noise,
    aggressor CE noise, forward listening symbols and noise, reverse
    listening symbols and noise. Everything is drawn unconditionally so
    identical seeds give identical bundles regardless of which methods
    later consume them.
    """
    cfg = config
    rng = np.random.default_rng(seed)
    with _stage("scenario"):
        scn = scenario_mod.build_scenario(cfg, rng)
        scn = scenario_mod.realize_channels(scn, rng)
    with _stage("draws"):
        r_n, s_n, u_n = cfg.num_victim_bs, cfg.num_aggressor_bs, cfg.ues_per_cell
        m, tau, p = cfg.antennas_per_bs, cfg.pilot_len, cfg.num_gp_snapshots
        nstd = np.sqrt(cfg.noise_power)
        ce_symbols = channels.complex_normal(rng, (s_n, u_n, tau))
        ce_noise = channels.complex_normal(rng, (r_n, m, tau), scale=nstd)
        aggressor_ce_noise = channels.complex_normal(rng, (s_n, m, tau), scale=nstd)
        gp_symbols = channels.complex_normal(rng, (s_n, u_n, p))
        gp_noise = channels.complex_normal(rng, (r_n, m, p), scale=nstd)
        reverse_gp_symbols = channels.complex_normal(rng, (r_n, u_n, p))
        reverse_gp_noise = channels.complex_normal(rng, (s_n, m, p), scale=nstd)
    return TrialDraws(
        scenario=scn, pilot_book=dft_pilots(tau),
        ce_symbols=ce_symbols, ce_noise=ce_noise,
        aggressor_ce_noise=aggressor_ce_noise,
        gp_symbols=gp_symbols, gp_noise=gp_noise,
        reverse_gp_symbols=reverse_gp_symbols,
        reverse_gp_noise=reverse_gp_noise)


@dataclass(frozen=True)
class TrialContext:
    """Method-independent products of one draws bundle.

    Covers the far system's own clean channel estimation, the
    large-scale interference sums both systems need for combining and
    rates, the matched far precoders in force before any mitigation,
    the angle measurements, and the null precoders built from them.
    Angle arrays are radians; *_err_deg are absolute errors in degrees
    against the matched true angles (zero when angles were bypassed).
    """

    draws: TrialDraws
    a_hhat: np.ndarray
    a_eps: np.ndarray
    a_oob: np.ndarray
    v_oob: np.ndarray
    v_other: np.ndarray
    w_mrt: np.ndarray
    w_null: np.ndarray
    aoa_rad: np.ndarray
    aoa_err_deg: np.ndarray
    aod_rad: np.ndarray
    aod_err_deg: np.ndarray


def _matched_outputs(y, pilot_idx, pilot_book, ul_power):
    # (B, M, tau) x (B, U, tau) -> (B, U, M) matched-filter outputs
    seq = pilot_book[pilot_idx]
    return np.einsum("bmt,but->bum", y, seq.conj(), optimize=True) / np.sqrt(ul_power)


def _lmmse_pass(y, pilot_idx, betapsi, cfg, pilot_book, regime, num_aggressors):
    """Per-UE LMMSE over one system's matched outputs.

    y is (B, M, tau) with B serving BSs, pilot_idx (B, U), betapsi
    (B, C, U) the large-scale gains toward each BS (C = B cells).
    Returns estimates (B, U, M), isotropic error levels (B, U), and
    error covariances (B, U, M, M).
    """
    b_n, u_n = pilot_idx.shape
    m = y.shape[1]
    y_mf = _matched_outputs(y, pilot_idx, pilot_book, cfg.ul_power)
    h_hat = np.empty((b_n, u_n, m), dtype=np.complex128)
    eps = np.empty((b_n, u_n))
    err_cov = np.empty((b_n, u_n, m, m), dtype=np.complex128)
    for b in range(b_n):
        for u in range(u_n):
            copilot = float(np.sum(betapsi[b][pilot_idx == pilot_idx[b, u]]))
            model = estimation.CeModel(
                betapsi=float(betapsi[b, b, u]),
                copilot_betapsi_sum=copilot,
                pilot_len=cfg.pilot_len,
                ul_power=cfg.ul_power,
                dl_power=cfg.dl_power,
                noise_power=cfg.noise_power,
                rician_k=cfg.rician_k,
                duct_loss=cfg.duct_loss,
                num_aggressors=num_aggressors,
                m=m,
                ues_per_aggressor=u_n,
                paper_literal_null_scalar=cfg.paper_literal_null_scalar)
            est = estimation.lmmse_estimate(y_mf[b, u], model, regime)
            h_hat[b, u] = est.h_hat
            eps[b, u] = est.eps
            err_cov[b, u] = est.err_cov
    return h_hat, eps, err_cov


def _victim_ce(draws, precoders, regime):
    """Victim-side channel estimation under the given far precoders.

    precoders None models a duct-free system; otherwise the far DL
    leaks into the pilot phase through the realized duct. Returns
    (h_hat (R, U, M), eps (R, U), err_cov (R, U, M, M)).
    """
    scn = draws.scenario
    cfg = scn.config
    with _stage("channel estimation"):
        y = estimation.ce_observation(
            scn.victim_h, scn.victim_pilots, draws.pilot_book,
            cfg.ul_power, draws.ce_noise,
            duct_h=None if precoders is None else scn.duct_h,
            precoders=precoders, symbols=draws.ce_symbols,
            dl_power=cfg.dl_power)
        return _lmmse_pass(y, scn.victim_pilots, scn.victim_betapsi, cfg,
                           draws.pilot_book, regime, cfg.num_aggressor_bs)


def _aggressor_ce(draws):
    """The far system's clean estimation of its own serving links."""
    scn = draws.scenario
    cfg = scn.config
    with _stage("far-system estimation"):
        y = estimation.ce_observation(
            scn.aggressor_h, scn.aggressor_pilots, draws.pilot_book,
            cfg.ul_power, draws.aggressor_ce_noise)
        h_hat, eps, _ = _lmmse_pass(y, scn.aggressor_pilots,
                                    scn.aggressor_betapsi, cfg,
                                    draws.pilot_book, "ignore", 0)
    return h_hat, eps


def _oob_sums(betapsi):
    """Out-of-cell large-scale sum per BS: total gain toward BS b of
    every UE not served by b. betapsi is (B, C, U) with C = B."""
    total = np.sum(betapsi, axis=(1, 2))
    own = np.einsum("bbu->b", betapsi)
    return total - own


def _other_sums(betapsi):
    """Per served UE, the summed gain toward its BS of every other UE
    in the system: (B, U)."""
    total = np.sum(betapsi, axis=(1, 2))
    own = np.einsum("bbu->bu", betapsi)
    return total[:, None] - own


def _measure_angles(draws, w_mrt, true_angles):
    """Arrival angles at each victim BS and departure angles at each
    aggressor, via subspace rooting on the listening-window snapshots,
    or copied from the scenario when bypassed.

    Returns (aoa_rad (R, n), aoa_err_deg, aod_rad (S, n_rev),
    aod_err_deg) with n the per-receiver source count.
    """
    scn = draws.scenario
    cfg = scn.config
    r_n, s_n = cfg.num_victim_bs, cfg.num_aggressor_bs
    n_fwd = 1 if cfg.single_duct_angle else s_n
    n_rev = 1 if cfg.single_duct_angle else r_n
    true_aoa = np.sort(scn.duct_aoa[:, :n_fwd] if cfg.single_duct_angle
                       else scn.duct_aoa, axis=1)
    true_aod = np.sort(scn.duct_aod[:n_rev, :].T if cfg.single_duct_angle
                       else scn.duct_aod.T, axis=1)
    if true_angles:
        zeros_f = np.zeros_like(true_aoa)
        return true_aoa, zeros_f, true_aod, np.zeros_like(true_aod)

    aoa = np.empty((r_n, n_fwd))
    for r in range(r_n):
        samples = doa.assemble_gp_samples(
            scn.duct_h[r], w_mrt, cfg.dl_power, draws.gp_symbols,
            draws.gp_noise[r])
        aoa[r] = doa.estimate_aoa(samples, n_fwd,
                                  cfg.antenna_spacing_ratio).angles

    reverse = scn.reverse_duct()
    probe = np.stack([precoding.mrt_precoder(scn.victim_h[r, r])
                      for r in range(r_n)])
    aod = np.empty((s_n, n_rev))
    for s in range(s_n):
        samples = doa.assemble_gp_samples(
            reverse[s], probe, cfg.dl_power, draws.reverse_gp_symbols,
            draws.reverse_gp_noise[s])
        aod[s] = doa.estimate_aoa(samples, n_rev,
                                  cfg.antenna_spacing_ratio).angles

    aoa_err = np.rad2deg(np.abs(aoa - true_aoa))
    aod_err = np.rad2deg(np.abs(aod - true_aod))
    return aoa, aoa_err, aod, aod_err


def prepare_context(draws, true_angles=False):
    """Method-independent processing shared by all pipelines of one
    trial: far-system estimation, interference sums, matched far
    precoders, angle measurement, null precoders."""
    scn = draws.scenario
    cfg = scn.config
    a_hhat, a_eps = _aggressor_ce(draws)
    with _stage("interference accounting"):
        a_oob = _oob_sums(scn.aggressor_betapsi)
        v_oob = _oob_sums(scn.victim_betapsi)
        v_other = _other_sums(scn.victim_betapsi)
    with _stage("matched precoding"):
        w_mrt = np.stack([precoding.mrt_precoder(a_hhat[s])
                          for s in range(cfg.num_aggressor_bs)])
    with _stage("angle measurement"):
        aoa, aoa_err, aod, aod_err = _measure_angles(draws, w_mrt, true_angles)
    with _stage("null precoding"):
        w_null = np.stack([
            precoding.null_precoder(aod[s], a_hhat[s],
                                    cfg.antenna_spacing_ratio)
            for s in range(cfg.num_aggressor_bs)])
    return TrialContext(
        draws=draws, a_hhat=a_hhat, a_eps=a_eps, a_oob=a_oob,
        v_oob=v_oob, v_other=v_other, w_mrt=w_mrt, w_null=w_null,
        aoa_rad=aoa, aoa_err_deg=aoa_err, aod_rad=aod, aod_err_deg=aod_err)


def _victim_combiner(kind, regime, h_hat, eps, err_cov, ctx, r):
    """One cell's receive combiners for the requested kind under the
    method's estimation regime."""
    cfg = ctx.draws.scenario.config
    if kind == "mrc":
        return combining.mrc_combiner(h_hat)
    if kind != "mmse":
        raise ValueError(f"unknown combiner kind {kind!r}")
    if regime == "null":
        return combining.mmse_combiner_null(
            h_hat, eps,
            ul_power=cfg.ul_power, noise_power=cfg.noise_power,
            other_betapsi_sum=ctx.v_other[r], dl_power=cfg.dl_power,
            duct_loss=cfg.duct_loss, rician_k=cfg.rician_k,
            num_aggressors=cfg.num_aggressor_bs)
    return combining.mmse_combiner_aware(
        h_hat, err_cov,
        ul_power=cfg.ul_power, noise_power=cfg.noise_power,
        oob_betapsi_sum=ctx.v_oob[r])


@dataclass(frozen=True)
class TrialResult:
    """One (trial, method) outcome.

    nmse is (R, U) over victim serving links; ul_rates maps combiner
    kind to (R, U) bit/s/Hz; dl_rates is (S, U) for the far system.
    Angle fields echo the trial's measurements (degrees). fp_* are None
    or 0 outside the fp pipeline. config echoes every resolved setting
    and seed whatever drove the draws.
    """

    method: str
    config: object
    seed: object
    nmse: np.ndarray
    ul_rates: dict
    dl_rates: np.ndarray
    aoa_deg: np.ndarray
    aoa_err_deg: np.ndarray
    aod_deg: np.ndarray
    aod_err_deg: np.ndarray
    fp_history: np.ndarray | None = None
    fp_iterations: int = 0
    fp_converged: bool | None = None


def _check_finite(stage, **named):
    for name, arr in named.items():
        arr = np.asarray(arr)
        flat = arr.view(np.float64) if np.iscomplexobj(arr) else arr
        if not np.all(np.isfinite(flat)):
            raise EngineError(f"stage {stage}: non-finite values in {name}")


def _fp_problem(ctx):
    """Assemble the joint-utility problem from a first estimation pass
    under the null precoders, with the per-UE combiners the optimizer
    holds fixed."""
    scn = ctx.draws.scenario
    cfg = scn.config
    r_n, u_n = cfg.num_victim_bs, cfg.ues_per_cell
    m = cfg.antennas_per_bs
    v_hhat, v_eps, _ = _victim_ce(ctx.draws, ctx.w_null, "null")
    with _stage("fp assembly"):
        comb = np.stack([
            _victim_combiner("mmse", "null", v_hhat[r], v_eps[r], None, ctx, r)
            for r in range(r_n)])
        duct_gain = np.einsum("rsmn,rum->rusn", scn.duct_h.conj(), comb,
                              optimize=True)
        # The measured departure angles come out sorted; reindex them by
        # the victim cell each one points toward so the per-pair penalty
        # weights pair up (single-angle configs keep the one shared row).
        s_n = cfg.num_aggressor_bs
        n_ang = ctx.aod_rad.shape[1]
        tx_q = np.empty((s_n, n_ang, m), dtype=np.complex128)
        for s in range(s_n):
            vecs = channels.steering_matrix(ctx.aod_rad[s], m,
                                            cfg.antenna_spacing_ratio).T
            if n_ang == r_n:
                rank = np.argsort(np.argsort(scn.duct_aod[:, s],
                                             kind="stable"))
                vecs = vecs[rank]
            tx_q[s] = vecs
        problem = precoding.FpProblem(
            ul_power=cfg.ul_power, dl_power=cfg.dl_power,
            noise_power=cfg.noise_power,
            v_hhat=v_hhat.reshape(r_n * u_n, m),
            v_comb=comb.reshape(r_n * u_n, m),
            v_cell=np.repeat(np.arange(r_n), u_n),
            v_eps=v_eps.ravel(),
            v_oob=ctx.v_oob,
            duct_gain=duct_gain.reshape(r_n * u_n, cfg.num_aggressor_bs, m),
            a_hhat=ctx.a_hhat, a_eps=ctx.a_eps, a_oob=ctx.a_oob,
            tx_steering=tx_q,
            rician_k=cfg.rician_k, duct_loss=cfg.duct_loss)
    return problem


def _fp_subspace(ctx):
    """Per-aggressor projectors off the measured departure directions.

    The optimizer keeps the far precoders inside the same nulled span
    the first estimation pass assumed — the victim's error statistics
    are only valid if the dominant duct path stays blocked — and climbs
    the utility within it, so the joint design can only reduce the
    diffuse leakage further, never reopen the main one.
    """
    cfg = ctx.draws.scenario.config
    m = cfg.antennas_per_bs
    return np.stack([
        precoding.null_projector(ctx.aod_rad[s], m,
                                 cfg.antenna_spacing_ratio)
        for s in range(cfg.num_aggressor_bs)])


def _method_result(ctx, method, combiners, seed=None):
    """Run one pipeline on a prepared context."""
    draws = ctx.draws
    scn = draws.scenario
    cfg = scn.config
    r_n, s_n = cfg.num_victim_bs, cfg.num_aggressor_bs

    fp_history = None
    fp_iterations = 0
    fp_converged = None
    if method == "no_ri":
        w_far, regime, ce_precoders, duct_in_rates = ctx.w_mrt, "ignore", None, False
    elif method == "ignore_ri":
        w_far, regime, ce_precoders, duct_in_rates = ctx.w_mrt, "ignore", ctx.w_mrt, True
    elif method == "null":
        w_far, regime, ce_precoders, duct_in_rates = ctx.w_null, "null", ctx.w_null, True
    elif method == "fp":
        problem = _fp_problem(ctx)
        # start from the null precoders and stay in their span: a
        # matched start leaves the victim SINRs at zero, which freezes
        # the victim auxiliaries and strands the ascent in a DL-only
        # basin, and leaving the span would reopen the dominant duct
        # path the victim-side error statistics assume blocked
        with _stage("fp optimization"):
            result = precoding.fp_optimize(
                problem, ctx.w_null, eta=cfg.fp_tolerance,
                max_iters=cfg.fp_max_iters, subspace=_fp_subspace(ctx))
        w_far, regime, ce_precoders, duct_in_rates = \
            result.precoders, "null", result.precoders, True
        fp_history = result.history
        fp_iterations = result.iterations
        fp_converged = result.converged
    else:
        raise EngineError(f"unknown method {method!r}")

    h_hat, eps, err_cov = _victim_ce(draws, ce_precoders, regime)
    own = np.arange(r_n)
    nm = estimation.nmse(scn.victim_h[own, own], h_hat)

    ul = {}
    with _stage("combining and rates"):
        for kind in combiners:
            per_cell = np.empty_like(nm)
            for r in range(r_n):
                c = _victim_combiner(kind, regime, h_hat[r], eps[r],
                                     err_cov[r], ctx, r)
                report = rates.ul_rate(
                    h_hat[r], eps[r], c,
                    ul_power=cfg.ul_power, dl_power=cfg.dl_power,
                    noise_power=cfg.noise_power,
                    oob_betapsi_sum=ctx.v_oob[r],
                    duct_h=scn.duct_h[r] if duct_in_rates else None,
                    precoders=w_far if duct_in_rates else None)
                per_cell[r] = report.per_ue
            ul[kind] = per_cell
        dl = np.stack([
            rates.dl_rate(ctx.a_hhat[s], ctx.a_eps[s], w_far[s],
                          dl_power=cfg.dl_power,
                          noise_power=cfg.noise_power,
                          oob_betapsi_sum=ctx.a_oob[s]).per_ue
            for s in range(s_n)])

    _check_finite("finalize", nmse=nm, dl_rates=dl,
                  **{f"ul_rates[{k}]": v for k, v in ul.items()})
    return TrialResult(
        method=method, config=cfg, seed=seed, nmse=nm, ul_rates=ul,
        dl_rates=dl,
        aoa_deg=np.rad2deg(ctx.aoa_rad), aoa_err_deg=ctx.aoa_err_deg,
        aod_deg=np.rad2deg(ctx.aod_rad), aod_err_deg=ctx.aod_err_deg,
        fp_history=fp_history, fp_iterations=fp_iterations,
        fp_converged=fp_converged)


def run_trial(config, method, seed, *, combiners=("mmse",),
              true_angles=False):
    """Execute one pipeline end to end for one trial.

    Deterministic in (config, method, seed). seed is anything
    numpy.random.default_rng accepts.
    """
    config.validate()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    for kind in combiners:
        if kind not in COMBINER_KINDS:
            raise ValueError(f"unknown combiner kind {kind!r}")
    draws = make_trial_draws(config, seed)
    ctx = prepare_context(draws, true_angles)
    return _method_result(ctx, method, combiners, seed=seed)


def trial_seed(base_seed, grid_index, trial_index):
    """Counter-derived stream for one (grid point, trial) cell."""
    return np.random.SeedSequence(entropy=base_seed,
                                  spawn_key=(grid_index, trial_index))


@dataclass(frozen=True)
class SweepResult:
    """Per-trial summaries of a power sweep.

    nmse[(method, ip)], ul[(method, kind, ip)] and dl[(method, ip)]
    hold the (trials,) per-trial means (over UEs) at grid point ip.
    """

    config: object
    methods: tuple
    combiners: tuple
    p_dbm: tuple
    trials: int
    nmse: dict
    ul: dict
    dl: dict

    def mean_ci(self, values):
        """Sample mean and 95% normal CI of a per-trial summary."""
        values = np.asarray(values, dtype=np.float64)
        mean = float(np.mean(values))
        if values.size < 2:
            return mean, mean, mean
        half = 1.96 * float(np.std(values, ddof=1)) / np.sqrt(values.size)
        return mean, mean - half, mean + half


def run_sweep(config, methods, p_dbm_grid, trials, *, combiners=("mmse",),
              true_angles=False):
    """Sweep the UL transmit power with common random numbers across
    methods at every (grid point, trial).

    p_dbm_grid values are dBm; each overrides the config's ul_power.
    Aggregates accumulate in fixed trial order so results do not depend
    on scheduling.
    """
    config.validate()
    methods = tuple(methods)
    combiners = tuple(combiners)
    p_dbm_grid = tuple(float(p) for p in p_dbm_grid)
    if not p_dbm_grid:
        raise ValueError("empty power grid")
    if not methods:
        raise ValueError("no methods selected")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    for kind in combiners:
        if kind not in COMBINER_KINDS:
            raise ValueError(f"unknown combiner kind {kind!r}")

    nmse = {(mth, ip): np.empty(trials)
            for mth in methods for ip in range(len(p_dbm_grid))}
    ul = {(mth, kind, ip): np.empty(trials)
          for mth in methods for kind in combiners
          for ip in range(len(p_dbm_grid))}
    dl = {(mth, ip): np.empty(trials)
          for mth in methods for ip in range(len(p_dbm_grid))}

    for ip, dbm in enumerate(p_dbm_grid):
        cfg_p = config.replace(ul_power=dbm_to_watts(dbm))
        for t in range(trials):
            draws = make_trial_draws(cfg_p, trial_seed(config.rng_seed, ip, t))
            ctx = prepare_context(draws, true_angles)
            for mth in methods:
                res = _method_result(ctx, mth, combiners, seed=(ip, t))
                nmse[(mth, ip)][t] = float(np.mean(res.nmse))
                dl[(mth, ip)][t] = float(np.mean(res.dl_rates))
                for kind in combiners:
                    ul[(mth, kind, ip)][t] = float(np.mean(res.ul_rates[kind]))

    return SweepResult(config=config, methods=methods, combiners=combiners,
                       p_dbm=p_dbm_grid, trials=trials, nmse=nmse, ul=ul,
                       dl=dl)


@dataclass(frozen=True)
class FpTraceResult:
    """Iteration traces of the joint and DL-only optimizations.

    Arrays are (T,) with T the longest run, shorter runs padded with
    their final value; objective is the joint network utility,
    dl_ar_* the far system's mean per-cell sum rate. final_* and
    spread_* summarize each run's settling: spread is the relative
    range of the last five recorded iterations and converged_* flags
    runs whose spread fell below 1%.
    """

    iterations: np.ndarray
    objective: np.ndarray
    dl_ar_joint: np.ndarray
    dl_ar_dlonly: np.ndarray
    final_joint: np.ndarray
    final_dlonly: np.ndarray
    spread_joint: np.ndarray
    spread_dlonly: np.ndarray
    converged_joint: np.ndarray
    converged_dlonly: np.ndarray


def _pad_to(trace, length):
    out = np.empty(length)
    out[:trace.size] = trace
    out[trace.size:] = trace[-1]
    return out


def _tail_spread(trace):
    tail = trace[-5:]
    scale = abs(tail[-1])
    if scale == 0.0:
        return float(np.max(tail) - np.min(tail))
    return float((np.max(tail) - np.min(tail)) / scale)


def run_fp_trace(config, runs, *, true_angles=False):
    """Record the optimizer's per-iteration behavior on `runs` seeded
    trials, optimizing the same assembled problem once jointly and once
    DL-only.

    The joint run starts from the nulled precoders and keeps every
    aggressor inside its measured-angle null span — the victim-side
    protection the joint objective is accounting for. The DL-only run
    models an aggressor that ignores the far system entirely, so it
    starts from plain matched precoding with no restriction. Both run
    to the configured iteration cap instead of stopping at the
    relative-gain tolerance, so the recorded traces extend past the
    knee and their tails measure settling rather than the stopping
    rule.
    """
    config.validate()
    if runs < 1:
        raise ValueError("runs must be positive")
    obj_traces, joint_traces, dlonly_traces = [], [], []
    final_j, final_d, spread_j, spread_d = [], [], [], []
    s_n = config.num_aggressor_bs
    for run in range(runs):
        seed = np.random.SeedSequence(entropy=config.rng_seed,
                                      spawn_key=(run,))
        draws = make_trial_draws(config, seed)
        ctx = prepare_context(draws, true_angles)
        problem = _fp_problem(ctx)
        with _stage("fp optimization"):
            span = _fp_subspace(ctx)
            joint = precoding.fp_optimize(
                problem, ctx.w_null, eta=0.0,
                max_iters=config.fp_max_iters, subspace=span, track_dl=True)
            dlonly = precoding.fp_optimize(
                problem, ctx.w_mrt, eta=0.0,
                max_iters=config.fp_max_iters, dl_only=True)
        obj_traces.append(joint.history)
        joint_traces.append(joint.dl_history / s_n)
        dlonly_traces.append(dlonly.history / s_n)
        final_j.append(joint_traces[-1][-1])
        final_d.append(dlonly_traces[-1][-1])
        spread_j.append(_tail_spread(joint_traces[-1]))
        spread_d.append(_tail_spread(dlonly_traces[-1]))

    length = max(tr.size for tr in obj_traces + dlonly_traces)
    objective = np.mean([_pad_to(tr, length) for tr in obj_traces], axis=0)
    dl_joint = np.mean([_pad_to(tr, length) for tr in joint_traces], axis=0)
    dl_only = np.mean([_pad_to(tr, length) for tr in dlonly_traces], axis=0)
    spread_j = np.array(spread_j)
    spread_d = np.array(spread_d)
    return FpTraceResult(
        iterations=np.arange(length), objective=objective,
        dl_ar_joint=dl_joint, dl_ar_dlonly=dl_only,
        final_joint=np.array(final_j), final_dlonly=np.array(final_d),
        spread_joint=spread_j, spread_dlonly=spread_d,
        converged_joint=spread_j < 0.01, converged_dlonly=spread_d < 0.01)
