"""Aggressor-side precoders: MRT, LoS nulling, and the FP optimizer.

The FP optimizer maximizes the network utility (victim uplink rates
plus aggressor downlink rates, or downlink only) over the aggressors'
unit-power precoders by alternating closed-form auxiliary updates with
an exact per-aggressor precoder update. The precoder step solves, for
every served UE k of aggressor s,

    (R_s + |y_k|^2 Q_s + lambda_s I) w_k = y_k sqrt((1+gamma_k) p_dl) hhat_k

where Q_s collects the cell's estimate outer products plus the
isotropic error/leakage level, R_s is the duct penalty accumulated from
the victim-side auxiliaries, and lambda_s enforces unit total power
through a one-dimensional root search on the eigendecomposed forms.
Each step maximizes the concave surrogate exactly, so the utility is
non-decreasing along iterations.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rates
from .backend import steering_matrix, unit_power_lambda

LN2 = math.log(2.0)


def mrt_precoder(h_hat):
    """Columnwise matched precoder with unit total power.

    h_hat is (K, M); returns (M, K) with column k along h_hat[k] and
    sum_k ||w_k||^2 = 1.
    """
    h_hat = np.asarray(h_hat)
    k_n = h_hat.shape[0]
    cols = h_hat / np.linalg.norm(h_hat, axis=1, keepdims=True)
    return cols.T / np.sqrt(k_n)


def null_projector(aod, m, spacing_ratio):
    """Orthogonal projector onto the complement of the steering span of
    the given departure angle(s)."""
    a = steering_matrix(aod, m, spacing_ratio)
    q, _ = np.linalg.qr(a)
    return np.eye(m, dtype=np.complex128) - q @ q.conj().T


def null_precoder(aod, h_hat, spacing_ratio):
    """Matched precoding projected off the duct departure direction(s).

    aod is one angle or a set (radians); h_hat (K, M) the aggressor's
    own channel estimates. The matched columns are projected onto the
    orthogonal complement of the steering span and the result is scaled
    back to unit total power, so transmissions toward every given angle
    are exactly zero.
    """
    h_hat = np.asarray(h_hat)
    m = h_hat.shape[1]
    proj = null_projector(aod, m, spacing_ratio)
    w = proj @ mrt_precoder(h_hat)
    norm = np.linalg.norm(w)
    # the matched input has unit norm, so anything at rounding scale is
    # pure projection residue; normalizing it would emit a full-power
    # precoder pointing in a numerically arbitrary direction
    if norm < 1e-12:
        raise ValueError("null_precoder: all estimates lie in the nulled span")
    return w / norm


@dataclass(frozen=True)
class PrecoderSet:
    """Per-aggressor precoders (S, M, K) plus the method that built them."""

    precoders: np.ndarray
    method: str


@dataclass(frozen=True)
class FpProblem:
    """Frozen inputs of one FP optimization.

    Victim quantities are flattened over all victim UEs in cell-major
    order: v_hhat/v_comb (Nu, M) estimates and combiners, v_cell (Nu,)
    the owning cell, v_eps (Nu,) isotropic error levels, v_oob (R,) the
    out-of-cell large-scale sums, duct_gain (Nu, S, M) the realized
    duct channels projected on the combiners, duct_gain[u, s] =
    duct_h[cell(u), s]^H c_u. Aggressor quantities are per cell:
    a_hhat (S, K, M), a_eps (S, K), a_oob (S,).

    tx_steering (S, J, M) holds unit-modulus departure steering vectors
    — row j points toward victim cell j, or J = 1 for a single shared
    duct angle — and, with rician_k and duct_loss, feeds only the
    average-statistics penalty variant.
    """

    ul_power: float
    dl_power: float
    noise_power: float
    v_hhat: np.ndarray
    v_comb: np.ndarray
    v_cell: np.ndarray
    v_eps: np.ndarray
    v_oob: np.ndarray
    duct_gain: np.ndarray
    a_hhat: np.ndarray
    a_eps: np.ndarray
    a_oob: np.ndarray
    tx_steering: np.ndarray | None = None
    rician_k: float | None = None
    duct_loss: float | None = None

    @property
    def num_victim_cells(self):
        return self.v_oob.shape[0]

    @property
    def num_aggressors(self):
        return self.a_hhat.shape[0]


@dataclass
class FpState:
    """Auxiliary variables and the utility trace of one FP run."""

    gamma_u: np.ndarray
    y_u: np.ndarray
    gamma_k: np.ndarray
    y_k: np.ndarray
    lambda_s: np.ndarray | None = None
    objective_history: list = field(default_factory=list)


@dataclass(frozen=True)
class FpResult:
    """Final precoders, auxiliary state, and per-iteration traces."""

    precoders: np.ndarray
    state: FpState
    history: np.ndarray
    dl_history: np.ndarray | None
    iterations: int
    converged: bool


def _victim_ri(problem, precoders):
    """Unscaled duct leakage per victim UE: sum_s ||duct_gain^H w||^2."""
    leak = np.einsum("usm,smk->usk", problem.duct_gain.conj(), precoders,
                     optimize=True)
    return np.sum(np.abs(leak) ** 2, axis=(1, 2))


def _victim_reports(problem, precoders):
    """Per-victim-cell rate reports under the current precoders."""
    ri = _victim_ri(problem, precoders)
    out = []
    for r in range(problem.num_victim_cells):
        idx = problem.v_cell == r
        out.append(rates.ul_rate(
            problem.v_hhat[idx], problem.v_eps[idx], problem.v_comb[idx],
            ul_power=problem.ul_power, dl_power=problem.dl_power,
            noise_power=problem.noise_power,
            oob_betapsi_sum=problem.v_oob[r], ri_power=ri[idx]))
    return out


def _aggressor_reports(problem, precoders):
    return [rates.dl_rate(
        problem.a_hhat[s], problem.a_eps[s], precoders[s],
        dl_power=problem.dl_power, noise_power=problem.noise_power,
        oob_betapsi_sum=problem.a_oob[s])
        for s in range(problem.num_aggressors)]


def _signal_and_denom(report):
    t = report.terms
    denom = sum(v for k, v in t.items() if k != "signal")
    return t["signal"], denom


def fp_objective(problem, precoders, dl_only=False):
    """Network utility in bit/s/Hz: aggressor sum rate, plus the victim
    sum rate unless dl_only."""
    total = sum(rep.total for rep in _aggressor_reports(problem, precoders))
    if not dl_only:
        total += sum(rep.total for rep in _victim_reports(problem, precoders))
    return total


def dl_objective(problem, precoders):
    """Aggressor-side sum rate alone, bit/s/Hz."""
    return fp_objective(problem, precoders, dl_only=True)


def fp_update_auxiliaries(problem, precoders, dl_only=False):
    """Closed-form auxiliary update at fixed precoders.

    gamma variables take the current SINRs; y variables take the
    ratio-alignment values that make the quadratic-transform surrogate
    tight. With dl_only the victim variables are pinned to zero, which
    removes the duct penalty from the precoder step.
    """
    nu = problem.v_hhat.shape[0]
    if dl_only:
        gamma_u = np.zeros(nu)
        y_u = np.zeros(nu, dtype=np.complex128)
    else:
        a_u = np.empty(nu)
        b_u = np.empty(nu)
        for r, rep in enumerate(_victim_reports(problem, precoders)):
            idx = problem.v_cell == r
            sig, den = _signal_and_denom(rep)
            a_u[idx] = sig
            b_u[idx] = den
        s_u = np.einsum("um,um->u", problem.v_hhat.conj(), problem.v_comb)
        gamma_u = a_u / b_u
        y_u = np.sqrt((1.0 + gamma_u) * problem.ul_power) * s_u / (a_u + b_u)

    t_k = np.einsum("skm,smk->sk", problem.a_hhat.conj(), precoders)
    c_k = np.empty_like(problem.a_eps)
    d_k = np.empty_like(problem.a_eps)
    for s, rep in enumerate(_aggressor_reports(problem, precoders)):
        sig, den = _signal_and_denom(rep)
        c_k[s] = sig
        d_k[s] = den
    gamma_k = c_k / d_k
    y_k = np.sqrt((1.0 + gamma_k) * problem.dl_power) * t_k / (c_k + d_k)
    return FpState(gamma_u=gamma_u, y_u=y_u, gamma_k=gamma_k, y_k=y_k)


def fp_surrogate(problem, state, precoders, dl_only=False):
    """Quadratic-transform surrogate value, same bit/s/Hz scale as
    fp_objective. Equals the objective right after an auxiliary update
    and lower-bounds it elsewhere, which is what makes the alternating
    ascent monotone."""
    total = 0.0
    if not dl_only:
        s_u = np.einsum("um,um->u", problem.v_hhat.conj(), problem.v_comb)
        a_u = np.empty(s_u.shape[0])
        b_u = np.empty(s_u.shape[0])
        for r, rep in enumerate(_victim_reports(problem, precoders)):
            idx = problem.v_cell == r
            sig, den = _signal_and_denom(rep)
            a_u[idx] = sig
            b_u[idx] = den
        g, y = state.gamma_u, state.y_u
        total += np.sum(
            np.log1p(g) - g
            + 2.0 * np.real(np.conj(y) * np.sqrt((1.0 + g) * problem.ul_power) * s_u)
            - np.abs(y) ** 2 * (a_u + b_u))
    t_k = np.einsum("skm,smk->sk", problem.a_hhat.conj(), precoders)
    c_k = np.empty_like(problem.a_eps)
    d_k = np.empty_like(problem.a_eps)
    for s, rep in enumerate(_aggressor_reports(problem, precoders)):
        sig, den = _signal_and_denom(rep)
        c_k[s] = sig
        d_k[s] = den
    g, y = state.gamma_k, state.y_k
    total += np.sum(
        np.log1p(g) - g
        + 2.0 * np.real(np.conj(y) * np.sqrt((1.0 + g) * problem.dl_power) * t_k)
        - np.abs(y) ** 2 * (c_k + d_k))
    return float(total) / LN2


def _duct_penalty(problem, state, duct_term):
    """Per-aggressor duct penalty matrices R_s, (S, M, M).

    The default "realized" form is the exact quadratic of the utility's
    cross-system term — p_dl sum_u |y_u|^2 g_us g_us^H with the duct
    gains the victim combiners actually see — so the precoder step
    maximizes the true surrogate and the ascent never breaks. The
    "expected" form replaces it with average duct statistics: one
    departure-steering outer product per victim cell (weighted by that
    cell's sum of |y_u|^2 ||c_u||^2, or split evenly when a single
    shared angle is given) plus an isotropic diffuse term.
    """
    s_n = problem.num_aggressors
    m = problem.v_hhat.shape[1]
    w2 = np.abs(state.y_u) ** 2
    if duct_term == "realized":
        r_mats = problem.dl_power * np.einsum(
            "u,usm,usn->smn", w2, problem.duct_gain,
            problem.duct_gain.conj(), optimize=True)
    elif duct_term == "expected":
        if problem.tx_steering is None:
            raise ValueError("expected duct penalty needs tx_steering")
        k, ls = problem.rician_k, problem.duct_loss
        cnorm2 = np.sum(np.abs(problem.v_comb) ** 2, axis=1)
        cell_w = np.bincount(problem.v_cell, weights=w2 * cnorm2,
                             minlength=problem.num_victim_cells)
        n_ang = problem.tx_steering.shape[1]
        if n_ang == problem.num_victim_cells:
            ang_w = cell_w
        else:
            ang_w = np.full(n_ang, np.sum(cell_w) / n_ang)
        scale = problem.dl_power / m
        iso = scale * np.sum(cell_w) * ls * m / (k + 1.0) * np.eye(m)
        r_mats = np.empty((s_n, m, m), dtype=np.complex128)
        for s in range(s_n):
            q = problem.tx_steering[s]
            los = np.einsum("j,jm,jn->mn", ang_w, q, q.conj())
            r_mats[s] = scale * (k * ls / (k + 1.0)) * los + iso
    else:
        raise ValueError(f"unknown duct_term {duct_term!r}")
    return r_mats


def fp_update_precoder(problem, state, duct_term="realized", subspace=None):
    """Exact surrogate-maximizing precoder update under unit power.

    Returns (precoders, lambda_s). Per aggressor, the per-UE quadratic
    forms are eigendecomposed once and the power constraint is solved by
    a root search over the shared multiplier. subspace, when given, is a
    stack (S, M, M) of orthogonal projectors; aggressor s's beams are
    then optimized within range(subspace[s]). The restricted problem is
    solved in an orthonormal basis of that range — never by zero-padding
    the full space — so the multiplier search sees only strictly
    positive curvatures and can still return the negative multipliers
    the unit-power constraint sometimes needs.
    """
    s_n, k_n, m = problem.a_hhat.shape
    p = problem.dl_power
    r_mats = _duct_penalty(problem, state, duct_term)
    precoders = np.empty((s_n, m, k_n), dtype=np.complex128)
    lambdas = np.empty(s_n)
    for s in range(s_n):
        hh = problem.a_hhat[s]
        alpha = float(np.sum(problem.a_eps[s]) + problem.a_oob[s])
        q_mat = p * (np.einsum("km,kn->mn", hh, hh.conj()) + alpha * np.eye(m))
        r_mat = r_mats[s]
        b = (state.y_k[s] * np.sqrt((1.0 + state.gamma_k[s]) * p))[:, None] * hh
        basis = None
        if subspace is not None:
            d_p, u_p = np.linalg.eigh(subspace[s])
            basis = np.ascontiguousarray(u_p[:, d_p > 0.5])
            b = b @ basis.conj()
            q_mat = basis.conj().T @ q_mat @ basis
            r_mat = basis.conj().T @ r_mat @ basis
        dim = b.shape[1]
        evals = np.empty((k_n, dim))
        weights = np.empty((k_n, dim))
        vecs = np.empty((k_n, dim, dim), dtype=np.complex128)
        proj = np.empty((k_n, dim), dtype=np.complex128)
        for k in range(k_n):
            mat = r_mat + np.abs(state.y_k[s, k]) ** 2 * q_mat
            mat = 0.5 * (mat + mat.conj().T)
            d, u = np.linalg.eigh(mat)
            evals[k] = np.maximum(d, 0.0)
            vecs[k] = u
            proj[k] = u.conj().T @ b[k]
            weights[k] = np.abs(proj[k]) ** 2
        lam = unit_power_lambda(evals.ravel(), weights.ravel())
        lambdas[s] = lam
        for k in range(k_n):
            col = vecs[k] @ (proj[k] / (evals[k] + lam))
            precoders[s, :, k] = col if basis is None else basis @ col
    return precoders, lambdas


def fp_optimize(problem, w0, *, eta=1e-3, max_iters=100, dl_only=False,
                duct_term="realized", subspace=None, track_dl=False):
    """Alternate auxiliary and precoder updates until the utility gain
    falls below eta (relative) or max_iters is hit.

    subspace, when given, restricts every aggressor's beams to the
    range of its (M, M) projector; w0 must already satisfy it for the
    ascent guarantee to hold. The utility is evaluated after every
    precoder update and must never decrease by more than 1e-9; a
    violation raises AssertionError since it would mean a broken
    update, not a numerical wobble.
    """
    precoders = np.array(w0, dtype=np.complex128)
    history = [fp_objective(problem, precoders, dl_only)]
    dl_hist = [dl_objective(problem, precoders)] if track_dl else None
    state = None
    converged = False
    iterations = 0
    for _ in range(max_iters):
        state = fp_update_auxiliaries(problem, precoders, dl_only)
        precoders, lambdas = fp_update_precoder(problem, state, duct_term,
                                                subspace)
        state.lambda_s = lambdas
        current = fp_objective(problem, precoders, dl_only)
        previous = history[-1]
        if current < previous - 1e-9:
            raise AssertionError(
                f"FP utility decreased: {previous:.15g} -> {current:.15g} "
                f"at iteration {iterations + 1}")
        history.append(current)
        if track_dl:
            dl_hist.append(dl_objective(problem, precoders))
        iterations += 1
        if abs(current - previous) <= eta * abs(previous):
            converged = True
            break
    if state is not None:
        state.objective_history = list(history)
    return FpResult(
        precoders=precoders, state=state, history=np.array(history),
        dl_history=None if dl_hist is None else np.array(dl_hist),
        iterations=iterations, converged=converged)
