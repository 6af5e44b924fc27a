"""Pure-NumPy implementations of the hot kernels.

Same contracts as the compiled module ``ductsim._hotpath``; the active
implementation is chosen in ``ductsim.backend``.
"""

import numpy as np

BACKEND_NAME = "python"


def steering_matrix(angles, m, spacing_ratio):
    """ULA steering vectors for a batch of angles.

    Entry (i, n) is exp(j*2*pi*i*spacing_ratio*sin(angles[n])) for an
    m-element array with element spacing of spacing_ratio wavelengths.

    Parameters
    ----------
    angles : array_like
        Angles in radians, any shape; flattened to one batch axis.
    m : int
        Number of array elements.
    spacing_ratio : float
        Element spacing over wavelength.

    Returns
    -------
    ndarray, shape (m, n_angles), complex
    """
    angles = np.asarray(angles, dtype=np.float64).ravel()
    phase = 2.0 * np.pi * spacing_ratio * np.sin(angles)
    return np.exp(1j * np.outer(np.arange(m), phase))


def rootmusic_coeffs(proj):
    """Polynomial coefficients of the root-MUSIC function from Q_n Q_n^H.

    The function q(1/z)^T proj q(z) is a Laurent polynomial whose
    coefficient of z^k is the sum of the k-th diagonal of proj. Returns
    the 2m-1 coefficients in ascending power order, i.e. index j holds
    the sum of diagonal offset m-1-j, so that np.roots(coeffs[::-1])
    gives the roots of z^(m-1) * q(1/z)^T proj q(z).

    Parameters
    ----------
    proj : ndarray, shape (m, m)
        Noise-subspace projector (Hermitian).

    Returns
    -------
    ndarray, shape (2m-1,), complex
    """
    proj = np.asarray(proj)
    m = proj.shape[0]
    return np.array([np.trace(proj, offset=m - 1 - j) for j in range(2 * m - 1)])


def unit_power_lambda(evals, weights, target=1.0, tol=1e-11, max_doublings=200):
    """Solve sum_i weights[i] / (evals[i] + lam)^2 = target for lam.

    The left side is strictly decreasing in lam on (-min(evals), inf),
    so the root is unique. Used by the FP precoder update to meet the
    unit transmit-power constraint; evals are eigenvalues of the PSD
    per-user quadratic forms (flattened over users) and weights the
    squared projections of the right-hand sides.

    Parameters
    ----------
    evals : ndarray
        Nonnegative eigenvalues, flattened over users.
    weights : ndarray
        Nonnegative squared projections, same shape.
    target : float
        Power level to meet.
    tol : float
        Relative tolerance on |power - target|.
    max_doublings : int
        Bracket-expansion limit before giving up.

    Returns
    -------
    float
        The multiplier lam, possibly negative but > -min(evals).
    """
    evals = np.asarray(evals, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if np.all(weights <= 0.0):
        raise ValueError("unit_power_lambda: all weights are zero, no solution")

    def power(lam):
        d = evals + lam
        return float(np.sum(weights / (d * d)))

    d_min = float(np.min(evals))
    p0 = power(0.0) if d_min > 0.0 else np.inf
    if p0 > target:
        # root is positive: expand upper bracket by doubling
        lo, hi = 0.0, 1.0
        n = 0
        while power(hi) > target:
            hi *= 2.0
            n += 1
            if n > max_doublings:
                raise ValueError(
                    "unit_power_lambda: bracket expansion failed after "
                    f"{max_doublings} doublings (power {power(hi):.3e} "
                    f"> target {target:.3e})"
                )
    else:
        # root is in (-d_min, 0]: walk the lower bracket toward the pole
        hi = 0.0
        step = d_min * 0.5
        lo = -d_min + step
        n = 0
        while power(lo) < target:
            step *= 0.5
            new_lo = -d_min + step
            n += 1
            # a step that underflows onto the pole means the power stays
            # bounded below the target there (only zero-weight modes sit
            # at the smallest eigenvalue), so no multiplier exists
            if new_lo <= -d_min or new_lo == lo or n > max_doublings:
                raise ValueError(
                    "unit_power_lambda: no unit-power multiplier above the "
                    f"pole at {-d_min:.6e} (power {power(lo):.3e} < target "
                    f"{target:.3e})"
                )
            lo = new_lo
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        p = power(mid)
        if abs(p - target) <= tol * target:
            return float(mid)
        if p > target:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    # written so a non-finite power also fails rather than slipping out
    if not abs(power(mid) - target) <= 1e-8 * target:
        raise ValueError(
            "unit_power_lambda: bisection stalled at power "
            f"{power(mid):.12e} vs target {target:.12e}"
        )
    return float(mid)
