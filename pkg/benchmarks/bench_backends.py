"""Time the compiled kernels against the pure NumPy reference.

Run from the repository root:

    python3 benchmarks/bench_backends.py

Each kernel is timed on sizes matching the full-scale configuration
(64 antennas, 50 sources) and the desk configuration (16 antennas,
2 sources). The compiled extension is skipped with a note when it is
not built.
"""

import timeit

import numpy as np

from ductsim import _refpath

try:
    from ductsim import _hotpath
except ImportError:
    _hotpath = None


def _steering_args(m, n_src, rng):
    return (rng.uniform(-0.5, 0.5, n_src), m, 0.5)


def _rootmusic_args(m, n_src, rng):
    a = _refpath.steering_matrix(rng.uniform(-0.5, 0.5, n_src), m, 0.5)
    q, _ = np.linalg.qr(np.hstack([
        a, (rng.standard_normal((m, m - n_src))
            + 1j * rng.standard_normal((m, m - n_src)))]))
    basis = q[:, n_src:]
    return (np.ascontiguousarray(basis @ basis.conj().T),)


def _lambda_args(m, n_src, rng):
    del n_src
    evals = np.sort(rng.uniform(0.1, 5.0, 7 * m))
    weights = rng.uniform(0.0, 1.0, 7 * m)
    return (evals, weights)


CASES = [
    ("steering_matrix", _steering_args),
    ("rootmusic_coeffs", _rootmusic_args),
    ("unit_power_lambda", _lambda_args),
]

SIZES = [("desk", 16, 2), ("full", 64, 50)]


def _time(fn, args, repeat=5, number=200):
    return min(timeit.repeat(lambda: fn(*args), repeat=repeat,
                             number=number)) / number


def main():
    rng = np.random.default_rng(7)
    print(f"{'kernel':<20} {'size':<6} {'python':>12} {'compiled':>12} "
          f"{'speedup':>9}")
    for name, make_args in CASES:
        for label, m, n_src in SIZES:
            args = make_args(m, n_src, rng)
            ref = getattr(_refpath, name)
            t_ref = _time(ref, args)
            if _hotpath is None:
                print(f"{name:<20} {label:<6} {t_ref * 1e6:>10.1f}us "
                      f"{'(not built)':>12} {'-':>9}")
                continue
            hot = getattr(_hotpath, name)
            out_ref = np.asarray(ref(*args))
            out_hot = np.asarray(hot(*args))
            if not np.allclose(out_ref, out_hot, rtol=1e-10, atol=1e-12):
                raise SystemExit(f"{name}: backend outputs disagree")
            t_hot = _time(hot, args)
            print(f"{name:<20} {label:<6} {t_ref * 1e6:>10.1f}us "
                  f"{t_hot * 1e6:>10.1f}us {t_ref / t_hot:>8.1f}x")


if __name__ == "__main__":
    main()
