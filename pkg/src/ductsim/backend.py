"""Kernel backend selection.

The hot kernels (steering-matrix assembly, root-MUSIC coefficient
folding, FP unit-power bisection) exist twice: a compiled Cython module
``ductsim._hotpath`` and a pure-NumPy module ``ductsim._refpath``. The
compiled one is used when it imported successfully; set DUCTSIM_PURE=1
to force the NumPy path.
"""

import os

from . import _refpath

_impl = _refpath
if not os.environ.get("DUCTSIM_PURE"):
    try:
        from . import _hotpath as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _refpath

steering_matrix = _impl.steering_matrix
rootmusic_coeffs = _impl.rootmusic_coeffs
unit_power_lambda = _impl.unit_power_lambda


def backend_name():
    """Name of the active kernel backend: "compiled" or "python"."""
    return _impl.BACKEND_NAME


def available_backends():
    """Importable kernel modules keyed by backend name."""
    out = {_refpath.BACKEND_NAME: _refpath}
    try:
        from . import _hotpath

        out[_hotpath.BACKEND_NAME] = _hotpath
    except ImportError:
        pass
    return out
