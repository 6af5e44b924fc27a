"""Link-level Monte Carlo simulator for remote interference between two
distant TDD cellular systems coupled by an atmospheric duct.

The package models pilot-phase channel estimation under cross-system
leakage, subspace angle measurement from guard-period snapshots, and
two far-system countermeasures: steering transmit power off the duct's
departure directions and reoptimizing the far precoders for the joint
network utility. `engine` drives trial/sweep/trace runs; `cli` wraps
them behind the `ductsim` command.
"""

__version__ = "0.1.0"

from .backend import available_backends, backend_name
from .config import (ConfigurationError, SystemConfig, load_config,
                     parse_config)
from .engine import (COMBINER_KINDS, METHODS, EngineError, run_fp_trace,
                     run_sweep, run_trial)

__all__ = [
    "COMBINER_KINDS",
    "ConfigurationError",
    "EngineError",
    "METHODS",
    "SystemConfig",
    "__version__",
    "available_backends",
    "backend_name",
    "load_config",
    "parse_config",
    "run_fp_trace",
    "run_sweep",
    "run_trial",
]
