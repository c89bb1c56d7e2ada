"""Variable-selection Bayesian optimization (C++ core)."""

from ._vsbo import *  # noqa: F401,F403
from ._vsbo import __version__

import numpy as _np


def make_config(**kwargs):
    """RunConfig with the given fields set, e.g. make_config(method="vsbo", n_iter=50)."""
    cfg = RunConfig()
    method = kwargs.pop("method", None)
    if method is not None:
        cfg.method = method
    for key, value in kwargs.items():
        if not hasattr(cfg, key):
            raise AttributeError(f"RunConfig has no field {key!r}")
        setattr(cfg, key, value)
    return cfg


def maximize(objective, lo, hi, **config):
    """Maximizes `objective(x)` over the box [lo, hi]; returns the Trace."""
    lo = _np.asarray(lo, dtype=float)
    hi = _np.asarray(hi, dtype=float)
    return run(lambda x: float(objective(x)), lo, hi, make_config(**config))
