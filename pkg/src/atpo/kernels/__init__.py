"""Hot-kernel backend selection.

The compiled Cython extension is preferred when it imported cleanly; the
numpy/scipy reference backend is used otherwise or when ATPO_PURE_PYTHON=1.
Both expose: belief_update, observation_probs, q_values, backup — all
taking a ModelOps handle from atpo.kernels.prep.
"""
import os

from . import pyref
from .prep import ModelOps, for_model

if os.environ.get("ATPO_PURE_PYTHON") == "1":
    _impl = pyref
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = pyref
        BACKEND = "python"

belief_update = _impl.belief_update
observation_probs = _impl.observation_probs
q_values = _impl.q_values
backup = _impl.backup

__all__ = [
    "BACKEND",
    "ModelOps",
    "backup",
    "belief_update",
    "for_model",
    "observation_probs",
    "pyref",
    "q_values",
]
