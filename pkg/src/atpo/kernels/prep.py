"""Per-model sparse precomputation shared by both kernel backends.

A ModelOps bundles, for each action, CSR views of the transition kernel
(forward and transposed) and of the observation kernel (by next-state and
by observation symbol), plus the dense reward matrix. Both the compiled
and the numpy backends consume this one layout, so swapping backends never
changes what is computed.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class ModelOps:
    """Cached kernel handle for one POMDP; see atpo.kernels for the ops."""

    def __init__(self, transition, observation, reward, discount):
        transition = np.asarray(transition, dtype=np.float64)
        observation = np.asarray(observation, dtype=np.float64)
        self.reward = np.ascontiguousarray(reward, dtype=np.float64)
        self.discount = float(discount)
        self.num_actions, self.num_states, _ = transition.shape
        self.num_observations = observation.shape[2]
        self.t_fwd = [_csr32(transition[a]) for a in range(self.num_actions)]
        self.t_rev = [_csr32(transition[a].T) for a in range(self.num_actions)]
        self.o_by_state = [_csr32(observation[a]) for a in range(self.num_actions)]
        self.o_by_symbol = [_csr32(observation[a].T) for a in range(self.num_actions)]


def _csr32(dense):
    # int32 index arrays: the compiled kernels assume them
    m = sp.csr_matrix(np.asarray(dense, dtype=np.float64))
    m.indptr = m.indptr.astype(np.int32, copy=False)
    m.indices = m.indices.astype(np.int32, copy=False)
    return m


def for_model(pomdp):
    """ModelOps for a TabularPOMDP, cached on the model instance."""
    ops = getattr(pomdp, "_ops", None)
    if ops is None:
        ops = ModelOps(
            pomdp.base.transition, pomdp.observation, pomdp.base.reward, pomdp.base.discount
        )
        pomdp._ops = ops
    return ops
