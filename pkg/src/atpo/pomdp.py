"""Partially observable models, exact belief filtering, and belief-space
value/Q queries against alpha-vector value functions.

A zero pre-normalization mass (the observation is impossible under the
model) is a first-class result of `belief_update`, not an error: the task
posterior update uses it to rule tasks out.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mdp import ROW_SUM_TOL, ModelError, TabularMDP


@dataclass
class TabularPOMDP:
    """A TabularMDP plus an observation alphabet and per-action kernels.

    observation: (A, X, Z) array, observation[a, y, z] = P(z | y, a) for the
    state y *entered* after taking a; initial_belief: (X,) probability vector.
    """

    base: TabularMDP
    observation: np.ndarray
    initial_belief: np.ndarray

    def __post_init__(self):
        self.observation = np.asarray(self.observation, dtype=np.float64)
        self.initial_belief = np.asarray(self.initial_belief, dtype=np.float64)
        X, A = self.base.num_states, self.base.num_actions
        if self.observation.ndim != 3 or self.observation.shape[:2] != (A, X):
            raise ModelError("observation kernel must have shape (A, X, Z)")
        _validate_belief(self.initial_belief, X)
        from .mdp import _check_stochastic

        _check_stochastic(self.observation, "observation kernel")

    @property
    def num_states(self):
        return self.base.num_states

    @property
    def num_actions(self):
        return self.base.num_actions

    @property
    def num_observations(self):
        return self.observation.shape[2]


def _validate_belief(b, num_states):
    if b.shape != (num_states,):
        raise ModelError(f"belief must have shape ({num_states},)")
    if np.any(b < -ROW_SUM_TOL) or abs(float(b.sum()) - 1.0) > ROW_SUM_TOL:
        raise ModelError("belief must be a probability vector")


@dataclass
class AlphaVectorPolicy:
    """Piecewise-linear value function: max over action-labelled hyperplanes."""

    vectors: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] == 0:
            raise ModelError("alpha-vector set must be a non-empty (n, X) matrix")
        if self.actions.shape != (self.vectors.shape[0],):
            raise ModelError("one action label per alpha vector required")

    @property
    def num_states(self):
        return self.vectors.shape[1]


def belief_update(pomdp, b, a, z):
    """Bayes filter step Bel(b, a, z).

    Returns (posterior, rho) where rho is the pre-normalization mass
    P(z | b, a); when rho == 0 the posterior is None and the caller decides
    how to treat the inconsistent observation.
    """
    ops = kernels.for_model(pomdp)
    return kernels.belief_update(ops, np.asarray(b, dtype=np.float64), a, z)


def observation_probs(pomdp, b, a):
    """P(z | b, a) for all z; equals the rho that belief_update would return."""
    ops = kernels.for_model(pomdp)
    return kernels.observation_probs(ops, np.asarray(b, dtype=np.float64), a)


def value_of(policy, b):
    """Value of a belief under an alpha-vector set: max_i <alpha_i, b>."""
    return float((policy.vectors @ b).max())


def q_value(pomdp, policy, b, a):
    """Belief-space q(b, a) with value_of as the successor evaluator.

    Impossible observations (zero predictive mass) contribute exactly zero
    to the expectation.
    """
    return float(q_values(pomdp, policy, b)[a])


def q_values(pomdp, policy, b):
    """q(b, a) for every action (vectorized form of q_value)."""
    ops = kernels.for_model(pomdp)
    return kernels.q_values(ops, policy.vectors, np.asarray(b, dtype=np.float64))


def greedy_belief_policy(pomdp, policy, b):
    """Distribution over actions: uniform over argmax_a q(b, a)."""
    q = q_values(pomdp, policy, b)
    mask = q == q.max()
    return mask / mask.sum()
