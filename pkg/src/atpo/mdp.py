"""Finite tabular MDP/MMDP models and exact dynamic-programming solvers.

Kernels are dense numpy arrays: transition[a, x, x'] and reward[x, a].
Multiagent models carry a joint-action transition kernel; `reduce_mmdp`
marginalizes a fixed teammate policy into a single-agent MDP.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Raised when a model violates its structural invariants."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


def _check_stochastic(rows, what):
    if np.any(rows < -ROW_SUM_TOL):
        raise ModelError(f"{what} has negative entries")
    sums = rows.sum(axis=-1)
    err = np.max(np.abs(sums - 1.0))
    if err > ROW_SUM_TOL:
        raise ModelError(f"{what} rows must sum to 1 (max deviation {err:.3e})")


@dataclass
class TabularMDP:
    """Finite MDP with dense kernels.

    transition: (A, X, X) array, transition[a, x, y] = P(y | x, a)
    reward:     (X, A) array of expected one-step rewards
    discount:   in [0, 1)
    """

    transition: np.ndarray
    reward: np.ndarray
    discount: float

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        if self.transition.ndim != 3 or self.transition.shape[1] != self.transition.shape[2]:
            raise ModelError("transition must have shape (A, X, X)")
        if self.reward.shape != (self.num_states, self.num_actions):
            raise ModelError(
                f"reward shape {self.reward.shape} does not match (X={self.num_states}, A={self.num_actions})"
            )
        if not 0.0 <= self.discount < 1.0:
            raise ModelError("discount must lie in [0, 1)")
        _check_stochastic(self.transition, "transition kernel")

    @property
    def num_states(self):
        return self.transition.shape[1]

    @property
    def num_actions(self):
        return self.transition.shape[0]


@dataclass
class TabularMMDP:
    """Multiagent MDP: joint transition kernel over the Cartesian action space.

    per_agent_actions: action-count per agent; joint action j indexes the
    row-major product space, i.e. j = ravel_multi_index(individual actions).
    """

    per_agent_actions: tuple
    joint_transition: np.ndarray
    reward: np.ndarray
    discount: float

    def __post_init__(self):
        self.per_agent_actions = tuple(int(n) for n in self.per_agent_actions)
        self.joint_transition = np.asarray(self.joint_transition, dtype=np.float64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        expected = int(np.prod(self.per_agent_actions))
        if self.joint_transition.shape[0] != expected:
            raise ModelError(
                f"joint action axis {self.joint_transition.shape[0]} != product of per-agent counts {expected}"
            )
        if self.reward.shape != (self.num_states, expected):
            raise ModelError("reward shape must be (X, joint actions)")
        if not 0.0 <= self.discount < 1.0:
            raise ModelError("discount must lie in [0, 1)")
        _check_stochastic(self.joint_transition, "joint transition kernel")

    @property
    def num_agents(self):
        return len(self.per_agent_actions)

    @property
    def num_states(self):
        return self.joint_transition.shape[1]

    @property
    def num_joint_actions(self):
        return self.joint_transition.shape[0]


@dataclass
class StatePolicy:
    """Stochastic state policy: probs[x, a] = pi(a | x)."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise ModelError("policy must be a (X, A) matrix")
        _check_stochastic(self.probs, "policy")


@dataclass
class StateValueFunction:
    """State values with an optional q cache from the final backup."""

    values: np.ndarray
    q: np.ndarray | None = None
    iterations: int = 0
    residual: float = math.nan


def _backup(mdp, v):
    # q[x, a] = R[x, a] + gamma * sum_y T[a, x, y] v[y]
    return mdp.reward + mdp.discount * np.einsum("axy,y->xa", mdp.transition, v)


def value_iteration(mdp, tol=1e-8, max_iters=100_000):
    """Solve for v* by repeated Bellman backups.

    Returns a StateValueFunction whose Bellman residual is at most `tol`
    and whose q cache holds the final backup (so values == q.max(axis=1)).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.zeros(mdp.num_states)
    delta = math.inf
    for it in range(1, max_iters + 1):
        q = _backup(mdp, v)
        v_new = q.max(axis=1)
        delta = float(np.max(np.abs(v_new - v))) if mdp.num_states else 0.0
        v = v_new
        if delta <= tol:
            return StateValueFunction(values=v, q=q, iterations=it, residual=delta)
    raise ConvergenceError("value iteration did not converge", delta)


def greedy_policy(vf, deterministic=False):
    """Extract the greedy policy from a q cache.

    Ties are split uniformly over the argmax set; with `deterministic` the
    lowest-index maximizer gets all the mass (reproducibility mode).
    """
    if vf.q is None:
        raise ValueError("value function has no q cache")
    q = vf.q
    best = q.max(axis=1, keepdims=True)
    mask = q == best
    if deterministic:
        probs = np.zeros_like(q)
        probs[np.arange(q.shape[0]), q.argmax(axis=1)] = 1.0
    else:
        probs = mask / mask.sum(axis=1, keepdims=True)
    return StatePolicy(probs=probs)


def evaluate_policy(mdp, policy, tol=1e-8, max_iters=100_000):
    """Iterative policy evaluation of v^pi to residual <= tol."""
    if policy.probs.shape != (mdp.num_states, mdp.num_actions):
        raise ModelError("policy shape does not match the MDP")
    v = np.zeros(mdp.num_states)
    delta = math.inf
    for it in range(1, max_iters + 1):
        q = _backup(mdp, v)
        v_new = np.einsum("xa,xa->x", policy.probs, q)
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        if delta <= tol:
            return StateValueFunction(values=v, q=q, iterations=it, residual=delta)
    raise ConvergenceError("policy evaluation did not converge", delta)


def joint_action_index(per_agent_actions, actions):
    """Row-major index of an individual-action tuple in the joint space."""
    return int(np.ravel_multi_index(actions, per_agent_actions))


def reduce_mmdp(mmdp, ad_hoc_index, teammate_policy):
    """Collapse an MMDP plus a fixed teammate policy into a single-agent MDP.

    The teammate policy is a StatePolicy over the reduced joint action space
    (row-major product of every agent's actions except `ad_hoc_index`).
    The reduced kernel is the policy-weighted mixture of joint kernels, so
    row-stochasticity is preserved by construction without renormalizing.
    """
    counts = mmdp.per_agent_actions
    if not 0 <= ad_hoc_index < len(counts):
        raise ModelError("ad_hoc_index out of range")
    own = counts[ad_hoc_index]
    others = counts[:ad_hoc_index] + counts[ad_hoc_index + 1 :]
    n_red = int(np.prod(others)) if others else 1
    if teammate_policy.probs.shape != (mmdp.num_states, n_red):
        raise ModelError(
            f"teammate policy shape {teammate_policy.probs.shape} does not match "
            f"(X={mmdp.num_states}, reduced actions={n_red})"
        )

    X = mmdp.num_states
    T = np.zeros((own, X, X))
    R = np.zeros((X, own))
    pi = teammate_policy.probs
    for a_own in range(own):
        for a_red in range(n_red):
            red = np.unravel_index(a_red, others) if others else ()
            joint = red[:ad_hoc_index] + (a_own,) + red[ad_hoc_index:]
            j = joint_action_index(counts, joint)
            T[a_own] += pi[:, a_red, None] * mmdp.joint_transition[j]
            R[:, a_own] += pi[:, a_red] * mmdp.reward[:, j]
    return TabularMDP(transition=T, reward=R, discount=mmdp.discount)
