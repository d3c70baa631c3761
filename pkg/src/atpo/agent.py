"""Bayesian task-inference agent over a library of solved POMDPs.

The agent keeps one belief per candidate task plus a posterior over tasks,
acts by the posterior-weighted mixture of per-task greedy belief policies,
and updates the posterior with the per-task observation likelihoods. The
per-step losses feed the online regret bound checked by `verify_bound`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import ModelError
from .pomdp import belief_update, greedy_belief_policy, q_values


class InconsistentObservationError(RuntimeError):
    """No task in the library assigns positive probability to the observation."""


@dataclass
class TaskEntry:
    """A candidate task: induced POMDP, solved value function, display label.

    The optional fields carry what the baseline agents need: the task's
    MDP-optimal quantities (value-iteration output) and the teammate action
    table used by the action-observing baseline.
    """

    pomdp: object
    policy: object
    label: str
    mdp_value: object = None
    mdp_policy: object = None
    teammate_table: object = None


@dataclass
class TaskLibrary:
    """Finite task set sharing one action and one observation alphabet."""

    tasks: list

    def __post_init__(self):
        if not self.tasks:
            raise ModelError("task library must be non-empty")
        a0 = self.tasks[0].pomdp.num_actions
        z0 = self.tasks[0].pomdp.num_observations
        for t in self.tasks:
            if t.pomdp.num_actions != a0 or t.pomdp.num_observations != z0:
                raise ModelError("all tasks must share the action and observation alphabets")

    def __len__(self):
        return len(self.tasks)

    @property
    def num_actions(self):
        return self.tasks[0].pomdp.num_actions

    @property
    def labels(self):
        return [t.label for t in self.tasks]


@dataclass
class AtpoState:
    """Filtering state: task posterior, one belief per live task, last mixture.

    Tasks ruled out by a zero-likelihood observation carry posterior exactly
    0 and a None belief; they stay excluded (exact Bayes).
    """

    posterior: np.ndarray
    beliefs: list
    last_mixed_policy: np.ndarray | None = None


def atpo_init(library, prior=None):
    """Fresh agent state: per-task initial beliefs and the given prior
    (uniform when omitted)."""
    k = len(library)
    if prior is None:
        posterior = np.full(k, 1.0 / k)
    else:
        posterior = np.asarray(prior, dtype=np.float64).copy()
        if posterior.shape != (k,) or abs(posterior.sum() - 1.0) > 1e-9 or np.any(posterior < 0):
            raise ModelError("prior must be a probability vector over the library")
    beliefs = [np.asarray(t.pomdp.initial_belief, dtype=np.float64).copy() for t in library.tasks]
    return AtpoState(posterior=posterior, beliefs=beliefs)


def atpo_mixed_policy(state, library):
    """pi_t(a) = sum_k p_t(k) * greedy_k(a | b_k) over live tasks."""
    mixed = np.zeros(library.num_actions)
    for k, entry in enumerate(library.tasks):
        p = state.posterior[k]
        if p == 0.0:
            continue
        mixed += p * greedy_belief_policy(entry.pomdp, entry.policy, state.beliefs[k])
    return mixed


def atpo_act(state, library, rng):
    """Sample an action from the mixture policy; the mixture is stashed on
    the state so the following update can log pi_t(a_t | h_t)."""
    mixed = atpo_mixed_policy(state, library)
    action = int(rng.choice(len(mixed), p=mixed))
    state.last_mixed_policy = mixed
    return action, mixed


def atpo_act_deterministic(state, library):
    """Argmax-of-mixture action (lowest index on ties); regression-test mode."""
    mixed = atpo_mixed_policy(state, library)
    state.last_mixed_policy = mixed
    return int(np.argmax(mixed)), mixed


def atpo_update(state, library, a, z, posterior_floor=None):
    """Condition the state on (a, z): filter every live belief and reweight
    the posterior by each task's observation likelihood.

    The common factor pi_t(a | h_t) cancels in the normalization and is
    therefore not multiplied in here; it is logged by the trace recorder.
    A task with zero likelihood drops to posterior 0 permanently unless a
    positive `posterior_floor` is supplied (robustness mode).
    """
    k = len(library)
    weights = np.zeros(k)
    beliefs = []
    for i, entry in enumerate(library.tasks):
        if state.posterior[i] == 0.0:
            beliefs.append(None)
            continue
        nxt, rho = belief_update(entry.pomdp, state.beliefs[i], a, z)
        weights[i] = rho * state.posterior[i]
        beliefs.append(nxt)
    total = weights.sum()
    if total == 0.0:
        raise InconsistentObservationError(
            f"observation {z} after action {a} has zero probability under every task"
        )
    posterior = weights / total
    if posterior_floor is not None:
        posterior = np.maximum(posterior, posterior_floor)
        posterior /= posterior.sum()
    return AtpoState(posterior=posterior, beliefs=beliefs, last_mixed_policy=None)


def action_losses(library, state, target_index):
    """loss(a | m*) for every action, under the target task's belief.

    Defined against the greedy value max_a q(b*, a), so losses are
    non-negative and vanish exactly on the greedy policy's support.
    """
    entry = library.tasks[target_index]
    b = state.beliefs[target_index]
    if b is None:
        raise ModelError("target task was ruled out; its belief is gone")
    q = q_values(entry.pomdp, entry.policy, b)
    return q.max() - q


def atpo_loss(state, library, target_index):
    """Policy-averaged loss per candidate task:
    loss_k = sum_a greedy_k(a | b_k) * loss(a | m*).

    Tasks already ruled out have no belief to evaluate; their entry is NaN
    (they carry posterior 0, so they never contribute to the mixture loss).
    """
    la = action_losses(library, state, target_index)
    out = np.full(len(library), np.nan)
    for k, entry in enumerate(library.tasks):
        b = state.beliefs[k]
        if b is None:
            continue
        pol = greedy_belief_policy(entry.pomdp, entry.policy, b)
        out[k] = float(pol @ la)
    return out


def posterior_entropy(p):
    """Shannon entropy in nats with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


@dataclass
class TraceRecord:
    """Per-step log of one trial, enough to re-verify the loss bound."""

    task_labels: list
    target_index: int
    discount: float
    r_max: float
    actions: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    posteriors: list = field(default_factory=list)
    mixed_policies: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    rewards: list = field(default_factory=list)

    def append(self, action, observation, posterior, mixed_policy, losses, reward):
        self.actions.append(int(action))
        self.observations.append(int(observation))
        self.posteriors.append(np.asarray(posterior, dtype=np.float64).copy())
        self.mixed_policies.append(np.asarray(mixed_policy, dtype=np.float64).copy())
        self.losses.append(np.asarray(losses, dtype=np.float64).copy())
        self.rewards.append(float(reward))

    def __len__(self):
        return len(self.actions)


@dataclass
class BoundReport:
    """Both sides of the mixture-loss bound for one comparator distribution.

    holds <=> lhs <= sum(rhs_terms) + 1e-6. An infinite KL term (the
    comparator puts mass on a task whose posterior hit exactly 0) makes the
    bound hold trivially.
    """

    lhs: float
    rhs_terms: tuple
    holds: bool
    num_steps: int
    kl_finite: bool


def _mixture_loss(weights, losses):
    # NaN losses only occur where the weight is exactly 0
    w = np.asarray(weights)
    live = w > 0
    return float((w[live] * losses[live]).sum())


def verify_bound(trace, q, r_max=None, discount=None, tol=1e-6):
    """Evaluate the per-trial loss bound against a constant comparator q.

    lhs  = sum_t L_t(p_t)
    rhs  = sum_t L_t(q) + sqrt(2/T) sum_t KL(q || p_t)
           + sqrt(T/2) * R_max^2 / (1 - gamma)^2
    with KL in nats and 0 log 0 = 0.
    """
    T = len(trace)
    if T == 0:
        raise ValueError("empty trace")
    q = np.asarray(q, dtype=np.float64)
    r_max = trace.r_max if r_max is None else r_max
    discount = trace.discount if discount is None else discount

    lhs = 0.0
    loss_term = 0.0
    kl_sum = 0.0
    kl_finite = True
    for t in range(T):
        p_t = trace.posteriors[t]
        losses = trace.losses[t]
        lhs += _mixture_loss(p_t, losses)
        if kl_finite:
            support = q > 0
            if np.any(p_t[support] == 0.0):
                kl_finite = False
            else:
                # p_t > 0 on q's support, so those tasks are live and their
                # losses are finite
                kl_sum += float((q[support] * np.log(q[support] / p_t[support])).sum())
                loss_term += _mixture_loss(q, losses)
    slack = np.sqrt(T / 2.0) * r_max**2 / (1.0 - discount) ** 2
    if not kl_finite:
        return BoundReport(
            lhs=lhs,
            rhs_terms=(np.nan, np.inf, slack),
            holds=True,
            num_steps=T,
            kl_finite=False,
        )
    kl_term = np.sqrt(2.0 / T) * kl_sum
    rhs_terms = (loss_term, kl_term, slack)
    return BoundReport(
        lhs=lhs,
        rhs_terms=rhs_terms,
        holds=bool(lhs <= sum(rhs_terms) + tol),
        num_steps=T,
        kl_finite=True,
    )
