"""Randomized point-based value iteration over a sampled belief set.

Each stage backs up randomly chosen not-yet-improved beliefs and keeps a
vector only if it improves the sampled point, so the value at every sampled
belief is non-decreasing across stages. The initial value function is the
single constant vector R_min / (1 - gamma), a uniform lower bound.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .pomdp import AlphaVectorPolicy


def default_num_beliefs(num_states):
    """Belief-set size heuristic: 10 * sqrt(|X|), capped at 2000."""
    return int(min(2000, max(1, round(10 * num_states**0.5))))


def sample_belief_set(pomdp, n, seed=0, episode_len=50):
    """Sample n beliefs reachable from the initial belief.

    Simulates uniformly random actions, drawing each observation from its
    predictive distribution, restarting from the initial belief every
    `episode_len` steps. The initial belief is always the first element,
    and a fixed seed makes the output reproducible.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    ops = kernels.for_model(pomdp)
    b0 = np.asarray(pomdp.initial_belief, dtype=np.float64)
    beliefs = [b0]
    b = b0
    steps = 0
    while len(beliefs) < n:
        if steps == episode_len:
            b = b0
            steps = 0
        a = int(rng.integers(pomdp.num_actions))
        pz = kernels.observation_probs(ops, b, a)
        total = pz.sum()
        z = int(rng.choice(len(pz), p=pz / total))
        nxt, rho = kernels.belief_update(ops, b, a, z)
        if rho == 0.0:
            b = b0
            steps = 0
            continue
        b = nxt
        beliefs.append(b)
        steps += 1
    return beliefs


def _prune(vectors, actions):
    """Drop exact duplicates and pointwise-dominated vectors."""
    vectors, idx = np.unique(vectors, axis=0, return_index=True)
    actions = actions[idx]
    n = vectors.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        for j in range(n):
            if i == j or not keep[j]:
                continue
            # j dominates i pointwise (rows are distinct after unique)
            if np.all(vectors[j] >= vectors[i]):
                keep[i] = False
                break
    return vectors[keep], actions[keep]


def perseus_solve(pomdp, beliefs, improvement_tol=1e-4, max_rounds=200, seed=0):
    """Point-based solve over the given belief set.

    Stops when the largest per-stage value improvement over the belief set
    drops to `improvement_tol` or after `max_rounds` stages; always returns
    the best value function found so far.
    """
    if len(beliefs) == 0:
        raise ValueError("belief set must be non-empty")
    rng = np.random.default_rng(seed)
    ops = kernels.for_model(pomdp)
    B = np.asarray(beliefs, dtype=np.float64)
    r_min = float(pomdp.base.reward.min())
    vectors = np.full((1, pomdp.num_states), r_min / (1.0 - pomdp.base.discount))
    actions = np.zeros(1, dtype=np.int64)

    values = (B @ vectors.T).max(axis=1)
    for _ in range(max_rounds):
        new_vectors = []
        new_actions = []
        new_values = np.full(len(B), -np.inf)
        pending = np.arange(len(B))
        while len(pending):
            pick = pending[int(rng.integers(len(pending)))]
            alpha, act = kernels.backup(ops, vectors, B[pick])
            if float(alpha @ B[pick]) >= values[pick]:
                new_vectors.append(alpha)
                new_actions.append(act)
            else:
                # keep the current best vector at this belief instead
                j = int(np.argmax(vectors @ B[pick]))
                new_vectors.append(vectors[j])
                new_actions.append(int(actions[j]))
            cand = np.asarray(new_vectors[-1])
            improved = B[pending] @ cand
            new_values[pending] = np.maximum(new_values[pending], improved)
            # the kept vector covers `pick` by construction; drop it
            # explicitly so one-ulp rounding in the dot products above can
            # never leave it (and the stage loop) stuck
            pending = pending[(new_values[pending] < values[pending]) & (pending != pick)]
        stacked = np.asarray(new_vectors)
        acts = np.asarray(new_actions, dtype=np.int64)
        stacked, acts = _prune(stacked, acts)
        vectors, actions = stacked, acts
        new_values = (B @ vectors.T).max(axis=1)
        gain = float(np.max(new_values - values))
        values = new_values
        if gain <= improvement_tol:
            break
    return AlphaVectorPolicy(vectors=vectors, actions=actions)
