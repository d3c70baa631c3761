"""Numpy/scipy reference implementations of the hot belief-space kernels.

These are the fallback backend and the semantic reference for the compiled
extension: the Cython kernels must agree with these functions (same argmax
tie-breaks, impossible observations contributing exactly zero).
"""
from __future__ import annotations

import numpy as np


def belief_update(ops, b, a, z):
    """One Bayes filter step; returns (posterior or None, pre-normalization mass)."""
    pb = ops.t_rev[a] @ b
    col = ops.o_by_symbol[a]
    lo, hi = col.indptr[z], col.indptr[z + 1]
    idx = col.indices[lo:hi]
    w = pb[idx] * col.data[lo:hi]
    rho = float(w.sum())
    if rho == 0.0:
        return None, 0.0
    out = np.zeros_like(pb)
    out[idx] = w / rho
    return out, rho


def observation_probs(ops, b, a):
    """P(z | b, a) for every observation symbol; sums to 1."""
    pb = ops.t_rev[a] @ b
    return ops.o_by_symbol[a] @ pb


def q_values(ops, vectors, b):
    """q(b, a) for every action under the alpha-vector value function.

    q(b,a) = b.r_a + gamma * sum_z max_i <alpha_i, w_az> with
    w_az[y] = O[a][y,z] * (T[a]^T b)[y]; zero-mass observations contribute 0.
    """
    q = b @ ops.reward
    for a in range(ops.num_actions):
        pb = ops.t_rev[a] @ b
        w = ops.o_by_state[a].multiply(pb[:, None]).tocsr()
        scores = w.T @ vectors.T  # (Z, n_vec); zero-mass rows stay exactly 0
        q[a] += ops.discount * scores.max(axis=1).sum()
    return q


def backup(ops, vectors, b):
    """Point-based backup at belief b; returns (alpha, action).

    For each action, picks per observation the alpha vector maximizing the
    unnormalized successor value (lowest index on ties, index 0 for
    zero-mass observations), assembles the back-projected vector, and keeps
    the action whose vector scores highest at b.
    """
    best_val = -np.inf
    best_alpha = None
    best_action = 0
    for a in range(ops.num_actions):
        pb = ops.t_rev[a] @ b
        w = ops.o_by_state[a].multiply(pb[:, None]).tocsr()
        scores = np.asarray(w.T @ vectors.T)  # (Z, n_vec)
        choice = scores.argmax(axis=1)
        gathered = vectors[choice, :]  # (Z, X)
        # B[y] = sum_z O[a][y, z] * alpha_{choice[z]}[y]
        bproj = np.asarray(ops.o_by_state[a].multiply(gathered.T).sum(axis=1)).ravel()
        alpha = ops.reward[:, a] + ops.discount * (ops.t_fwd[a] @ bproj)
        val = float(alpha @ b)
        if val > best_val:
            best_val = val
            best_alpha = alpha
            best_action = a
    return best_alpha, best_action
