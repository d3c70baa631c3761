"""Independent brute-force oracles used to check the fast implementations.

Everything here works from raw kernel arrays by literal enumeration or
textbook recursions, deliberately avoiding the package's filtering and
solver code paths.
"""
import itertools

import numpy as np


def enumerate_filter(T, O, b0, actions, observations):
    """Posterior over the final state by summing over all state trajectories.

    Returns (posterior or None, sequence_probability) where the sequence
    probability is P(z_1..z_t | a_0..a_{t-1}).
    """
    X = T.shape[1]
    t = len(actions)
    mass = np.zeros(X)
    for path in itertools.product(range(X), repeat=t + 1):
        p = b0[path[0]]
        if p == 0.0:
            continue
        for i, (a, z) in enumerate(zip(actions, observations)):
            p *= T[a, path[i], path[i + 1]] * O[a, path[i + 1], z]
            if p == 0.0:
                break
        mass[path[-1]] += p
    total = mass.sum()
    if total == 0.0:
        return None, 0.0
    return mass / total, total


def sequence_likelihood(T, O, b0, actions, observations):
    """P(z_1..z_t | a_0..a_{t-1}) via vectorized trajectory enumeration."""
    X = T.shape[1]
    t = len(actions)
    paths = np.array(list(itertools.product(range(X), repeat=t + 1)))
    p = b0[paths[:, 0]].astype(float)
    for i, (a, z) in enumerate(zip(actions, observations)):
        p = p * T[a, paths[:, i], paths[:, i + 1]] * O[a, paths[:, i + 1], z]
    return float(p.sum())


def enumerate_filter_fast(T, O, b0, actions, observations):
    """Same as enumerate_filter, vectorized over the trajectory table."""
    X = T.shape[1]
    t = len(actions)
    paths = np.array(list(itertools.product(range(X), repeat=t + 1)))
    p = b0[paths[:, 0]].astype(float)
    for i, (a, z) in enumerate(zip(actions, observations)):
        p = p * T[a, paths[:, i], paths[:, i + 1]] * O[a, paths[:, i + 1], z]
    mass = np.bincount(paths[:, -1], weights=p, minlength=X)
    total = mass.sum()
    if total == 0.0:
        return None, 0.0
    return mass / total, float(total)


def task_posterior(task_kernels, prior, actions, observations):
    """P[M = k | history] by per-task observation-sequence likelihoods.

    task_kernels: list of (T, O, b0) triples. The agent's action
    probabilities are common across tasks and cancel in the normalization.
    """
    like = np.array(
        [sequence_likelihood(T, O, b0, actions, observations) for T, O, b0 in task_kernels]
    )
    w = like * np.asarray(prior)
    return w / w.sum()


def dense_belief_update(T, O, b, a, z):
    """Single textbook Bayes-filter step on dense kernels."""
    joint = b @ T[a] * O[a][:, z]
    rho = joint.sum()
    if rho == 0.0:
        return None, 0.0
    return joint / rho, float(rho)


def dense_q_value(T, O, R, gamma, vectors, b, a):
    """One-step lookahead q(b, a) with the alpha set as leaf evaluator."""
    q = float(b @ R[:, a])
    pb = b @ T[a]
    for z in range(O.shape[2]):
        w = pb * O[a][:, z]
        rho = w.sum()
        if rho > 0.0:
            q += gamma * rho * float(np.max(vectors @ (w / rho)))
    return q


def expectimax_value(T, O, R, gamma, vectors, b, depth):
    """Depth-limited expectimax over (action, observation) with alpha leaves."""
    if depth == 0:
        return float(np.max(vectors @ b))
    best = -np.inf
    for a in range(T.shape[0]):
        q = float(b @ R[:, a])
        pb = b @ T[a]
        for z in range(O.shape[2]):
            w = pb * O[a][:, z]
            rho = w.sum()
            if rho > 0.0:
                q += gamma * rho * expectimax_value(T, O, R, gamma, vectors, w / rho, depth - 1)
        best = max(best, q)
    return best


def finite_horizon_values(T, R, gamma, horizon):
    """Optimal finite-horizon values by straightforward backward induction."""
    v = np.zeros(T.shape[1])
    for _ in range(horizon):
        q = R + gamma * np.einsum("axy,y->xa", T, v)
        v = q.max(axis=1)
    return v


def bfs_min_steps(step_fn, start, is_goal, max_depth=10_000):
    """Shortest plan length in a deterministic transition system.

    step_fn(state, action) -> next state; actions inferred by the caller
    closing over its action set.
    """
    if is_goal(start):
        return 0
    frontier = [start]
    seen = {start}
    depth = 0
    while frontier and depth < max_depth:
        depth += 1
        nxt = []
        for s in frontier:
            for t in step_fn(s):
                if t in seen:
                    continue
                if is_goal(t):
                    return depth
                seen.add(t)
                nxt.append(t)
        frontier = nxt
    return None


def astar_torus(width, height, start, goal, blocked):
    """A* shortest path length on a 4-connected torus with blocked cells.

    Cells are (col, row) tuples; returns the path length or None.
    """
    import heapq

    def h(c):
        dx = abs(c[0] - goal[0])
        dy = abs(c[1] - goal[1])
        return min(dx, width - dx) + min(dy, height - dy)

    openq = [(h(start), 0, start)]
    best = {start: 0}
    while openq:
        f, g, cell = heapq.heappop(openq)
        if cell == goal:
            return g
        if g > best.get(cell, np.inf):
            continue
        for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nxt = ((cell[0] + dx) % width, (cell[1] + dy) % height)
            if nxt in blocked:
                continue
            ng = g + 1
            if ng < best.get(nxt, np.inf):
                best[nxt] = ng
                heapq.heappush(openq, (ng + h(nxt), ng, nxt))
    return None


def frequency_pvalue(counts, probs, n):
    """Chi-squared p-value of observed counts against a kernel row.

    Counts outside the row's support fail immediately (p = 0); a
    single-outcome support is an exact match by construction (p = 1).
    """
    from scipy import stats

    support = probs > 0
    if counts[~support].sum() > 0:
        return 0.0
    if support.sum() <= 1:
        return 1.0
    return float(stats.chisquare(counts[support], probs[support] * n).pvalue)


def random_pomdp(rng, num_states, num_actions, num_observations, sparse=0.0):
    """Random dense POMDP kernel arrays for filter/solver tests."""
    T = rng.random((num_actions, num_states, num_states)) + 0.05
    if sparse > 0.0:
        T = T * (rng.random(T.shape) > sparse)
        T += 1e-12 * np.eye(num_states)  # keep rows non-degenerate
    T /= T.sum(axis=2, keepdims=True)
    O = rng.random((num_actions, num_states, num_observations)) + 0.05
    O /= O.sum(axis=2, keepdims=True)
    R = rng.standard_normal((num_states, num_actions))
    b0 = rng.random(num_states) + 0.05
    b0 /= b0.sum()
    return T, O, R, b0
