"""Pursuit under partial observability: two predators corner one moving
prey on a torus; tasks differ in the teammate's capturing behavior.

The state is the pair of relative offsets (teammate, prey) from the ad hoc
predator, with all three entities on distinct cells: (wh-1)(wh-2) states,
552 on the 5x5 torus. Within a tick the ad hoc predator moves first, then
the teammate, then the prey; a move onto an occupied cell leaves the mover
in place, and the prey steps uniformly over its free neighbor cells.
Perception is noisy: an entity at Chebyshev distance d is mis-observed
with probability clamp(1 - 0.15 d, 0, 1), reporting one of its four
neighbor cells instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import ModelError, StatePolicy, TabularMMDP, reduce_mmdp
from ..pomdp import TabularPOMDP
from .grid import DIRS, STAY, GridSpec, centered_offset, greedy_axis_step

TEAMMATE_TYPES = ("greedy", "teammate_aware", "probabilistic_destinations")
ACTIONS = ("up", "down", "left", "right")
NUM_ACTIONS = 4
REWARD_BOUND = 100.0
CORNER_REWARD = 100.0
STEP_REWARD = -1.0
DISCOUNT = 0.95


@dataclass(frozen=True)
class PursuitPOTask:
    """One task: a teammate behavior on a toroidal grid."""

    teammate_type: str
    grid: GridSpec

    def __post_init__(self):
        if self.teammate_type not in TEAMMATE_TYPES:
            raise ModelError(f"unknown teammate type {self.teammate_type!r}")
        if not self.grid.toroidal:
            object.__setattr__(
                self, "grid", GridSpec(self.grid.width, self.grid.height, True, self.grid.epsilon)
            )

    @property
    def label(self):
        return f"teammate={self.teammate_type}"


class OffsetSpace:
    """Relative-offset coding on a torus: offsets are (dx, dy) mod (w, h)."""

    def __init__(self, grid):
        self.w = grid.width
        self.h = grid.height
        self.n = self.w * self.h

    def flat(self, off):
        return (off[1] % self.h) * self.w + (off[0] % self.w)

    def unflat(self, code):
        return (code % self.w, code // self.w)

    def centered(self, off):
        return (centered_offset(off[0], self.w), centered_offset(off[1], self.h))

    def add(self, off, delta):
        return ((off[0] + delta[0]) % self.w, (off[1] + delta[1]) % self.h)

    def sub(self, off, delta):
        return ((off[0] - delta[0]) % self.w, (off[1] - delta[1]) % self.h)

    def chebyshev(self, off):
        dx, dy = self.centered(off)
        return max(abs(dx), abs(dy))

    def manhattan(self, off_a, off_b):
        dx = abs(centered_offset(off_a[0] - off_b[0], self.w))
        dy = abs(centered_offset(off_a[1] - off_b[1], self.h))
        return dx + dy

    def is_adjacent(self, off):
        return self.centered(off) in DIRS


def enumerate_states(space):
    """All (teammate, prey) offset pairs with the three entities distinct."""
    states = []
    lookup = -np.ones((space.n, space.n), dtype=np.int64)
    for u_code in range(space.n):
        if u_code == 0:
            continue
        for v_code in range(space.n):
            if v_code == 0 or v_code == u_code:
                continue
            lookup[u_code, v_code] = len(states)
            states.append((u_code, v_code))
    return states, lookup


def mis_observation_prob(distance):
    """Failure probability of observing an entity at Chebyshev distance d."""
    return float(np.clip(1.0 - 0.15 * distance, 0.0, 1.0))


def is_cornered(space, u, v):
    """Both predators orthogonally adjacent to the prey."""
    return space.is_adjacent(v) and space.is_adjacent(space.sub(v, u))


def _bfs_distances(space, source, blocked):
    """Torus BFS distances from `source` avoiding `blocked` cells."""
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for cell in frontier:
            for d in DIRS:
                nb = space.add(cell, d)
                if nb in dist or nb in blocked:
                    continue
                dist[nb] = dist[cell] + 1
                nxt.append(nb)
        frontier = nxt
    return dist


def teammate_direction(space, teammate_type, u, v):
    """Deterministic teammate action for a state; moves aimed at an occupied
    cell are blocked by the dynamics and act as a stay."""
    if teammate_type == "greedy":
        return greedy_axis_step(space.centered(space.sub(v, u)))
    if teammate_type == "teammate_aware":
        dist = _bfs_distances(space, v, blocked={(0, 0)})
        best_action, best_d = None, None
        for idx, d in enumerate(DIRS):
            nb = space.add(u, d)
            if nb == (0, 0):
                continue
            score = dist.get(nb)
            if score is None:
                continue
            if best_d is None or score < best_d:
                best_action, best_d = idx, score
        return best_action if best_action is not None else greedy_axis_step(space.centered(space.sub(v, u)))
    if teammate_type == "probabilistic_destinations":
        capture_cells = [space.add(v, d) for d in DIRS]
        adhoc_target = min(capture_cells, key=lambda c: (space.manhattan(c, (0, 0)), space.flat(c)))
        team_target = max(
            capture_cells, key=lambda c: (space.manhattan(c, adhoc_target), -space.flat(c))
        )
        if u == team_target:
            return greedy_axis_step(space.centered(space.sub(v, u)))  # hold the corner
        return greedy_axis_step(space.centered(space.sub(team_target, u)))
    raise ModelError(f"unknown teammate type {teammate_type!r}")


def teammate_state_policy(task, states=None, space=None):
    """Teammate behavior as a StatePolicy over the reduced action space."""
    space = space or OffsetSpace(task.grid)
    if states is None:
        states, _ = enumerate_states(space)
    probs = np.zeros((len(states), NUM_ACTIONS))
    for i, (u_code, v_code) in enumerate(states):
        u, v = space.unflat(u_code), space.unflat(v_code)
        a = teammate_direction(space, task.teammate_type, u, v)
        probs[i, a] = 1.0
    return StatePolicy(probs=probs)


def _tick(space, u, v, adhoc_action, teammate_action):
    """Resolve one tick up to the prey move; returns (u2, v1, prey options)."""
    d_a = DIRS[adhoc_action]
    if space.flat(u) == space.flat(d_a) or space.flat(v) == space.flat(d_a):
        d_a = (0, 0)  # target cell occupied
    u1 = space.sub(u, d_a)
    v1 = space.sub(v, d_a)
    d_t = DIRS[teammate_action]
    u2 = space.add(u1, d_t)
    if u2 == (0, 0) or u2 == v1:
        u2 = u1
    options = []
    for d_p in DIRS:
        v2 = space.add(v1, d_p)
        if v2 != (0, 0) and v2 != u2:
            options.append(v2)
    return u2, v1, options


def start_offsets(grid):
    """Fixed start: teammate one diagonal step away, prey the other way."""
    return (1, 1), ((grid.width - 1) % grid.width, (grid.height - 1) % grid.height)


def build_mmdp(task):
    """Joint two-predator MMDP over the offset state space."""
    space = OffsetSpace(task.grid)
    states, lookup = enumerate_states(space)
    X = len(states)
    J = NUM_ACTIONS * NUM_ACTIONS
    T = np.zeros((J, X, X))
    cornered = np.array(
        [is_cornered(space, space.unflat(u), space.unflat(v)) for u, v in states]
    )
    for i, (u_code, v_code) in enumerate(states):
        u, v = space.unflat(u_code), space.unflat(v_code)
        if cornered[i]:
            T[:, i, i] = 1.0
            continue
        for a_own in range(NUM_ACTIONS):
            for a_team in range(NUM_ACTIONS):
                j = a_own * NUM_ACTIONS + a_team
                u2, v1, options = _tick(space, u, v, a_own, a_team)
                p = 1.0 / len(options)
                for v2 in options:
                    nxt = lookup[space.flat(u2), space.flat(v2)]
                    T[j, i, nxt] += p
    R = STEP_REWARD + (CORNER_REWARD - STEP_REWARD) * np.einsum(
        "jxy,y->xj", T, cornered.astype(float)
    )
    R[cornered, :] = 0.0
    mmdp = TabularMMDP(
        per_agent_actions=(NUM_ACTIONS, NUM_ACTIONS), joint_transition=T, reward=R, discount=DISCOUNT
    )
    return mmdp, states, lookup, space, cornered


def entity_observation_dist(space, off_code):
    """Distribution over observed offsets for one entity at true offset."""
    off = space.unflat(off_code)
    fail = mis_observation_prob(space.chebyshev(off))
    dist = np.zeros(space.n)
    dist[space.flat(off)] += 1.0 - fail
    for d in DIRS:
        dist[space.flat(space.add(off, d))] += fail / 4.0
    return dist


def build_pursuit_po(task):
    """Construct the induced POMDP (teammate folded in) and the simulator."""
    mmdp, states, lookup, space, cornered = build_mmdp(task)
    policy = teammate_state_policy(task, states, space)
    base = reduce_mmdp(mmdp, 0, policy)

    X = len(states)
    Z = space.n * space.n
    O_single = np.zeros((X, Z))
    entity_rows = np.stack([entity_observation_dist(space, c) for c in range(space.n)])
    for i, (u_code, v_code) in enumerate(states):
        O_single[i] = np.outer(entity_rows[u_code], entity_rows[v_code]).reshape(-1)
    O = np.broadcast_to(O_single, (NUM_ACTIONS, X, Z)).copy()

    u0, v0 = start_offsets(task.grid)
    x0 = lookup[space.flat(u0), space.flat(v0)]
    if x0 < 0 or cornered[x0]:
        raise ModelError("invalid start configuration")
    b0 = np.zeros(X)
    b0[x0] = 1.0

    pomdp = TabularPOMDP(base=base, observation=O, initial_belief=b0)
    return pomdp, PursuitPOSim(task, states, lookup, space)


@dataclass
class PursuitPOState:
    """Ground-truth simulator state: offsets from the ad hoc predator."""

    teammate: tuple
    prey: tuple
    t: int = 0
    done: bool = False


class PursuitPOSim:
    """Structured-state simulator mirroring the kernel construction."""

    def __init__(self, task, states=None, lookup=None, space=None):
        self.task = task
        self.space = space or OffsetSpace(task.grid)
        if states is None:
            states, lookup = enumerate_states(self.space)
        self.states = states
        self.lookup = lookup
        self.num_states = len(states)
        self.num_actions = NUM_ACTIONS
        self.num_observations = self.space.n**2
        self.reward_bound = REWARD_BOUND

    def reset(self):
        u0, v0 = start_offsets(self.task.grid)
        return PursuitPOState(teammate=u0, prey=v0)

    def state_index(self, state):
        return int(self.lookup[self.space.flat(state.teammate), self.space.flat(state.prey)])

    def step(self, state, action, rng):
        if state.done:
            raise RuntimeError("cannot step a finished trial")
        space = self.space
        u, v = state.teammate, state.prey
        teammate_action = teammate_direction(space, self.task.teammate_type, u, v)
        u2, v1, options = _tick(space, u, v, action, teammate_action)
        v2 = options[int(rng.integers(len(options)))]
        done = is_cornered(space, u2, v2)
        reward = CORNER_REWARD if done else STEP_REWARD
        nxt = PursuitPOState(teammate=u2, prey=v2, t=state.t + 1, done=done)
        z = self.sample_observation_tuple(u2, v2, rng)
        return nxt, z, reward, done, teammate_action

    def _observe_entity(self, off, rng):
        fail = mis_observation_prob(self.space.chebyshev(off))
        if rng.random() < fail:
            return self.space.add(off, DIRS[int(rng.integers(4))])
        return off

    def sample_observation_tuple(self, u, v, rng):
        u_hat = self._observe_entity(u, rng)
        v_hat = self._observe_entity(v, rng)
        return self.space.flat(u_hat) * self.space.n + self.space.flat(v_hat)

    # --- vectorized ground-truth samplers for model agreement tests ---

    def sample_transitions(self, x, action, count, rng):
        space = self.space
        u_code, v_code = self.states[x]
        u, v = space.unflat(u_code), space.unflat(v_code)
        if is_cornered(space, u, v):
            return np.full(count, x)
        teammate_action = teammate_direction(space, self.task.teammate_type, u, v)
        u2, v1, options = _tick(space, u, v, action, teammate_action)
        option_ids = np.array([self.lookup[space.flat(u2), space.flat(v2)] for v2 in options])
        return option_ids[rng.integers(len(options), size=count)]

    def sample_observations(self, x, count, rng):
        space = self.space
        u_code, v_code = self.states[x]
        out = np.empty((2, count), dtype=np.int64)
        for slot, code in enumerate((u_code, v_code)):
            off = space.unflat(code)
            fail = mis_observation_prob(space.chebyshev(off))
            neighbor_codes = np.array([space.flat(space.add(off, d)) for d in DIRS])
            miss = rng.random(count) < fail
            which = rng.integers(4, size=count)
            out[slot] = np.where(miss, neighbor_codes[which], code)
        return out[0] * space.n + out[1]
