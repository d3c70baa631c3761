"""Night-time Pursuit: two predators must simultaneously occupy two fixed,
sleeping prey cells on a bounded grid.

The state holds both predator positions; prey positions are a task
parameter, entering only the rewards and the observation kernel, so a task
library is a set of prey configurations. The ad hoc predator's moves
succeed with probability 1 - epsilon (walls block); the teammate moves
deterministically toward its closest prey and always succeeds. The agent
observes its four neighbor cells, missing a present teammate/prey with
probability epsilon.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import ModelError, StatePolicy, TabularMDP
from ..pomdp import TabularPOMDP
from .grid import DIRS, STAY, GridSpec, greedy_axis_step

ACTIONS = ("up", "down", "left", "right", "stay")
NUM_ACTIONS = 5
OBS_NOTHING, OBS_TEAMMATE, OBS_PREY = 0, 1, 2
NUM_OBS_SYMBOLS = 3**4
REWARD_BOUND = 100.0
CAPTURE_REWARD = 100.0
STEP_REWARD = -1.0
DISCOUNT = 0.95


@dataclass(frozen=True)
class NightPursuitTask:
    """One task: a pair of distinct prey cells on a grid."""

    prey_positions: tuple
    grid: GridSpec

    def __post_init__(self):
        preys = tuple(tuple(p) for p in self.prey_positions)
        object.__setattr__(self, "prey_positions", preys)
        if len(preys) != 2 or preys[0] == preys[1]:
            raise ModelError("exactly two distinct prey cells required")
        for p in preys:
            if not self.grid.contains(p):
                raise ModelError(f"prey cell {p} outside the grid")

    @property
    def label(self):
        (a, b) = self.prey_positions
        return f"preys@{a[0]}-{a[1]}+{b[0]}-{b[1]}"


def start_cells(grid):
    """Fixed start: ad hoc predator top-left, teammate bottom-right."""
    return (0, 0), (grid.width - 1, grid.height - 1)


def teammate_target_move(grid, pos, preys):
    """Deterministic move toward the closest prey (Manhattan distance,
    lower-index prey on ties; larger-offset axis first, horizontal on ties)."""
    dists = [grid.manhattan(pos, p) for p in preys]
    prey = preys[0] if dists[0] <= dists[1] else preys[1]
    direction = greedy_axis_step((prey[0] - pos[0], prey[1] - pos[1]))
    if direction == STAY:
        return pos, STAY
    nxt = grid.shift(pos, DIRS[direction])
    return (nxt if nxt is not None else pos), direction


def is_capture(pos1, pos2, preys):
    """Both prey cells simultaneously occupied by distinct predators; the
    predator-to-prey pairing is unrestricted."""
    return {pos1, pos2} == set(preys)


def _slot_distribution(cell, pos2, preys, grid, eps):
    """Per-slot observation distribution over (nothing, teammate, prey).

    Off-grid cells read as nothing. When a cell holds both (teammate parked
    on a prey) the report priority is teammate over prey.
    """
    if cell is None:
        return (1.0, 0.0, 0.0)
    teammate = cell == pos2
    prey = cell in preys
    if teammate and prey:
        return (eps * eps, 1.0 - eps, eps * (1.0 - eps))
    if teammate:
        return (eps, 1.0 - eps, 0.0)
    if prey:
        return (eps, 0.0, 1.0 - eps)
    return (1.0, 0.0, 0.0)


def observation_row(task, pos1, pos2):
    """Distribution over the 81 observation symbols at state (pos1, pos2)."""
    grid = task.grid
    eps = grid.epsilon
    slots = [
        _slot_distribution(grid.shift(pos1, d), pos2, task.prey_positions, grid, eps)
        for d in DIRS
    ]
    row = np.einsum(
        "i,j,k,l->ijkl",
        np.asarray(slots[0]),
        np.asarray(slots[1]),
        np.asarray(slots[2]),
        np.asarray(slots[3]),
    )
    return row.reshape(-1)


def encode_observation(symbols):
    """Base-3 code of the four slot symbols in (up, down, left, right) order."""
    z = 0
    for s in symbols:
        z = z * 3 + s
    return z


def build_night_pursuit(task):
    """Construct the induced POMDP and the ground-truth simulator."""
    grid = task.grid
    n = grid.num_cells
    X = n * n
    eps = grid.epsilon
    preys = task.prey_positions

    # ad hoc move table: target cell per (action, cell), None = blocked
    move_target = np.empty((NUM_ACTIONS, n), dtype=np.int64)
    for a in range(NUM_ACTIONS):
        for c in range(n):
            cell = grid.cell(c)
            if a == STAY:
                move_target[a, c] = c
            else:
                nxt = grid.shift(cell, DIRS[a])
                move_target[a, c] = c if nxt is None else grid.flat(nxt)

    teammate_next = np.empty(n, dtype=np.int64)
    for c in range(n):
        nxt, _ = teammate_target_move(grid, grid.cell(c), preys)
        teammate_next[c] = grid.flat(nxt)

    capture_flags = np.zeros(X, dtype=bool)
    for p1 in range(n):
        for p2 in range(n):
            if is_capture(grid.cell(p1), grid.cell(p2), preys):
                capture_flags[p1 * n + p2] = True

    T = np.zeros((NUM_ACTIONS, X, X))
    for a in range(NUM_ACTIONS):
        for p1 in range(n):
            tgt = move_target[a, p1]
            for p2 in range(n):
                x = p1 * n + p2
                if capture_flags[x]:
                    T[a, x, x] = 1.0
                    continue
                t2 = teammate_next[p2]
                if tgt == p1:
                    T[a, x, p1 * n + t2] += 1.0
                else:
                    T[a, x, tgt * n + t2] += 1.0 - eps
                    T[a, x, p1 * n + t2] += eps

    R = STEP_REWARD + (CAPTURE_REWARD - STEP_REWARD) * np.einsum(
        "axy,y->xa", T, capture_flags.astype(float)
    )
    R[capture_flags, :] = 0.0

    O_single = np.empty((X, NUM_OBS_SYMBOLS))
    for p1 in range(n):
        for p2 in range(n):
            O_single[p1 * n + p2] = observation_row(task, grid.cell(p1), grid.cell(p2))
    O = np.broadcast_to(O_single, (NUM_ACTIONS, X, NUM_OBS_SYMBOLS)).copy()

    s1, s2 = start_cells(grid)
    x0 = grid.flat(s1) * n + grid.flat(s2)
    if capture_flags[x0]:
        raise ModelError("prey configuration captures at the start state")
    b0 = np.zeros(X)
    b0[x0] = 1.0

    base = TabularMDP(transition=T, reward=R, discount=DISCOUNT)
    pomdp = TabularPOMDP(base=base, observation=O, initial_belief=b0)
    return pomdp, NightPursuitSim(task)


def teammate_state_policy(task):
    """Teammate policy over the full state space (its own 5 actions)."""
    grid = task.grid
    n = grid.num_cells
    probs = np.zeros((n * n, NUM_ACTIONS))
    for p2 in range(n):
        _, direction = teammate_target_move(grid, grid.cell(p2), task.prey_positions)
        probs[p2::n, direction] = 1.0  # states are p1 * n + p2
    return StatePolicy(probs=probs)


@dataclass
class NightPursuitState:
    """Ground-truth simulator state."""

    pos1: tuple
    pos2: tuple
    t: int = 0
    done: bool = False


class NightPursuitSim:
    """Structured-state simulator; the built kernels are checked against it."""

    def __init__(self, task):
        self.task = task
        self.grid = task.grid
        self.num_cells = task.grid.num_cells
        self.num_states = self.num_cells**2
        self.num_actions = NUM_ACTIONS
        self.num_observations = NUM_OBS_SYMBOLS
        self.reward_bound = REWARD_BOUND

    def reset(self):
        s1, s2 = start_cells(self.grid)
        return NightPursuitState(pos1=s1, pos2=s2)

    def state_index(self, state):
        return self.grid.flat(state.pos1) * self.num_cells + self.grid.flat(state.pos2)

    def _move_adhoc(self, pos, action, rng):
        if action == STAY:
            return pos
        nxt = self.grid.shift(pos, DIRS[action])
        if nxt is None:
            return pos
        return nxt if rng.random() < 1.0 - self.grid.epsilon else pos

    def sample_observation(self, pos1, pos2, rng):
        eps = self.grid.epsilon
        symbols = []
        for d in DIRS:
            cell = self.grid.shift(pos1, d)
            if cell is None:
                symbols.append(OBS_NOTHING)
                continue
            sym = OBS_NOTHING
            if cell == pos2 and rng.random() < 1.0 - eps:
                sym = OBS_TEAMMATE
            elif cell in self.task.prey_positions and rng.random() < 1.0 - eps:
                sym = OBS_PREY
            symbols.append(sym)
        return encode_observation(symbols)

    def step(self, state, action, rng):
        """Advance one tick; returns (next_state, z, reward, done, teammate_action)."""
        if state.done:
            raise RuntimeError("cannot step a finished trial")
        pos1 = self._move_adhoc(state.pos1, action, rng)
        pos2, teammate_action = teammate_target_move(self.grid, state.pos2, self.task.prey_positions)
        captured = is_capture(pos1, pos2, self.task.prey_positions)
        reward = CAPTURE_REWARD if captured else STEP_REWARD
        nxt = NightPursuitState(pos1=pos1, pos2=pos2, t=state.t + 1, done=captured)
        z = self.sample_observation(pos1, pos2, rng)
        return nxt, z, reward, captured, teammate_action

    # --- vectorized ground-truth samplers for model agreement tests ---

    def sample_transitions(self, x, action, count, rng):
        """count next-state indices from structured game logic at (x, action)."""
        n = self.num_cells
        pos1 = self.grid.cell(x // n)
        pos2 = self.grid.cell(x % n)
        if is_capture(pos1, pos2, self.task.prey_positions):
            return np.full(count, x)
        p2_next = self.grid.flat(
            teammate_target_move(self.grid, pos2, self.task.prey_positions)[0]
        )
        if action == STAY:
            p1_next = np.full(count, self.grid.flat(pos1))
        else:
            tgt = self.grid.shift(pos1, DIRS[action])
            if tgt is None:
                p1_next = np.full(count, self.grid.flat(pos1))
            else:
                success = rng.random(count) < 1.0 - self.grid.epsilon
                p1_next = np.where(success, self.grid.flat(tgt), self.grid.flat(pos1))
        return p1_next * n + p2_next

    def sample_observations(self, x, count, rng):
        """count observation symbols emitted at next-state x."""
        n = self.num_cells
        pos1 = self.grid.cell(x // n)
        pos2 = self.grid.cell(x % n)
        eps = self.grid.epsilon
        z = np.zeros(count, dtype=np.int64)
        for d in DIRS:
            cell = self.grid.shift(pos1, d)
            sym = np.zeros(count, dtype=np.int64)
            if cell is not None:
                if cell == pos2:
                    seen_t = rng.random(count) < 1.0 - eps
                    sym = np.where(seen_t, OBS_TEAMMATE, OBS_NOTHING)
                    if cell in self.task.prey_positions:
                        seen_p = rng.random(count) < 1.0 - eps
                        sym = np.where(
                            ~seen_t & seen_p, OBS_PREY, sym
                        )
                elif cell in self.task.prey_positions:
                    seen_p = rng.random(count) < 1.0 - eps
                    sym = np.where(seen_p, OBS_PREY, OBS_NOTHING)
            z = z * 3 + sym
        return z
