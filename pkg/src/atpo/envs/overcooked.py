"""Two-cook coordination kitchen: a helper ferries onions and plates from
dispensers to the counter balconies, a cook loads the pan (three onions),
plates the soup and delivers it through the window.

Layout (forced-coordination style): the helper corridor has the onion
dispenser at the top cell and the plate dispenser at the bottom; the top
and bottom balconies connect the corridors at their respective cells; the
pan and the serving window line the cook corridor and are workable from
either cook cell, so a cook's position decides only which balcony it can
reach. The domain is fully observable (identity observation kernel) and
all dynamics, including the scripted teammates, are deterministic given
the ad hoc action.

State tuple: (helper cell, cook cell, helper hand, cook hand, top balcony,
bottom balcony, pan), with cells in {top, bottom}, hands in
{nothing, onion, plate, soup} (soup only ever in the cook's hand),
balconies in {nothing, onion, plate} and pan in {empty, 1 onion, 2 onions,
cooked}. Within a tick the ad hoc agent's action resolves first, then the
teammate's scripted response (computed on the pre-tick state plus, for the
mirroring type, the ad hoc agent's current action).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import ModelError, TabularMDP
from ..pomdp import TabularPOMDP

ACTIONS = ("up", "down", "noop", "act")
A_UP, A_DOWN, A_NOOP, A_ACT = 0, 1, 2, 3
NUM_ACTIONS = 4

TOP, BOTTOM = 0, 1
NONE, ONION, PLATE, SOUP = 0, 1, 2, 3
PAN_EMPTY, PAN_ONE, PAN_TWO, PAN_COOKED = 0, 1, 2, 3

ROLES = ("helper", "cook")
COOK_TEAMMATES = ("greedy", "dummy", "upper", "downer")
HELPER_TEAMMATES = ("greedy", "dummy")

DELIVERY_REWARD = 15.0
STEP_REWARD = -1.0
REWARD_BOUND = 15.0
DISCOUNT = 0.95

START_STATE = (TOP, TOP, NONE, NONE, NONE, NONE, PAN_EMPTY)


@dataclass(frozen=True)
class OvercookedTask:
    """One task: the ad hoc agent's role plus the teammate's type."""

    ad_hoc_role: str
    teammate_type: str

    def __post_init__(self):
        if self.ad_hoc_role not in ROLES:
            raise ModelError(f"unknown role {self.ad_hoc_role!r}")
        allowed = COOK_TEAMMATES if self.ad_hoc_role == "helper" else HELPER_TEAMMATES
        if self.teammate_type not in allowed:
            raise ModelError(
                f"teammate {self.teammate_type!r} invalid for role {self.ad_hoc_role!r}"
            )

    @property
    def label(self):
        return f"{self.ad_hoc_role}-vs-{self.teammate_type}"


def helper_act(state):
    """The helper's Act: grab from the dispenser at its cell when empty-
    handed, otherwise drop the held item on its cell's balcony if free."""
    ph, pc, hh, hc, tb, bb, pan = state
    if hh == NONE:
        hh = ONION if ph == TOP else PLATE
    elif ph == TOP and tb == NONE:
        tb, hh = hh, NONE
    elif ph == BOTTOM and bb == NONE:
        bb, hh = hh, NONE
    return (ph, pc, hh, hc, tb, bb, pan), False


def cook_act(state):
    """The cook's Act: work the held item (feed the pan, plate the soup,
    deliver through the window) or take from the balcony at its cell.
    Returns (state, delivered)."""
    ph, pc, hh, hc, tb, bb, pan = state
    delivered = False
    if hc == ONION and pan in (PAN_EMPTY, PAN_ONE, PAN_TWO):
        pan += 1
        hc = NONE
    elif hc == PLATE and pan == PAN_COOKED:
        hc = SOUP
        pan = PAN_EMPTY
    elif hc == SOUP:
        hc = NONE
        delivered = True
    elif hc == NONE:
        if pc == TOP and tb != NONE:
            hc, tb = tb, NONE
        elif pc == BOTTOM and bb != NONE:
            hc, bb = bb, NONE
    return (ph, pc, hh, hc, tb, bb, pan), delivered


def apply_action(state, action, actor_role):
    """Resolve one agent's action; returns (state, delivered)."""
    ph, pc, hh, hc, tb, bb, pan = state
    if action == A_UP:
        if actor_role == "helper":
            ph = TOP
        else:
            pc = TOP
        return (ph, pc, hh, hc, tb, bb, pan), False
    if action == A_DOWN:
        if actor_role == "helper":
            ph = BOTTOM
        else:
            pc = BOTTOM
        return (ph, pc, hh, hc, tb, bb, pan), False
    if action == A_NOOP:
        return state, False
    return helper_act(state) if actor_role == "helper" else cook_act(state)


def _pan_needs(pan):
    """What the cook should fetch next: onions until cooked, then a plate."""
    return ONION if pan in (PAN_EMPTY, PAN_ONE, PAN_TWO) else PLATE


def greedy_cook_action(state):
    ph, pc, hh, hc, tb, bb, pan = state
    if hc != NONE:
        # deposit / plate / deliver, all workable from either cell
        return A_ACT
    need = _pan_needs(pan)
    here, there = (tb, bb) if pc == TOP else (bb, tb)
    if here == need:
        return A_ACT
    if there == need:
        return A_DOWN if pc == TOP else A_UP
    # idle at the bottom, by the plate handoff spot
    return A_DOWN if pc == TOP else A_NOOP


def upper_cook_action(state):
    ph, pc, hh, hc, tb, bb, pan = state
    if pc != TOP:
        return A_UP
    if hc != NONE:
        return A_ACT
    if tb == _pan_needs(pan):
        return A_ACT
    return A_NOOP


def downer_cook_action(state):
    ph, pc, hh, hc, tb, bb, pan = state
    if pc != BOTTOM:
        return A_DOWN
    if hc != NONE:
        return A_ACT
    if bb == _pan_needs(pan):
        return A_ACT
    return A_NOOP


def greedy_helper_action(state):
    ph, pc, hh, hc, tb, bb, pan = state
    if hh != NONE:
        here, there = (tb, bb) if ph == TOP else (bb, tb)
        if here == NONE:
            return A_ACT
        if there == NONE:
            return A_DOWN if ph == TOP else A_UP
        return A_NOOP
    pan_onions = pan if pan != PAN_COOKED else 0
    in_flight = (tb == ONION) + (bb == ONION) + (hc == ONION)
    onions_needed = max(0, 3 - pan_onions - in_flight)
    plates_in_flight = (tb == PLATE) + (bb == PLATE) + (hc in (PLATE, SOUP))
    plate_needed = pan in (PAN_TWO, PAN_COOKED) and plates_in_flight == 0
    if onions_needed > 0:
        return A_ACT if ph == TOP else A_UP
    if plate_needed:
        return A_ACT if ph == BOTTOM else A_DOWN
    return A_NOOP


def teammate_action(task, state, adhoc_action):
    """The scripted teammate's action; the mirroring type copies the ad hoc
    agent's current action and does nothing on its own."""
    kind = task.teammate_type
    if kind == "dummy":
        return adhoc_action
    if task.ad_hoc_role == "helper":
        if kind == "greedy":
            return greedy_cook_action(state)
        if kind == "upper":
            return upper_cook_action(state)
        if kind == "downer":
            return downer_cook_action(state)
    else:
        if kind == "greedy":
            return greedy_helper_action(state)
    raise ModelError(f"unhandled teammate {kind!r}")


def tick(task, state, adhoc_action):
    """One joint step: ad hoc agent first, then the teammate's response.

    Returns (next_state, delivered, teammate_action_taken).
    """
    teammate_role = "cook" if task.ad_hoc_role == "helper" else "helper"
    a_team = teammate_action(task, state, adhoc_action)
    mid, delivered_a = apply_action(state, adhoc_action, task.ad_hoc_role)
    nxt, delivered_b = apply_action(mid, a_team, teammate_role)
    return nxt, delivered_a or delivered_b, a_team


def role_state_space(role):
    """Reachable joint states for a role: BFS closure of the start state
    under every ad hoc action and every teammate type of that role's
    library. Sorted for stable indexing; shared by all the role's tasks."""
    types = COOK_TEAMMATES if role == "helper" else HELPER_TEAMMATES
    tasks = [OvercookedTask(ad_hoc_role=role, teammate_type=t) for t in types]
    seen = {START_STATE}
    frontier = [START_STATE]
    while frontier:
        nxt = []
        for state in frontier:
            for task in tasks:
                for a in range(NUM_ACTIONS):
                    out, _, _ = tick(task, state, a)
                    if out not in seen:
                        seen.add(out)
                        nxt.append(out)
        frontier = nxt
    return sorted(seen)


_SPACE_CACHE = {}


def _role_space(role):
    if role not in _SPACE_CACHE:
        states = role_state_space(role)
        _SPACE_CACHE[role] = (states, {s: i for i, s in enumerate(states)})
    return _SPACE_CACHE[role]


_IDENTITY_CACHE = {}


def _identity_observation(n):
    if n not in _IDENTITY_CACHE:
        eye = np.eye(n)
        _IDENTITY_CACHE[n] = np.broadcast_to(eye, (NUM_ACTIONS, n, n)).copy()
    return _IDENTITY_CACHE[n]


def build_overcooked(task):
    """Construct the (fully observable) task model and the simulator.

    All tasks of one role share the state list, so the identity observation
    alphabet is common across the role's library.
    """
    states, index = _role_space(task.ad_hoc_role)
    X = len(states)
    T = np.zeros((NUM_ACTIONS, X, X))
    R = np.full((X, NUM_ACTIONS), STEP_REWARD)
    teammate_table = np.zeros((X, NUM_ACTIONS), dtype=np.int64)
    for i, state in enumerate(states):
        for a in range(NUM_ACTIONS):
            nxt, delivered, a_team = tick(task, state, a)
            T[a, i, index[nxt]] = 1.0
            teammate_table[i, a] = a_team
            if delivered:
                R[i, a] = DELIVERY_REWARD
    b0 = np.zeros(X)
    b0[index[START_STATE]] = 1.0
    base = TabularMDP(transition=T, reward=R, discount=DISCOUNT)
    pomdp = TabularPOMDP(base=base, observation=_identity_observation(X), initial_belief=b0)
    sim = OvercookedSim(task, states, index, teammate_table)
    return pomdp, sim


@dataclass
class OvercookedState:
    """Ground-truth simulator state."""

    tuple_state: tuple
    t: int = 0
    done: bool = False  # never set: the kitchen runs to the horizon


class OvercookedSim:
    """Deterministic simulator; observations are the state indices."""

    def __init__(self, task, states=None, index=None, teammate_table=None):
        self.task = task
        if states is None:
            states, index = _role_space(task.ad_hoc_role)
        self.states = states
        self.index = index
        self.teammate_table = teammate_table
        self.num_states = len(states)
        self.num_actions = NUM_ACTIONS
        self.num_observations = len(states)
        self.reward_bound = REWARD_BOUND

    def reset(self):
        return OvercookedState(tuple_state=START_STATE)

    def state_index(self, state):
        return self.index[state.tuple_state]

    def step(self, state, action, rng):
        nxt, delivered, a_team = tick(self.task, state.tuple_state, action)
        reward = DELIVERY_REWARD if delivered else STEP_REWARD
        out = OvercookedState(tuple_state=nxt, t=state.t + 1)
        return out, self.index[nxt], reward, False, a_team

    # --- ground-truth samplers (the dynamics are deterministic) ---

    def sample_transitions(self, x, action, count, rng):
        nxt, _, _ = tick(self.task, self.states[x], action)
        return np.full(count, self.index[nxt])

    def sample_observations(self, x, count, rng):
        return np.full(count, x)
