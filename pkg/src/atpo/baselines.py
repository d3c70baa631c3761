"""Comparison agents behind one interface: omniscient value iteration,
omniscient point-based (knows the task, partial observability), the
most-likely-state task-inference baseline, the action-observing assistant,
the random policy, and the task-inference agent itself.

Information hygiene is structural: each agent declares the transition-
record fields it may read, the runner populates only those, and everything
else stays None.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agent import atpo_act, atpo_act_deterministic, atpo_init, atpo_update
from .mdp import ModelError
from .pomdp import belief_update, greedy_belief_policy


@dataclass
class TransitionRecord:
    """Post-step information offered to an agent, filtered per its view."""

    own_action: int
    observation: int | None = None
    prev_state: int | None = None
    teammate_action: int | None = None


class Agent:
    """Uniform agent contract used by the trial runner.

    `view` names the TransitionRecord fields this agent is entitled to;
    `observes_state` marks agents that receive the true state as the acting
    cue instead of relying on filtered observations.
    """

    view = frozenset({"own_action", "observation"})
    observes_state = False

    def reset(self):
        raise NotImplementedError

    def act(self, cue, rng):
        raise NotImplementedError

    def observe(self, record):
        pass


class RandomAgent(Agent):
    """Uniform over the action alphabet every step."""

    view = frozenset({"own_action"})

    def __init__(self, num_actions):
        self.num_actions = num_actions

    def reset(self):
        pass

    def act(self, cue, rng):
        return int(rng.integers(self.num_actions))


class OmniscientVIAgent(Agent):
    """Knows the target task and the true state; plays the MDP-greedy policy."""

    view = frozenset({"own_action", "prev_state"})
    observes_state = True

    def __init__(self, policy, deterministic=False):
        self.policy = policy
        self.deterministic = deterministic

    def reset(self):
        pass

    def act(self, cue, rng):
        row = self.policy.probs[cue]
        if self.deterministic:
            return int(np.argmax(row))
        return int(rng.choice(len(row), p=row))


class OmniscientPerseusAgent(Agent):
    """Knows the target task but not the state; exact filtering plus the
    greedy belief policy of the solved value function."""

    def __init__(self, pomdp, policy):
        self.pomdp = pomdp
        self.policy = policy
        self.belief = None

    def reset(self):
        self.belief = np.asarray(self.pomdp.initial_belief, dtype=np.float64).copy()

    def act(self, cue, rng):
        dist = greedy_belief_policy(self.pomdp, self.policy, self.belief)
        return int(rng.choice(len(dist), p=dist))

    def observe(self, record):
        nxt, rho = belief_update(self.pomdp, self.belief, record.own_action, record.observation)
        if rho == 0.0:
            raise ModelError("observation impossible under the target task model")
        self.belief = nxt


class AtpoAgent(Agent):
    """Task-inference agent wrapper; exposes its posterior for the metrics."""

    def __init__(self, library, prior=None, deterministic=False, posterior_floor=None):
        self.library = library
        self.prior = prior
        self.deterministic = deterministic
        self.posterior_floor = posterior_floor
        self.state = None

    def reset(self):
        self.state = atpo_init(self.library, self.prior)

    def act(self, cue, rng):
        if self.deterministic:
            action, _ = atpo_act_deterministic(self.state, self.library)
        else:
            action, _ = atpo_act(self.state, self.library, rng)
        return action

    def observe(self, record):
        self.state = atpo_update(
            self.state,
            self.library,
            record.own_action,
            record.observation,
            posterior_floor=self.posterior_floor,
        )

    @property
    def posterior(self):
        return self.state.posterior


class BopaAgent(Agent):
    """Task inference with the most-likely-state heuristic.

    Per-task beliefs are filtered exactly, but the posterior update plugs
    the per-task argmax states into the fully observable likelihood
    p'(k) prop P_k(x_hat' | x_hat, a) p(k), and actions come from the
    per-task MDP-optimal policies at the argmax state (sample a task, then
    an action; `mix` averages the rows instead).
    """

    def __init__(self, library, mix=False):
        if any(t.mdp_policy is None for t in library.tasks):
            raise ModelError("BOPA needs per-task MDP policies")
        self.library = library
        self.mix = mix
        self.posterior = None
        self.beliefs = None
        self.zero_likelihood_resets = 0
        self.dead_belief_resets = 0

    def reset(self):
        k = len(self.library)
        self.posterior = np.full(k, 1.0 / k)
        self.beliefs = [
            np.asarray(t.pomdp.initial_belief, dtype=np.float64).copy()
            for t in self.library.tasks
        ]

    def _map_states(self):
        return [int(np.argmax(b)) for b in self.beliefs]

    def act(self, cue, rng):
        states = self._map_states()
        if self.mix:
            row = np.zeros(self.library.num_actions)
            for k, entry in enumerate(self.library.tasks):
                row += self.posterior[k] * entry.mdp_policy.probs[states[k]]
        else:
            k = int(rng.choice(len(self.posterior), p=self.posterior))
            row = self.library.tasks[k].mdp_policy.probs[states[k]]
        return int(rng.choice(len(row), p=row))

    def observe(self, record):
        a, z = record.own_action, record.observation
        prev_map = self._map_states()
        likelihood = np.empty(len(self.library))
        for k, entry in enumerate(self.library.tasks):
            nxt, rho = belief_update(entry.pomdp, self.beliefs[k], a, z)
            if rho == 0.0:
                # heuristic recovery: restart this task's filter
                nxt = np.asarray(entry.pomdp.initial_belief, dtype=np.float64).copy()
                self.dead_belief_resets += 1
            self.beliefs[k] = nxt
            new_map = int(np.argmax(nxt))
            likelihood[k] = entry.pomdp.base.transition[a, prev_map[k], new_map]
        weights = likelihood * self.posterior
        total = weights.sum()
        if total == 0.0:
            self.posterior = np.full(len(self.library), 1.0 / len(self.library))
            self.zero_likelihood_resets += 1
        else:
            self.posterior = weights / total


class AssistantAgent(Agent):
    """Observes the true state and the teammate's actions; updates the task
    posterior from the teammate-policy likelihood and mixes the per-task
    MDP-greedy rows at the current state."""

    view = frozenset({"own_action", "prev_state", "teammate_action"})
    observes_state = True

    def __init__(self, library):
        if any(t.mdp_policy is None or t.teammate_table is None for t in library.tasks):
            raise ModelError("the assistant needs MDP policies and teammate tables")
        self.library = library
        self.posterior = None
        self.zero_likelihood_resets = 0

    def reset(self):
        k = len(self.library)
        self.posterior = np.full(k, 1.0 / k)

    def act(self, cue, rng):
        row = np.zeros(self.library.num_actions)
        for k, entry in enumerate(self.library.tasks):
            row += self.posterior[k] * entry.mdp_policy.probs[cue]
        return int(rng.choice(len(row), p=row))

    def observe(self, record):
        likelihood = np.array(
            [
                1.0
                if entry.teammate_table[record.prev_state, record.own_action]
                == record.teammate_action
                else 0.0
                for entry in self.library.tasks
            ]
        )
        weights = likelihood * self.posterior
        total = weights.sum()
        if total == 0.0:
            self.posterior = np.full(len(self.library), 1.0 / len(self.library))
            self.zero_likelihood_resets += 1
        else:
            self.posterior = weights / total


def omniscient_vi_agent(entry, deterministic=False):
    """Factory: greedy MDP play of the target task's reduced model."""
    if entry.mdp_policy is None:
        raise ModelError("task entry lacks a solved MDP policy")
    return OmniscientVIAgent(entry.mdp_policy, deterministic=deterministic)


def omniscient_perseus_agent(entry):
    return OmniscientPerseusAgent(entry.pomdp, entry.policy)


def bopa_agent(library, mix=False):
    return BopaAgent(library, mix=mix)


def assistant_agent(library):
    return AssistantAgent(library)


def random_agent(num_actions):
    return RandomAgent(num_actions)
