"""Benchmark environments: ground-truth simulators plus model builders.

The simulators are the source of truth (structured game logic); the built
POMDPs are the agents' task models, and the test suite checks the two
against each other by Monte-Carlo frequency comparison.
"""
from ..mdp import ModelError
from . import night_pursuit, overcooked, pursuit_po
from .grid import GridSpec
from .night_pursuit import NightPursuitTask, build_night_pursuit
from .overcooked import OvercookedTask, build_overcooked
from .pursuit_po import PursuitPOTask, build_pursuit_po


def teammate_policy(domain, teammate_type, task):
    """Teammate behavior as a StatePolicy over the domain's state space.

    The Overcooked teammates react to the ad hoc agent's current action and
    therefore cannot be expressed as a state-only policy; their behavior is
    exposed as the builder's teammate action table instead.
    """
    if domain == "night_pursuit":
        # the only night-time teammate chases its closest prey
        return night_pursuit.teammate_state_policy(task)
    if domain == "pursuit_po":
        if teammate_type != task.teammate_type:
            task = PursuitPOTask(teammate_type=teammate_type, grid=task.grid)
        return pursuit_po.teammate_state_policy(task)
    if domain == "overcooked":
        raise ModelError(
            "overcooked teammates condition on the ad hoc action; "
            "use the teammate table from build_overcooked"
        )
    raise ModelError(f"unknown domain {domain!r}")
