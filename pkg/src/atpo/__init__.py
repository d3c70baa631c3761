"""Ad hoc teamwork under partial observability.

Tabular MDP/MMDP/POMDP models and solvers, the Bayesian task-inference
agent with its loss-bound verifier, baseline agents, three benchmark
environments, and a seeded experiment harness.
"""
from .agent import (
    AtpoState,
    BoundReport,
    InconsistentObservationError,
    TaskEntry,
    TaskLibrary,
    TraceRecord,
    atpo_act,
    atpo_init,
    atpo_loss,
    atpo_update,
    posterior_entropy,
    verify_bound,
)
from .kernels import BACKEND
from .mdp import (
    ConvergenceError,
    ModelError,
    StatePolicy,
    StateValueFunction,
    TabularMDP,
    TabularMMDP,
    evaluate_policy,
    greedy_policy,
    reduce_mmdp,
    value_iteration,
)
from .perseus import perseus_solve, sample_belief_set
from .pomdp import (
    AlphaVectorPolicy,
    TabularPOMDP,
    belief_update,
    greedy_belief_policy,
    q_value,
    q_values,
    value_of,
)

__version__ = "0.1.0"
