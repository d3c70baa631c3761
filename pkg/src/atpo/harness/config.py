"""Experiment configuration: one JSON document per experiment.

Schema (see README for the full description):

    {
      "domain": {
        "name": "night_pursuit" | "pursuit_po" | "overcooked",
        "width": 3, "height": 3,          # pursuit domains
        "epsilon": 0.3,                    # night_pursuit noise level
        "horizon": 50,                     # defaults: 50 pursuit, 75 overcooked
        "tasks": [...]                     # domain-specific task specs
      },
      "agent": "vi"|"perseus"|"atpo"|"bopa"|"assistant"|"random",
      "trials_per_task": 32,
      "seed": 0,
      "target_tasks": "all" | [indices],
      "sweep": {"axis": "none"|"states"|"epsilon"|"num_tasks",
                "values": [...], "pool_size": 32, "library_size": 4},
      "solver": {"num_beliefs": null, "improvement_tol": 1e-4,
                 "max_rounds": 200, "seed": 0},
      "export_traces": true
    }

Task specs: night_pursuit [[c,r],[c,r]] prey pairs; pursuit_po teammate
type names; overcooked {"role": ..., "teammate": ...} objects.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

AGENT_NAMES = ("vi", "perseus", "atpo", "bopa", "assistant", "random")
DOMAIN_NAMES = ("night_pursuit", "pursuit_po", "overcooked")
SWEEP_AXES = ("none", "states", "epsilon", "num_tasks")
DEFAULT_HORIZONS = {"night_pursuit": 50, "pursuit_po": 50, "overcooked": 75}


class ConfigError(ValueError):
    """Raised for unreadable or invalid experiment configurations."""


@dataclass
class SolverConfig:
    num_beliefs: int | None = None
    improvement_tol: float = 1e-4
    max_rounds: int = 200
    seed: int = 0

    def canonical(self):
        return {
            "num_beliefs": self.num_beliefs,
            "improvement_tol": self.improvement_tol,
            "max_rounds": self.max_rounds,
            "seed": self.seed,
        }


@dataclass
class SweepConfig:
    axis: str = "none"
    values: list = field(default_factory=list)
    pool_size: int = 32
    library_size: int = 4


@dataclass
class DomainConfig:
    name: str
    width: int = 5
    height: int = 5
    epsilon: float = 0.3
    horizon: int = 0
    tasks: list = field(default_factory=list)

    def canonical(self):
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "epsilon": self.epsilon,
            "tasks": self.tasks,
        }


@dataclass
class ExperimentConfig:
    domain: DomainConfig
    agent: str = "atpo"
    trials_per_task: int = 32
    seed: int = 0
    target_tasks: object = "all"
    sweep: SweepConfig = field(default_factory=SweepConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    export_traces: bool = True


def _require(mapping, key, kind, where):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{where}: key {key!r} must be {kind}")
    return value


def parse_config(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    dom_doc = _require(doc, "domain", dict, "config")
    name = _require(dom_doc, "name", str, "domain")
    if name not in DOMAIN_NAMES:
        raise ConfigError(f"domain.name must be one of {DOMAIN_NAMES}, got {name!r}")
    domain = DomainConfig(
        name=name,
        width=int(dom_doc.get("width", 5)),
        height=int(dom_doc.get("height", 5)),
        epsilon=float(dom_doc.get("epsilon", 0.3)),
        horizon=int(dom_doc.get("horizon", DEFAULT_HORIZONS[name])),
        tasks=dom_doc.get("tasks", []),
    )
    if domain.horizon <= 0:
        raise ConfigError("domain.horizon must be positive")

    agent = doc.get("agent", "atpo")
    if agent not in AGENT_NAMES:
        raise ConfigError(f"agent must be one of {AGENT_NAMES}, got {agent!r}")
    if agent == "assistant" and name != "overcooked":
        raise ConfigError("the assistant baseline is only defined for overcooked")

    sweep_doc = doc.get("sweep", {})
    axis = sweep_doc.get("axis", "none")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}")
    if axis != "none" and name == "overcooked":
        raise ConfigError("sweeps are defined for the pursuit domains only")
    sweep = SweepConfig(
        axis=axis,
        values=list(sweep_doc.get("values", [])),
        pool_size=int(sweep_doc.get("pool_size", 32)),
        library_size=int(sweep_doc.get("library_size", 4)),
    )
    if axis != "none" and not sweep.values:
        raise ConfigError("sweep.values must be non-empty for a sweep")

    solver_doc = doc.get("solver", {})
    solver = SolverConfig(
        num_beliefs=solver_doc.get("num_beliefs"),
        improvement_tol=float(solver_doc.get("improvement_tol", 1e-4)),
        max_rounds=int(solver_doc.get("max_rounds", 200)),
        seed=int(solver_doc.get("seed", 0)),
    )

    target_tasks = doc.get("target_tasks", "all")
    if target_tasks != "all" and not isinstance(target_tasks, list):
        raise ConfigError("target_tasks must be 'all' or a list of task indices")

    config = ExperimentConfig(
        domain=domain,
        agent=agent,
        trials_per_task=int(doc.get("trials_per_task", 32)),
        seed=int(doc.get("seed", 0)),
        target_tasks=target_tasks,
        sweep=sweep,
        solver=solver,
        export_traces=bool(doc.get("export_traces", True)),
    )
    if config.trials_per_task < 1:
        raise ConfigError("trials_per_task must be at least 1")
    if axis == "none" and not domain.tasks:
        raise ConfigError("domain.tasks must be non-empty when no sweep is configured")
    return config


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def config_hash(domain, solver):
    """Cache key over everything that determines the solved library."""
    blob = json.dumps(
        {"domain": domain.canonical(), "solver": solver.canonical(), "format": 1},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
