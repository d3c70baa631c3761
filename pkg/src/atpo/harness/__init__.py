"""Experiment harness: configuration, solved-library cache, trial runner,
metric summaries, and the command-line interface."""
from .config import ConfigError, ExperimentConfig, config_hash, load_config, parse_config
from .runner import (
    TrialResult,
    entropy_curves,
    export_results,
    export_trace,
    load_trace,
    run_experiment,
    run_trial,
    solve_library,
    summarize,
)
