"""Disk cache for solved task libraries.

Layout: <cache_dir>/<config-hash>/<task-label>.model.npz plus
<task-label>.policy.npz (the alpha-vector value function) and
<task-label>.aux.npz (MDP value/q and the teammate action table). A
version marker guards the whole directory; mismatches trigger a rebuild.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..mdp import StatePolicy, StateValueFunction
from ..pomdp import AlphaVectorPolicy
from ..serialize import FORMAT_VERSION, FormatError, load_policy, load_pomdp, save_policy, save_pomdp

CACHE_VERSION = 1


def cache_dir(root, key):
    return Path(root) / key


def is_complete(root, key, labels):
    path = cache_dir(root, key)
    meta = path / "meta.json"
    if not meta.exists():
        return False
    try:
        doc = json.loads(meta.read_text())
    except json.JSONDecodeError:
        return False
    if doc.get("cache_version") != CACHE_VERSION or doc.get("format") != FORMAT_VERSION:
        return False
    if doc.get("labels") != list(labels):
        return False
    for label in labels:
        for suffix in (".model.npz", ".policy.npz", ".aux.npz"):
            if not (path / f"{label}{suffix}").exists():
                return False
    return True


def store(root, key, solved_tasks, setup_seconds):
    path = cache_dir(root, key)
    path.mkdir(parents=True, exist_ok=True)
    labels = []
    for task in solved_tasks:
        entry = task.entry
        labels.append(entry.label)
        save_pomdp(path / f"{entry.label}.model.npz", entry.pomdp)
        save_policy(path / f"{entry.label}.policy.npz", entry.policy)
        aux = {
            "mdp_values": entry.mdp_value.values,
            "mdp_q": entry.mdp_value.q,
            "mdp_policy": entry.mdp_policy.probs,
        }
        if entry.teammate_table is not None:
            aux["teammate_table"] = entry.teammate_table
        np.savez_compressed(path / f"{entry.label}.aux.npz", **aux)
    meta = {
        "cache_version": CACHE_VERSION,
        "format": FORMAT_VERSION,
        "labels": labels,
        "setup_seconds": setup_seconds,
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_task(root, key, label):
    """(pomdp, policy, mdp value function, mdp policy, teammate table)."""
    path = cache_dir(root, key)
    pomdp = load_pomdp(path / f"{label}.model.npz")
    policy = load_policy(path / f"{label}.policy.npz")
    try:
        aux = np.load(path / f"{label}.aux.npz", allow_pickle=False)
    except Exception as exc:
        raise FormatError(f"unreadable aux file for {label}: {exc}") from exc
    mdp_value = StateValueFunction(values=aux["mdp_values"], q=aux["mdp_q"])
    mdp_policy = StatePolicy(probs=aux["mdp_policy"])
    teammate_table = aux["teammate_table"] if "teammate_table" in aux.files else None
    return pomdp, policy, mdp_value, mdp_policy, teammate_table


def setup_seconds(root, key):
    meta = cache_dir(root, key) / "meta.json"
    return json.loads(meta.read_text()).get("setup_seconds")
