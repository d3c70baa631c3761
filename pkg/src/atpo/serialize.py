"""Model and policy persistence.

Binary formats are versioned compressed npz archives holding dimensions,
row-major 64-bit kernels, rewards and the discount; they back the harness
model cache. A small line-oriented text format covers hand-written test
POMDPs.
"""
from __future__ import annotations

import numpy as np

from .mdp import ModelError, TabularMDP
from .pomdp import AlphaVectorPolicy, TabularPOMDP

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Raised for unreadable or version-mismatched model files."""


def save_mdp(path, mdp):
    np.savez_compressed(
        path,
        version=FORMAT_VERSION,
        kind="mdp",
        num_states=mdp.num_states,
        num_actions=mdp.num_actions,
        transition=mdp.transition,
        reward=mdp.reward,
        discount=mdp.discount,
    )


def save_pomdp(path, pomdp):
    np.savez_compressed(
        path,
        version=FORMAT_VERSION,
        kind="pomdp",
        num_states=pomdp.num_states,
        num_actions=pomdp.num_actions,
        num_observations=pomdp.num_observations,
        transition=pomdp.base.transition,
        reward=pomdp.base.reward,
        discount=pomdp.base.discount,
        observation=pomdp.observation,
        initial_belief=pomdp.initial_belief,
    )


def _open(path, expect_kind):
    try:
        data = np.load(path, allow_pickle=False)
    except Exception as exc:
        raise FormatError(f"cannot read model file {path}: {exc}") from exc
    version = int(data["version"])
    if version != FORMAT_VERSION:
        raise FormatError(f"format version {version} != supported {FORMAT_VERSION}")
    kind = str(data["kind"])
    if kind != expect_kind:
        raise FormatError(f"expected a {expect_kind} file, found {kind}")
    return data


def load_mdp(path):
    data = _open(path, "mdp")
    return TabularMDP(
        transition=data["transition"],
        reward=data["reward"],
        discount=float(data["discount"]),
    )


def load_pomdp(path):
    data = _open(path, "pomdp")
    base = TabularMDP(
        transition=data["transition"],
        reward=data["reward"],
        discount=float(data["discount"]),
    )
    return TabularPOMDP(
        base=base,
        observation=data["observation"],
        initial_belief=data["initial_belief"],
    )


def save_policy(path, policy):
    np.savez_compressed(
        path,
        version=FORMAT_VERSION,
        kind="policy",
        vectors=policy.vectors,
        actions=policy.actions,
    )


def load_policy(path):
    data = _open(path, "policy")
    return AlphaVectorPolicy(vectors=data["vectors"], actions=data["actions"])


def parse_pomdp_text(text):
    """Parse the hand-written POMDP test format.

    Directives (one per line, '#' comments):
        states N / actions N / observations N / discount G
        start p0 p1 ...
        T a x : p0 p1 ...      transition row, action may be '*'
        O a y : p0 p1 ...      observation row, action may be '*'
        R x : r0 r1 ...        reward row over actions
    """
    dims = {}
    start = None
    t_rows = []
    o_rows = []
    r_rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head in ("states", "actions", "observations"):
                dims[head] = int(rest[0])
            elif head == "discount":
                dims[head] = float(rest[0])
            elif head == "start":
                start = [float(v) for v in rest]
            elif head in ("T", "O"):
                a_tok, idx, colon, *vals = rest
                if colon != ":":
                    raise ValueError("expected ':'")
                row = (a_tok, int(idx), [float(v) for v in vals])
                (t_rows if head == "T" else o_rows).append(row)
            elif head == "R":
                idx, colon, *vals = rest
                if colon != ":":
                    raise ValueError("expected ':'")
                r_rows.append((int(idx), [float(v) for v in vals]))
            else:
                raise ValueError(f"unknown directive {head!r}")
        except (ValueError, IndexError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc

    for key in ("states", "actions", "observations", "discount"):
        if key not in dims:
            raise FormatError(f"missing '{key}' directive")
    X, A, Z = dims["states"], dims["actions"], dims["observations"]
    if start is None:
        raise FormatError("missing 'start' directive")

    T = np.zeros((A, X, X))
    O = np.zeros((A, X, Z))
    R = np.zeros((X, A))
    for a_tok, idx, vals in t_rows:
        for a in range(A) if a_tok == "*" else [int(a_tok)]:
            T[a, idx, :] = vals
    for a_tok, idx, vals in o_rows:
        for a in range(A) if a_tok == "*" else [int(a_tok)]:
            O[a, idx, :] = vals
    for idx, vals in r_rows:
        R[idx, :] = vals

    try:
        base = TabularMDP(transition=T, reward=R, discount=dims["discount"])
        return TabularPOMDP(base=base, observation=O, initial_belief=np.asarray(start))
    except ModelError as exc:
        raise FormatError(str(exc)) from exc


def load_pomdp_text(path):
    with open(path, encoding="utf-8") as fh:
        return parse_pomdp_text(fh.read())
