"""Shared grid helpers for the pursuit domains.

Cells are (col, row) tuples; flat indices are row-major. The direction
order (up, down, left, right) also fixes the observation slot order in
Night-time Pursuit and the action numbering in both pursuit domains.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..mdp import ModelError

DIRS = ((0, -1), (0, 1), (-1, 0), (1, 0))  # up, down, left, right
UP, DOWN, LEFT, RIGHT, STAY = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid with optional torus topology and noise level."""

    width: int
    height: int
    toroidal: bool = False
    epsilon: float = 0.0

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise ModelError("grid must be at least 3x3")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ModelError("epsilon must lie in [0, 1]")

    @property
    def num_cells(self):
        return self.width * self.height

    def flat(self, cell):
        return cell[1] * self.width + cell[0]

    def cell(self, flat):
        return (flat % self.width, flat // self.width)

    def contains(self, cell):
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def shift(self, cell, delta):
        """Neighbor cell, or None when the move runs into the boundary."""
        nxt = (cell[0] + delta[0], cell[1] + delta[1])
        if self.toroidal:
            return (nxt[0] % self.width, nxt[1] % self.height)
        return nxt if self.contains(nxt) else None

    def manhattan(self, a, b):
        dx = abs(a[0] - b[0])
        dy = abs(a[1] - b[1])
        if self.toroidal:
            dx = min(dx, self.width - dx)
            dy = min(dy, self.height - dy)
        return dx + dy


def centered_offset(value, size):
    """Torus difference folded into the centered range [-size//2, size//2]."""
    half = size // 2
    return (value + half) % size - half


def greedy_axis_step(offset):
    """Move direction reducing the larger-|axis| first; horizontal on ties.

    offset is (dx, dy) toward the target; returns a DIRS index or STAY when
    the offset is zero.
    """
    dx, dy = offset
    if dx == 0 and dy == 0:
        return STAY
    if abs(dx) >= abs(dy) and dx != 0:
        return RIGHT if dx > 0 else LEFT
    return DOWN if dy > 0 else UP
