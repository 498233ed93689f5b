"""Disc target: binary objective and random-heading motion with wall reflection."""

from __future__ import annotations

import numpy as np

from .model import TargetState
from .rng import RngStream

ON_TARGET = -1
OFF_TARGET = 0


def objective(agent_pos, target: TargetState) -> int:
    """-1 inside the closed disc of radius ``target.radius``, else 0."""
    dx, dy = np.asarray(agent_pos, dtype=float) - target.position
    return ON_TARGET if dx * dx + dy * dy <= target.radius * target.radius else OFF_TARGET


def objectives(positions: np.ndarray, target: TargetState) -> np.ndarray:
    """Vectorised ``objective`` over an (N, 2) array."""
    diff = positions - target.position
    d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1]
    return np.where(d2 <= target.radius * target.radius, ON_TARGET, OFF_TARGET)


def reflect(position: np.ndarray, heading: np.ndarray, L: float) -> tuple[np.ndarray, np.ndarray]:
    """Mirror a proposed position back into [0, L]^2, flipping the matching heading components."""
    pos = position.copy()
    head = heading.copy()
    for axis in range(2):
        # a single fold suffices while the step length is below L
        if pos[axis] < 0.0:
            pos[axis] = -pos[axis]
            head[axis] = -head[axis]
        elif pos[axis] > L:
            pos[axis] = 2.0 * L - pos[axis]
            head[axis] = -head[axis]
    return np.clip(pos, 0.0, L), head


def advance_target(
    target: TargetState,
    L: float,
    rng: RngStream,
    hold_range: tuple[int, int] = (50, 200),
) -> TargetState:
    """Move one step along the current heading, then count down the heading hold.

    When the hold runs out a fresh uniform heading and hold length are drawn;
    they take effect from the next step.
    """
    proposed = target.position + target.speed * target.heading
    position, heading = reflect(proposed, target.heading, L)
    hold = target.heading_hold - 1
    if hold <= 0:
        heading = rng.draw_heading()
        hold = rng.draw_int(*hold_range)
    return TargetState(
        position=position,
        heading=heading,
        speed=target.speed,
        radius=target.radius,
        heading_hold=hold,
    )
