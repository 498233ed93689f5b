"""One synchronous step of k-nearest-network PSO with adaptive repulsion.

Every per-agent quantity in a step is computed from the step-t snapshot
(positions, velocities, repulsion strengths, objectives, neighbour sets) and
committed together, so agent processing order cannot matter. The scalar
helpers below (``select_nbest``, ``pso_velocity`` ...) are the reference
definitions; ``step`` evaluates the same expressions in compiled loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import SimConfig, Swarm, TargetState
from .rng import RngStream
from .target import ON_TARGET, advance_target, objectives
from .topology import knn

# Separations below this are treated as coincident agents.
COINCIDENT_EPS = 1e-9


@dataclass(frozen=True)
class StepContext:
    positions: np.ndarray
    velocities: np.ndarray
    f: np.ndarray
    neighbors: np.ndarray
    target: TargetState
    t: int = 0
    v_max: np.ndarray | None = None
    rng: RngStream | None = None


@dataclass(frozen=True)
class StepOutcome:
    swarm: Swarm
    target: TargetState
    f: np.ndarray  # objectives evaluated on the step-t snapshot

    @property
    def detected(self) -> bool:
        return bool((self.f == ON_TARGET).any())


def select_nbest(i: int, ctx: StepContext) -> np.ndarray:
    if ctx.f[i] == ON_TARGET:
        return ctx.positions[i]
    for j in ctx.neighbors[i]:
        if ctx.f[j] == ON_TARGET:
            return ctx.positions[j]
    return ctx.positions[i]


def pso_velocity(v, x, nbest, omega: float, c: float, r: float) -> np.ndarray:
    v, x, nbest = (np.asarray(a, dtype=float) for a in (v, x, nbest))
    return omega * v + c * r * (nbest - x)


def repulsion_velocity(i: int, ctx: StepContext, a_R: float, d: int, gain: float = 1.0) -> np.ndarray:
    """Sum of inverse-power pushes away from each neighbour of ``i``.

    A neighbour closer than ``COINCIDENT_EPS`` contributes a push of size
    ``v_max[i]`` along a direction keyed by (seed, step, pair), antipodal for
    the two members of the pair.
    """
    out = np.zeros(2)
    scale = gain * a_R
    for j in ctx.neighbors[i]:
        rij = ctx.positions[j] - ctx.positions[i]
        dist = np.sqrt(rij[0] * rij[0] + rij[1] * rij[1])
        if dist < COINCIDENT_EPS:
            out += _coincident_push(i, int(j), ctx)
        else:
            out -= (scale / dist) ** d * (rij / dist)
    return out


def _coincident_push(i: int, j: int, ctx: StepContext) -> np.ndarray:
    cap = 1.0 if ctx.v_max is None else float(ctx.v_max[i])
    if ctx.rng is None:
        # fixed fallback when no stream is attached: split along x by id
        direction = np.array([1.0, 0.0])
    else:
        direction = ctx.rng.keyed_heading(ctx.t, min(i, j), max(i, j))
    sign = 1.0 if i < j else -1.0
    return sign * cap * direction


def update_repulsion_strength(a_R: float, target_seen: bool, delta: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    if target_seen:
        return max(a_R - delta, lo)
    return min(a_R + delta, hi)


def limit_speed(v, v_max: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    speed = np.hypot(v[0], v[1])
    if speed <= v_max:
        return v
    return v * (v_max / speed)


def _clamp_to_arena(x: np.ndarray, v: np.ndarray, L: float) -> tuple[np.ndarray, np.ndarray]:
    low = x < 0.0
    high = x > L
    hit = low | high
    if hit.any():
        x = np.clip(x, 0.0, L)
        v = np.where(hit, 0.0, v)
    return x, v


def step(swarm: Swarm, target: TargetState, config: SimConfig, rng: RngStream) -> StepOutcome:
    """Advance agents and target by one step.

    Order within the step: objectives and neighbour sets from step-t positions,
    N_best, PSO velocity, repulsion with the step-t strength, repulsion-strength
    update, speed limit, integration, arena clamp; finally the target moves.
    """
    c = config
    pos = swarm.positions
    vel = swarm.velocities
    n = len(pos)
    r = rng.keyed_units(swarm.t, n)

    f = np.empty(n, dtype=np.int64)
    nbrs = np.empty((n, c.k), dtype=np.int64)
    v_sum = np.empty((n, 2))
    a_R = np.empty(n)
    coincident = np.empty(n, dtype=np.bool_)
    tx, ty = target.position
    _kernels.agent_velocities(
        pos[:, 0], pos[:, 1], vel[:, 0], vel[:, 1], swarm.a_R, float(tx), float(ty), float(target.radius), r, c.k,
        float(c.omega), float(c.c), int(c.d), float(c.repulsion_gain), float(c.delta), float(c.a_R_min),
        float(c.a_R_max), COINCIDENT_EPS,
        f, nbrs, v_sum[:, 0], v_sum[:, 1], a_R, coincident,
    )
    if coincident.any():
        ctx = StepContext(pos, vel, f, nbrs, target, swarm.t, swarm.v_max, rng)
        for i in np.flatnonzero(coincident):
            for j in nbrs[i]:
                rij = pos[j] - pos[i]
                if np.sqrt(rij[0] * rij[0] + rij[1] * rij[1]) < COINCIDENT_EPS:
                    v_sum[i] += _coincident_push(int(i), int(j), ctx)

    x = np.empty((n, 2))
    v = np.empty((n, 2))
    _kernels.limit_and_move(
        pos[:, 0], pos[:, 1], v_sum[:, 0], v_sum[:, 1], swarm.v_max, float(c.L), c.speed_limit == "divide",
        x[:, 0], x[:, 1], v[:, 0], v[:, 1],
    )
    nxt = Swarm(
        positions=x,
        velocities=v,
        a_R=a_R,
        class_idx=swarm.class_idx,
        v_max=swarm.v_max,
        t=swarm.t + 1,
    )
    return StepOutcome(nxt, advance_target(target, c.L, rng, c.heading_hold_range), f)


def step_reference(swarm: Swarm, target: TargetState, config: SimConfig, rng: RngStream, order=None) -> StepOutcome:
    """Agent-by-agent evaluation of ``step`` built from the scalar helpers.

    ``order`` permutes the processing order; the result must not depend on it.
    Slow; used to cross-check the compiled path.
    """
    c = config
    pos = swarm.positions
    n = len(pos)
    f = objectives(pos, target)
    nbrs = knn(pos, c.k)
    ctx = StepContext(pos, swarm.velocities, f, nbrs, target, swarm.t, swarm.v_max, rng)
    r = rng.keyed_units(swarm.t, n)
    x = np.empty_like(pos)
    v = np.empty_like(pos)
    a_R = np.empty(n)
    for i in (range(n) if order is None else order):
        nbest = select_nbest(i, ctx)
        v_i = pso_velocity(swarm.velocities[i], pos[i], nbest, c.omega, c.c, r[i])
        v_i = v_i + repulsion_velocity(i, ctx, swarm.a_R[i], c.d, c.repulsion_gain)
        seen = f[i] == ON_TARGET or bool((f[nbrs[i]] == ON_TARGET).any())
        a_R[i] = update_repulsion_strength(swarm.a_R[i], seen, c.delta, (c.a_R_min, c.a_R_max))
        if c.speed_limit == "divide":
            v_i = v_i / swarm.v_max[i]
        else:
            v_i = limit_speed(v_i, swarm.v_max[i])
        xi, vi = _clamp_to_arena(pos[i] + v_i, v_i, c.L)
        x[i], v[i] = xi, vi
    nxt = Swarm(x, v, a_R, swarm.class_idx, swarm.v_max, swarm.t + 1)
    return StepOutcome(nxt, advance_target(target, c.L, rng, c.heading_hold_range), f)
