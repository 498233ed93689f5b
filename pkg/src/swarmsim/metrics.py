"""Swarm performance metrics: velocity-fluctuation response, heading-bearing
correlation histogram, and time on target."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


def velocity_fluctuations(velocities) -> np.ndarray:
    v = np.asarray(velocities, dtype=float)
    return v - v.mean(axis=0)


def avg_max_speed(composition) -> float:
    """Count-weighted mean of class speed caps over ``(AgentClass, count)`` pairs."""
    total = sum(n for _, n in composition)
    if total < 1:
        raise ValueError("composition has no agents")
    return sum(n * cls.v_max for cls, n in composition) / total


def _fluctuation_sum(u: np.ndarray, mode: str) -> float:
    if mode == "norm":
        return float(np.hypot(u[:, 0], u[:, 1]).sum())
    if mode == "vector":
        # literal reading: norm of the summed vectors, zero up to rounding
        s = u.sum(axis=0)
        return float(np.hypot(s[0], s[1]))
    raise ValueError(f"unknown fluctuation mode {mode!r}")


def cumulative_fluctuation(trace, v_bar_max: float, mode: str = "norm") -> float:
    """Time- and swarm-averaged fluctuation magnitude, normalised by ``v_bar_max``.

    ``trace`` is a sequence of per-step (N, 2) velocity arrays.
    """
    total = 0.0
    steps = 0
    n = None
    for velocities in trace:
        u = velocity_fluctuations(velocities)
        n = len(u)
        total += _fluctuation_sum(u, mode)
        steps += 1
    if steps == 0:
        raise ValueError("empty trace")
    return total / (n * steps * v_bar_max)


def bearings(positions: np.ndarray, target_pos) -> np.ndarray:
    """Unit vectors from each agent to the target centre; zero for an agent on the centre."""
    t = np.asarray(target_pos, dtype=float) - positions
    norm = np.hypot(t[:, 0], t[:, 1])
    safe = np.where(norm > 0, norm, 1.0)
    return np.where((norm > 0)[:, None], t / safe[:, None], 0.0)


def heading_bearing(v, bearing) -> float:
    v = np.asarray(v, dtype=float)
    speed = np.hypot(v[0], v[1])
    if speed == 0:
        return 0.0
    phi = float(np.dot(v, bearing) / speed)
    return min(1.0, max(-1.0, phi))


def heading_bearings(velocities: np.ndarray, bearing_vecs: np.ndarray) -> np.ndarray:
    speed = np.hypot(velocities[:, 0], velocities[:, 1])
    dot = (velocities * bearing_vecs).sum(axis=1)
    phi = np.where(speed > 0, dot / np.where(speed > 0, speed, 1.0), 0.0)
    return np.clip(phi, -1.0, 1.0)


def bin_edges(bins: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, bins + 1)


def bin_index(phi, bins: int) -> np.ndarray:
    """Bins are half-open ``[lo, hi)`` except the last, which includes +1.

    With an even bin count, 0 opens the upper-middle bin; with an odd count it
    sits inside the centre bin.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any((phi < -1.0) | (phi > 1.0)) or np.any(np.isnan(phi)):
        raise ValueError("heading-bearing samples must lie in [-1, 1]")
    idx = np.floor((phi + 1.0) * (bins / 2.0)).astype(np.intp)
    return np.minimum(idx, bins - 1)


def zero_bin(bins: int) -> int:
    return int(bin_index(0.0, bins))


def histogram_phi(samples, bins: int = 20) -> dict:
    """Time-averaged histogram of per-step, per-agent samples.

    ``samples`` has shape (T_f, N); weights are counts / T_f, so they sum to N.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    counts = np.bincount(bin_index(samples.ravel(), bins), minlength=bins)
    return {"edges": bin_edges(bins).tolist(), "weights": (counts / len(samples)).tolist()}


def time_on_target(flags) -> float:
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        raise ValueError("need at least one step")
    return float(flags.sum() / flags.size)


@dataclass
class MetricsAccumulator:
    """Running totals for one run (or a merged range of steps).

    ``xi_sum`` holds the un-normalised sum of fluctuation magnitudes; ``xi``
    divides by N, steps and the mean speed cap at the end.
    """

    n_agents: int
    bins: int = 20
    mode: str = "norm"
    xi_sum: float = 0.0
    counts: np.ndarray = field(default=None)
    on_target_steps: int = 0
    steps: int = 0

    def __post_init__(self):
        if self.mode not in ("norm", "vector"):
            raise ValueError(f"unknown fluctuation mode {self.mode!r}")
        if self.counts is None:
            self.counts = np.zeros(self.bins, dtype=np.int64)

    def update(self, velocities: np.ndarray, positions: np.ndarray, target_pos, detected: bool) -> np.ndarray:
        """Fold in one step; returns that step's heading-bearing samples."""
        phi = np.empty(len(velocities))
        tx, ty = target_pos
        self.xi_sum += _kernels.fold_metrics(
            velocities[:, 0], velocities[:, 1], positions[:, 0], positions[:, 1], float(tx), float(ty),
            self.bins, self.counts, phi, self.mode == "norm",
        )
        self.on_target_steps += bool(detected)
        self.steps += 1
        return phi

    def merge(self, other: MetricsAccumulator) -> MetricsAccumulator:
        if (self.n_agents, self.bins, self.mode) != (other.n_agents, other.bins, other.mode):
            raise ValueError("cannot merge accumulators with different shapes")
        return MetricsAccumulator(
            n_agents=self.n_agents,
            bins=self.bins,
            mode=self.mode,
            xi_sum=self.xi_sum + other.xi_sum,
            counts=self.counts + other.counts,
            on_target_steps=self.on_target_steps + other.on_target_steps,
            steps=self.steps + other.steps,
        )

    def xi(self, v_bar_max: float) -> float:
        return self.xi_sum / (self.n_agents * self.steps * v_bar_max)

    def time_on_target(self) -> float:
        return self.on_target_steps / self.steps

    def histogram(self) -> dict:
        return {"edges": bin_edges(self.bins).tolist(), "weights": (self.counts / self.steps).tolist()}
