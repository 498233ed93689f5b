"""Domain types, configuration and initial conditions."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import RngStream

FULL_STEPS = 100_000
DESK_STEPS = 20_000


@dataclass(frozen=True)
class AgentClass:
    """A named speed profile. ``v_max`` is in length-units per step."""

    name: str
    v_max: float


SLOW = AgentClass("slow", 1.0)
FAST = AgentClass("fast", 2.6)


@dataclass(frozen=True)
class AgentState:
    id: int
    class_id: int
    position: np.ndarray
    velocity: np.ndarray
    a_R: float
    f: int = 0


@dataclass(frozen=True)
class TargetState:
    position: np.ndarray
    heading: np.ndarray
    speed: float
    radius: float
    heading_hold: int


@dataclass(frozen=True)
class Swarm:
    """Struct-of-arrays state for all agents at one step.

    ``class_idx[i]`` indexes into the config's composition; ``v_max`` is the
    per-agent speed cap broadcast from it.
    """

    positions: np.ndarray  # (N, 2)
    velocities: np.ndarray  # (N, 2)
    a_R: np.ndarray  # (N,)
    class_idx: np.ndarray  # (N,) int
    v_max: np.ndarray  # (N,)
    t: int = 0

    @property
    def n(self) -> int:
        return len(self.positions)

    def agent(self, i: int, f: int = 0) -> AgentState:
        return AgentState(
            id=i,
            class_id=int(self.class_idx[i]),
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            a_R=float(self.a_R[i]),
            f=f,
        )

    def agents(self) -> list[AgentState]:
        return [self.agent(i) for i in range(self.n)]


class ConfigError(ValueError):
    """Raised with every violated invariant listed in ``problems``."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


def _default_composition() -> tuple[tuple[AgentClass, int], ...]:
    return ((FAST, 15), (SLOW, 35))


@dataclass(frozen=True)
class SimConfig:
    L: float = 100.0
    N: int = 50
    composition: tuple[tuple[AgentClass, int], ...] = field(default_factory=_default_composition)
    k: int = 20
    omega: float = 1.0
    c: float = 0.5
    a_R_min: float = 0.375
    a_R_max: float = 1.5
    delta: float = 0.01
    d: int = 6
    repulsion_gain: float = 5.0
    target_speed: float = 3.0
    target_radius: float | None = None  # None -> L / 20
    T_f: int = FULL_STEPS
    seed: int = 0
    heading_hold_range: tuple[int, int] = (50, 200)
    speed_limit: str = "cap"  # "cap" or "divide" (literal v / v_max)
    fluctuation: str = "norm"  # "norm" or "vector"
    histogram_bins: int = 20

    def __post_init__(self):
        comp = tuple((cls, int(n)) for cls, n in self.composition)
        object.__setattr__(self, "composition", comp)
        object.__setattr__(self, "heading_hold_range", tuple(self.heading_hold_range))
        if self.target_radius is None:
            object.__setattr__(self, "target_radius", self.L / 20)

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def with_fast_count(self, n_fast: int) -> SimConfig:
        """Rebalance a two-class composition so the faster class has ``n_fast`` agents."""
        classes = [cls for cls, _ in self.composition]
        if len(classes) != 2:
            raise ConfigError([f"fast-count axis needs exactly two agent classes, got {len(classes)}"])
        slow, fast = sorted(classes, key=lambda c: c.v_max)
        return self.replace(composition=((fast, n_fast), (slow, self.N - n_fast)))

    def fast_count(self) -> int:
        """Agents in any class faster than the slowest listed class."""
        slowest = min(cls.v_max for cls, _ in self.composition)
        return sum(n for cls, n in self.composition if cls.v_max > slowest)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["composition"] = [
            {"name": cls.name, "v_max": cls.v_max, "count": n} for cls, n in self.composition
        ]
        out["heading_hold_range"] = list(self.heading_hold_range)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SimConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError([f"unknown config key {key!r}" for key in unknown])
        data = dict(data)
        if "composition" in data:
            try:
                data["composition"] = tuple(
                    (AgentClass(str(item["name"]), float(item["v_max"])), int(item["count"]))
                    for item in data["composition"]
                )
            except (KeyError, TypeError) as exc:
                raise ConfigError([f"malformed composition entry: {exc}"]) from None
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> SimConfig:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"config is not valid JSON: {exc}"]) from None
        if not isinstance(data, dict):
            raise ConfigError(["config must be a JSON object"])
        return cls.from_dict(data)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def validate(config: SimConfig) -> SimConfig:
    """Return ``config`` unchanged, or raise ConfigError naming every violation."""
    c = config
    problems = []
    if not c.L > 0:
        problems.append(f"arena side L must be positive, got {c.L}")
    if c.N < 3:
        problems.append(f"N must be at least 3, got {c.N}")
    if c.k < 2:
        problems.append(f"degree below 2 (k={c.k})")
    elif c.k > c.N - 1:
        problems.append(f"degree above N-1 (k={c.k}, N={c.N})")
    if not c.composition:
        problems.append("composition is empty")
    total = sum(n for _, n in c.composition)
    if total != c.N:
        problems.append(f"composition counts sum to {total} != N={c.N}")
    for cls, n in c.composition:
        if not cls.v_max > 0:
            problems.append(f"class {cls.name!r} has non-positive v_max {cls.v_max}")
        if n < 0:
            problems.append(f"class {cls.name!r} has negative count {n}")
    if len({cls.name for cls, _ in c.composition}) != len(c.composition):
        problems.append("composition class names are not unique")
    if not 0 < c.a_R_min < c.a_R_max:
        problems.append(f"repulsion bounds need 0 < a_R_min < a_R_max, got [{c.a_R_min}, {c.a_R_max}]")
    if not c.delta > 0:
        problems.append(f"repulsion step delta must be positive, got {c.delta}")
    if c.d < 1:
        problems.append(f"repulsion exponent d must be >= 1, got {c.d}")
    if c.repulsion_gain < 0:
        problems.append(f"repulsion gain must be non-negative, got {c.repulsion_gain}")
    if c.T_f < 1:
        problems.append(f"horizon T_f must be >= 1, got {c.T_f}")
    if not 0 <= c.seed < 2**64:
        problems.append(f"seed must be a 64-bit unsigned integer, got {c.seed}")
    if not c.target_speed >= 0:
        problems.append(f"target speed must be non-negative, got {c.target_speed}")
    if not c.target_radius > 0:
        problems.append(f"target radius must be positive, got {c.target_radius}")
    lo, hi = c.heading_hold_range
    if not 1 <= lo <= hi:
        problems.append(f"heading_hold_range needs 1 <= min <= max, got ({lo}, {hi})")
    if c.speed_limit not in ("cap", "divide"):
        problems.append(f"speed_limit must be 'cap' or 'divide', got {c.speed_limit!r}")
    if c.fluctuation not in ("norm", "vector"):
        problems.append(f"fluctuation must be 'norm' or 'vector', got {c.fluctuation!r}")
    if c.histogram_bins < 1:
        problems.append(f"histogram_bins must be >= 1, got {c.histogram_bins}")
    if problems:
        raise ConfigError(problems)
    return config


def init_swarm(config: SimConfig, rng: RngStream) -> tuple[Swarm, TargetState]:
    """Uniform random placement, zero velocity, maximum repulsion strength.

    Agents are assigned to classes in composition order: the first ``count``
    ids belong to the first class, and so on.
    """
    c = validate(config)
    class_idx = np.repeat(np.arange(len(c.composition)), [n for _, n in c.composition])
    speeds = np.array([cls.v_max for cls, _ in c.composition])
    positions = rng.draw_units((c.N, 2)) * c.L
    swarm = Swarm(
        positions=positions,
        velocities=np.zeros((c.N, 2)),
        a_R=np.full(c.N, c.a_R_max),
        class_idx=class_idx,
        v_max=speeds[class_idx],
        t=0,
    )
    target = TargetState(
        position=rng.draw_units(2) * c.L,
        heading=rng.draw_heading(),
        speed=c.target_speed,
        radius=c.target_radius,
        heading_hold=rng.draw_int(*c.heading_hold_range),
    )
    return swarm, target
