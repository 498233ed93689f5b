"""Single runs, parameter sweeps, figure presets and their file outputs."""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import step
from .metrics import MetricsAccumulator, avg_max_speed
from .model import DESK_STEPS, FULL_STEPS, ConfigError, SimConfig, init_swarm, validate
from .rng import RngStream, derive_seed

CSV_COLUMNS = ["run_id", "k", "N_f", "target_speed", "seed", "xi", "time_on_target"]

PRESET_K_GRID = (5, 10, 15, 18, 20, 25, 30, 35, 40, 45, 49)
PRESET_FAST_COUNTS = (0, 5, 10, 15, 20, 25, 30, 40, 50)


@dataclass(frozen=True)
class Cell:
    k: int
    n_fast: int
    target_speed: float


@dataclass
class RunSummary:
    cell: Cell
    xi: float
    time_on_target: float
    histogram: dict
    seed: int
    replicate: int = 0
    cell_index: int = 0
    wall_clock: float = 0.0
    steps: int = 0

    @property
    def run_id(self) -> str:
        return f"c{self.cell_index:03d}-r{self.replicate}"

    def csv_row(self) -> list[str]:
        c = self.cell
        return [self.run_id, str(c.k), str(c.n_fast), repr(c.target_speed), str(self.seed), repr(self.xi), repr(self.time_on_target)]


def simulate(config: SimConfig, observer=None):
    """Run ``config.T_f`` steps; returns the filled MetricsAccumulator.

    ``observer(t, swarm, target, outcome, phi)`` is called after every step
    with the step-t swarm and target, the StepOutcome, and that step's
    heading-bearing samples.
    """
    c = validate(config)
    rng = RngStream(c.seed)
    swarm, target = init_swarm(c, rng)
    acc = MetricsAccumulator(n_agents=c.N, bins=c.histogram_bins, mode=c.fluctuation)
    for t in range(c.T_f):
        out = step(swarm, target, c, rng)
        phi = acc.update(out.swarm.velocities, swarm.positions, target.position, out.detected)
        if observer is not None:
            observer(t, swarm, target, out, phi)
        swarm, target = out.swarm, out.target
    return acc


def run_simulation(config: SimConfig, *, cell: Cell | None = None, replicate: int = 0, cell_index: int = 0) -> RunSummary:
    start = time.perf_counter()
    acc = simulate(config)
    if cell is None:
        cell = Cell(config.k, config.fast_count(), config.target_speed)
    return RunSummary(
        cell=cell,
        xi=acc.xi(avg_max_speed(config.composition)),
        time_on_target=acc.time_on_target(),
        histogram=acc.histogram(),
        seed=config.seed,
        replicate=replicate,
        cell_index=cell_index,
        wall_clock=time.perf_counter() - start,
        steps=config.T_f,
    )


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig = field(default_factory=SimConfig)
    k_values: tuple[int, ...] = (20,)
    fast_counts: tuple[int, ...] = (15,)
    target_speeds: tuple[float, ...] = (3.0,)
    seeds: tuple[int, ...] = (0, 1, 2)
    steps: int = DESK_STEPS
    name: str = "sweep"

    def cells(self) -> list[Cell]:
        return [
            Cell(int(k), int(nf), float(v))
            for k, nf, v in itertools.product(self.k_values, self.fast_counts, self.target_speeds)
        ]

    def cell_config(self, cell: Cell) -> SimConfig:
        return self.base.with_fast_count(cell.n_fast).replace(k=cell.k, target_speed=cell.target_speed, T_f=self.steps)

    def validate(self) -> SweepSpec:
        problems = []
        cells = self.cells()
        if not cells:
            problems.append("sweep has no cells (an axis list is empty)")
        if not self.seeds:
            problems.append("sweep has no seeds")
        for cell in cells:
            try:
                validate(self.cell_config(cell))
            except ConfigError as exc:
                problems.extend(f"cell {cell}: {p}" for p in exc.problems)
        if problems:
            raise ConfigError(problems)
        return self

    def jobs(self) -> list[tuple[SimConfig, Cell, int, int]]:
        out = []
        for ci, cell in enumerate(self.cells()):
            for rep in self.seeds:
                seed = derive_seed(self.base.seed, ci, rep)
                out.append((self.cell_config(cell).replace(seed=seed), cell, rep, ci))
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.to_dict(),
            "k_values": list(self.k_values),
            "fast_counts": list(self.fast_counts),
            "target_speeds": list(self.target_speeds),
            "seeds": list(self.seeds),
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SweepSpec:
        allowed = {"name", "base", "k_values", "fast_counts", "target_speeds", "seeds", "steps"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError([f"unknown sweep key {key!r}" for key in unknown])
        kw = {key: tuple(data[key]) for key in ("k_values", "fast_counts", "target_speeds", "seeds") if key in data}
        if "base" in data:
            kw["base"] = SimConfig.from_dict(data["base"])
        if "steps" in data:
            kw["steps"] = int(data["steps"])
        if "name" in data:
            kw["name"] = str(data["name"])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> SweepSpec:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"sweep spec is not valid JSON: {exc}"]) from None
        return cls.from_dict(data)


def _run_job(job) -> RunSummary:
    config, cell, rep, ci = job
    return run_simulation(config, cell=cell, replicate=rep, cell_index=ci)


def run_sweep(spec: SweepSpec, jobs: int = 1, progress=None) -> list[RunSummary]:
    """Run every (cell, seed) pair; results come back sorted by cell then seed."""
    spec.validate()
    work = spec.jobs()
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for summary in pool.map(_run_job, work):
                results.append(summary)
                if progress:
                    progress(summary)
    else:
        for job in work:
            summary = _run_job(job)
            results.append(summary)
            if progress:
                progress(summary)
    results.sort(key=lambda s: (s.cell_index, s.replicate))
    return results


def figure_configs(name: str, *, full: bool = False, base: SimConfig | None = None) -> SweepSpec:
    """Preset sweeps matching the axes of the published figures.

    ``full`` switches from the desk-scale horizon to the 100,000-step one.
    """
    base = base or SimConfig()
    steps = FULL_STEPS if full else DESK_STEPS
    presets = {
        "fig3": dict(k_values=(20, 40), fast_counts=(15, 0), target_speeds=(3.0, 5.0)),
        "fig4": dict(k_values=(20,), fast_counts=PRESET_FAST_COUNTS, target_speeds=(3.0,)),
        "fig5": dict(k_values=PRESET_K_GRID, fast_counts=(15,), target_speeds=(3.0,)),
        "fig7": dict(k_values=(20,), fast_counts=PRESET_FAST_COUNTS, target_speeds=(3.0,)),
        "fig8": dict(k_values=PRESET_K_GRID, fast_counts=(15, 0), target_speeds=(3.0,)),
    }
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; valid presets: {', '.join(sorted(presets))}")
    seeds = tuple(range(5)) if full else (0, 1, 2)
    return SweepSpec(base=base, seeds=seeds, steps=steps, name=name, **presets[name])


PRESETS = ("fig3", "fig4", "fig5", "fig7", "fig8")


def aggregate(results: list[RunSummary]) -> list[dict]:
    """Mean, min and max of each metric per cell, in cell order."""
    by_cell: dict[int, list[RunSummary]] = {}
    for s in results:
        by_cell.setdefault(s.cell_index, []).append(s)
    rows = []
    for ci in sorted(by_cell):
        runs = by_cell[ci]
        row = {"cell_index": ci, "cell": runs[0].cell, "runs": len(runs)}
        for metric in ("time_on_target", "xi"):
            vals = np.array([getattr(s, metric) for s in runs])
            row[metric] = float(vals.mean())
            row[metric + "_min"] = float(vals.min())
            row[metric + "_max"] = float(vals.max())
        row["histogram"] = np.mean([s.histogram["weights"] for s in runs], axis=0).tolist()
        rows.append(row)
    return rows


def summaries_csv(results: list[RunSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in results:
        writer.writerow(s.csv_row())
    return buf.getvalue()


def histogram_json(summary: RunSummary) -> str:
    return json.dumps(summary.histogram, indent=2) + "\n"


def write_outputs(results: list[RunSummary], out_dir: str | Path, prefix: str) -> Path:
    """Write ``<prefix>.csv`` plus one histogram JSON per run; returns the CSV path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{prefix}.csv"
    csv_path.write_text(summaries_csv(results))
    for s in results:
        c = s.cell
        name = f"{prefix}_c{s.cell_index:03d}_k{c.k}_f{c.n_fast}_v{c.target_speed:g}_s{s.replicate}_hist.json"
        (out / name).write_text(histogram_json(s))
    return csv_path
