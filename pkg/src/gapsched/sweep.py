"""Parameter sweeps over occupancy, CCR and processor count.

Each cell (axis, value, DAG size, DAG index) is a pure function of the
config, so rows come out identical for any worker count.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .generator import GenParams, OccupancyParams, apply_ccr, generate_dag, generate_preoccupation, restrict, vm_names
from .metrics import normalized_reward
from .periodic import schedule_periodic

AXES = ("occupancy", "ccr", "processors")

RESULT_COLUMNS = [
    "axis", "n_tasks", "occupancy", "ccr", "n_processors", "seed", "nr_percent", "failed_instances", "wall_ms",
]
AGGREGATE_COLUMNS = ["axis", "value", "n_tasks", "runs", "mean_nr", "std_nr"]


def _fracs(values) -> tuple[Fraction, ...]:
    return tuple(Fraction(str(v)) for v in values)


@dataclass(frozen=True)
class SweepConfig:
    dag_sizes: tuple[int, ...] = (10, 20, 30, 40, 50)
    dags_per_size: int = 100
    occupancy_grid: tuple[Fraction, ...] = _fracs(["0.1", "0.2", "0.3", "0.4", "0.5", "0.6"])
    ccr_grid: tuple[Fraction, ...] = _fracs(["0.25", "0.5", "1.0", "1.5", "2.0"])
    processor_grid: tuple[int, ...] = tuple(range(2, 11))
    axes: tuple[str, ...] = AXES
    base_seed: int = 0
    output: Optional[str] = None
    # values held fixed on the axes that do not vary them
    occupancy: Fraction = Fraction(3, 10)
    ccr: Fraction = Fraction(1, 2)
    n_processors: int = 4
    background_period: int = 20
    min_slot: int = 2
    edge_density: float = 0.3
    period_slack: Fraction = Fraction(3, 2)
    n_levels: int = 2
    repetition_factor: int = 1
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        for name in ("dag_sizes", "occupancy_grid", "ccr_grid", "processor_grid", "axes"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if self.dags_per_size < 1:
            raise ValueError("dags_per_size must be >= 1")
        unknown = set(self.axes) - set(AXES)
        if unknown:
            raise ValueError(f"unknown axes {sorted(unknown)}")
        object.__setattr__(self, "occupancy_grid", _fracs(self.occupancy_grid))
        object.__setattr__(self, "ccr_grid", _fracs(self.ccr_grid))
        object.__setattr__(self, "occupancy", Fraction(str(self.occupancy)))
        object.__setattr__(self, "ccr", Fraction(str(self.ccr)))
        object.__setattr__(self, "period_slack", Fraction(str(self.period_slack)))

    def grid(self, axis: str) -> tuple:
        return {"occupancy": self.occupancy_grid, "ccr": self.ccr_grid, "processors": self.processor_grid}[axis]


PAPER_SWEEP = SweepConfig()


def cell_seed(base_seed: int, n_tasks: int, index: int) -> int:
    """Seed shared by every axis value for one DAG, so axis values are paired."""
    state = np.random.SeedSequence([base_seed, n_tasks, index]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) | (int(state[1]) >> 1)


@dataclass(frozen=True)
class Cell:
    axis: str
    n_tasks: int
    occupancy: Fraction
    ccr: Fraction
    n_processors: int
    seed: int


def cells(config: SweepConfig) -> list[Cell]:
    out = []
    for axis in AXES:
        if axis not in config.axes:
            continue
        for value in config.grid(axis):
            for n in config.dag_sizes:
                for i in range(config.dags_per_size):
                    c = Cell(axis, n, config.occupancy, config.ccr, config.n_processors,
                             cell_seed(config.base_seed, n, i))
                    if axis == "occupancy":
                        c = replace(c, occupancy=value)
                    elif axis == "ccr":
                        c = replace(c, ccr=value)
                    else:
                        c = replace(c, n_processors=value)
                    out.append(c)
    return out


def run_cell(config: SweepConfig, cell: Cell) -> dict:
    tick = time.perf_counter()
    # the processor axis draws the largest platform once and keeps a prefix,
    # so adding VMs never changes the ones already there
    full = max(config.processor_grid) if cell.axis == "processors" else cell.n_processors
    platform = generate_preoccupation(
        OccupancyParams(full, cell.occupancy, config.background_period, config.min_slot, cell.seed)
    )
    dag = generate_dag(
        GenParams(
            cell.n_tasks,
            edge_density=config.edge_density,
            n_levels=config.n_levels,
            period_slack=config.period_slack,
            seed=cell.seed,
            n_vms=full,
            period_quantum=config.background_period,
        )
    )
    # CCR is measured against the VMs actually used
    dag, platform = restrict(dag, platform, vm_names(cell.n_processors))
    dag = apply_ccr(dag, cell.ccr, platform)
    hs = schedule_periodic([dag], platform, config.repetition_factor)
    report = normalized_reward(hs, [dag])
    wall = (time.perf_counter() - tick) * 1000
    return {
        "axis": cell.axis,
        "n_tasks": cell.n_tasks,
        "occupancy": _fmt(cell.occupancy),
        "ccr": _fmt(cell.ccr),
        "n_processors": cell.n_processors,
        "seed": cell.seed,
        "nr_percent": f"{float(report.nr_percent):.4f}",
        "failed_instances": report.nullified_instances,
        "wall_ms": f"{wall:.1f}" if config.timing else "",
    }


def _fmt(x: Fraction) -> str:
    return f"{float(x):g}"


def _run(args):
    return run_cell(*args)


def run_sweep(config: SweepConfig) -> list[dict]:
    todo = [(config, c) for c in cells(config)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run, todo, chunksize=max(1, len(todo) // (4 * config.workers))))
    else:
        rows = [_run(t) for t in todo]
    return rows


def axis_value(row: dict) -> str:
    return {"occupancy": row["occupancy"], "ccr": row["ccr"], "processors": str(row["n_processors"])}[row["axis"]]


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Mean and sample standard deviation of NR per (axis, value, size),
    computed from the rounded values exactly as written in the rows."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r["axis"], axis_value(r), int(r["n_tasks"])), []).append(float(r["nr_percent"]))
    out = []
    for (axis, value, n), vals in groups.items():
        out.append(
            {
                "axis": axis,
                "value": value,
                "n_tasks": n,
                "runs": len(vals),
                "mean_nr": f"{statistics.fmean(vals):.4f}",
                "std_nr": f"{statistics.stdev(vals) if len(vals) > 1 else 0.0:.4f}",
            }
        )
    return out


def write_sweep(config: SweepConfig, rows: Sequence[dict], outdir: str | Path) -> tuple[Path, Path]:
    from .io import write_csv

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results, agg = outdir / "results.csv", outdir / "aggregate.csv"
    write_csv(results, RESULT_COLUMNS, ([r[c] for c in RESULT_COLUMNS] for r in rows))
    write_csv(agg, AGGREGATE_COLUMNS, ([a[c] for c in AGGREGATE_COLUMNS] for a in aggregate(rows)))
    return results, agg


def config_to_dict(config: SweepConfig) -> dict:
    d = asdict(config)
    for k, v in d.items():
        if isinstance(v, Fraction):
            d[k] = str(v)
        elif isinstance(v, tuple):
            d[k] = [str(x) if isinstance(x, Fraction) else x for x in v]
    return d


def config_from_dict(doc: dict, base: SweepConfig = PAPER_SWEEP) -> SweepConfig:
    """Overlay ``doc`` on ``base``; unknown keys raise ``ValueError``."""
    known = set(asdict(base))
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown sweep config field(s): {sorted(unknown)}")
    fixed = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    return replace(base, **fixed)
