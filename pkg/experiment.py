"""
Experiment harness: plan, seeds, per-cell execution and CSV artifacts.

A plan is a grid of cells (function, dimension, algorithm). Each cell runs
``runs`` independent optimizations and writes its own files under
``<out>/cells/``; a single-threaded merge step then reads those files back
and writes the summary, verdict, convergence and results-table artifacts.
Numbers are written with 17 significant digits so they parse back
bit-exact.
"""

from __future__ import annotations

import csv
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from benchmarks import (
    CATALOG,
    TransformSet,
    catalog_entry,
    load_transform_directory,
    synth_transforms,
)
from clu_de import ALGORITHM_LABELS, ALGORITHMS
from core import AlgorithmConfig, ConfigurationError, RunTrace
from stats import (
    DEFAULT_ALPHA,
    RunSummary,
    wilcoxon_signed_rank,
    wtl_tally,
)

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (10, 30, 50, 100)
BASELINE, CHALLENGER = "de", "clu_de"
CELLS_DIR = "cells"
SUMMARY_FILE = "summary.csv"
VERDICTS_FILE = "verdicts.csv"
WORKERS_ENV = "CLUDE_WORKERS"

_CELL_FILE = re.compile(r"^F(\d+)_D(\d+)_([a-z_]+)_finals\.csv$")


def format_number(value: float) -> str:
    return format(float(value), ".17g")


# -- plan ------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    function: int
    dimension: int
    algorithm: str

    @property
    def label(self) -> str:
        return f"F{self.function}_D{self.dimension}_{self.algorithm}"

    def finals_path(self, out: Path) -> Path:
        return Path(out) / CELLS_DIR / f"{self.label}_finals.csv"

    def trace_path(self, out: Path) -> Path:
        return Path(out) / CELLS_DIR / f"{self.label}_trace.csv"


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a ``run`` needs; validated on construction."""

    functions: tuple
    dimensions: tuple
    algorithms: tuple = (BASELINE, CHALLENGER)
    runs: int = 25
    seed: int = 0
    transforms: str = "synthetic"
    out: str = "results"
    budget_multiplier: int = 3000
    population_size: int = 50
    scaling_factor: float = 0.5
    crossover_rate: float = 0.9
    num_new_solutions: int = 10
    boundary: str = "clamp"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(int(n) for n in self.functions))
        object.__setattr__(self, "dimensions", tuple(int(d) for d in self.dimensions))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        self.validate()

    def validate(self) -> None:
        if not self.functions:
            raise ConfigurationError("the plan needs at least one function")
        if not self.dimensions:
            raise ConfigurationError("the plan needs at least one dimension")
        if not self.algorithms:
            raise ConfigurationError("the plan needs at least one algorithm")
        for number in self.functions:
            catalog_entry(number)
        unsupported = [d for d in self.dimensions if d not in SUPPORTED_DIMENSIONS]
        if unsupported:
            raise ConfigurationError(
                f"unsupported dimension(s) {unsupported}; choose from "
                f"{', '.join(str(d) for d in SUPPORTED_DIMENSIONS)}"
            )
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigurationError(
                f"unknown algorithm(s) {unknown}; choose from {', '.join(ALGORITHMS)}"
            )
        for name in ("functions", "dimensions", "algorithms"):
            values = getattr(self, name)
            if len(set(values)) != len(values):
                raise ConfigurationError(f"duplicate entries in {name}: {values}")
        if self.runs < 2:
            raise ConfigurationError(f"runs must be at least 2, got {self.runs}")
        if self.budget_multiplier < 1:
            raise ConfigurationError(
                f"budget_multiplier must be positive, got {self.budget_multiplier}"
            )
        if self.workers < 1:
            raise ConfigurationError(f"workers must be positive, got {self.workers}")
        # parameter checks live in AlgorithmConfig
        for dimension in self.dimensions:
            self.algorithm_config(dimension, seed=self.seed)
        parse_transform_source(self.transforms)

    def algorithm_config(self, dimension: int, seed: int) -> AlgorithmConfig:
        return AlgorithmConfig.for_dimension(
            dimension,
            seed=seed,
            budget_multiplier=self.budget_multiplier,
            population_size=self.population_size,
            scaling_factor=self.scaling_factor,
            crossover_rate=self.crossover_rate,
            num_new_solutions=self.num_new_solutions,
            boundary=self.boundary,
        )

    def cells(self) -> list:
        return [
            Cell(function, dimension, algorithm)
            for dimension in self.dimensions
            for function in self.functions
            for algorithm in self.algorithms
        ]

    @property
    def compares(self) -> bool:
        return BASELINE in self.algorithms and CHALLENGER in self.algorithms


# -- configuration ---------------------------------------------------------


def parse_function_ids(value) -> tuple:
    """Accept ``5``, ``F5``, ``f5``, ranges such as ``1-10``, or ``all``."""
    if not isinstance(value, str):
        return tuple(int(v) for v in value)
    text = value.strip()
    if text.lower() == "all":
        return tuple(sorted(CATALOG))
    numbers = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        match = re.fullmatch(r"[fF]?(\d+)(?:\s*-\s*[fF]?(\d+))?", token)
        if match is None:
            raise ConfigurationError(f"cannot parse function id {token!r}")
        low = int(match.group(1))
        high = int(match.group(2) or low)
        if high < low:
            raise ConfigurationError(f"empty function range {token!r}")
        numbers.extend(range(low, high + 1))
    if not numbers:
        raise ConfigurationError("no function ids given")
    return tuple(numbers)


def parse_int_list(value, name: str) -> tuple:
    if not isinstance(value, str):
        return tuple(int(v) for v in value)
    try:
        return tuple(int(t) for t in value.split(",") if t.strip())
    except ValueError:
        raise ConfigurationError(
            f"{name} must be comma-separated integers, got {value!r}"
        ) from None


def parse_name_list(value) -> tuple:
    if not isinstance(value, str):
        return tuple(value)
    names = (t.strip().lower().replace("-", "_") for t in value.split(","))
    return tuple(name for name in names if name)


def _scalar(kind: type, name: str) -> Callable:
    def convert(value):
        try:
            return kind(value)
        except (TypeError, ValueError):
            raise ConfigurationError(
                f"{name} must be {kind.__name__}, got {value!r}"
            ) from None

    return convert


# config-file key -> (plan field, converter)
CONFIG_KEYS = {
    "functions": ("functions", parse_function_ids),
    "dims": ("dimensions", lambda v: parse_int_list(v, "dims")),
    "algos": ("algorithms", parse_name_list),
    "runs": ("runs", _scalar(int, "runs")),
    "seed": ("seed", _scalar(int, "seed")),
    "budget_multiplier": ("budget_multiplier", _scalar(int, "budget_multiplier")),
    "out": ("out", str),
    "transforms": ("transforms", str),
    "population_size": ("population_size", _scalar(int, "population_size")),
    "scaling_factor": ("scaling_factor", _scalar(float, "scaling_factor")),
    "crossover_rate": ("crossover_rate", _scalar(float, "crossover_rate")),
    "num_new_solutions": ("num_new_solutions", _scalar(int, "num_new_solutions")),
    "boundary": ("boundary", str),
    "workers": ("workers", _scalar(int, "workers")),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    settings = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep or not key:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value'")
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"{source}:{number}: unknown key {key!r}")
        settings[key] = value.strip()
    return settings


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text, str(path))


def default_workers() -> int:
    return _scalar(int, WORKERS_ENV)(os.environ.get(WORKERS_ENV, "1"))


def build_plan(file_settings: Optional[dict] = None, **flags) -> ExperimentPlan:
    """Merge defaults, config-file settings and flags (later wins).

    Flags use the config-file key names; ``None`` means "not given".
    """
    merged = {"workers": default_workers()}
    for source in (file_settings or {}, flags):
        for key, value in source.items():
            if value is None:
                continue
            if key not in CONFIG_KEYS:
                raise ConfigurationError(f"unknown setting {key!r}")
            field_name, convert = CONFIG_KEYS[key]
            merged[field_name] = convert(value)
    if "functions" not in merged:
        raise ConfigurationError("no functions given (use --functions)")
    if "dimensions" not in merged:
        raise ConfigurationError("no dimensions given (use --dims)")
    return ExperimentPlan(**merged)


def parse_transform_source(source: str) -> tuple:
    """Return ``("synthetic", seed or None)`` or ``("directory", path)``."""
    if source == "synthetic":
        return "synthetic", None
    if source.startswith("synthetic:"):
        seed = source.split(":", 1)[1]
        if not seed.isdigit():
            raise ConfigurationError(
                f"synthetic transform seed must be an integer, got {seed!r}"
            )
        return "synthetic", int(seed)
    return "directory", source


def resolve_transforms(
    source: str, dimension: int, functions, root_seed: int
) -> TransformSet:
    kind, detail = parse_transform_source(source)
    if kind == "synthetic":
        seed = root_seed if detail is None else detail
        return synth_transforms(dimension, seed, functions)
    return load_transform_directory(detail, dimension, functions)


def derive_seed(
    root_seed: int, function: int, dimension: int, algorithm: str, run: int
) -> int:
    """Child seed as a pure function of the root seed and the cell coordinates."""
    algorithm_index = list(ALGORITHMS).index(algorithm)
    sequence = np.random.SeedSequence(
        root_seed, spawn_key=(function, dimension, algorithm_index, run)
    )
    return int(sequence.generate_state(1, np.uint64)[0])


# -- cell execution --------------------------------------------------------


@dataclass
class CellResult:
    cell: Cell
    seeds: list = field(default_factory=list)
    finals: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    traces: list = field(default_factory=list)


def run_cell(plan: ExperimentPlan, cell: Cell, objective) -> CellResult:
    optimizer = ALGORITHMS[cell.algorithm]
    result = CellResult(cell)
    for run in range(plan.runs):
        seed = derive_seed(
            plan.seed, cell.function, cell.dimension, cell.algorithm, run
        )
        best, trace = optimizer(objective, plan.algorithm_config(cell.dimension, seed))
        result.seeds.append(seed)
        result.finals.append(best.fitness)
        result.evaluations.append(trace.nfe[-1])
        result.traces.append(trace)
        logger.debug("%s run %d: final=%.6e", cell.label, run, best.fitness)
    return result


def write_cell_files(result: CellResult, out) -> tuple:
    cell = result.cell
    finals_path = cell.finals_path(out)
    trace_path = cell.trace_path(out)
    finals_path.parent.mkdir(parents=True, exist_ok=True)

    with open(finals_path, "w", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["run", "seed", "final_value", "evaluations"])
        for run, (seed, value, nfe) in enumerate(
            zip(result.seeds, result.finals, result.evaluations)
        ):
            writer.writerow([run, seed, format_number(value), nfe])

    with open(trace_path, "w", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["run", "nfe", "best"])
        for run, trace in enumerate(result.traces):
            for nfe, best in trace.points():
                writer.writerow([run, nfe, format_number(best)])

    return finals_path, trace_path


def _execute_cell(plan: ExperimentPlan, cell: Cell, objective) -> str:
    write_cell_files(run_cell(plan, cell, objective), plan.out)
    return cell.label


# -- reading cells back ----------------------------------------------------


def read_finals(path) -> pd.DataFrame:
    """
    Load a cell's finals file

    Args:
        path: ``cells/F<n>_D<D>_<algo>_finals.csv``

    Returns:
        pd.DataFrame: One row per run, ordered by run, seeds as uint64
    """
    frame = pd.read_csv(path, dtype={"seed": "uint64"})
    return frame.sort_values("run", kind="stable")


def read_traces(path) -> list:
    frame = pd.read_csv(path)
    traces = []
    for _, group in frame.groupby("run", sort=True):
        traces.append(
            RunTrace(nfe=group["nfe"].astype(int).tolist(), best=group["best"].tolist())
        )
    return traces


def discover_cells(out) -> list:
    cells_dir = Path(out) / CELLS_DIR
    if not cells_dir.is_dir():
        raise ConfigurationError(
            f"{out} has no {CELLS_DIR}/ directory; run an experiment first"
        )
    cells = []
    for path in cells_dir.iterdir():
        match = _CELL_FILE.match(path.name)
        if match and match.group(3) in ALGORITHMS:
            cells.append(Cell(int(match.group(1)), int(match.group(2)), match.group(3)))
    if not cells:
        raise ConfigurationError(f"no cell result files found in {cells_dir}")
    order = list(ALGORITHMS)
    return sorted(
        cells, key=lambda c: (c.dimension, c.function, order.index(c.algorithm))
    )


# -- merged artifacts ------------------------------------------------------


def write_summary(summaries: list, out) -> Path:
    path = Path(out) / SUMMARY_FILE
    with open(path, "w", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["function", "dim", "algorithm", "runs", "mean", "stddev"])
        for summary in summaries:
            writer.writerow(
                [
                    summary.function_id,
                    summary.dimension,
                    summary.algorithm,
                    summary.runs,
                    format_number(summary.mean),
                    format_number(summary.stddev),
                ]
            )
    return path


def write_verdicts(verdicts: list, out) -> Path:
    """``verdicts`` holds ``(dimension, ComparisonVerdict)`` pairs."""
    path = Path(out) / VERDICTS_FILE
    with open(path, "w", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["function", "dim", "verdict", "W", "threshold_or_p"])
        for dimension, verdict in verdicts:
            writer.writerow(
                [
                    verdict.function_id,
                    dimension,
                    verdict.verdict.value,
                    format_number(verdict.statistic),
                    format_number(verdict.threshold_or_p),
                ]
            )
    return path


def emit_convergence(traces: dict, out) -> list:
    """Write ``convergence_F<n>_D<D>.csv`` for every ``(function, dimension)`` key.

    ``traces[(function, dimension)]`` maps algorithm name to its run traces.
    Columns are ``nfe`` and one ``<algo>_mean_best`` per algorithm. The
    checkpoints are the nfe grid of the densest trace plus the last nfe of
    every run, so each run's final value appears in the last row; every run
    is carried forward onto that grid and then averaged.
    """
    written = []
    for (function, dimension), by_algorithm in sorted(traces.items()):
        runs = [trace for group in by_algorithm.values() for trace in group]
        if not runs:
            continue
        checkpoints = set(max((trace.nfe for trace in runs), key=len))
        checkpoints.update(trace.nfe[-1] for trace in runs if trace.nfe)
        grid = pd.Index(sorted(checkpoints), name="nfe")
        frame = pd.DataFrame(index=grid)
        for algorithm, group in by_algorithm.items():
            aligned = [
                pd.Series(trace.best, index=trace.nfe).reindex(grid, method="ffill")
                for trace in group
            ]
            frame[f"{algorithm}_mean_best"] = pd.concat(aligned, axis=1).mean(axis=1)
        path = Path(out) / f"convergence_F{function}_D{dimension}.csv"
        frame.reset_index().to_csv(path, index=False, float_format="%.17g")
        written.append(path)
    return written


def _mean_std(summary: Optional[RunSummary]) -> str:
    if summary is None:
        return "-"
    return f"{summary.mean:.2E} ({summary.stddev:.2E})"


def write_results_tables(summaries: list, verdicts: list, out) -> list:
    """One ``results_table_D<D>.md`` per dimension, with a w/t/l footer."""
    written = []
    for dimension in sorted({s.dimension for s in summaries}):
        cells = {
            (s.function_id, s.algorithm): s
            for s in summaries
            if s.dimension == dimension
        }
        algorithms = [a for a in ALGORITHMS if any(key[1] == a for key in cells)]
        functions = sorted({key[0] for key in cells}, key=lambda label: int(label[1:]))
        marks = {v.function_id: v for d, v in verdicts if d == dimension}

        header = ["Function"] + [ALGORITHM_LABELS[a] for a in algorithms]
        if marks:
            header.append("WSRT")
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "---|" * len(header),
        ]
        for label in functions:
            row = [label] + [_mean_std(cells.get((label, a))) for a in algorithms]
            if marks:
                row.append(marks[label].verdict.value if label in marks else "")
            lines.append("| " + " | ".join(row) + " |")
        if marks:
            wins, ties, losses = wtl_tally(marks.values())
            footer = ["w/t/l"] + [""] * len(algorithms) + [f"{wins}/{ties}/{losses}"]
            lines.append("| " + " | ".join(footer) + " |")

        path = Path(out) / f"results_table_D{dimension}.md"
        path.write_text(f"# D = {dimension}\n\n" + "\n".join(lines) + "\n")
        written.append(path)
    return written


@dataclass
class ExperimentResult:
    summaries: list
    verdicts: list
    files: list


def merge_outputs(
    out,
    cells: list,
    alpha: float = DEFAULT_ALPHA,
    method: str = "auto",
    convergence: bool = True,
) -> ExperimentResult:
    """Read the per-cell files of ``cells`` and write every merged artifact."""
    out = Path(out)
    summaries, finals, traces = [], {}, {}
    for cell in cells:
        frame = read_finals(cell.finals_path(out))
        label = f"F{cell.function}"
        summaries.append(
            RunSummary.from_values(
                label, cell.algorithm, cell.dimension, frame["final_value"]
            )
        )
        values = frame["final_value"].to_numpy()
        finals[(cell.function, cell.dimension, cell.algorithm)] = values
        if convergence:
            group = traces.setdefault((cell.function, cell.dimension), {})
            group[cell.algorithm] = read_traces(cell.trace_path(out))

    verdicts = []
    pairs = sorted({(c.dimension, c.function) for c in cells})
    for dimension, function in pairs:
        baseline = finals.get((function, dimension, BASELINE))
        challenger = finals.get((function, dimension, CHALLENGER))
        if baseline is None or challenger is None:
            continue
        verdict = wilcoxon_signed_rank(
            baseline, challenger, alpha=alpha, function_id=f"F{function}", method=method
        )
        verdicts.append((dimension, verdict))

    files = [write_summary(summaries, out)]
    if verdicts:
        files.append(write_verdicts(verdicts, out))
    if convergence:
        files.extend(emit_convergence(traces, out))
    files.extend(write_results_tables(summaries, verdicts, out))
    return ExperimentResult(summaries=summaries, verdicts=verdicts, files=files)


def run_experiment(
    plan: ExperimentPlan, progress: Optional[Callable[[str], None]] = None
) -> ExperimentResult:
    """Run every cell of ``plan``, then merge.

    With ``plan.workers > 1`` cells run in a process pool; each writes its own
    files, so scheduling order never reaches the merged output.
    """
    out = Path(plan.out)
    (out / CELLS_DIR).mkdir(parents=True, exist_ok=True)
    cells = plan.cells()
    objectives = {}
    for dimension in plan.dimensions:
        transforms = resolve_transforms(
            plan.transforms, dimension, plan.functions, plan.seed
        )
        logger.debug("D=%d transforms from %s", dimension, transforms.provenance)
        for function in plan.functions:
            objectives[(function, dimension)] = transforms.function(function)

    def objective_for(cell: Cell):
        return objectives[(cell.function, cell.dimension)]

    def report(label: str) -> None:
        logger.debug("finished cell %s", label)
        if progress is not None:
            progress(label)

    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = [
                pool.submit(_execute_cell, plan, cell, objective_for(cell))
                for cell in cells
            ]
            for future in futures:
                report(future.result())
    else:
        for cell in cells:
            report(_execute_cell(plan, cell, objective_for(cell)))

    return merge_outputs(out, cells)


def compare_directory(
    out, alpha: float = DEFAULT_ALPHA, method: str = "auto"
) -> ExperimentResult:
    """Recompute summary, verdicts and results tables from existing cell files."""
    cells = discover_cells(out)
    return merge_outputs(out, cells, alpha=alpha, method=method, convergence=False)
