"""
Core types for the Clu-DE optimizers.

Holds the error hierarchy, the search box, individuals and populations, the
run configuration, the seeded random stream every algorithm draws from, and
the evaluation bookkeeping that keeps budget accounting honest.

Random numbers come from NumPy's PCG64 bit generator wrapped in
``numpy.random.Generator``. PCG64 output is bit-identical across platforms
for the same seed, and every stochastic decision of a run is derived from a
single root seed, so a run keyed by (seed, config, function) replays exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]
SeedLike = Union[int, Sequence[int], np.random.SeedSequence]

BOUNDARY_POLICIES = ("clamp", "reflect")


class CluDEError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(CluDEError, ValueError):
    """A configuration, plan or argument violates its invariants."""


class EvaluationError(CluDEError, ArithmeticError):
    """An objective function returned a non-finite value."""


class StateError(CluDEError, RuntimeError):
    """An object was used in a state that its contract forbids."""


class TransformLoadError(CluDEError, OSError):
    """A transform data file could not be read or failed validation."""


class StatisticsError(CluDEError, ValueError):
    """Input to a statistical routine is unusable."""


@dataclass(frozen=True, eq=False)
class Bounds:
    """Axis-aligned search box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ConfigurationError(
                f"bounds length mismatch: lower has {lower.size}, "
                f"upper has {upper.size}"
            )
        if lower.size == 0:
            raise ConfigurationError("bounds must have at least one dimension")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ConfigurationError("bounds must be finite")
        if not np.all(lower < upper):
            bad = int(np.flatnonzero(lower >= upper)[0])
            raise ConfigurationError(
                f"bounds require lower < upper; violated at coordinate {bad} "
                f"({lower[bad]} >= {upper[bad]})"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def box(cls, dimension: int, low: float = -100.0, high: float = 100.0) -> "Bounds":
        """The same interval on every coordinate (CEC2017 uses [-100, 100]^D)."""
        if dimension < 1:
            raise ConfigurationError(f"dimension must be positive, got {dimension}")
        return cls(np.full(dimension, float(low)), np.full(dimension, float(high)))

    @property
    def dimension(self) -> int:
        return int(self.lower.size)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, position: np.ndarray) -> bool:
        position = np.asarray(position, dtype=float)
        return bool(np.all(position >= self.lower) and np.all(position <= self.upper))


@dataclass(eq=False)
class Individual:
    """A candidate solution: a position and its (possibly pending) objective value.

    ``value`` is ``None`` until the individual has been evaluated; read it
    through :attr:`fitness`, which refuses to hand out a pending value.
    """

    position: np.ndarray
    value: Optional[float] = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)

    @property
    def evaluated(self) -> bool:
        return self.value is not None

    @property
    def fitness(self) -> float:
        if self.value is None:
            raise StateError("individual has not been evaluated yet")
        return self.value

    @property
    def dimension(self) -> int:
        return int(self.position.size)


@dataclass(eq=False)
class Population:
    """Ordered, fixed-size collection of individuals plus a generation counter."""

    members: list
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, index: int) -> Individual:
        return self.members[index]

    def __iter__(self):
        return iter(self.members)

    def positions(self) -> np.ndarray:
        return np.vstack([member.position for member in self.members])

    def values(self) -> np.ndarray:
        return np.array([member.fitness for member in self.members], dtype=float)

    def best_index(self) -> int:
        # np.argmin returns the first minimum, so ties go to the lowest index
        return int(np.argmin(self.values()))

    def best(self) -> Individual:
        return self.members[self.best_index()]

    def copy(self) -> "Population":
        return Population(members=list(self.members), generation=self.generation)


@dataclass(frozen=True)
class AlgorithmConfig:
    """All parameters of a single optimization run.

    Defaults are the standard benchmark setup:
    N_P = 50, F = 0.5, CR = 0.9, M = 10 and a budget of 3000 * D evaluations.
    """

    dimension: int
    nfe_max: int
    bounds: Bounds
    population_size: int = 50
    scaling_factor: float = 0.5
    crossover_rate: float = 0.9
    num_new_solutions: int = 10
    seed: int = 0
    boundary: str = "clamp"

    def __post_init__(self):
        self.validate()

    @classmethod
    def for_dimension(
        cls, dimension: int, seed: int = 0, budget_multiplier: int = 3000, **overrides
    ) -> "AlgorithmConfig":
        """Build the standard setup for a D-dimensional problem on [-100, 100]^D."""
        if dimension < 1:
            raise ConfigurationError(f"dimension must be positive, got {dimension}")
        bounds = overrides.pop("bounds", None) or Bounds.box(dimension)
        return cls(
            dimension=dimension,
            nfe_max=int(budget_multiplier) * dimension,
            bounds=bounds,
            seed=seed,
            **overrides,
        )

    def validate(self) -> None:
        """Raise :class:`ConfigurationError` if any invariant is violated."""
        if self.dimension < 1:
            raise ConfigurationError(
                f"dimension must be positive, got {self.dimension}"
            )
        if self.bounds.dimension != self.dimension:
            raise ConfigurationError(
                f"bounds have {self.bounds.dimension} coordinates, "
                f"dimension is {self.dimension}"
            )
        if self.population_size < 4:
            raise ConfigurationError(
                "population_size must be at least 4 "
                "(rand/1 needs 3 parents besides the target), "
                f"got {self.population_size}"
            )
        if self.num_new_solutions < 1:
            raise ConfigurationError(
                f"num_new_solutions must be positive, got {self.num_new_solutions}"
            )
        if self.num_new_solutions > self.population_size:
            raise ConfigurationError(
                f"num_new_solutions ({self.num_new_solutions}) cannot exceed "
                f"population_size ({self.population_size})"
            )
        if self.nfe_max < 1:
            raise ConfigurationError(f"nfe_max must be positive, got {self.nfe_max}")
        if not math.isfinite(self.scaling_factor):
            raise ConfigurationError(
                f"scaling_factor must be finite, got {self.scaling_factor}"
            )
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigurationError(
                f"crossover_rate must lie in [0, 1], got {self.crossover_rate}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(
                f"seed must be a 64-bit unsigned integer, got {self.seed}"
            )
        if self.boundary not in BOUNDARY_POLICIES:
            raise ConfigurationError(
                f"boundary must be one of {', '.join(BOUNDARY_POLICIES)}, "
                f"got {self.boundary!r}"
            )


class RngStream:
    """Deterministic random source backed by PCG64.

    The draw protocol is part of the reproducibility contract:

    * ``uniform(size)`` is ``Generator.random(size)``: doubles on [0, 1).
    * ``integer(low, high)`` is ``Generator.integers(low, high + 1)``: both
      ends inclusive.
    * ``distinct(n, k, exclude)`` is ``Generator.choice(m, k, replace=False)``
      with ``m = n`` (or ``n - 1`` when an index is excluded, in which case
      drawn values at or above the excluded index are shifted up by one).
    """

    def __init__(self, seed: SeedLike = 0):
        if isinstance(seed, np.random.SeedSequence):
            sequence = seed
        else:
            sequence = np.random.SeedSequence(seed)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @classmethod
    def for_key(cls, root_seed: int, *key: int) -> "RngStream":
        """A stream derived from ``root_seed`` and an integer key path."""
        return cls(np.random.SeedSequence(root_seed, spawn_key=tuple(key)))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def uniform(self, size: Optional[int] = None):
        return self._generator.random(size)

    def integer(self, low: int, high: int) -> int:
        if high < low:
            raise ConfigurationError(f"empty integer range [{low}, {high}]")
        return int(self._generator.integers(low, high + 1))

    def normal(self, size) -> np.ndarray:
        return self._generator.standard_normal(size)

    def distinct(self, n: int, k: int, exclude: Optional[int] = None) -> np.ndarray:
        """Draw ``k`` distinct indices from ``range(n)``, optionally skipping one."""
        pool = n - 1 if exclude is not None else n
        if k > pool:
            raise ConfigurationError(
                f"cannot draw {k} distinct indices from a pool of {pool}"
            )
        picks = self._generator.choice(pool, size=k, replace=False)
        if exclude is not None:
            picks = np.where(picks >= exclude, picks + 1, picks)
        return picks.astype(int)


class EvaluationCounter:
    """Counts objective calls; one counter per run."""

    def __init__(self):
        self.count = 0

    def increment(self) -> int:
        self.count += 1
        return self.count


@dataclass
class RunTrace:
    """Best-so-far objective value sampled once per generation."""

    nfe: list = field(default_factory=list)
    best: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nfe)

    def record(self, nfe: int, value: float) -> None:
        if self.nfe and nfe <= self.nfe[-1]:
            raise StateError(
                f"trace nfe must increase strictly: {nfe} after {self.nfe[-1]}"
            )
        if self.best:
            value = min(value, self.best[-1])
        self.nfe.append(int(nfe))
        self.best.append(float(value))

    @property
    def final(self) -> float:
        if not self.best:
            raise StateError("trace is empty")
        return self.best[-1]

    def points(self) -> list:
        return list(zip(self.nfe, self.best))


def _objective_name(f: Objective) -> str:
    return getattr(f, "name", None) or getattr(f, "__name__", None) or repr(f)


def repair(position: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Clamp every coordinate into ``[lower[j], upper[j]]``."""
    return np.clip(position, bounds.lower, bounds.upper)


def reflect(position: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Mirror overshooting coordinates back into the box (period 2 * width)."""
    position = np.asarray(position, dtype=float)
    if bounds.contains(position):
        return position.copy()
    width = bounds.width
    folded = np.mod(position - bounds.lower, 2.0 * width)
    folded = np.where(folded > width, 2.0 * width - folded, folded)
    return np.clip(bounds.lower + folded, bounds.lower, bounds.upper)


def repair_with(policy: str, position: np.ndarray, bounds: Bounds) -> np.ndarray:
    """
    Bring a position back into the box with the named boundary policy

    Args:
        policy (str): "clamp" or "reflect"
        position (np.ndarray): Candidate position, possibly outside the box
        bounds (Bounds): Search box

    Returns:
        np.ndarray: A new array inside the box
    """
    if policy == "clamp":
        return repair(position, bounds)
    if policy == "reflect":
        return reflect(position, bounds)
    raise ConfigurationError(f"unknown boundary policy {policy!r}")


def initialize_population(config: AlgorithmConfig, rng: RngStream) -> Population:
    """Draw N_P unevaluated individuals uniformly from the search box.

    Each coordinate is ``lower + (upper - lower) * u`` with ``u`` on [0, 1),
    drawn row by row, one ``uniform(D)`` call per individual.
    """
    config.validate()
    lower, upper = config.bounds.lower, config.bounds.upper
    # keeps the interval half-open even when rounding lands on upper
    ceiling = np.nextafter(upper, lower)
    members = []
    for _ in range(config.population_size):
        position = lower + (upper - lower) * rng.uniform(config.dimension)
        members.append(Individual(np.minimum(position, ceiling)))
    return Population(members=members, generation=0)


def evaluate_and_count(
    f: Objective, ind: Individual, counter: EvaluationCounter
) -> Individual:
    """Evaluate ``ind`` with ``f``, charging exactly one evaluation to ``counter``.

    Returns a new evaluated individual. A non-finite result raises
    :class:`EvaluationError`; the call still counts, since ``f`` ran.
    """
    raw = f(ind.position)
    counter.increment()
    value = float(raw)
    if not math.isfinite(value):
        raise EvaluationError(
            f"objective {_objective_name(f)} returned {value} at "
            f"{np.array2string(ind.position, precision=6, threshold=12)}"
        )
    return Individual(position=ind.position, value=value)


def evaluate_population(
    pop: Population, f: Objective, counter: EvaluationCounter
) -> Population:
    """Evaluate every member in index order."""
    members = [evaluate_and_count(f, member, counter) for member in pop.members]
    return Population(members=members, generation=pop.generation)
