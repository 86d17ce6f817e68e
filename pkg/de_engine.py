"""
Canonical DE/rand/1/bin operators and the generation sweep built from them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from core import (
    AlgorithmConfig,
    ConfigurationError,
    EvaluationCounter,
    Individual,
    Objective,
    Population,
    RngStream,
    evaluate_and_count,
    repair_with,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MutantVector:
    """Output of a mutation draw, with the parent indices that produced it."""

    components: np.ndarray
    parents: tuple


@dataclass(frozen=True, eq=False)
class TrialVector:
    """Crossover result; ``from_mutant[j]`` marks mutant-origin components."""

    components: np.ndarray
    from_mutant: np.ndarray
    j_rand: int


def mutate_rand1(
    pop: Population, target_index: int, F: float, rng: RngStream
) -> MutantVector:
    """Return ``x_r1 + F * (x_r2 - x_r3)``.

    r1, r2 and r3 are mutually distinct and all differ from ``target_index``.
    """
    size = len(pop)
    if size < 4:
        raise ConfigurationError(
            f"rand/1 mutation needs a population of at least 4, got {size}"
        )
    if not 0 <= target_index < size:
        raise ConfigurationError(
            f"target index {target_index} outside population of {size}"
        )
    r1, r2, r3 = rng.distinct(size, 3, exclude=target_index)
    components = pop[r1].position + F * (pop[r2].position - pop[r3].position)
    return MutantVector(components=components, parents=(int(r1), int(r2), int(r3)))


def binomial_crossover(
    parent: np.ndarray, mutant, CR: float, rng: RngStream
) -> TrialVector:
    """Binomial crossover.

    Draws ``j_rand`` first, then one uniform per component; component j comes
    from the mutant when ``rand_j <= CR`` or ``j == j_rand``.
    """
    parent = np.asarray(parent, dtype=float)
    mutant = np.asarray(getattr(mutant, "components", mutant), dtype=float)
    if parent.shape != mutant.shape:
        raise ConfigurationError(
            f"parent and mutant lengths differ: {parent.size} vs {mutant.size}"
        )
    dimension = parent.size
    j_rand = rng.integer(0, dimension - 1)
    from_mutant = rng.uniform(dimension) <= CR
    from_mutant[j_rand] = True
    components = np.where(from_mutant, mutant, parent)
    return TrialVector(components=components, from_mutant=from_mutant, j_rand=j_rand)


def select(parent: Individual, trial: Individual) -> Individual:
    """Greedy one-to-one selection; the trial must be strictly better to win."""
    if trial.fitness < parent.fitness:
        return trial
    return parent


def de_generation(
    pop: Population,
    f: Objective,
    config: AlgorithmConfig,
    rng: RngStream,
    counter: EvaluationCounter,
) -> Population:
    """One DE sweep over all targets in index order.

    Survivors are written back immediately, so later targets in the same sweep
    may draw already-replaced members as parents. Consumes exactly N_P
    evaluations. The input population is not modified.
    """
    working = pop.copy()
    improved = 0
    for i in range(len(working)):
        mutant = mutate_rand1(working, i, config.scaling_factor, rng)
        repaired = repair_with(config.boundary, mutant.components, config.bounds)
        trial = binomial_crossover(
            working[i].position, repaired, config.crossover_rate, rng
        )
        candidate = evaluate_and_count(f, Individual(trial.components), counter)
        survivor = select(working[i], candidate)
        if survivor is candidate:
            improved += 1
        working.members[i] = survivor
    working.generation = pop.generation + 1
    logger.debug(
        "generation %d: %d/%d trials accepted",
        working.generation,
        improved,
        len(working),
    )
    return working
