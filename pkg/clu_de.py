"""
Clu-DE: DE/rand/1/bin plus clustering-based mutation and a best-M population
update, and the plain DE baseline it is compared against.

Budget accounting counts every objective call. One Clu-DE iteration costs
N_P + M evaluations (the DE sweep plus the M clustering offspring), so after
G iterations the counter reads N_P + G * (N_P + M). The budget check runs
before each full iteration, so a run may overshoot ``nfe_max`` by at most
N_P + M - 1 evaluations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from clustering import cluster_best, kmeans, pick_k, winner_cluster
from core import (
    AlgorithmConfig,
    ConfigurationError,
    EvaluationCounter,
    Individual,
    Objective,
    Population,
    RngStream,
    RunTrace,
    StateError,
    evaluate_and_count,
    evaluate_population,
    initialize_population,
    repair_with,
)
from de_engine import de_generation

logger = logging.getLogger(__name__)

# offspring rank ahead of incumbents at equal value
_OFFSPRING, _INCUMBENT = 0, 1


@dataclass(frozen=True, eq=False)
class CluOffspringSet:
    members: list

    def __len__(self) -> int:
        return len(self.members)

    def values(self) -> np.ndarray:
        return np.array([member.fitness for member in self.members], dtype=float)


@dataclass(frozen=True)
class ReplacementSet:
    """Population slots (set B) that compete with the clustering offspring."""

    indices: tuple

    def __len__(self) -> int:
        return len(self.indices)


def clustering_mutation(
    winner: Individual,
    pop: Population,
    F: float,
    M: int,
    rng: RngStream,
    f: Objective,
    counter: EvaluationCounter,
    config: AlgorithmConfig,
) -> CluOffspringSet:
    """Create and evaluate M offspring ``winner + F * (x_i1 - x_i2)``.

    i1 and i2 are distinct; the winner itself may be drawn. No crossover is
    applied. Offspring are repaired with the configured boundary policy.
    """
    if M < 1:
        raise ConfigurationError(f"M must be positive, got {M}")
    if len(pop) < 3:
        raise ConfigurationError(
            f"clustering mutation needs a population of at least 3, got {len(pop)}"
        )
    if not winner.evaluated:
        raise StateError("the winner must be evaluated before it serves as base vector")
    base = winner.position
    members = []
    for _ in range(M):
        i1, i2 = rng.distinct(len(pop), 2)
        position = base + F * (pop[i1].position - pop[i2].position)
        position = repair_with(config.boundary, position, config.bounds)
        members.append(evaluate_and_count(f, Individual(position), counter))
    return CluOffspringSet(members=members)


def draw_replacement_set(n_p: int, M: int, rng: RngStream) -> ReplacementSet:
    """
    Draw the population slots that the offspring compete for

    Args:
        n_p (int): Population size
        M (int): Number of slots, at most n_p
        rng (RngStream): Stream the M distinct indices come from

    Returns:
        ReplacementSet: M distinct slot indices in draw order
    """
    if M > n_p:
        raise ConfigurationError(f"M ({M}) cannot exceed the population size ({n_p})")
    return ReplacementSet(indices=tuple(int(i) for i in rng.distinct(n_p, M)))


def merge_best(
    pop: Population, offspring: CluOffspringSet, replacement: ReplacementSet
) -> Population:
    """Keep the best M of offspring plus the B members and write them into B.

    Candidates rank by value, then offspring before incumbents, then lower
    index. Surviving incumbents stay in their own slots; surviving offspring
    fill the vacated slots in rank order, lowest slot first.
    """
    M = len(replacement)
    candidates = [
        (member.fitness, _OFFSPRING, j, member)
        for j, member in enumerate(offspring.members)
    ]
    candidates += [
        (pop[slot].fitness, _INCUMBENT, slot, pop[slot]) for slot in replacement.indices
    ]
    candidates.sort(key=lambda candidate: candidate[:3])
    survivors = candidates[:M]

    kept_slots = {index for _, source, index, _ in survivors if source == _INCUMBENT}
    vacated = sorted(slot for slot in replacement.indices if slot not in kept_slots)
    newcomers = [member for _, source, _, member in survivors if source == _OFFSPRING]

    updated = pop.copy()
    for slot, member in zip(vacated, newcomers):
        updated.members[slot] = member
    return updated


def gpba_update(
    pop: Population, offspring: CluOffspringSet, M: int, rng: RngStream
) -> Population:
    """Draw B (M random slots), then let the best M of offspring and B fill B."""
    if len(offspring) != M:
        raise ConfigurationError(f"expected {M} offspring, got {len(offspring)}")
    replacement = draw_replacement_set(len(pop), M, rng)
    return merge_best(pop, offspring, replacement)


def _initial_population(
    f: Objective, config: AlgorithmConfig, rng: RngStream, counter: EvaluationCounter
) -> Population:
    return evaluate_population(initialize_population(config, rng), f, counter)


def run_clu_de(f: Objective, config: AlgorithmConfig) -> tuple:
    """Run Clu-DE until the evaluation budget is spent.

    Returns ``(best, trace)``: the best member of the final population and the
    best-so-far value recorded after initialization and after every iteration.
    """
    config.validate()
    rng = RngStream(config.seed)
    counter = EvaluationCounter()
    pop = _initial_population(f, config, rng, counter)
    trace = RunTrace()
    trace.record(counter.count, pop.best().fitness)

    while counter.count < config.nfe_max:
        pop = de_generation(pop, f, config, rng, counter)
        k = pick_k(len(pop), rng)
        clusters = kmeans(pop.positions(), k, rng)
        winner = cluster_best(clusters, pop, winner_cluster(clusters, pop.values()))
        offspring = clustering_mutation(
            winner,
            pop,
            config.scaling_factor,
            config.num_new_solutions,
            rng,
            f,
            counter,
            config,
        )
        pop = gpba_update(pop, offspring, config.num_new_solutions, rng)
        trace.record(counter.count, pop.best().fitness)
        logger.debug(
            "clu_de generation %d: nfe=%d k=%d best=%.6e",
            pop.generation,
            counter.count,
            k,
            trace.final,
        )

    return pop.best(), trace


def run_de(f: Objective, config: AlgorithmConfig) -> tuple:
    """Run plain DE/rand/1/bin with the same budget rule as :func:`run_clu_de`."""
    config.validate()
    rng = RngStream(config.seed)
    counter = EvaluationCounter()
    pop = _initial_population(f, config, rng, counter)
    trace = RunTrace()
    trace.record(counter.count, pop.best().fitness)

    while counter.count < config.nfe_max:
        pop = de_generation(pop, f, config, rng, counter)
        trace.record(counter.count, pop.best().fitness)
        logger.debug(
            "de generation %d: nfe=%d best=%.6e",
            pop.generation,
            counter.count,
            trace.final,
        )

    return pop.best(), trace


ALGORITHMS = {
    "de": run_de,
    "clu_de": run_clu_de,
}

ALGORITHM_LABELS = {
    "de": "DE",
    "clu_de": "Clu-DE",
}
