import unittest

import numpy as np

from clu_de import run_de
from core import (
    AlgorithmConfig,
    Bounds,
    ConfigurationError,
    EvaluationCounter,
    Individual,
    Population,
    RngStream,
    evaluate_population,
    initialize_population,
)
from de_engine import (
    MutantVector,
    binomial_crossover,
    de_generation,
    mutate_rand1,
    select,
)


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def line_population(size, dimension=2):
    members = [Individual(np.full(dimension, float(i))) for i in range(size)]
    return Population(members)


class MutationTestCase(unittest.TestCase):
    """Test cases for rand/1 mutation"""

    def test_mutant_formula(self):
        """Test x_r1 + F * (x_r2 - x_r3) with the recorded parents"""
        pop = line_population(6)
        mutant = mutate_rand1(pop, 0, 0.5, RngStream(3))
        r1, r2, r3 = mutant.parents
        expected = pop[r1].position + 0.5 * (pop[r2].position - pop[r3].position)
        np.testing.assert_array_equal(mutant.components, expected)

    def test_zero_scaling_factor(self):
        """Test that F = 0 returns x_r1 exactly"""
        pop = line_population(5)
        mutant = mutate_rand1(pop, 2, 0.0, RngStream(8))
        first_parent = pop[mutant.parents[0]].position
        np.testing.assert_array_equal(mutant.components, first_parent)

    def test_index_distinctness(self):
        """Test 10^5 draws: parents mutually distinct and never the target"""
        pop = line_population(5)
        rng = RngStream(2024)
        violations = 0
        for draw in range(100_000):
            target = draw % 5
            parents = mutate_rand1(pop, target, 0.5, rng).parents
            if len(set(parents)) != 3 or target in parents:
                violations += 1
        self.assertEqual(violations, 0)

    def test_population_too_small(self):
        """Test that N_P < 4 is rejected"""
        with self.assertRaises(ConfigurationError):
            mutate_rand1(line_population(3), 0, 0.5, RngStream(0))

    def test_bad_target(self):
        """Test that an out-of-range target index is rejected"""
        with self.assertRaises(ConfigurationError):
            mutate_rand1(line_population(5), 5, 0.5, RngStream(0))


class CrossoverTestCase(unittest.TestCase):
    """Test cases for binomial crossover"""

    def test_j_rand_guarantee(self):
        """Test that CR = 0 still inherits the j_rand component (10^4 trials)"""
        rng = RngStream(17)
        parent = np.zeros(10)
        mutant = np.ones(10)
        for _ in range(10_000):
            trial = binomial_crossover(parent, mutant, 0.0, rng)
            self.assertGreaterEqual(int(trial.from_mutant.sum()), 1)
            self.assertEqual(trial.components[trial.j_rand], 1.0)

    def test_expected_mutant_share(self):
        """Test CR = 0.9, D = 30 against the binomial mean over 10^4 trials"""
        rng = RngStream(23)
        parent, mutant = np.zeros(30), np.ones(30)
        counts = [
            int(binomial_crossover(parent, mutant, 0.9, rng).from_mutant.sum())
            for _ in range(10_000)
        ]
        # j_rand always, the other 29 genes with probability 0.9
        expected = 1.0 + 29 * 0.9
        sigma = np.sqrt(29 * 0.9 * 0.1 / 10_000)
        self.assertLess(abs(np.mean(counts) - expected), 4.0 * sigma)

    def test_cr_one_takes_mutant(self):
        """Test that CR = 1 copies the whole mutant"""
        trial = binomial_crossover(np.zeros(4), np.ones(4), 1.0, RngStream(1))
        np.testing.assert_array_equal(trial.components, np.ones(4))

    def test_accepts_mutant_vector(self):
        """Test crossover with a MutantVector argument"""
        mutant = MutantVector(components=np.ones(3), parents=(1, 2, 3))
        trial = binomial_crossover(np.zeros(3), mutant, 0.0, RngStream(1))
        self.assertEqual(int(trial.from_mutant.sum()), 1)

    def test_length_mismatch(self):
        """Test that mismatched lengths are rejected"""
        with self.assertRaises(ConfigurationError):
            binomial_crossover(np.zeros(3), np.ones(4), 0.5, RngStream(0))


class SelectionTestCase(unittest.TestCase):
    """Test cases for greedy selection"""

    def test_strictly_better_wins(self):
        """Test that ties keep the parent"""
        parent = Individual(np.zeros(2), 1.0)
        better = Individual(np.ones(2), 0.5)
        self.assertIs(select(parent, better), better)
        self.assertIs(select(parent, Individual(np.ones(2), 1.0)), parent)
        self.assertIs(select(parent, Individual(np.ones(2), 2.0)), parent)


class GenerationTestCase(unittest.TestCase):
    """Test cases for de_generation"""

    def setUp(self):
        self.config = AlgorithmConfig(
            dimension=5,
            nfe_max=1000,
            bounds=Bounds.box(5),
            population_size=8,
            num_new_solutions=2,
            seed=9,
        )
        self.rng = RngStream(self.config.seed)
        self.counter = EvaluationCounter()
        self.pop = evaluate_population(
            initialize_population(self.config, self.rng), sphere, self.counter
        )

    def test_per_slot_elitism(self):
        """Test that no slot gets worse and the input is untouched"""
        before = self.pop.values().copy()
        after = de_generation(self.pop, sphere, self.config, self.rng, self.counter)
        self.assertTrue(np.all(after.values() <= before))
        np.testing.assert_array_equal(self.pop.values(), before)
        self.assertEqual(after.generation, 1)

    def test_consumes_population_size_evaluations(self):
        """Test exactly N_P evaluations per sweep"""
        start = self.counter.count
        de_generation(self.pop, sphere, self.config, self.rng, self.counter)
        self.assertEqual(self.counter.count - start, 8)

    def test_positions_stay_in_box(self):
        """Test that repaired trials remain inside the bounds"""
        pop = self.pop
        for _ in range(20):
            pop = de_generation(pop, sphere, self.config, self.rng, self.counter)
        self.assertTrue(np.all(np.abs(pop.positions()) <= 100.0))


class ReplayTestCase(unittest.TestCase):
    """Test a two-generation DE run against raw PCG64 draws"""

    def test_two_generation_replay(self):
        """Test N_P = 4, D = 2 replayed draw by draw"""
        config = AlgorithmConfig(
            dimension=2,
            nfe_max=12,
            bounds=Bounds.box(2),
            population_size=4,
            num_new_solutions=1,
            seed=2024,
        )
        _, trace = run_de(sphere, config)

        raw = np.random.Generator(np.random.PCG64(np.random.SeedSequence(2024)))
        lower, upper = np.full(2, -100.0), np.full(2, 100.0)
        positions = [lower + (upper - lower) * raw.random(2) for _ in range(4)]
        values = [sphere(p) for p in positions]
        expected = [min(values)]
        for _ in range(2):
            for i in range(4):
                picks = raw.choice(3, size=3, replace=False)
                r1, r2, r3 = np.where(picks >= i, picks + 1, picks)
                mutant = positions[r1] + 0.5 * (positions[r2] - positions[r3])
                mutant = np.clip(mutant, lower, upper)
                j_rand = int(raw.integers(0, 2))
                mask = raw.random(2) <= 0.9
                mask[j_rand] = True
                trial = np.where(mask, mutant, positions[i])
                value = sphere(trial)
                if value < values[i]:
                    positions[i], values[i] = trial, value
            expected.append(min(values))

        self.assertEqual(trace.nfe, [4, 8, 12])
        self.assertEqual(trace.best, expected)


if __name__ == "__main__":
    unittest.main()
