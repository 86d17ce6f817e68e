import itertools
import unittest

import numpy as np
from scipy.stats import chisquare

from clustering import (
    Clustering,
    cluster_best,
    cluster_best_index,
    kmeans,
    pick_k,
    winner_cluster,
)
from core import ConfigurationError, Individual, Population, RngStream, StateError


def fixed_clustering(assignments, k):
    assignments = np.asarray(assignments)
    return Clustering(
        assignments=assignments,
        centers=np.zeros((k, 1)),
        k=k,
        seed_indices=np.arange(k),
    )


def partition_sse(points, labels):
    total = 0.0
    for label in set(labels):
        members = points[np.asarray(labels) == label]
        total += float(np.sum((members - members.mean(axis=0)) ** 2))
    return total


class PickKTestCase(unittest.TestCase):
    """Test cases for the random cluster count"""

    def test_bounds(self):
        """Test 2 <= k <= floor(sqrt(N_P)) with every value attained"""
        rng = RngStream(8)
        draws = {pick_k(50, rng) for _ in range(2000)}
        self.assertEqual(draws, set(range(2, 8)))

    def test_smallest_population(self):
        """Test that N_P = 4 always yields k = 2"""
        rng = RngStream(0)
        self.assertEqual({pick_k(4, rng) for _ in range(100)}, {2})

    def test_uniform_frequencies(self):
        """Test 10^4 draws at N_P = 100 against a uniform chi-square"""
        rng = RngStream(31)
        draws = [pick_k(100, rng) for _ in range(10_000)]
        observed = np.bincount(draws, minlength=11)[2:]
        self.assertEqual(len(observed), 9)
        self.assertGreater(chisquare(observed).pvalue, 0.01)

    def test_population_too_small(self):
        """Test that N_P < 4 is rejected"""
        with self.assertRaises(ConfigurationError):
            pick_k(3, RngStream(0))


class KMeansTestCase(unittest.TestCase):
    """Test cases for Lloyd's algorithm"""

    def test_one_dimensional_example(self):
        """Test {0, 1, 10, 11} against exhaustive 2-partition enumeration"""
        points = np.array([[0.0], [1.0], [10.0], [11.0]])
        best = min(
            partition_sse(points, labels)
            for labels in itertools.product([0, 1], repeat=4)
            if len(set(labels)) == 2
        )
        for seed in range(20):
            clusters = kmeans(points, 2, RngStream(seed))
            self.assertAlmostEqual(clusters.sse_history[-1], best)
            a = clusters.assignments
            self.assertEqual(a[0], a[1])
            self.assertEqual(a[2], a[3])
            self.assertNotEqual(a[0], a[2])

    def test_single_cluster(self):
        """Test that k = 1 yields the mean of all points"""
        rng = RngStream(1)
        points = rng.normal((12, 3))
        clusters = kmeans(points, 1, rng)
        np.testing.assert_allclose(clusters.centers[0], points.mean(axis=0))
        self.assertTrue(clusters.converged)

    def test_singletons(self):
        """Test that k = n gives every point its own cluster"""
        rng = RngStream(2)
        points = rng.normal((6, 2))
        clusters = kmeans(points, 6, rng)
        self.assertEqual(sorted(clusters.assignments.tolist()), list(range(6)))
        self.assertAlmostEqual(clusters.sse_history[-1], 0.0)

    def test_sse_monotonicity(self):
        """Test non-increasing SSE on 10^3 random instances"""
        rng = RngStream(77)
        for _ in range(1000):
            n = rng.integer(4, 30)
            dimension = rng.integer(1, 5)
            k = rng.integer(2, min(n, 6))
            points = rng.normal((n, dimension)) * 10.0
            clusters = kmeans(points, k, rng)
            history = np.array(clusters.sse_history)
            self.assertTrue(np.all(np.diff(history) <= 1e-9 * (1.0 + history[:-1])))
            self.assertTrue(np.all(clusters.sizes() > 0))
            self.assertLessEqual(clusters.iterations, 100)

    def test_converged_assignment_is_nearest(self):
        """Test that a converged clustering assigns each point to its nearest center"""
        rng = RngStream(5)
        points = rng.normal((40, 3))
        clusters = kmeans(points, 4, rng)
        self.assertTrue(clusters.converged)
        offsets = points[:, None, :] - clusters.centers[None]
        nearest = np.argmin(np.sum(offsets**2, axis=2), axis=1)
        np.testing.assert_array_equal(nearest, clusters.assignments)

    def test_collapsed_points_stop_early(self):
        """Test near-identical points: no cap warning and strictly falling SSE"""
        rng = RngStream(8)
        for _ in range(20):
            centre = rng.uniform(30) * 200.0 - 100.0
            points = centre + rng.normal((50, 30)) * 1e-13
            with self.assertNoLogs("clustering", level="WARNING"):
                clusters = kmeans(points, rng.integer(2, 7), rng)
            self.assertTrue(clusters.converged)
            self.assertLess(clusters.iterations, 100)
            self.assertTrue(np.all(np.diff(clusters.sse_history) < 0.0))
            self.assertTrue(np.all(clusters.sizes() > 0))

    def test_seeds_are_input_points(self):
        """Test that the seed indices are distinct input points"""
        clusters = kmeans(np.arange(20.0).reshape(10, 2), 3, RngStream(4))
        self.assertEqual(len(set(clusters.seed_indices.tolist())), 3)

    def test_invalid_k(self):
        """Test that k outside [1, n] is rejected"""
        with self.assertRaises(ConfigurationError):
            kmeans(np.zeros((3, 2)), 4, RngStream(0))
        with self.assertRaises(ConfigurationError):
            kmeans(np.zeros((3, 2)), 0, RngStream(0))


class WinnerTestCase(unittest.TestCase):
    """Test cases for winner-cluster selection"""

    def test_tie_goes_to_lower_index(self):
        """Test member values {1, 3} vs {2, 2}"""
        clu = fixed_clustering([0, 0, 1, 1], 2)
        self.assertEqual(winner_cluster(clu, [1.0, 3.0, 2.0, 2.0]), 0)

    def test_lowest_mean_wins(self):
        """Test clusters {5} and {1, 9, 20}"""
        clu = fixed_clustering([0, 1, 1, 1], 2)
        self.assertEqual(winner_cluster(clu, [5.0, 1.0, 9.0, 20.0]), 0)

    def test_empty_cluster(self):
        """Test that an empty cluster is reported"""
        clu = fixed_clustering([0, 0, 2], 3)
        with self.assertRaises(StateError):
            winner_cluster(clu, [1.0, 2.0, 3.0])

    def test_cluster_best(self):
        """Test argmin inside the winner cluster"""
        clu = fixed_clustering([0, 1, 0, 0], 2)
        self.assertEqual(cluster_best_index(clu, [4.0, 0.0, 2.0, 7.0], 0), 2)
        self.assertEqual(cluster_best_index(clu, [4.0, 0.0, 2.0, 7.0], 1), 1)

    def test_winner_need_not_hold_global_best(self):
        """Test a tight low-mean cluster beating a wide one with the global best"""
        positions = [
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [50.0, 50.0],
            [60.0, 40.0],
            [40.0, 60.0],
        ]
        values = [1.0, 1.0, 1.0, 0.0, 100.0, 100.0]
        pop = Population(
            [Individual(np.array(p), v) for p, v in zip(positions, values)]
        )
        for seed in range(10):
            clusters = kmeans(pop.positions(), 2, RngStream(seed))
            winner = cluster_best(clusters, pop, winner_cluster(clusters, pop.values()))
            self.assertEqual(winner.fitness, 1.0)
            self.assertIsNot(winner, pop.best())


if __name__ == "__main__":
    unittest.main()
