#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0
import unittest

import numpy as np

from modules.fiber_maps import FiberDomain, AffineMap, make_builtin
from modules.skew import SkewSystem, SkewState, run_orbit
from modules.attractor import (CellGrid, CellSet, FiberSubset, dyadic_boundaries, empirical_measure,
                               estimate_statistical_attractor, estimate_milnor_attractor, agreement, fiber_projection,
                               past_words, reconstruct_from_projection, visit_frequency, cylinder_return_stats,
                               fiber_histogram, histogram_drift, AttractorError, EmptyTrace, InsufficientVisits)

# This module tests the attractor lab on the affine pair x/2 + 0.1, x/2 + 0.3, whose attractor
# has the fiber [0.2, 0.4] over the past symbol 1 and [0.4, 0.6] over the past symbol 2


def affine_pair():
    domain = FiberDomain.interval(0.0, 1.0)
    return SkewSystem(domain, [AffineMap(0.5, 0.1, domain), AffineMap(0.5, 0.3, domain)])


class TestCellGrid(unittest.TestCase):
    def setUp(self):
        """ Loads the common system and a grid with two past symbols and one future symbol """
        self.system = affine_pair()
        self.grid = CellGrid(2, 1, 8, self.system.domain, 2)

    def test_sizes(self):
        self.assertEqual(self.grid.n_words, 8)
        self.assertEqual(self.grid.n_cells, 64)
        self.assertEqual(CellGrid.symmetric(3, 16, self.system).word_length, 6)
        with self.assertRaises(AttractorError):
            CellGrid(20, 20, 1024, self.system.domain, 2)
        with self.assertRaises(AttractorError):
            CellGrid(1, 1, 0, self.system.domain, 2)

    def test_word_codes(self):
        self.assertEqual(self.grid.word_code((1, 2, 2)), 3)
        self.assertEqual(self.grid.decode_word(3), ((1, 2), (2,)))
        for code in range(self.grid.n_words):
            past, future = self.grid.decode_word(code)
            self.assertEqual(self.grid.word_code(past + future), code)

    def test_past_words(self):
        self.assertEqual(past_words(2, 0).shape, (1, 0))
        self.assertEqual(past_words(3, 2).tolist()[:4], [[1, 1], [1, 2], [1, 3], [2, 1]])

    def test_dyadic_boundaries(self):
        self.assertEqual(dyadic_boundaries(1000, 100), (100, 500, 750, 875, 938))
        self.assertEqual(dyadic_boundaries(1000, 600), (600, 600, 750, 875, 938))


class TestEstimators(unittest.TestCase):
    def setUp(self):
        """ Loads the common system and one empirical measure on a (1, 1) grid """
        self.system = affine_pair()
        self.grid = CellGrid(1, 1, 16, self.system.domain, 2)
        self.measure = empirical_measure(self.system, self.grid, 11, 8, 2000, 100)

    def test_measure(self):
        self.assertEqual(self.measure.samples, 8)
        self.assertEqual(self.measure.density().shape, (4, 16))
        self.assertEqual(int(self.measure.density().sum()), 8 * 1900)
        self.assertFalse(self.measure.is_empty())
        excess = self.measure.limsup_frequency() - self.measure.tail_frequency()
        self.assertGreaterEqual(excess.min(), -1e-12)
        with self.assertRaises(AttractorError):
            empirical_measure(self.system, self.grid, 11, 8, 100, 100)

    def test_statistical_within_milnor(self):
        statistical = estimate_statistical_attractor(self.system, self.grid, 11, 8, 2000, 100, 0.01, 0.5,
                                                     self.measure)
        milnor = estimate_milnor_attractor(self.system, self.grid, 11, 8, 2000, 100, 0.5, self.measure)
        self.assertFalse(statistical.is_empty())
        self.assertTrue(statistical.issubset(milnor))
        with self.assertRaises(AttractorError):
            estimate_statistical_attractor(self.system, self.grid, 11, 8, 2000, 100, 0.0, 0.5, self.measure)

    def test_cells_follow_past_symbol(self):
        statistical = estimate_statistical_attractor(self.system, self.grid, 11, 8, 2000, 100, 0.01, 0.5,
                                                     self.measure)
        for row in statistical.rows():
            if row["past_word"] == "1":
                self.assertGreaterEqual(row["bin_hi"], 0.2)
                self.assertLessEqual(row["bin_lo"], 0.4)
            else:
                self.assertGreaterEqual(row["bin_hi"], 0.4)
                self.assertLessEqual(row["bin_lo"], 0.6)
        projection = fiber_projection(statistical)
        self.assertEqual(list(projection.indices()), list(range(3, 10)))

    def test_determinism(self):
        again = empirical_measure(self.system, self.grid, 11, 8, 2000, 100)
        for window, counts in enumerate(self.measure.counts):
            self.assertEqual((again.counts[window] != counts).nnz, 0)

    def test_fine_grid_keeps_visited_cells_only(self):
        grid = CellGrid(6, 6, 128, self.system.domain, 2)
        measure = empirical_measure(self.system, grid, 11, 32, 400, 100)
        self.assertEqual(measure.counts[0].shape, (32, grid.n_cells))
        for counts in measure.counts:
            self.assertLessEqual(counts.nnz, 32 * 300)
        self.assertEqual(int(measure.density().sum()), 32 * 300)
        self.assertEqual(measure.mean_tail_frequency([]).shape, (0,))

    def test_histograms(self):
        self.assertAlmostEqual(float(fiber_histogram(self.measure).sum()), 1.0)
        self.assertLess(histogram_drift(self.measure), 0.1)


class TestCellSet(unittest.TestCase):
    def setUp(self):
        """ Loads a small hand-made cell set on a (1, 1) grid """
        self.grid = CellGrid(1, 1, 8, FiberDomain.interval(0.0, 1.0), 2)
        # word (1, 2) is code 1, word (2, 1) is code 2
        self.cells = CellSet(self.grid, [1 * 8 + 3, 2 * 8 + 0, 1 * 8 + 4])

    def test_membership(self):
        self.assertEqual(len(self.cells), 3)
        self.assertIn(11, self.cells)
        self.assertNotIn(12 + 8, self.cells)
        self.assertEqual(list(self.cells.cells), [11, 12, 16])

    def test_dilated(self):
        dilated = self.cells.dilated(1)
        self.assertEqual(sorted(dilated.cells), [10, 11, 12, 13, 16, 17])

    def test_restrict_to_past(self):
        restricted = self.cells.restrict_to_past(1)
        self.assertEqual(restricted.grid.word_length, 1)
        self.assertEqual(sorted(restricted.cells), [3, 4, 8])
        with self.assertRaises(AttractorError):
            self.cells.restrict_to_past(2)

    def test_agreement(self):
        self.assertEqual(agreement(self.cells, self.cells), (1.0, 1.0))
        shifted = CellSet(self.grid, [10, 16])
        self.assertEqual(agreement(shifted, self.cells, dilation=0), (0.5, 1 / 3))
        self.assertEqual(agreement(shifted, self.cells, dilation=1)[0], 1.0)
        with self.assertRaises(AttractorError):
            agreement(self.cells, CellSet(CellGrid(0, 1, 8, self.grid.domain, 2), [1]))

    def test_rows(self):
        rows = self.cells.rows()
        self.assertEqual(rows[0]["past_word"], "1")
        self.assertEqual(rows[0]["future_word"], "2")
        self.assertEqual((rows[0]["bin_lo"], rows[0]["bin_hi"]), (0.375, 0.5))
        self.assertIsNone(rows[0]["freq"])


class TestFiberSubset(unittest.TestCase):
    def setUp(self):
        """ Subsets of a 10-bin circle and of a 10-bin segment """
        self.circle = FiberDomain.circle(1.0)
        self.segment = FiberDomain.interval(0.0, 1.0)

    def test_from_intervals(self):
        subset = FiberSubset.from_intervals(self.segment, 10, [(0.2, 0.45)])
        self.assertEqual(list(subset.indices()), [2, 3, 4])
        self.assertEqual(subset.intervals(), [(0.2, 0.5)])
        self.assertIn(0.35, subset)
        self.assertNotIn(0.55, subset)
        self.assertEqual(subset.exact_intervals, [(0.2, 0.45)])

    def test_wrapping_runs(self):
        subset = FiberSubset.from_bins(self.circle, 10, [0, 1, 9, 5])
        self.assertEqual(subset.runs(), [(9, 1), (5, 5)])
        lo, hi = subset.intervals()[0]
        self.assertAlmostEqual(lo, 0.85)
        self.assertAlmostEqual(hi, 1.15)

    def test_dilate(self):
        subset = FiberSubset.point(self.segment, 10, 0.05)
        self.assertEqual(list(subset.dilate(2).indices()), [0, 1, 2])
        around = FiberSubset.point(self.circle, 10, 0.0).dilate(1)
        self.assertEqual(list(around.indices()), [0, 1, 9])

    def test_set_operations(self):
        small = FiberSubset.from_bins(self.segment, 10, [2, 3])
        large = FiberSubset.from_bins(self.segment, 10, [1, 2, 3, 4])
        self.assertTrue(small.issubset(large))
        self.assertFalse(large.issubset(small))
        self.assertEqual(small.union(large), large)
        self.assertTrue(FiberSubset.full(self.segment, 10).is_full())
        self.assertTrue(FiberSubset(self.segment, 10).is_empty())
        with self.assertRaises(AttractorError):
            small.issubset(FiberSubset.full(self.segment, 20))


class TestReconstruction(unittest.TestCase):
    def setUp(self):
        """ Loads the common system and its statistical attractor on a three-symbol past grid """
        self.system = affine_pair()
        grid = CellGrid(3, 0, 64, self.system.domain, 2)
        self.statistical = estimate_statistical_attractor(self.system, grid, 5, 8, 4000, 100, 0.001, 0.5)

    def test_agrees_with_estimate(self):
        projection = FiberSubset.from_intervals(self.system.domain, 64, [(0.2, 0.6)])
        reconstructed = reconstruct_from_projection(self.system, projection, 3)
        self.assertEqual(reconstructed.grid.to_dict(), {"past_length": 3, "future_length": 0, "bins": 64})
        words = {row["past_word"] for row in reconstructed.rows()}
        self.assertEqual(len(words), 8)
        first, second = agreement(self.statistical, reconstructed, dilation=1)
        self.assertGreaterEqual(first, 0.99)
        self.assertGreaterEqual(second, 0.99)

    def test_empty_projection(self):
        with self.assertRaises(AttractorError):
            reconstruct_from_projection(self.system, FiberSubset(self.system.domain, 64), 3)


class TestVisits(unittest.TestCase):
    def setUp(self):
        """ Loads the common system and its statistical attractor on a (1, 1) grid """
        self.system = affine_pair()
        self.grid = CellGrid(1, 1, 16, self.system.domain, 2)
        self.region = estimate_statistical_attractor(self.system, self.grid, 2, 8, 2000, 100, 0.01, 0.5)

    def test_visit_frequency(self):
        trace = run_orbit(self.system, SkewState.initial(self.system, 13, 0.9), 3000)
        limsup, tail = visit_frequency(trace, self.region, transient=100)
        self.assertGreaterEqual(limsup, tail)
        self.assertGreaterEqual(tail, 0.99)
        with self.assertRaises(EmptyTrace):
            visit_frequency(trace, self.region, transient=5000)
        with self.assertRaises(AttractorError):
            strided = run_orbit(self.system, SkewState.initial(self.system, 13, 0.9), 10, stride=2)
            visit_frequency(strided, self.region)

    def test_cylinder_returns(self):
        region = FiberSubset.full(self.system.domain, 16)
        stats = cylinder_return_stats(self.system, 3, 20000, (1, 2), region)
        self.assertEqual(stats.visits, 20000)
        self.assertAlmostEqual(stats.fraction, 0.25, delta=0.02)
        self.assertEqual(stats.bound, 0.125)
        self.assertEqual(stats.to_dict()["word"], "12")

    def test_cylinder_return_errors(self):
        far = FiberSubset.point(self.system.domain, 16, 0.95)
        with self.assertRaises(InsufficientVisits):
            cylinder_return_stats(self.system, 3, 5000, (1,), far, point=0.5)
        with self.assertRaises(AttractorError):
            cylinder_return_stats(self.system, 3, 5000, (3,), far)

    def test_example41_family_runs(self):
        system = SkewSystem(FiberDomain.interval(-1.0, 1.0), list(make_builtin("example41")))
        grid = CellGrid(1, 1, 32, system.domain, 2)
        measure = empirical_measure(system, grid, 1, 4, 500, 50)
        self.assertEqual(int(measure.density().sum()), 4 * 450)


if __name__ == '__main__':
    unittest.main()
