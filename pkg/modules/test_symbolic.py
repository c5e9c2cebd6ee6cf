#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0
import unittest

import numpy as np

from modules.symbolic import (SymbolWindow, CylinderSpec, sample_window, shift, base_distance, cylinder_measure,
                              lazy_symbols, cumulative_table, sample_words, zigzag, BLOCK_SIZE,
                              BadProbabilities, IncomparableExtents)

# This module tests the symbolic base: lazy windows, the shift, the metric and cylinder measures


class TestSymbolWindow(unittest.TestCase):
    def setUp(self):
        """ A three-symbol window and a binary one """
        self.window = sample_window(7, 2, 3, 3)
        self.binary = sample_window(11, 8, 8, 2)

    def test_extents(self):
        self.assertEqual(sample_window(1, 0, 0, 2).past, ())
        self.assertEqual(sample_window(1, 0, 0, 2).future, ())
        self.assertEqual(len(self.window.past), 2)
        self.assertEqual(len(self.window.future), 3)
        for symbol in self.window.past + self.window.future:
            self.assertIn(symbol, (1, 2, 3))

    def test_determinism(self):
        self.assertEqual(sample_window(7, 2, 3, 3), self.window)
        self.assertEqual(self.window.word(-50, 100), sample_window(7, 2, 3, 3).word(-50, 100))
        # Lazy extension far away from the observed window does not change it
        self.window.symbol(10 ** 6)
        self.window.symbol(-10 ** 6)
        self.assertEqual(self.window.word(-2, 5), sample_window(7, 2, 3, 3).word(-2, 5))

    def test_block_boundaries(self):
        cumulative = cumulative_table((0.5, 0.5))
        whole = lazy_symbols(3, 0, -BLOCK_SIZE - 5, BLOCK_SIZE + 5, cumulative)
        pieces = np.concatenate([lazy_symbols(3, 0, -BLOCK_SIZE - 5, 0, cumulative),
                                 lazy_symbols(3, 0, 0, BLOCK_SIZE + 5, cumulative)])
        self.assertTrue(np.array_equal(whole, pieces))
        self.assertEqual(len(whole), 2 * BLOCK_SIZE + 10)

    def test_streams_differ(self):
        first = SymbolWindow(5, 2, stream=0).word(0, 64)
        second = SymbolWindow(5, 2, stream=1).word(0, 64)
        self.assertNotEqual(first, second)

    def test_zigzag(self):
        self.assertEqual([zigzag(n) for n in (0, -1, 1, -2, 2)], [0, 1, 2, 3, 4])

    def test_with_symbols(self):
        prescribed = self.window.with_symbols({0: 1, 1: 2, -1: 3})
        self.assertEqual(prescribed.word(-1, 3), (3, 1, 2))
        # Prescribed symbols travel with the shift
        self.assertEqual(shift(prescribed, 1).symbol(0), 2)

    def test_symbol_frequency(self):
        """ Law of large numbers at 10^6 symbols """
        symbols = SymbolWindow(2026, 2).symbols(0, 10 ** 6)
        self.assertAlmostEqual(float(np.mean(symbols == 1)), 0.5, delta=0.005)

    def test_nonuniform_probabilities(self):
        symbols = SymbolWindow(4, 2, probs=(0.2, 0.8)).symbols(0, 10 ** 5)
        self.assertAlmostEqual(float(np.mean(symbols == 1)), 0.2, delta=0.01)
        with self.assertRaises(BadProbabilities):
            SymbolWindow(4, 2, probs=(0.5, 0.6))
        with self.assertRaises(BadProbabilities):
            SymbolWindow(4, 2, probs=(1.0, 0.0))

    def test_sample_words(self):
        words = sample_words(9, 100, 5, (0.5, 0.5), stream=1)
        self.assertEqual(words.shape, (100, 5))
        self.assertTrue(np.all((words >= 1) & (words <= 2)))
        self.assertTrue(np.array_equal(words, sample_words(9, 100, 5, (0.5, 0.5), stream=1)))
        self.assertFalse(np.array_equal(words, sample_words(9, 100, 5, (0.5, 0.5), stream=2)))


class TestShift(unittest.TestCase):
    def setUp(self):
        """ A binary window """
        self.window = sample_window(42, 4, 4, 2)

    def test_identity_and_inverse(self):
        self.assertIs(shift(self.window, 0), self.window)
        self.assertEqual(shift(shift(self.window, 1), -1), self.window)
        self.assertEqual(shift(shift(self.window, 5), -5).word(-4, 8), self.window.word(-4, 8))

    def test_symbols_move_left(self):
        shifted = shift(self.window, 1)
        self.assertEqual(shifted.symbol(0), self.window.symbol(1))
        self.assertEqual(shifted.origin_offset, self.window.origin_offset + 1)
        for n in range(-10, 10):
            self.assertEqual(shift(self.window, 3).symbol(n), self.window.symbol(n + 3))


class TestBaseDistance(unittest.TestCase):
    def setUp(self):
        """ A window and copies with prescribed disagreements """
        self.window = sample_window(8, 10, 10, 2)

    def flipped(self, position):
        symbol = self.window.symbol(position)
        return self.window.with_symbols({position: 3 - symbol})

    def test_identical(self):
        self.assertEqual(base_distance(self.window, sample_window(8, 10, 10, 2)), 0.0)

    def test_first_disagreement(self):
        self.assertEqual(base_distance(self.window, self.flipped(3)), 0.125)
        self.assertEqual(base_distance(self.window, self.flipped(-3)), 0.125)
        self.assertEqual(base_distance(self.window, self.flipped(0)), 1.0)

    def test_incomparable(self):
        far = self.flipped(100)
        with self.assertRaises(IncomparableExtents) as context:
            base_distance(self.window, far, m_max=64)
        self.assertEqual(context.exception.bound, 2.0 ** -65)

    def test_ultrametric(self):
        windows = [sample_window(seed, 0, 0, 2) for seed in range(12)]
        for a in windows:
            for b in windows:
                for c in windows:
                    self.assertLessEqual(base_distance(a, c), max(base_distance(a, b), base_distance(b, c)))


class TestCylinderMeasure(unittest.TestCase):
    def test_uniform(self):
        self.assertEqual(cylinder_measure(CylinderSpec([(0, 1), (1, 2), (5, 1)]), 2), 0.125)
        self.assertEqual(cylinder_measure(CylinderSpec(), 2), 1.0)
        self.assertEqual(cylinder_measure(CylinderSpec([(0, 1), (0, 2)]), 2), 0.0)
        self.assertEqual(cylinder_measure(CylinderSpec([(0, 1), (0, 1)]), 2), 0.5)

    def test_multiplicativity_and_shift_invariance(self):
        probs = (0.3, 0.7)
        first = CylinderSpec([(0, 1), (2, 2)])
        second = CylinderSpec([(-3, 2), (4, 1)])
        self.assertAlmostEqual(cylinder_measure(first.union(second), 2, probs),
                               cylinder_measure(first, 2, probs) * cylinder_measure(second, 2, probs))
        self.assertAlmostEqual(cylinder_measure(first.translated(17), 2, probs), cylinder_measure(first, 2, probs))

    def test_bad_probabilities(self):
        with self.assertRaises(BadProbabilities):
            cylinder_measure(CylinderSpec([(0, 1)]), 2, (0.5, 0.4))

    def test_contains(self):
        window = sample_window(3, 2, 2, 2)
        spec = CylinderSpec([(-1, window.symbol(-1)), (1, window.symbol(1))])
        self.assertTrue(spec.contains(window))
        self.assertFalse(CylinderSpec([(0, 1), (0, 2)]).contains(window))


if __name__ == '__main__':
    unittest.main()
