#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0
import math
import unittest

import numpy as np

from modules.fiber_maps import (FiberDomain, AffineMap, RotationMap, SineCircleMap, SemistableMap,
                                make_builtin, apply, compose_word, rotation_number, classify_morse_smale,
                                genericity_check, register_family, family_names, FiberMapError, UnknownFamily,
                                NotADiffeomorphism, OutOfDomain, NotInImage, PreimageUndefined, NotMorseSmale,
                                NonHyperbolicDetected)
from modules.skew import SkewSystem

# This module tests the fiber map families, compositions along words and the circle map analysis


class TestFiberDomain(unittest.TestCase):
    def setUp(self):
        """ Unit circle and the segment [-1, 1] """
        self.circle = FiberDomain.circle(1.0)
        self.segment = FiberDomain.interval(-1.0, 1.0)

    def test_construction(self):
        with self.assertRaises(FiberMapError):
            FiberDomain.interval(1.0, 1.0)
        with self.assertRaises(FiberMapError):
            FiberDomain.circle(0.0)
        self.assertEqual(FiberDomain.from_config(self.segment.to_dict()), self.segment)

    def test_distance(self):
        self.assertAlmostEqual(self.circle.distance(0.95, 0.05), 0.1)
        self.assertAlmostEqual(self.segment.distance(-0.5, 0.5), 1.0)

    def test_bins(self):
        self.assertEqual(self.segment.bin_index(-1.0, 4), 0)
        self.assertEqual(self.segment.bin_index(1.0, 4), 3)
        # Circle bins are centered, so bin 0 covers 0 from both sides
        self.assertEqual(self.circle.bin_index(0.99, 10), 0)
        self.assertEqual(self.circle.bin_index(0.04, 10), 0)
        self.assertEqual(self.circle.bins_meeting(-0.2, 0.2, 10), [0, 1, 2, 8, 9])
        self.assertEqual(self.segment.bins_meeting(-0.1, 0.1, 4), [1, 2])
        self.assertEqual(self.segment.bins_meeting(0.2, 0.2, 4), [2])


class TestFamilies(unittest.TestCase):
    def setUp(self):
        """ One map of each builtin family """
        self.affine = make_builtin("affine", {"lambda": 0.5, "b": 0.1})
        self.rotation = make_builtin("rotation", {"alpha": 0.3})
        self.sine = make_builtin("sine_circle", {"a": 0.0, "b": 0.1 * math.pi})
        self.semistable = make_builtin("semistable")
        self.contraction, self.expansion = make_builtin("example41")

    def test_registry(self):
        for family in ("affine", "rotation", "sine_circle", "semistable", "example41"):
            self.assertIn(family, family_names())
        with self.assertRaises(UnknownFamily):
            make_builtin("tent")
        with self.assertRaises(FiberMapError):
            make_builtin("affine", {"lambda": 0.5})

    def test_register_family(self):
        register_family("steep_affine", lambda params, domain: AffineMap(0.9, params["b"], domain), params=("b",),
                        domain=FiberDomain.interval(0.0, 1.0))
        fiber_map = make_builtin("steep_affine", {"b": 0.05})
        self.assertAlmostEqual(fiber_map.evaluate(0.5), 0.5)
        self.assertIn("steep_affine", family_names())

    def test_diffeomorphism_checks(self):
        with self.assertRaises(NotADiffeomorphism):
            AffineMap(-0.5, 0.5)
        with self.assertRaises(NotADiffeomorphism):
            make_builtin("sine_circle", {"a": 0.0, "b": 1.5})
        with self.assertRaises(NotADiffeomorphism):
            AffineMap(0.5, 0.8).verify()

    def test_inverses(self):
        points = np.linspace(0.0, 1.0, 11, endpoint=False)
        for fiber_map in (self.rotation, self.sine):
            images = fiber_map.evaluate(points)
            self.assertLess(float(np.max(fiber_map.domain.distance(fiber_map.inverse(images), points))), 1e-10)
        self.assertAlmostEqual(self.semistable.inverse(self.semistable.evaluate(2.0)), 2.0, places=10)
        segment = np.linspace(-1.0, 1.0, 41)
        self.assertTrue(np.allclose(self.expansion.inverse(self.expansion.evaluate(segment)), segment, atol=1e-10))

    def test_partial_inverse(self):
        self.assertEqual(self.affine.image(), (0.1, 0.6))
        self.assertAlmostEqual(self.affine.inverse(0.35), 0.5)
        with self.assertRaises(NotInImage):
            self.affine.inverse(0.9)
        self.assertTrue(math.isnan(self.affine.inverse_or_nan(0.9)))

    def test_expansion_shape(self):
        self.assertAlmostEqual(self.expansion.evaluate(0.1), 0.2)
        self.assertAlmostEqual(self.expansion.evaluate(-0.25), -0.5)
        self.assertAlmostEqual(self.expansion.evaluate(0.4), 0.6)
        self.assertAlmostEqual(self.expansion.evaluate(1.0), 0.9)
        self.assertAlmostEqual(self.expansion.evaluate(-1.0), -0.9)
        # The Hermite blend joins with matched slopes
        self.assertAlmostEqual(self.expansion.derivative(0.25 + 1e-9), 2.0, places=5)
        self.assertAlmostEqual(self.expansion.derivative(0.4 - 1e-9), 0.5, places=5)
        self.assertEqual(self.expansion.zone, 0.25)
        self.assertAlmostEqual(self.contraction.evaluate(0.8), 0.4)

    def test_shifted_and_inverted(self):
        shifted = self.sine.shifted(0.02)
        self.assertAlmostEqual(shifted.evaluate(0.25), (self.sine.evaluate(0.25) + 0.02) % 1.0)
        inverse = self.affine.inverted()
        self.assertAlmostEqual(inverse.evaluate(0.35), 0.5)
        self.assertAlmostEqual(inverse.derivative(0.35), 2.0)
        with self.assertRaises(NotInImage):
            inverse.evaluate(0.9)


class TestApplyAndCompose(unittest.TestCase):
    def setUp(self):
        """ Affine pair x/2 + 0.1, x/2 + 0.3 """
        domain = FiberDomain.interval(0.0, 1.0)
        self.system = SkewSystem(domain, [AffineMap(0.5, 0.1, domain), AffineMap(0.5, 0.3, domain)])

    def test_apply(self):
        fiber_map = self.system.maps[0]
        self.assertAlmostEqual(apply(fiber_map, 0.4), 0.3)
        self.assertAlmostEqual(apply(fiber_map, 0.4, "deriv"), 0.5)
        self.assertAlmostEqual(apply(fiber_map, 0.3, "inverse"), 0.4)
        with self.assertRaises(OutOfDomain):
            apply(fiber_map, 1.5)
        with self.assertRaises(FiberMapError):
            apply(fiber_map, 0.5, "square")

    def test_compose(self):
        # f_2(f_1(0)) = 0.05 + 0.3
        self.assertAlmostEqual(compose_word(self.system, (1, 2), 0.0), 0.35)
        self.assertAlmostEqual(compose_word(self.system, (1, 2), 0.35, "backward"), 0.0)
        self.assertAlmostEqual(compose_word(self.system, (), 0.7), 0.7)

    def test_preimage_undefined(self):
        with self.assertRaises(PreimageUndefined) as context:
            compose_word(self.system, (1, 2), 0.95, "backward")
        self.assertEqual(context.exception.step, 1)
        with self.assertRaises(PreimageUndefined) as context:
            compose_word(self.system, (1, 1), 0.12, "backward")
        self.assertEqual(context.exception.step, 2)


class TestCircleAnalysis(unittest.TestCase):
    def setUp(self):
        """ Sine circle map with a source at 0 and a sink at 1/2 """
        self.sine = SineCircleMap(0.0, 0.1 * math.pi)

    def test_rotation_number(self):
        self.assertAlmostEqual(rotation_number(RotationMap(0.3), 1000), 0.3, places=9)
        self.assertLess(rotation_number(self.sine, 1000), 1e-3)
        with self.assertRaises(FiberMapError):
            rotation_number(AffineMap(0.5, 0.1))

    def test_morse_smale(self):
        records = classify_morse_smale(self.sine, max_period=3)
        self.assertEqual(len(records), 2)
        kinds = {record.kind: record for record in records}
        self.assertAlmostEqual(kinds["sink"].point, 0.5, places=9)
        self.assertAlmostEqual(kinds["sink"].multiplier, 1 - 0.1 * math.pi, places=9)
        self.assertAlmostEqual(kinds["source"].point, 0.0, places=9)
        self.assertAlmostEqual(kinds["source"].multiplier, 1 + 0.1 * math.pi, places=9)

    def test_not_morse_smale(self):
        with self.assertRaises(NotMorseSmale):
            classify_morse_smale(RotationMap(math.sqrt(2) - 1), max_period=4)
        with self.assertRaises(NonHyperbolicDetected):
            classify_morse_smale(SemistableMap(), max_period=2)

    def test_genericity(self):
        generic = SkewSystem(FiberDomain.circle(1.0), [self.sine, RotationMap(0.37)])
        self.assertTrue(genericity_check(generic, max_period=2).passed)
        degenerate = SkewSystem(FiberDomain.circle(1.0), [self.sine, RotationMap(0.5)])
        result = genericity_check(degenerate, max_period=2)
        self.assertFalse(result.passed)
        self.assertEqual(len(result.witnesses), 2)


class TestMapProperties(unittest.TestCase):
    PAIRS = 10_000
    STEP = 1e-5

    def setUp(self):
        """ Every builtin map with a seeded generator """
        contraction, expansion = make_builtin("example41")
        self.maps = {
            "affine": make_builtin("affine", {"lambda": 0.5, "b": 0.1}),
            "rotation": make_builtin("rotation", {"alpha": 0.3}),
            "sine_circle": make_builtin("sine_circle", {"a": 0.0, "b": 0.1 * math.pi}),
            "semistable": make_builtin("semistable"),
            "example41 f_1": contraction,
            "example41 f_2": expansion,
        }
        self.rng = np.random.default_rng(2026)

    def _points(self, fiber_map, size, margin=0.0):
        domain = fiber_map.domain
        return self.rng.uniform(domain.lo + margin, domain.hi - margin, size)

    def _pairs(self, fiber_map):
        first, second = self._points(fiber_map, self.PAIRS), self._points(fiber_map, self.PAIRS)
        distinct = first != second
        return np.minimum(first, second)[distinct], np.maximum(first, second)[distinct]

    def test_monotone(self):
        for name, fiber_map in self.maps.items():
            with self.subTest(family=name):
                low, high = self._pairs(fiber_map)
                self.assertTrue(np.all(fiber_map.lift(low) < fiber_map.lift(high)))

    def test_derivative_matches_central_difference(self):
        for name, fiber_map in self.maps.items():
            with self.subTest(family=name):
                x = self._points(fiber_map, 2000, margin=self.STEP)
                if name == "example41 f_2":
                    # Only C^1 at the junctions of the blend
                    corners = np.abs(np.abs(x)[:, None] - np.array([fiber_map.zone, fiber_map.knee]))
                    x = x[corners.min(axis=1) > 10 * self.STEP]
                difference = (fiber_map.lift(x + self.STEP) - fiber_map.lift(x - self.STEP)) / (2 * self.STEP)
                self.assertLess(np.max(np.abs(difference - fiber_map.derivative(x))), 1e-7)

    def test_lipschitz_bound(self):
        for name, fiber_map in self.maps.items():
            with self.subTest(family=name):
                low, high = self._pairs(fiber_map)
                spread = np.abs(fiber_map.lift(high) - fiber_map.lift(low))
                self.assertTrue(np.all(spread <= fiber_map.lipschitz_bound * (high - low) + 1e-12))

    def test_inverse_round_trip(self):
        for name, fiber_map in self.maps.items():
            with self.subTest(family=name):
                x = self._points(fiber_map, 2000)
                back = fiber_map.inverse(fiber_map.evaluate(x))
                self.assertLessEqual(np.max(fiber_map.domain.distance(back, x)), 1e-12)

    def test_example41_pair_inverse_near_zero(self):
        contraction, expansion = self.maps["example41 f_1"], self.maps["example41 f_2"]
        x = np.linspace(-0.125, 0.125, 1001)
        self.assertLessEqual(np.max(np.abs(expansion.evaluate(contraction.evaluate(x)) - x)), 1e-12)
        self.assertLessEqual(np.max(np.abs(contraction.evaluate(expansion.evaluate(x)) - x)), 1e-12)


if __name__ == '__main__':
    unittest.main()
