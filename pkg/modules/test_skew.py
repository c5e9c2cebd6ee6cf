#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0
import os
import unittest
from unittest import mock

import numpy as np

from modules.fiber_maps import FiberDomain, AffineMap, RotationMap, PreimageUndefined
from modules.symbolic import shift
from modules.skew import (SkewSystem, SkewState, step, run_orbit, past_fiber_projection, product_distance,
                          inverse_system, initial_points, ensemble_chunks, sample_groups, run_groups, worker_count,
                          SkewError)

# This module tests the skew product dynamics: single steps, orbits, the past projection and the ensemble engine


class TestSkewSystem(unittest.TestCase):
    def setUp(self):
        """ Loads the common affine pair x/2 + 0.1, x/2 + 0.3 """
        self.domain = FiberDomain.interval(0.0, 1.0)
        self.system = SkewSystem(self.domain, [AffineMap(0.5, 0.1, self.domain), AffineMap(0.5, 0.3, self.domain)])

    def test_construction(self):
        self.assertEqual(self.system.s, 2)
        self.assertEqual(tuple(self.system.probs), (0.5, 0.5))
        with self.assertRaises(SkewError):
            SkewSystem(self.domain, [])
        with self.assertRaises(SkewError):
            SkewSystem(self.domain, [RotationMap(0.1)])
        with self.assertRaises(SkewError):
            SkewSystem(self.domain, self.system.maps, (0.7, 0.7))

    def test_from_config(self):
        system = SkewSystem.from_config({"maps": [{"family": "example41"}]})
        self.assertEqual(system.s, 2)
        self.assertEqual(system.domain, FiberDomain.interval(-1.0, 1.0))
        pair = SkewSystem.from_config(self.system.to_dict())
        self.assertEqual(pair.to_dict(), self.system.to_dict())

    def test_apply_symbols(self):
        images = self.system.apply_symbols(np.array([1, 2, 1]), np.array([0.0, 0.0, 1.0]))
        self.assertTrue(np.allclose(images, [0.1, 0.3, 0.6]))


class TestOrbits(unittest.TestCase):
    def setUp(self):
        """ Loads the common affine pair and a state over a seeded window """
        domain = FiberDomain.interval(0.0, 1.0)
        self.system = SkewSystem(domain, [AffineMap(0.5, 0.1, domain), AffineMap(0.5, 0.3, domain)])
        self.state = SkewState.initial(self.system, 12, 0.5)

    def test_step(self):
        symbol = self.state.window.symbol(0)
        following = step(self.system, self.state)
        self.assertEqual(following.t, 1)
        self.assertAlmostEqual(following.p, 0.25 + (0.1 if symbol == 1 else 0.3))
        self.assertEqual(following.window.symbol(0), self.state.window.symbol(1))

    def test_run_orbit_matches_steps(self):
        trace = run_orbit(self.system, self.state, 50)
        state = self.state
        for t, symbol, p in trace.rows():
            self.assertEqual(t, state.t)
            self.assertEqual(symbol, state.window.symbol(0))
            self.assertAlmostEqual(p, state.p, places=14)
            state = step(self.system, state)
        self.assertTrue(trace.verify(self.system))

    def test_stride(self):
        trace = run_orbit(self.system, self.state, 100, stride=10)
        self.assertEqual(len(trace), 11)
        self.assertEqual(list(trace.times), list(range(0, 101, 10)))
        self.assertTrue(trace.verify(self.system))
        self.assertEqual(len(run_orbit(self.system, self.state, 0)), 1)
        with self.assertRaises(SkewError):
            run_orbit(self.system, self.state, 10, stride=0)

    def test_determinism(self):
        first = run_orbit(self.system, SkewState.initial(self.system, 3, 0.2), 200)
        second = run_orbit(self.system, SkewState.initial(self.system, 3, 0.2), 200)
        self.assertTrue(np.array_equal(first.points, second.points))
        self.assertEqual(first.provenance, {"seed": 3, "stream": 0, "offset": 0})

    def test_points_stay_in_attractor(self):
        trace = run_orbit(self.system, self.state, 1000)
        self.assertTrue(np.all(trace.points[1:] >= 0.2 - 1e-12))
        self.assertTrue(np.all(trace.points[1:] <= 0.6 + 1e-12))


class TestPastProjection(unittest.TestCase):
    def setUp(self):
        """ Loads the common affine pair """
        domain = FiberDomain.interval(0.0, 1.0)
        self.system = SkewSystem(domain, [AffineMap(0.5, 0.1, domain), AffineMap(0.5, 0.3, domain)])

    def test_recovers_orbit(self):
        state = SkewState.initial(self.system, 5, 0.4)
        trace = run_orbit(self.system, state, 10)
        final = SkewState(shift(state.window, 10), trace.points[-1], 10)
        projections = past_fiber_projection(self.system, final, 10)
        self.assertTrue(np.allclose(projections, trace.points[:-1][::-1], atol=1e-12))

    def test_outside_maximal_attractor(self):
        state = SkewState.initial(self.system, 5, 0.95)
        with self.assertRaises(PreimageUndefined) as context:
            past_fiber_projection(self.system, state, 3)
        self.assertEqual(context.exception.step, 1)

    def test_inverse_system(self):
        inverse = inverse_system(self.system)
        self.assertAlmostEqual(inverse.maps[1].evaluate(0.5), 0.4)
        self.assertEqual(inverse.probs, self.system.probs)

    def test_product_distance(self):
        first = SkewState.initial(self.system, 5, 0.4)
        second = SkewState(first.window, 0.6)
        self.assertAlmostEqual(product_distance(self.system, first, second), 0.2)
        moved = SkewState(first.window.with_symbols({2: 3 - first.window.symbol(2)}), 0.4)
        self.assertAlmostEqual(product_distance(self.system, first, moved), 0.25)


class TestEnsemble(unittest.TestCase):
    def setUp(self):
        """ Loads the common affine pair """
        domain = FiberDomain.interval(0.0, 1.0)
        self.system = SkewSystem(domain, [AffineMap(0.5, 0.1, domain), AffineMap(0.5, 0.3, domain)])

    def test_chunks_match_orbits(self):
        streams = [0, 1, 2]
        chunks = list(ensemble_chunks(self.system, 9, streams, 20, chunk_steps=7))
        self.assertEqual([(chunk.start, chunk.stop) for chunk in chunks], [(0, 7), (7, 14), (14, 20)])
        points = np.concatenate([chunk.points for chunk in chunks], axis=1)
        starts = initial_points(self.system, 9, streams)
        for row, stream in enumerate(streams):
            state = SkewState.initial(self.system, 9, starts[row], stream=stream)
            trace = run_orbit(self.system, state, 19)
            self.assertTrue(np.allclose(points[row], trace.points, atol=1e-14))

    def test_chunk_size_invariance(self):
        small = np.concatenate([chunk.points for chunk in ensemble_chunks(self.system, 4, [0, 5], 50, chunk_steps=3)],
                               axis=1)
        whole = np.concatenate([chunk.points for chunk in ensemble_chunks(self.system, 4, [0, 5], 50)], axis=1)
        self.assertTrue(np.array_equal(small, whole))

    def test_padding(self):
        chunk = next(ensemble_chunks(self.system, 4, [0], 10, pad_past=3, pad_future=2))
        self.assertEqual(chunk.symbols.shape, (1, 15))
        self.assertEqual(chunk.current_symbols().shape, (1, 10))

    def test_groups(self):
        self.assertEqual(sample_groups(5, 2), [[0, 1], [2, 3], [4]])
        self.assertEqual(run_groups(len, sample_groups(70)), [32, 32, 6])

    def test_worker_count(self):
        with mock.patch.dict(os.environ, {"SKEWLAB_THREADS": "1"}):
            self.assertEqual(worker_count(), 1)
        with mock.patch.dict(os.environ, {"SKEWLAB_THREADS": "many"}):
            with self.assertRaises(SkewError):
                worker_count()


if __name__ == '__main__':
    unittest.main()
