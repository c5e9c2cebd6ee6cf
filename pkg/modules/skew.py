#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# The step skew product F(w, p) = (sigma w, f_{w_0}(p)) over the Bernoulli shift.

# Single orbits are handled with value-type states (SkewState): the symbol window and
# the fiber point travel together, step() never mutates its argument.
#
# Ensembles (many independent samples, long runs) are handled without states at all:
#   * sample k of an ensemble uses the symbol stream k of the seed, its time t symbol is
#     the symbol at absolute index t of that stream
#   * its initial fiber point is drawn from the reserved initial-point key of the stream
#   * samples are split into groups that run in worker threads (SKEWLAB_THREADS caps the
#     count), every group advances its samples together with numpy, one chunk of
#     CHUNK_STEPS time steps at a time
#   * group results are returned in group order, so merges never depend on scheduling

import os
import logging
import concurrent.futures

import numpy as np

from modules.symbolic import (BLOCK_SIZE, SymbolWindow, cumulative_table, initial_uniforms, lazy_symbols,
                              validate_probabilities, shift, base_distance, SymbolicError)
from modules.fiber_maps import FiberDomain, make_builtin, compose_word, NotInImage, PreimageUndefined

CHUNK_STEPS = BLOCK_SIZE
GROUP_SIZE = 32
TRACE_TOLERANCE = 1e-9

logger = logging.getLogger('skew')


class SkewSystem:
    """
    Step skew product: fiber domain, the ordered fiber maps f_1, ..., f_s and the symbol weights
    """

    def __init__(self, domain, maps, probs=None):
        """
        :param domain: FiberDomain shared by every map
        :param maps: list of FiberMaps, maps[i - 1] is applied on symbol i
        :param probs: symbol probabilities, uniform when None
        """
        maps = list(maps)
        if not maps:
            raise SkewError("A skew product needs at least one fiber map")
        for fiber_map in maps:
            if fiber_map.domain != domain:
                raise SkewError(f"{fiber_map} lives on {fiber_map.domain}, not on {domain}")

        self.domain = domain
        self.maps = maps
        try:
            self.probs = validate_probabilities(probs, len(maps))
        except SymbolicError as error:
            raise SkewError(str(error))
        self.cumulative = cumulative_table(self.probs)

    @property
    def s(self):
        return len(self.maps)

    @classmethod
    def from_config(cls, description):
        """
        Builds the system from its configuration entry

        :param description: dict with 'maps' (list of {family, params}), optional 'domain' and 'probs'.
                            The example41 family expands into its two maps.
        :return: SkewSystem
        """
        entries = description.get("maps") or []
        if not entries:
            raise SkewError("System description lists no fiber maps")

        domain = description.get("domain")
        domain = FiberDomain.from_config(domain) if domain else None

        maps = []
        for entry in entries:
            built = make_builtin(entry.get("family"), entry.get("params"), domain)
            maps.extend(built if isinstance(built, tuple) else (built,))
        return cls(maps[0].domain, maps, description.get("probs"))

    def to_dict(self):
        return {"domain": self.domain.to_dict(), "maps": [fiber_map.to_dict() for fiber_map in self.maps],
                "probs": list(self.probs)}

    def apply_symbols(self, symbols, points):
        """
        Applies f_{symbols[k]} to points[k] for a whole array at once

        :param symbols: np.ndarray of symbols in {1, ..., s}
        :param points: np.ndarray of fiber points, same shape
        :return: np.ndarray
        """
        if self.s == 1:
            return np.asarray(self.maps[0].evaluate(points), dtype=float)
        images = np.stack([np.asarray(fiber_map.evaluate(points), dtype=float) for fiber_map in self.maps])
        return images[symbols - 1, np.arange(images.shape[1])]

    def __repr__(self):
        return f"SkewSystem({self.domain}, {self.maps}, probs={self.probs})"


class SkewState:
    """
    A point (w, p) of the product space together with its time index
    """

    def __init__(self, window, p, t=0):
        self.window = window
        self.p = float(p)
        self.t = int(t)

    @classmethod
    def initial(cls, system, seed, p, stream=0, n_past=0, n_future=0):
        """ State at time 0 over a freshly sampled window """
        window = SymbolWindow(seed, system.s, n_past, n_future, system.probs, stream)
        return cls(window, p, 0)

    def __repr__(self):
        return f"SkewState(t={self.t}, p={self.p!r}, {self.window})"


class OrbitTrace:
    """
    Recorded (t, symbol w_t, fiber point p_t) triples of one orbit
    """

    def __init__(self, times, symbols, points, stride, window):
        self.times = np.asarray(times, dtype=np.int64)
        self.symbols = np.asarray(symbols, dtype=np.int64)
        self.points = np.asarray(points, dtype=float)
        self.stride = stride
        self.window = window

    @property
    def provenance(self):
        return {"seed": self.window.seed, "stream": self.window.stream, "offset": self.window.origin_offset}

    def __len__(self):
        return len(self.times)

    def rows(self):
        """ (t, symbol, p) tuples in time order """
        return [(int(t), int(symbol), float(p)) for t, symbol, p in zip(self.times, self.symbols, self.points)]

    def verify(self, system, checks=100, tolerance=TRACE_TOLERANCE):
        """
        Spot-checks that consecutive recorded points are related through the maps of the skipped symbols

        :param system: SkewSystem
        :param checks: int - number of consecutive pairs inspected
        :return: bool
        """
        if len(self) < 2:
            return True
        pairs = np.linspace(0, len(self) - 2, min(checks, len(self) - 1)).astype(int)
        start_time = int(self.times[0])
        for k in pairs:
            offset = int(self.times[k]) - start_time
            word = self.window.word(offset, int(self.times[k + 1] - self.times[k]))
            image = compose_word(system, word, float(self.points[k]))
            if system.domain.distance(image, float(self.points[k + 1])) > tolerance:
                return False
        return True


def step(system, state):
    """
    One application of F: the fiber point moves by f_{w_0} and the window by the shift

    :param system: SkewSystem
    :param state: SkewState
    :return: SkewState
    """
    symbol = state.window.symbol(0)
    p = float(system.maps[symbol - 1].evaluate(state.p))
    return SkewState(shift(state.window, 1), p, state.t + 1)


def run_orbit(system, state, n_steps, stride=1):
    """
    Runs n_steps of F, recording every stride-th state (the initial one included)

    :param system: SkewSystem
    :param state: SkewState
    :param n_steps: int >= 0
    :param stride: int >= 1
    :return: OrbitTrace
    """
    if n_steps < 0 or stride < 1:
        raise SkewError(f"Invalid orbit request: N={n_steps}, stride={stride}")

    symbols = state.window.symbols(0, n_steps + 1)
    times, recorded_symbols, points = [], [], []
    p = state.p
    for k in range(n_steps + 1):
        if k % stride == 0:
            times.append(state.t + k)
            recorded_symbols.append(symbols[k])
            points.append(p)
        if k < n_steps:
            p = float(system.maps[symbols[k] - 1].evaluate(p))

    logger.debug(f"Orbit of {n_steps} steps from p={state.p}, {len(times)} records")
    return OrbitTrace(times, recorded_symbols, points, stride, state.window)


def past_fiber_projection(system, state, n):
    """
    Fiber coordinates q_1, ..., q_n of F^-1(state), ..., F^-n(state)

    q_k = f_{w_-k}^-1(q_{k-1}), q_0 = p. Fails with PreimageUndefined(k) when the
    preimage does not exist, i.e. when the state is outside of the maximal attractor.

    :param system: SkewSystem
    :param state: SkewState
    :param n: int >= 0
    :return: list of floats
    """
    past = state.window.symbols(-n, 0)[::-1]
    projections, q = [], state.p
    for k, symbol in enumerate(past, start=1):
        try:
            q = float(system.maps[symbol - 1].inverse(q))
        except NotInImage:
            raise PreimageUndefined(k)
        projections.append(q)
    return projections


def product_distance(system, first, second, m_max=64):
    """
    Sum of the base distance and of the fiber distance

    :param system: SkewSystem both states belong to
    :param first: SkewState
    :param second: SkewState
    :param m_max: int - extent of the base comparison
    :return: float
    """
    return base_distance(first.window, second.window, m_max) + system.domain.distance(first.p, second.p)


def inverse_system(system):
    """ The skew product of the inverse fiber maps (partial where the maps are not onto) """
    return SkewSystem(system.domain, [fiber_map.inverted() for fiber_map in system.maps], system.probs)


def worker_count():
    """ Number of ensemble worker threads, capped by SKEWLAB_THREADS """
    count = os.cpu_count() or 1
    limit = os.environ.get("SKEWLAB_THREADS")
    if limit:
        try:
            count = min(count, max(1, int(limit)))
        except ValueError:
            raise SkewError(f"SKEWLAB_THREADS must be an integer (got {limit!r})")
    return count


def initial_points(system, seed, streams):
    """ Initial fiber points of ensemble samples, uniform over the fiber """
    uniforms = np.array([initial_uniforms(seed, stream, 1)[0] for stream in streams])
    return system.domain.uniform_points(uniforms)


class EnsembleChunk:
    """
    Fiber points and symbols of a group of samples over the time range [start, stop)

    points[k, j] is the fiber point of sample k at time start + j, symbols[k, j] is the
    symbol at time start - pad_past + j.
    """

    def __init__(self, start, stop, points, symbols, pad_past):
        self.start = start
        self.stop = stop
        self.points = points
        self.symbols = symbols
        self.pad_past = pad_past

    def current_symbols(self):
        """ Symbols applied at times start..stop-1 """
        return self.symbols[:, self.pad_past:self.pad_past + self.stop - self.start]


def ensemble_chunks(system, seed, streams, n_steps, pad_past=0, pad_future=0, points=None, chunk_steps=CHUNK_STEPS):
    """
    Generator advancing a group of samples through n_steps of F

    :param system: SkewSystem
    :param seed: int
    :param streams: list of sample stream numbers
    :param n_steps: int - total time steps
    :param pad_past: int - extra symbols delivered before every chunk
    :param pad_future: int - extra symbols delivered after every chunk
    :param points: initial fiber points, uniform samples when None
    :return: iterator of EnsembleChunk
    """
    x = initial_points(system, seed, streams) if points is None else np.array(points, dtype=float)
    for start in range(0, n_steps, chunk_steps):
        stop = min(start + chunk_steps, n_steps)
        symbols = np.stack([lazy_symbols(seed, stream, start - pad_past, stop + pad_future, system.cumulative)
                            for stream in streams])
        current = symbols[:, pad_past:pad_past + stop - start]

        recorded = np.empty((len(streams), stop - start))
        for j in range(stop - start):
            recorded[:, j] = x
            x = system.apply_symbols(current[:, j], x)

        yield EnsembleChunk(start, stop, recorded, symbols, pad_past)


def sample_groups(n_samples, group_size=GROUP_SIZE):
    """ Splits sample streams 0..n_samples-1 into consecutive groups """
    return [list(range(first, min(first + group_size, n_samples))) for first in range(0, n_samples, group_size)]


def run_groups(function, groups):
    """
    Runs function(group) for every group in worker threads

    :return: list of results in group order
    """
    workers = min(worker_count(), max(1, len(groups)))
    if workers == 1:
        return [function(group) for group in groups]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, groups))


class SkewError(Exception):
    """ Exception raised in the skew dynamics module """
