#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# Trapping strips and the bony graph attractors living in them.

# Strips have constant boundaries: Sigma x [lo, hi]. A strip is strictly trapping when every
# fiber map sends [lo, hi] into (lo, hi), inverse trapping when it is strictly trapping for
# the inverse maps. Since fiber maps are increasing, the image of [a, b] is [f(a), f(b)]
# and every computation below only propagates interval endpoints.
#
# The graph over a past word (w_-n, ..., w_-1) is the pullback interval
#       f_{w_-1} o ... o f_{w_-n} ([lo, hi])
# (w_-n is applied first). Its midpoint stands for the attracting graph point x_A(w).
#
# Words are stored as tuples of symbols, oldest first; exhaustive enumerations are
# lexicographic, sampled ones are i.i.d. according to the symbol weights.

import math
import logging

import numpy as np
from scipy import stats

from modules.symbolic import CylinderSpec, cylinder_measure, sample_words, SymbolWindow
from modules.skew import inverse_system, step
from modules.attractor import past_words

DEFAULT_WORD_BUDGET = 4096
DEFAULT_SAMPLED_WORDS = 1024
CONTRACTION_TOLERANCE = 1e-9

logger = logging.getLogger('strips')


class StripInterval:
    """
    Fiber interval [lo, hi] of a constant-boundary strip (lifts on the circle)
    """

    def __init__(self, lo, hi, trapping="none", admissible=None):
        """
        :param lo: float - lower boundary
        :param hi: float - upper boundary, lo < hi
        :param trapping: 'strict', 'inverse' or 'none'
        :param admissible: optional ((a_min, a_max), (b_min, b_max)) endpoint ranges of the search
        """
        if not lo < hi:
            raise StripError(f"Degenerate strip [{lo}, {hi}]")
        if trapping not in ("strict", "inverse", "none"):
            raise StripError(f"Unknown trapping kind: {trapping}")
        self.lo = float(lo)
        self.hi = float(hi)
        self.trapping = trapping
        self.admissible = admissible

    @property
    def width(self):
        return self.hi - self.lo

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "trapping": self.trapping, "admissible": self.admissible}

    def __repr__(self):
        return f"StripInterval([{self.lo:.6g}, {self.hi:.6g}], {self.trapping})"


def _arc_inside(fiber_map, lo, hi):
    """ Whether the increasing map sends [lo, hi] strictly inside (lo, hi) """
    low, high = float(fiber_map.lift(lo)), float(fiber_map.lift(hi))
    if math.isnan(low) or math.isnan(high):
        return False
    if fiber_map.domain.is_circle:
        turns = math.floor((low - lo) / fiber_map.domain.circumference)
        low -= turns * fiber_map.domain.circumference
        high -= turns * fiber_map.domain.circumference
    return lo < low and high < hi


def is_strictly_trapping(system, strip):
    """ Every map sends [lo, hi] into (lo, hi) """
    return all(_arc_inside(fiber_map, strip.lo, strip.hi) for fiber_map in system.maps)


def is_inverse_trapping(system, strip):
    """ Every inverse map sends [lo, hi] into (lo, hi) """
    return is_strictly_trapping(inverse_system(system), strip)


def _displacements(maps, domain, grid):
    """ Displacements f_i(x) - x on the grid, (s, len(grid)); NaN where a map is undefined """
    values = np.stack([np.asarray(fiber_map.lift(grid), dtype=float) - grid for fiber_map in maps])
    if domain.is_circle:
        half = domain.circumference / 2
        values = np.mod(values + half, domain.circumference) - half
    return values


def _envelope_search(maps, domain, resolution):
    """
    Minimal trapping intervals of the maps at grid resolution

    Left endpoints are grid points where every map moves up (g_min(x) > x), right endpoints
    points where every map moves down (g_max(x) < x). Each run of right endpoints is paired
    with the closest left endpoint before it.

    :return: list of ((a, b), ((a_min, a_max), (b_min, b_max))) with lifts a < b
    """
    if domain.is_circle:
        grid = np.arange(resolution) * (domain.circumference / resolution)
    else:
        grid = np.linspace(domain.lo, domain.hi, resolution + 1)

    displacements = _displacements(maps, domain, grid)
    if np.any(np.isnan(displacements)):
        return []
    left = displacements.min(axis=0) > 0
    right = displacements.max(axis=0) < 0
    points = len(grid)

    if domain.is_circle:
        left, right = np.concatenate([left, left]), np.concatenate([right, right])
        step_size = domain.circumference / resolution
        position = lambda index: index * step_size
    else:
        position = lambda index: float(grid[index])

    # on the circle the flags are doubled and only right runs starting in the second copy count
    found, last_left, left_run_start = [], None, None
    for k in range(len(left)):
        if left[k]:
            if last_left != k - 1:
                left_run_start = k
            last_left = k
        if not right[k] or (k > 0 and right[k - 1]) or last_left is None:
            continue

        run_end = k
        while run_end + 1 < len(right) and right[run_end + 1]:
            run_end += 1
        if not domain.is_circle or k >= points:
            turn = points if domain.is_circle and last_left >= points else 0
            found.append(((position(last_left - turn), position(k - turn)),
                          ((position(left_run_start - turn), position(last_left - turn)),
                           (position(k - turn), position(run_end - turn)))))
        last_left = None
    return found


def find_trapping_intervals(system, resolution=1024):
    """
    Minimal strictly trapping and inverse trapping intervals at grid resolution

    Inverse trapping intervals are searched among the strictly trapping intervals of the
    inverse system, and only where the inverse maps are total on the grid.

    :param system: SkewSystem
    :param resolution: int - grid cells over the fiber
    :return: list of StripInterval sorted by (lo, hi)
    """
    strips = []
    for kind, maps in (("strict", system.maps), ("inverse", inverse_system(system).maps)):
        for (a, b), admissible in _envelope_search(maps, system.domain, resolution):
            strips.append(StripInterval(a, b, kind, admissible))

    if not strips:
        raise NoTrappingFound(f"No trapping interval at resolution {resolution}")
    strips.sort(key=lambda strip: (strip.lo, strip.hi, strip.trapping))
    logger.debug(f"Trapping search: {strips}")
    return strips


def _lift_along(maps, symbols, x):
    """ Applies the lift of maps[symbol - 1] to every entry """
    result = np.empty_like(x)
    for index, fiber_map in enumerate(maps, start=1):
        rows = symbols == index
        if rows.any():
            result[rows] = fiber_map.lift(x[rows])
    return result


def pullback_intervals(maps, words, lo, hi, restricted=False):
    """
    Images of [lo, hi] along words, words[:, 0] applied first

    :param maps: list of FiberMaps
    :param words: np.ndarray (count, n) of symbols
    :param restricted: bool - intersect with [lo, hi] after every step (maximal invariant set
                       of a non-trapping strip), empty results are NaN
    :return: (lows, highs) arrays
    """
    words = np.asarray(words, dtype=np.int64)
    lows = np.full(len(words), float(lo))
    highs = np.full(len(words), float(hi))
    for column in range(words.shape[1]):
        lows = _lift_along(maps, words[:, column], lows)
        highs = _lift_along(maps, words[:, column], highs)
        if restricted:
            lows, highs = np.maximum(lows, lo), np.minimum(highs, hi)
            empty = lows > highs
            lows[empty], highs[empty] = np.nan, np.nan
    return lows, highs


class BonyGraphApprox:
    """
    Pullback intervals of a strip over past words of a fixed depth
    """

    def __init__(self, system, strip, depth, entries, mode, restricted=False, counts=None):
        """
        :param system: SkewSystem
        :param strip: StripInterval
        :param depth: int - past word length
        :param entries: dict {word tuple: (lo, hi)}
        :param mode: 'exhaustive', 'sampled' or 'lazy'
        :param restricted: bool - intervals are intersected with the strip
        :param counts: dict {word: multiplicity} of sampled words
        """
        self.system = system
        self.strip = strip
        self.depth = depth
        self.entries = entries
        self.mode = mode
        self.restricted = restricted
        self.counts = counts

    def __len__(self):
        return len(self.entries)

    def entry(self, word):
        """
        Interval over a past word (oldest symbol first)

        :return: (lo, hi) or None when the restricted intersection is empty
        """
        word = tuple(int(symbol) for symbol in word)
        if word not in self.entries:
            if self.mode != "lazy" or len(word) != self.depth:
                raise WordNotInGraph(word)
            lows, highs = pullback_intervals(self.system.maps, np.array([word]).reshape(1, -1), self.strip.lo,
                                             self.strip.hi, self.restricted)
            self.entries[word] = None if np.isnan(lows[0]) else (float(lows[0]), float(highs[0]))
        return self.entries[word]

    def midpoint(self, word):
        interval = self.entry(word)
        if interval is None:
            raise WordNotInGraph(tuple(word))
        return 0.5 * (interval[0] + interval[1])

    def width(self, word):
        interval = self.entry(word)
        return 0.0 if interval is None else interval[1] - interval[0]

    def words(self):
        return sorted(self.entries)

    def rows(self):
        """ Emission rows (word, lo, hi, width) in word order, empty intervals skipped """
        rows = []
        for word in self.words():
            interval = self.entries[word]
            if interval is not None:
                rows.append(("".join(map(str, word)), interval[0], interval[1], interval[1] - interval[0]))
        return rows


def pullback_graph(system, strip, depth, word_budget=DEFAULT_WORD_BUDGET, samples=DEFAULT_SAMPLED_WORDS, seed=0,
                   restricted=False, lazy=False):
    """
    Bony graph approximation: pullbacks of the strip over past words of the given depth

    Exhaustive when s^depth <= word_budget, sampled otherwise (or lazy, computing entries on
    request).

    :param system: SkewSystem
    :param strip: StripInterval, strictly trapping unless restricted
    :param depth: int - n
    :param word_budget: int - largest exhaustive enumeration
    :param samples: int - sampled words
    :param seed: int - seed of the word sample
    :param restricted: bool - intersect with the strip at every step (segment fibers only)
    :param lazy: bool - compute entries on request instead of sampling
    :return: BonyGraphApprox
    """
    if restricted:
        if system.domain.is_circle:
            raise StripError("Restricted pullbacks are defined on segment fibers only")
    elif not is_strictly_trapping(system, strip):
        raise NotTrapping(f"{strip} is not strictly trapping")

    if lazy:
        return BonyGraphApprox(system, strip, depth, dict(), "lazy", restricted)

    counts = None
    if system.s ** depth <= word_budget:
        words, mode = past_words(system.s, depth), "exhaustive"
    else:
        drawn = sample_words(seed, samples, depth, system.probs, stream=1)
        words, multiplicity = np.unique(drawn, axis=0, return_counts=True)
        counts = {tuple(int(symbol) for symbol in word): int(count) for word, count in zip(words, multiplicity)}
        mode = "sampled"

    lows, highs = pullback_intervals(system.maps, words, strip.lo, strip.hi, restricted)
    entries = dict()
    for word, low, high in zip(words, lows, highs):
        entries[tuple(int(symbol) for symbol in word)] = None if np.isnan(low) else (float(low), float(high))

    logger.debug(f"Pullback graph of {strip}, depth {depth}: {len(entries)} words ({mode})")
    return BonyGraphApprox(system, strip, depth, entries, mode, restricted, counts)


class BoneMass:
    """ Measure of the wide part of a graph, with a binomial interval when sampled """

    def __init__(self, value, interval=None, words=0):
        self.value = value
        self.interval = interval
        self.words = words

    def to_dict(self):
        return {"value": self.value, "ci": self.interval, "words": self.words}


def bone_mass(graph, width_tol):
    """
    mu_Sigma-weight of the words whose pullback interval is wider than width_tol

    :param graph: BonyGraphApprox (exhaustive or sampled)
    :param width_tol: float
    :return: BoneMass
    """
    if not graph.entries:
        raise EmptyGraph("The graph has no entries")

    if graph.mode == "exhaustive":
        depth = graph.depth
        mass = math.fsum(cylinder_measure(CylinderSpec((k - depth, symbol) for k, symbol in enumerate(word)),
                                          graph.system.s, graph.system.probs)
                         for word in graph.words() if graph.width(word) > width_tol)
        return BoneMass(mass, None, len(graph))

    counts = graph.counts or {word: 1 for word in graph.entries}
    total = sum(counts.values())
    wide = sum(count for word, count in counts.items() if graph.width(word) > width_tol)
    interval = stats.binomtest(wide, total).proportion_ci(confidence_level=0.95)
    return BoneMass(wide / total, (float(interval.low), float(interval.high)), total)


def rho(graph, state):
    """
    Fiber distance from the state to the graph point over its past

    :param graph: BonyGraphApprox
    :param state: SkewState
    :return: float
    """
    word = state.window.past_word(graph.depth)
    return float(graph.system.domain.distance(state.p, graph.midpoint(word)))


class LyapunovEstimate:
    """ Monte-Carlo fiberwise Lyapunov exponent """

    def __init__(self, mean, stderr, samples, depth, epsilon=0.0):
        self.mean = mean
        self.stderr = stderr
        self.samples = samples
        self.depth = depth
        self.epsilon = epsilon

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "n": self.samples, "depth": self.depth,
                "epsilon": self.epsilon}

    def __repr__(self):
        return f"LyapunovEstimate({self.mean:.6g} +- {self.stderr:.3g}, K={self.samples}, n={self.depth})"


def _derivative_along(maps, symbols, x):
    result = np.empty_like(x)
    for index, fiber_map in enumerate(maps, start=1):
        rows = symbols == index
        if rows.any():
            result[rows] = fiber_map.derivative(fiber_map.domain.wrap(x[rows]))
    return result


def lyapunov_on_graph(system, strip, depth, samples, seed=0, restricted=False):
    """
    Average of ln f'_{w_0}(x_A(w)) over the base measure

    For a strictly trapping strip x_A is the pullback midpoint over a sampled past word and w_0
    is drawn independently. For an inverse trapping strip the graph point x_R is the pullback
    midpoint of the inverse system over a sampled future word (w_{n-1} applied first, w_0 last).

    :param system: SkewSystem
    :param strip: StripInterval
    :param depth: int - pullback depth n
    :param samples: int - K >= 1
    :param seed: int
    :param restricted: bool - strict mode only, see pullback_graph
    :return: LyapunovEstimate
    """
    if samples < 1:
        raise StripError("At least one sample is needed")

    if strip.trapping == "inverse":
        inverse = inverse_system(system)
        if not is_strictly_trapping(inverse, strip):
            raise NotTrapping(f"{strip} is not inverse trapping")
        future = sample_words(seed, samples, depth, system.probs, stream=3)
        lows, highs = pullback_intervals(inverse.maps, future[:, ::-1], strip.lo, strip.hi)
        current = future[:, 0]
    else:
        if not restricted and not is_strictly_trapping(system, strip):
            raise NotTrapping(f"{strip} is not strictly trapping")
        past = sample_words(seed, samples, depth, system.probs, stream=1)
        lows, highs = pullback_intervals(system.maps, past, strip.lo, strip.hi, restricted)
        current = sample_words(seed, samples, 1, system.probs, stream=2)[:, 0]

    defined = ~np.isnan(lows)
    points = 0.5 * (lows[defined] + highs[defined])
    values = np.log(_derivative_along(system.maps, current[defined], points))
    count = len(values)
    if count == 0:
        raise EmptyGraph("Every sampled word has an empty pullback")

    stderr = float(np.std(values, ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    estimate = LyapunovEstimate(float(np.mean(values)), stderr, count, depth)
    logger.debug(f"Lyapunov exponent on {strip}: {estimate}")
    return estimate


def birkhoff_series(system, graph, seed, epsilon, n_max, stream=0):
    """
    Running averages K_n = (1/n) sum_{k<n} ln(f'_{w_k}(x_A(sigma^k w)) + epsilon), n = 1..n_max

    :param system: SkewSystem
    :param graph: BonyGraphApprox resolving x_A
    :param seed: int - seed of the base sequence w
    :param epsilon: float >= 0
    :param n_max: int
    :param stream: int
    :return: np.ndarray of K_1, ..., K_{n_max}
    """
    if epsilon < 0:
        raise StripError(f"epsilon must be non-negative (got {epsilon})")
    depth = graph.depth
    symbols = SymbolWindow(seed, system.s, probs=system.probs, stream=stream).symbols(-depth, n_max)

    summands = np.empty(n_max)
    for k in range(n_max):
        x = graph.midpoint(symbols[k:k + depth])
        fiber_map = system.maps[symbols[k + depth] - 1]
        summands[k] = math.log(float(fiber_map.derivative(system.domain.wrap(x))) + epsilon)
    return np.cumsum(summands) / np.arange(1, n_max + 1)


def uniform_continuity_beta(system, epsilon, strip=None, grid_points=2048):
    """
    Largest beta (on a grid) with |x - y| <= beta => |f_j'(x) - f_j'(y)| <= epsilon for all j

    :param system: SkewSystem
    :param epsilon: float > 0
    :param strip: StripInterval restricting the search, the whole fiber when None
    :param grid_points: int
    :return: float
    """
    lo, hi = (strip.lo, strip.hi) if strip else (system.domain.lo, system.domain.hi)
    grid = np.linspace(lo, hi, grid_points)
    spacing = grid[1] - grid[0]
    derivatives = np.stack([fiber_map.derivative(system.domain.wrap(grid)) for fiber_map in system.maps])

    def modulus(beta):
        offsets = int(math.floor(beta / spacing + 1e-9))
        worst = 0.0
        for offset in range(1, min(offsets, grid_points - 1) + 1):
            worst = max(worst, float(np.max(np.abs(derivatives[:, offset:] - derivatives[:, :-offset]))))
        return worst

    if modulus(hi - lo) <= epsilon:
        return hi - lo
    low, high = 0.0, hi - lo
    while high - low > spacing:
        middle = 0.5 * (low + high)
        if modulus(middle) <= epsilon:
            low = middle
        else:
            high = middle
    return low


class ContractionResult:
    """ Outcome of the rho(F^n p) <= rho(p) exp(n K_n) check """

    def __init__(self, status, lhs=None, rhs=None, exit_step=None):
        self.status = status
        self.lhs = lhs
        self.rhs = rhs
        self.exit_step = exit_step

    @property
    def holds(self):
        return self.status == "HOLDS"

    @property
    def slack(self):
        return None if self.lhs is None else self.rhs - self.lhs

    def to_dict(self):
        return {"status": self.status, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "exit_step": self.exit_step}


def contraction_check(system, graph, state, epsilon, n, beta=None, tolerance=CONTRACTION_TOLERANCE):
    """
    Checks rho(F^n(p)) <= rho(p) exp(n K_n(w)) along the orbit of a state

    The inequality is only claimed while the orbit stays in U_beta = {rho <= beta}; when one of
    the first n images leaves it the result is NOT_APPLICABLE with the exit step.

    :param system: SkewSystem
    :param graph: BonyGraphApprox (lazy graphs resolve every word)
    :param state: SkewState
    :param epsilon: float >= 0
    :param n: int >= 0
    :param beta: float, computed with uniform_continuity_beta when None
    :return: ContractionResult
    """
    if beta is None:
        beta = uniform_continuity_beta(system, epsilon, graph.strip) if epsilon > 0 else graph.strip.width

    initial = rho(graph, state)
    log_sum, current = 0.0, state
    for k in range(n):
        distance = rho(graph, current)
        if distance > beta:
            return ContractionResult("NOT_APPLICABLE", exit_step=k)
        x = graph.midpoint(current.window.past_word(graph.depth))
        fiber_map = system.maps[current.window.symbol(0) - 1]
        log_sum += math.log(float(fiber_map.derivative(system.domain.wrap(x))) + epsilon)
        current = step(system, current)

    lhs, rhs = rho(graph, current), initial * math.exp(log_sum)
    return ContractionResult("HOLDS" if lhs <= rhs + tolerance else "VIOLATED", lhs, rhs)


def egorov_uniformity(system, strip, delta, gamma, samples, n_max, seed=0, restricted=False):
    """
    Smallest N such that at least (1 - delta) K sampled past words have pullback width <= gamma
    at every depth n in [N, n_max]

    :return: int, or the string 'NONUNIFORM'
    """
    if not restricted and not is_strictly_trapping(system, strip):
        raise NotTrapping(f"{strip} is not strictly trapping")

    words = sample_words(seed, samples, n_max, system.probs, stream=4)
    good = []
    for depth in range(n_max + 1):
        lows, highs = pullback_intervals(system.maps, words[:, n_max - depth:], strip.lo, strip.hi, restricted)
        widths = np.where(np.isnan(lows), 0.0, highs - lows)
        good.append(np.mean(widths <= gamma) >= 1 - delta)

    for candidate in range(n_max + 1):
        if all(good[candidate:]):
            return candidate
    return "NONUNIFORM"


class StripError(Exception):
    """ Exception raised in the strips and graphs module """


class NoTrappingFound(StripError):
    """ The envelope search found no trapping interval """


class NotTrapping(StripError):
    """ The strip is not (inverse) trapping """


class EmptyGraph(StripError):
    """ The graph approximation has no entries """


class WordNotInGraph(StripError):
    """ The graph has no entry for the word """

    def __init__(self, word):
        super().__init__(f"No graph entry for the word {word}")
        self.word = word
