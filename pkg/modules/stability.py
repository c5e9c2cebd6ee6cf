#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# Lyapunov stability of fiber sets and the discontinuity of semigroup orbit closures.

# Reachability is exact for increasing maps: the image of [a, b] is [f(a), f(b)].
# A ReachSet is a finite union of closed intervals kept in normal form:
#   * segment fibers: sorted, pairwise disjoint, clipped to [lo, hi]
#   * circle fibers: arcs are cut at 0, so every stored interval lies in [0, C]; an arc
#     crossing 0 is stored as [x, C] and [0, y]
# Sets with more than MAX_INTERVALS intervals are coarsened to the fiber bins they meet.
#
# A probe of B at a given epsilon propagates the delta-dilation of B through every symbol:
#   R_0 = B + delta, R_k = union of f_i(R_{k-1}), Cum_k = R_0 u ... u R_k
#   * R_k leaves U = B + epsilon: this delta escapes, a witness word is backtracked
#   * R_k is inside Cum_{k-1}: Cum_{k-1} is forward invariant and inside U (certificate)
#   * depth D reached: STABLE when R_D is inside R_{D-1} dilated by one bin
# Verdicts are made monotone in epsilon by handing a STABLE certificate to every larger epsilon.

import math
import bisect
import logging

import numpy as np

from modules.fiber_maps import compose_word
from modules.skew import SkewSystem, SkewState, run_orbit
from modules.symbolic import SymbolWindow
from modules.attractor import FiberSubset, fiber_projection

MAX_INTERVALS = 4096
DEFAULT_EPSILONS = (0.1, 0.05, 0.02, 0.01)
DEFAULT_DELTA_FRACTIONS = (1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)
DEFAULT_DEPTH = 64
HULL_GROWTH = 0.05
CONTAINMENT_TOLERANCE = 1e-12
NEWTON_STEPS = 100

logger = logging.getLogger('stability')


class ReachSet:
    """
    Finite union of closed fiber intervals in normal form
    """

    def __init__(self, domain, intervals=(), bins=None):
        """
        :param domain: FiberDomain
        :param intervals: iterable of (lo, hi) lifts with lo <= hi
        :param bins: int - resolution used when the set has to be coarsened
        """
        self.domain = domain
        self.bins = bins
        pieces = []
        for lo, hi in intervals:
            pieces.extend(self._normalize(float(lo), float(hi)))
        self.intervals = self._merge(pieces)
        if bins and len(self.intervals) > MAX_INTERVALS:
            self.intervals = self._coarsened()
        self._starts = [lo for lo, _ in self.intervals]

    def _normalize(self, lo, hi):
        if math.isnan(lo) or math.isnan(hi):
            return []
        if not self.domain.is_circle:
            lo, hi = max(lo, self.domain.lo), min(hi, self.domain.hi)
            return [(lo, hi)] if lo <= hi else []

        circumference = self.domain.circumference
        if hi - lo >= circumference:
            return [(0.0, circumference)]
        turns = math.floor(lo / circumference)
        lo, hi = lo - turns * circumference, hi - turns * circumference
        if hi <= circumference:
            return [(lo, hi)]
        return [(lo, circumference), (0.0, hi - circumference)]

    @staticmethod
    def _merge(pieces):
        merged = []
        for lo, hi in sorted(pieces):
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return merged

    def _coarsened(self):
        cells = set()
        for lo, hi in self.intervals:
            cells.update(self.domain.bins_meeting(lo, hi, self.bins))
        pieces = []
        for cell in cells:
            pieces.extend(self._normalize(*self.domain.bin_bounds(cell, self.bins)))
        logger.debug(f"Reach set coarsened to {len(cells)} bins")
        return self._merge(pieces)

    def __len__(self):
        return len(self.intervals)

    def is_empty(self):
        return not self.intervals

    @property
    def measure(self):
        return sum(hi - lo for lo, hi in self.intervals)

    def image(self, fiber_map):
        return ReachSet(self.domain, [(fiber_map.lift(lo), fiber_map.lift(hi)) for lo, hi in self.intervals],
                        self.bins)

    def union(self, other):
        return ReachSet(self.domain, self.intervals + other.intervals, self.bins)

    def dilate(self, radius):
        return ReachSet(self.domain, [(lo - radius, hi + radius) for lo, hi in self.intervals], self.bins)

    def _index(self, x, tolerance):
        """ Index of the last interval starting at or before x """
        return bisect.bisect_right(self._starts, x + tolerance) - 1

    def contains_interval(self, lo, hi, tolerance=CONTAINMENT_TOLERANCE):
        """ Whether the (normalized, cut) interval lies in one of the stored intervals """
        index = self._index(lo, tolerance)
        return index >= 0 and hi <= self.intervals[index][1] + tolerance

    def contains(self, x, tolerance=CONTAINMENT_TOLERANCE):
        x = float(self.domain.wrap(x))
        candidates = (x,)
        if self.domain.is_circle:
            candidates = (x, x + self.domain.circumference, x - self.domain.circumference)
        return any(self.contains_interval(y, y, tolerance) for y in candidates)

    def issubset(self, other, tolerance=CONTAINMENT_TOLERANCE):
        return all(other.contains_interval(lo, hi, tolerance) for lo, hi in self.intervals)

    def distance_to(self, x):
        """ Fiber distance from a point to the set """
        if not self.intervals:
            return math.inf
        x = float(self.domain.wrap(x))
        shifts = (-self.domain.circumference, 0.0, self.domain.circumference) if self.domain.is_circle else (0.0,)
        return min(float(self.domain.distance(x, min(max(x, lo + shift), hi + shift)))
                   for lo, hi in self.intervals for shift in shifts)

    def farthest_from(self, other):
        """
        Point of this set farthest from another set

        Candidates are the interval endpoints and the midpoints of the gaps of the other
        set falling inside this one.
        """
        candidates = [x for interval in self.intervals for x in interval]
        gaps = list(zip([hi for _, hi in other.intervals], [lo for lo, _ in other.intervals[1:]]))
        if self.domain.is_circle and other.intervals:
            gaps.append((other.intervals[-1][1], other.intervals[0][0] + self.domain.circumference))
        for lo, hi in gaps:
            middle = float(self.domain.wrap(0.5 * (lo + hi)))
            if self.contains(middle):
                candidates.append(middle)
        if other.is_empty():
            return candidates[0], math.inf
        distances = [other.distance_to(x) for x in candidates]
        index = int(np.argmax(distances))
        return candidates[index], distances[index]

    def to_list(self):
        return [[lo, hi] for lo, hi in self.intervals]

    def __repr__(self):
        return f"ReachSet({self.intervals})"


def reach_of_subset(subset, radius=0.0):
    """ The union of the bins of a FiberSubset dilated by radius, as a ReachSet """
    intervals = subset.exact_intervals if subset.exact_intervals else subset.intervals()
    return ReachSet(subset.domain, [(lo - radius, hi + radius) for lo, hi in intervals], subset.bins)


def step_reach(system, reach):
    """ Union of the images of the set under every fiber map """
    result = ReachSet(system.domain, (), reach.bins)
    for fiber_map in system.maps:
        result = result.union(reach.image(fiber_map))
    return result


def _cell_pieces(domain, bins, lo, hi):
    """
    Parts of the interval [lo, hi] (lifts) inside each fiber bin, in the bin's own coordinates

    :return: list of (bin, a, b)
    """
    width = domain.bin_width(bins)
    if domain.is_circle and hi - lo >= domain.circumference:
        return [(k, *domain.bin_bounds(k, bins)) for k in range(bins)]

    pieces = []
    for cell in domain.bins_meeting(lo, hi, bins):
        cell_lo, cell_hi = domain.bin_bounds(cell, bins)
        shift = 0.0
        if domain.is_circle:
            shift = math.floor((lo - cell_lo) / domain.circumference) * domain.circumference
            if cell_hi + shift < lo:
                shift += domain.circumference
        a, b = max(lo, cell_lo + shift) - shift, min(hi, cell_hi + shift) - shift
        if a <= b + width * 1e-9:
            pieces.append((cell, a, max(a, b)))
    return pieces


def semigroup_closure(system, start, bins, max_iter=None):
    """
    Grid closure of the orbit of a point (or of a fiber set) under the semigroup of the fiber maps

    Every marked bin keeps the hull of the exact images that reached it; hulls are mapped by
    every f_i until no new bin is marked and no hull grows by more than a twentieth of a bin.

    :param system: SkewSystem
    :param start: float point or nonempty FiberSubset
    :param bins: int - m
    :param max_iter: int, 10 m when None
    :return: FiberSubset, flagged when the budget ran out
    """
    domain = system.domain
    max_iter = max_iter or 10 * bins
    tolerance = HULL_GROWTH * domain.bin_width(bins)

    hulls = dict()
    if isinstance(start, FiberSubset):
        if start.is_empty():
            raise StabilityError("The closure needs a nonempty start")
        if start.exact_intervals:
            for lo, hi in start.exact_intervals:
                for cell, a, b in _cell_pieces(domain, bins, lo, hi):
                    old = hulls.get(cell, (a, b))
                    hulls[cell] = (min(old[0], a), max(old[1], b))
        else:
            for cell in start.indices():
                hulls[int(cell)] = domain.bin_bounds(int(cell), bins)
    else:
        for cell, a, b in _cell_pieces(domain, bins, float(start), float(start)):
            hulls[cell] = (a, b)

    def closure_of(hulls):
        closure = FiberSubset.from_bins(domain, bins, sorted(hulls))
        closure.exact_intervals = [hulls[cell] for cell in sorted(hulls)]
        return closure

    for iteration in range(max_iter):
        changed = False
        for cell, (a, b) in list(hulls.items()):
            for fiber_map in system.maps:
                for target, lo, hi in _cell_pieces(domain, bins, float(fiber_map.lift(a)), float(fiber_map.lift(b))):
                    if target not in hulls:
                        hulls[target] = (lo, hi)
                        changed = True
                        continue
                    old_lo, old_hi = hulls[target]
                    new_lo, new_hi = min(old_lo, lo), max(old_hi, hi)
                    if old_lo - new_lo > tolerance or new_hi - old_hi > tolerance:
                        changed = True
                    hulls[target] = (new_lo, new_hi)
        if not changed:
            logger.debug(f"Closure fixpoint after {iteration + 1} iterations, {len(hulls)} bins")
            return closure_of(hulls)

    closure = closure_of(hulls)
    closure.flagged = BudgetExceeded(f"No closure fixpoint within {max_iter} iterations")
    logger.warning(f"BudgetExceeded: no closure fixpoint within {max_iter} iterations")
    return closure


def _bin_gap(domain, bins, first, second):
    """ Index distance between bins, wrapping around on the circle """
    gap = abs(first - second)
    return min(gap, bins - gap) if domain.is_circle else gap


class InvarianceResult:
    def __init__(self, passed, max_excess):
        self.passed = passed
        self.max_excess = max_excess

    def to_dict(self):
        return {"passed": self.passed, "max_excess": self.max_excess}


def check_forward_invariance(system, subset):
    """
    Checks f_i(B) inside B dilated by one bin for every map

    :param system: SkewSystem
    :param subset: nonempty FiberSubset
    :return: InvarianceResult, the excess being counted in bins
    """
    if subset.is_empty():
        raise StabilityError("Forward invariance of an empty set")
    domain, bins = subset.domain, subset.bins
    marked = subset.indices()

    worst = 0
    for cell in marked:
        lo, hi = domain.bin_bounds(int(cell), bins)
        for fiber_map in system.maps:
            for target in domain.bins_meeting(float(fiber_map.lift(lo)), float(fiber_map.lift(hi)), bins):
                if not subset.mask[target]:
                    worst = max(worst, min(_bin_gap(domain, bins, target, int(other)) for other in marked))
    return InvarianceResult(worst <= 1, worst)


class Witness:
    """ A replayable escape: word, start point, exit point and the escape depth """

    def __init__(self, word, start, exit_point, depth, delta):
        self.word = tuple(word)
        self.start = start
        self.exit_point = exit_point
        self.depth = depth
        self.delta = delta
        self.replayed = None

    def to_dict(self):
        return {"word": "".join(map(str, self.word)), "start": self.start, "exit_point": self.exit_point,
                "depth": self.depth, "delta": self.delta, "replayed": self.replayed}


class EpsilonVerdict:
    """ Verdict of the probe at one epsilon """

    def __init__(self, epsilon, verdict, delta=None, depth=None, fixpoint_certified=False, witness=None,
                 inherited=False):
        self.epsilon = epsilon
        self.verdict = verdict
        self.delta = delta
        self.depth = depth
        self.fixpoint_certified = fixpoint_certified
        self.witness = witness
        self.inherited = inherited

    def to_dict(self):
        return {"epsilon": self.epsilon, "verdict": self.verdict, "delta": self.delta, "depth": self.depth,
                "fixpoint_certified": self.fixpoint_certified, "inherited": self.inherited,
                "witness": None if self.witness is None else self.witness.to_dict()}


class StabilityReport:
    """
    Verdicts over an epsilon ladder

    The overall verdict is UNSTABLE when some epsilon is unstable, STABLE when every epsilon
    is stable, INCONCLUSIVE otherwise.
    """

    def __init__(self, verdicts, depth, delta_fractions):
        self.verdicts = sorted(verdicts, key=lambda verdict: verdict.epsilon)
        self.depth = depth
        self.delta_fractions = tuple(delta_fractions)
        self.via_projection = False

        kinds = [verdict.verdict for verdict in self.verdicts]
        if "UNSTABLE" in kinds:
            self.verdict = "UNSTABLE"
            self.headline = [verdict for verdict in self.verdicts if verdict.verdict == "UNSTABLE"][-1]
        elif all(kind == "STABLE" for kind in kinds):
            self.verdict = "STABLE"
            self.headline = self.verdicts[0]
        else:
            self.verdict = "INCONCLUSIVE"
            self.headline = [verdict for verdict in self.verdicts if verdict.verdict == "INCONCLUSIVE"][0]

    def at(self, epsilon):
        for verdict in self.verdicts:
            if math.isclose(verdict.epsilon, epsilon):
                return verdict
        raise StabilityError(f"No verdict at epsilon {epsilon}")

    @property
    def witness(self):
        return self.headline.witness

    def to_dict(self):
        witness = self.headline.witness
        return {"verdict": self.verdict, "epsilon": self.headline.epsilon, "delta": self.headline.delta,
                "depth": self.depth, "witness_word": None if witness is None else "".join(map(str, witness.word)),
                "fixpoint_certified": self.headline.fixpoint_certified, "via_projection": self.via_projection,
                "ladder": [verdict.to_dict() for verdict in self.verdicts]}


def _extract_witness(system, trail, exit_point, delta):
    """
    Backtracks the escape through the recorded reach sets

    At every step the smallest symbol whose inverse image of the current point lies in the
    previous reach set is chosen.
    """
    word, y = [], exit_point
    for previous in reversed(trail[:-1]):
        chosen, best = None, None
        for symbol, fiber_map in enumerate(system.maps, start=1):
            preimage = float(fiber_map.inverse_or_nan(system.domain.wrap(y)))
            if math.isnan(preimage):
                continue
            distance = previous.distance_to(preimage)
            if distance <= 1e-9:
                chosen, best = (symbol, preimage), 0.0
                break
            if best is None or distance < best:
                chosen, best = (symbol, preimage), distance
        if chosen is None:
            raise StabilityError("Witness backtracking lost the escaping point")
        word.append(chosen[0])
        y = chosen[1]
    word.reverse()
    return Witness(word, y, float(system.domain.wrap(exit_point)), len(word), delta)


def replay_witness(system, witness, subset, epsilon):
    """ Whether the witness orbit ends farther than epsilon from the subset """
    end = compose_word(system, witness.word, witness.start)
    return reach_of_subset(subset).distance_to(end) > epsilon


def _probe_delta(system, subset, target, delta, depth):
    """
    Propagates B + delta for up to depth steps

    :return: ('escaped', trail, exit point) | ('certified', k) | ('stable', depth) | ('open', depth)
    """
    bin_width = subset.domain.bin_width(subset.bins)
    current = reach_of_subset(subset, delta)
    cumulative, trail = current, [current]
    for k in range(1, depth + 1):
        following = step_reach(system, current)
        trail.append(following)
        if not following.issubset(target):
            exit_point, _ = following.farthest_from(target)
            return "escaped", trail, exit_point
        if following.issubset(cumulative):
            return "certified", k, None
        cumulative = cumulative.union(following)
        if k == depth:
            settled = following.issubset(current.dilate(bin_width))
            return ("stable" if settled else "open"), k, None
        current = following
    return "open", depth, None


def probe_stability(system, subset, epsilons=None, delta_fractions=DEFAULT_DELTA_FRACTIONS, depth=DEFAULT_DEPTH):
    """
    Depth-bounded Lyapunov stability probe of Sigma x B

    :param system: SkewSystem
    :param subset: FiberSubset B
    :param epsilons: absolute epsilon ladder, DEFAULT_EPSILONS times the fiber size when None
    :param delta_fractions: delta = epsilon * fraction, tried in descending order
    :param depth: int - D
    :return: StabilityReport
    """
    if subset.is_empty():
        raise StabilityError("Stability of an empty set")
    size = system.domain.size
    epsilons = sorted(epsilons or [fraction * size for fraction in DEFAULT_EPSILONS])
    fractions = sorted(delta_fractions, reverse=True)

    verdicts, certificate = [], None
    for epsilon in epsilons:
        if certificate is not None:
            verdicts.append(EpsilonVerdict(epsilon, "STABLE", certificate.delta, certificate.depth,
                                           certificate.fixpoint_certified, inherited=True))
            continue

        target = reach_of_subset(subset, epsilon)
        escapes, verdict = [], None
        for fraction in fractions:
            delta = epsilon * fraction
            outcome, detail, exit_point = _probe_delta(system, subset, target, delta, depth)
            if outcome == "escaped":
                escapes.append((delta, detail, exit_point))
            elif outcome in ("certified", "stable"):
                verdict = EpsilonVerdict(epsilon, "STABLE", delta, detail, outcome == "certified")
                break

        if verdict is None and len(escapes) == len(fractions):
            delta, trail, exit_point = escapes[-1]
            witness = _extract_witness(system, trail, exit_point, delta)
            witness.replayed = replay_witness(system, witness, subset, epsilon)
            if not witness.replayed:
                logger.warning(f"Witness {witness.word} does not replay at epsilon {epsilon}")
            verdict = EpsilonVerdict(epsilon, "UNSTABLE", delta, witness.depth, witness=witness)
        elif verdict is None:
            logger.warning(f"INCONCLUSIVE stability probe at epsilon {epsilon}, depth {depth}")
            verdict = EpsilonVerdict(epsilon, "INCONCLUSIVE", depth=depth)

        if verdict.verdict == "STABLE":
            certificate = verdict
        verdicts.append(verdict)

    report = StabilityReport(verdicts, depth, fractions)
    logger.debug(f"Stability probe of {subset}: {report.verdict}")
    return report


def attractor_stability_via_projection(system, estimate, epsilons=None, delta_fractions=DEFAULT_DELTA_FRACTIONS,
                                       depth=DEFAULT_DEPTH):
    """
    Stability of an attractor estimate, decided on its fiber projection

    :param system: SkewSystem
    :param estimate: nonempty CellSet
    :return: StabilityReport
    """
    if estimate.is_empty():
        raise StabilityError("The attractor estimate is empty")
    report = probe_stability(system, fiber_projection(estimate), epsilons, delta_fractions, depth)
    report.via_projection = True
    return report


def witness_state(system, witness, seed, stream=0):
    """
    Product-space state whose future symbols spell the witness word

    :return: SkewState starting at the witness start point
    """
    window = SymbolWindow(seed, system.s, probs=system.probs, stream=stream)
    window = window.with_symbols({index: symbol for index, symbol in enumerate(witness.word)})
    return SkewState(window, system.domain.wrap(witness.start), 0)


def witness_orbit_exits(system, witness, subset, epsilon, seed, stream=0):
    """
    Runs the product-space orbit of the witness state: it has to start within delta of
    Sigma x B and end farther than epsilon from it

    :return: bool
    """
    state = witness_state(system, witness, seed, stream)
    trace = run_orbit(system, state, len(witness.word))
    reach = reach_of_subset(subset)
    starts_close = reach.distance_to(float(trace.points[0])) <= witness.delta + 1e-9
    return starts_close and reach.distance_to(float(trace.points[-1])) > epsilon


def perturb_uniform(system, c):
    """
    The system {f_1 + c, ..., f_s + c}

    :param system: SkewSystem
    :param c: float
    :return: SkewSystem
    """
    if c == 0:
        return system
    if not system.domain.is_circle:
        for index, fiber_map in enumerate(system.maps, start=1):
            low, high = fiber_map.image()
            if low + c < system.domain.lo or high + c > system.domain.hi:
                raise LeavesFiber(c, index)
    return SkewSystem(system.domain, [fiber_map.shifted(c) for fiber_map in system.maps], system.probs)


class SinkPoint:
    def __init__(self, c, point, multiplier):
        self.c = c
        self.point = point
        self.multiplier = multiplier

    def to_dict(self):
        return {"c": self.c, "point": self.point, "multiplier": self.multiplier}


def _periodic_residual(fiber_map, x, q, turns):
    """ F^q(x) - x - turns * C and the multiplier along the orbit """
    circumference = fiber_map.domain.circumference or 0.0
    multiplier, y = 1.0, x
    for _ in range(q):
        multiplier *= float(fiber_map.derivative(fiber_map.domain.wrap(y)))
        y = float(fiber_map.lift(y))
    return y - x - turns * circumference, multiplier


def track_sink(system, a, q, c_grid, tol=1e-6):
    """
    Continuation of a sink of f_1 along the uniform perturbation f_1 + c

    :param system: SkewSystem
    :param a: float - hyperbolic sink of f_1 of period q
    :param q: int - period
    :param c_grid: list of c values, continued in the given order
    :param tol: float - lost when the multiplier reaches 1 - tol
    :return: list of SinkPoint
    """
    base = system.maps[0]
    circumference = base.domain.circumference
    turns = 0
    if circumference:
        turns = round(float(_periodic_residual(base, a, q, 0)[0]) / circumference)

    path, x = [], float(a)
    for c in c_grid:
        shifted = base.shifted(c) if c else base
        residual, multiplier = _periodic_residual(shifted, x, q, turns)
        for _ in range(NEWTON_STEPS):
            if abs(residual) < 1e-13:
                break
            slope = multiplier - 1.0
            if slope == 0:
                raise ContinuationLost(c)
            damping, moved = 1.0, False
            while damping > 1e-6:
                candidate = x - damping * residual / slope
                if not circumference:
                    candidate = min(max(candidate, base.domain.lo), base.domain.hi)
                candidate_residual, candidate_multiplier = _periodic_residual(shifted, candidate, q, turns)
                if abs(candidate_residual) < abs(residual):
                    x, residual, multiplier, moved = candidate, candidate_residual, candidate_multiplier, True
                    break
                damping /= 2
            if not moved:
                break

        if abs(residual) > 1e-10 or multiplier >= 1.0 - tol:
            logger.warning(f"Sink continuation lost at c={c} (multiplier {multiplier})")
            raise ContinuationLost(c)
        path.append(SinkPoint(c, float(base.domain.wrap(x)), multiplier))
    return path


def _directed(first, second):
    """ Largest distance (in bins) from a bin of the first subset to the second subset """
    targets = second.indices()
    if first.domain.is_circle:
        targets = np.concatenate([targets - first.bins, targets, targets + first.bins])
    targets = np.sort(targets)
    sources = first.indices()
    positions = np.searchsorted(targets, sources)
    left = targets[np.clip(positions - 1, 0, len(targets) - 1)]
    right = targets[np.clip(positions, 0, len(targets) - 1)]
    return int(np.minimum(np.abs(sources - left), np.abs(sources - right)).max())


def directed_hausdorff(first, second):
    """ sup over the first subset of the distance to the second one """
    if first.is_empty() or second.is_empty():
        raise EmptySet("Hausdorff distance of an empty set")
    first._check(second)
    return _directed(first, second) * first.domain.bin_width(first.bins)


def hausdorff(first, second):
    """
    Hausdorff distance of two fiber subsets, measured between bins

    :return: float
    """
    return max(directed_hausdorff(first, second), directed_hausdorff(second, first))


class ScanRow:
    def __init__(self, c, closure, sink=None):
        self.c = c
        self.closure = closure
        self.sink = sink
        self.jump = None
        self.lower = None
        self.upper = None

    def to_dict(self):
        return {"c": self.c, "hausdorff_jump": self.jump, "lower_distance": self.lower, "upper_distance": self.upper,
                "sink_location": None if self.sink is None else self.sink.point,
                "multiplier": None if self.sink is None else self.sink.multiplier,
                "closure_bins": len(self.closure), "flagged": bool(self.closure.flagged)}


class ScanReport:
    def __init__(self, rows, lower_semicontinuous, tolerance):
        self.rows = rows
        self.lower_semicontinuous = lower_semicontinuous
        self.tolerance = tolerance
        jumps = [row.jump for row in rows if row.jump is not None]
        self.max_jump = max(jumps) if jumps else 0.0

    def to_dict(self):
        return {"max_jump": self.max_jump, "lower_semicontinuous": self.lower_semicontinuous,
                "tolerance": self.tolerance, "rows": [row.to_dict() for row in self.rows]}


def scan_discontinuity(system, a, q, c_range, steps, bins, track=True, tolerance_bins=2, max_iter=None):
    """
    Hausdorff jumps of the orbit closure O(c) = closure of the orbit of a(c) under F_c

    Lower semi-continuity is checked pointwise in c: every bin of O(c_k) must have a bin of
    O(c) within the tolerance for at least one neighbouring c on the grid.

    :param system: SkewSystem
    :param a: float - sink of f_1 (tracked), or a fixed start point when track is False
    :param q: int - period of the sink
    :param c_range: (c_min, c_max)
    :param steps: int - grid points in c
    :param bins: int - fiber bins
    :return: ScanReport
    """
    c_values = [float(c) for c in np.linspace(c_range[0], c_range[1], steps)]
    if track:
        below = [c for c in c_values if c < 0][::-1]
        above = [c for c in c_values if c >= 0]
        sinks = {point.c: point for point in track_sink(system, a, q, below)} if below else dict()
        sinks.update({point.c: point for point in track_sink(system, a, q, above)})
    else:
        sinks = dict()

    rows = []
    for c in c_values:
        sink = sinks.get(c)
        start = sink.point if sink else a
        rows.append(ScanRow(c, semigroup_closure(perturb_uniform(system, c), start, bins, max_iter), sink))

    tolerance = tolerance_bins * system.domain.bin_width(bins)
    lower_ok = True
    for k, row in enumerate(rows):
        if k + 1 < len(rows):
            following = rows[k + 1]
            row.jump = hausdorff(row.closure, following.closure)
            row.lower = directed_hausdorff(row.closure, following.closure)
            row.upper = directed_hausdorff(following.closure, row.closure)
        neighbours = [rows[j].closure for j in (k - 1, k + 1) if 0 <= j < len(rows)]
        if neighbours and min(directed_hausdorff(row.closure, other) for other in neighbours) > tolerance:
            lower_ok = False

    report = ScanReport(rows, lower_ok, tolerance)
    logger.debug(f"Discontinuity scan over {c_range}: max jump {report.max_jump}")
    return report


class StabilityError(Exception):
    """ Exception raised in the stability probe module """


class BudgetExceeded(StabilityError):
    """ No closure fixpoint within the iteration budget """


class LeavesFiber(StabilityError):
    """ The shifted map leaves the fiber segment """

    def __init__(self, c, index):
        super().__init__(f"f_{index} + {c} leaves the fiber")
        self.c = c
        self.index = index


class ContinuationLost(StabilityError):
    """ The sink disappeared (saddle-node) along the continuation """

    def __init__(self, c):
        super().__init__(f"Sink continuation lost at c={c}")
        self.c = c


class EmptySet(StabilityError):
    """ Distance involving an empty set """
