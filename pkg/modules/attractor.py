#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# Empirical statistical and Milnor attractors on a cylinder x fiber grid.

# The product space is discretized into cells: a state (w, p) at time t belongs to the cell
# of the word w_{t-P} ... w_{t+F-1} (P past and F future symbols) and of the fiber bin of p.
# Words are coded lexicographically, the oldest symbol being the most significant digit,
# the cell code is word_code * bins + fiber_bin.
#
# Ensembles of K samples are run for N steps, the first T steps are a transient.
# Visits are counted per sample and per cell over five nested suffix windows
# [b_j, N), b_j = max(T, N - N // 2^j), j = 0..4; window 0 is the whole tail.
#   * statistical attractor: cells whose largest window frequency (the limsup surrogate)
#     reaches theta for at least kappa * K samples
#   * Milnor attractor: cells visited during the tail by at least kappa * K samples
#
# Fiber projections of cell sets are FiberSubsets: bitarray masks over the fiber bins.

import logging
import itertools

import numpy as np
from scipy import sparse
from bitarray import bitarray

from modules.skew import ensemble_chunks, sample_groups, run_groups

WINDOWS = 5
MAX_CELLS = 1 << 24
MIN_RETURN_VISITS = 100

logger = logging.getLogger('attractor')


def dyadic_boundaries(n_steps, transient):
    """ Starts of the five nested suffix windows """
    return tuple(max(transient, n_steps - n_steps // 2 ** j) for j in range(WINDOWS))


class CellGrid:
    """
    Discretization of the product space: words at positions -past..future-1 times fiber bins
    """

    def __init__(self, past_length, future_length, bins, domain, s):
        """
        :param past_length: int - past symbols in the cell word
        :param future_length: int - future symbols in the cell word (current symbol included)
        :param bins: int - number of fiber bins
        :param domain: FiberDomain
        :param s: int - alphabet size
        """
        if past_length < 0 or future_length < 0 or bins < 1 or s < 1:
            raise AttractorError(f"Invalid grid ({past_length}, {future_length}, {bins}, s={s})")
        self.past_length = past_length
        self.future_length = future_length
        self.bins = bins
        self.domain = domain
        self.s = s
        self.n_words = s ** (past_length + future_length)
        if self.n_words * bins > MAX_CELLS:
            raise AttractorError(f"Grid of {self.n_words} words x {bins} bins is too large")

    @classmethod
    def symmetric(cls, depth, bins, system):
        """ The grid of cylinders at positions -depth..depth-1 """
        return cls(depth, depth, bins, system.domain, system.s)

    @property
    def n_cells(self):
        return self.n_words * self.bins

    @property
    def word_length(self):
        return self.past_length + self.future_length

    def compatible(self, other):
        return (self.past_length, self.future_length, self.bins, self.s, self.domain) == \
               (other.past_length, other.future_length, other.bins, other.s, other.domain)

    def word_code(self, word):
        """ Code of a word (tuple of symbols, oldest first) """
        code = 0
        for symbol in word:
            code = code * self.s + (symbol - 1)
        return code

    def decode_word(self, code):
        """
        :param code: int - word code
        :return: (past word, future word) tuples of symbols
        """
        digits = []
        for _ in range(self.word_length):
            code, digit = divmod(code, self.s)
            digits.append(digit + 1)
        digits.reverse()
        return tuple(digits[:self.past_length]), tuple(digits[self.past_length:])

    def split(self, cells):
        """ Word codes and fiber bins of cell codes """
        return np.divmod(np.asarray(cells, dtype=np.int64), self.bins)

    def cells_of(self, chunk):
        """
        Cell codes of every (sample, time) of an ensemble chunk

        The chunk has to carry past_length symbols of past padding.
        """
        length = chunk.stop - chunk.start
        offset = chunk.pad_past - self.past_length
        codes = np.zeros(chunk.points.shape, dtype=np.int64)
        for i in range(self.word_length):
            codes = codes * self.s + (chunk.symbols[:, offset + i:offset + i + length] - 1)
        return codes * self.bins + self.domain.bin_index(chunk.points, self.bins)

    def cells_along(self, window, start, stop, points):
        """ Cell codes of the states at relative times start..stop-1 of a window """
        symbols = window.symbols(start - self.past_length, stop + self.future_length)
        length = stop - start
        codes = np.zeros(length, dtype=np.int64)
        for i in range(self.word_length):
            codes = codes * self.s + (symbols[i:i + length] - 1)
        return codes * self.bins + self.domain.bin_index(np.asarray(points, dtype=float), self.bins)

    def to_dict(self):
        return {"past_length": self.past_length, "future_length": self.future_length, "bins": self.bins}


class EmpiricalMeasure:
    """
    Per-sample visit counts of every cell over the five nested tail windows

    Counts are sparse (samples x n_cells) matrices, one per window: a sample visits at most
    N - T cells, usually far fewer than the grid holds.
    """

    def __init__(self, grid, counts, n_steps, transient, half_counts):
        """
        :param grid: CellGrid
        :param counts: list of WINDOWS scipy.sparse csr matrices (samples, n_cells) of visit counts
        :param n_steps: int - N
        :param transient: int - T
        :param half_counts: np.ndarray (samples, 2, bins) fiber-bin visits of the two tail halves
        """
        self.grid = grid
        self.counts = counts
        self.n_steps = n_steps
        self.transient = transient
        self.half_counts = half_counts
        self.boundaries = dyadic_boundaries(n_steps, transient)

    @property
    def samples(self):
        return self.counts[0].shape[0]

    @property
    def tail_length(self):
        return self.n_steps - self.transient

    def window_lengths(self):
        return [self.n_steps - boundary for boundary in self.boundaries]

    def tail_frequency(self):
        """ Plain tail averages, sparse (samples, n_cells) """
        return (self.counts[0] / self.tail_length).tocsr()

    def limsup_frequency(self):
        """ Largest average over the suffix windows, sparse (samples, n_cells) """
        result = self.tail_frequency()
        for j, length in enumerate(self.window_lengths()):
            if length > 0:
                result = result.maximum(self.counts[j] / length)
        return result.tocsr()

    def tail_visited(self):
        return (self.counts[0] > 0).tocsr()

    def mean_tail_frequency(self, cells):
        """ Tail frequency of the given cells averaged over the samples """
        cells = np.asarray(cells, dtype=np.int64)
        if cells.size == 0:
            return np.zeros(0)
        return np.asarray(self.tail_frequency()[:, cells].mean(axis=0)).ravel()

    def density(self):
        """ Tail visits of all samples, (n_words, bins) """
        totals = np.asarray(self.counts[0].sum(axis=0), dtype=np.int64).ravel()
        return totals.reshape(self.grid.n_words, self.grid.bins)

    def is_empty(self):
        return self.samples == 0 or self.counts[0].count_nonzero() == 0


def empirical_measure(system, grid, seed, n_samples, n_steps, transient):
    """
    Runs the ensemble and counts cell visits

    :param system: SkewSystem
    :param grid: CellGrid
    :param seed: int
    :param n_samples: int - K
    :param n_steps: int - N
    :param transient: int - T < N
    :return: EmpiricalMeasure
    """
    if not 0 <= transient < n_steps:
        raise AttractorError(f"The transient must be shorter than the run (T={transient}, N={n_steps})")
    if n_samples < 1:
        raise AttractorError("At least one sample is needed")

    boundaries = dyadic_boundaries(n_steps, transient)
    middle = transient + (n_steps - transient) // 2
    n_cells = grid.n_cells

    def run(group):
        size = len(group)
        counts = [sparse.csr_matrix((size, n_cells), dtype=np.int64) for _ in range(WINDOWS)]
        halves = np.zeros((size, 2, grid.bins), dtype=np.int64)
        rows = np.arange(size, dtype=np.int64)[:, None]

        for chunk in ensemble_chunks(system, seed, group, n_steps, grid.past_length, grid.future_length):
            if chunk.stop <= transient:
                continue
            cells = grid.cells_of(chunk)
            times = np.arange(chunk.start, chunk.stop)

            for j, boundary in enumerate(boundaries):
                selected = times >= boundary
                if selected.any():
                    visited = cells[:, selected]
                    samples = np.repeat(np.arange(size, dtype=np.int64), visited.shape[1])
                    # duplicate (sample, cell) entries are summed by the csr constructor
                    counts[j] = counts[j] + sparse.csr_matrix(
                        (np.ones(visited.size, dtype=np.int64), (samples, visited.ravel())), shape=(size, n_cells))

            bins = cells % grid.bins
            for half, (low, high) in enumerate(((transient, middle), (middle, n_steps))):
                selected = (times >= low) & (times < high)
                if selected.any():
                    visits = np.bincount((rows * grid.bins + bins)[:, selected].ravel(), minlength=size * grid.bins)
                    halves[:, half, :] += visits.reshape(size, grid.bins)

        logger.debug(f"Samples {group[0]}..{group[-1]} done")
        return counts, halves

    results = run_groups(run, sample_groups(n_samples))
    counts = [sparse.vstack([result[0][j] for result in results], format="csr") for j in range(WINDOWS)]
    measure = EmpiricalMeasure(grid, counts, n_steps, transient, np.concatenate([result[1] for result in results]))
    logger.debug(f"Empirical measure: K={n_samples}, N={n_steps}, T={transient}, {n_cells} cells")
    return measure


class CellSet:
    """
    A set of grid cells with per-cell support fraction and mean frequency
    """

    def __init__(self, grid, cells, support=None, frequency=None):
        order = np.argsort(np.asarray(cells, dtype=np.int64), kind='stable')
        self.grid = grid
        self.cells = np.asarray(cells, dtype=np.int64)[order]
        self.support = None if support is None else np.asarray(support, dtype=float)[order]
        self.frequency = None if frequency is None else np.asarray(frequency, dtype=float)[order]

    def __len__(self):
        return len(self.cells)

    def __contains__(self, cell):
        index = np.searchsorted(self.cells, cell)
        return index < len(self.cells) and self.cells[index] == cell

    def is_empty(self):
        return len(self.cells) == 0

    def issubset(self, other):
        return bool(np.all(np.isin(self.cells, other.cells)))

    def restrict_to_past(self, length):
        """ The set of (last `length` past symbols, fiber bin) pairs of the cells """
        if length > self.grid.past_length:
            raise AttractorError(f"Cells carry only {self.grid.past_length} past symbols")
        grid = CellGrid(length, 0, self.grid.bins, self.grid.domain, self.grid.s)
        words, bins = self.grid.split(self.cells)
        past = (words // self.grid.s ** self.grid.future_length) % self.grid.s ** length
        return CellSet(grid, np.unique(past * grid.bins + bins))

    def dilated(self, k=1):
        """ Every cell extended by k fiber bins on both sides, within the same word """
        words, bins = self.grid.split(self.cells)
        shifted = []
        for offset in range(-k, k + 1):
            moved = bins + offset
            if self.grid.domain.is_circle:
                shifted.append(words * self.grid.bins + np.mod(moved, self.grid.bins))
            else:
                inside = (moved >= 0) & (moved < self.grid.bins)
                shifted.append(words[inside] * self.grid.bins + moved[inside])
        return CellSet(self.grid, np.unique(np.concatenate(shifted)))

    def rows(self):
        """ Emission rows sorted by cell code """
        words, bins = self.grid.split(self.cells)
        rows = []
        for index, (word, fiber_bin) in enumerate(zip(words, bins)):
            past, future = self.grid.decode_word(int(word))
            lo, hi = self.grid.domain.bin_bounds(int(fiber_bin), self.grid.bins)
            rows.append({"past_word": "".join(map(str, past)), "future_word": "".join(map(str, future)),
                         "bin_lo": lo, "bin_hi": hi,
                         "freq": None if self.frequency is None else float(self.frequency[index]),
                         "support_fraction": None if self.support is None else float(self.support[index])})
        return rows


def agreement(first, second, dilation=1):
    """
    Fraction of the cells of each set lying in the other set dilated by some fiber bins

    :return: (share of first covered by second, share of second covered by first)
    """
    if not first.grid.compatible(second.grid):
        raise AttractorError("Cell sets live on different grids")

    def covered(a, b):
        if a.is_empty():
            return 1.0
        return float(np.mean(np.isin(a.cells, b.dilated(dilation).cells)))

    return covered(first, second), covered(second, first)


def _threshold(measure, hits, kappa):
    """ Cells where at least kappa of the samples hit, with support fractions and mean frequencies """
    support = np.asarray(hits.sum(axis=0)).ravel() / measure.samples
    cells = np.nonzero(support >= kappa - 1e-12)[0]
    frequency = measure.mean_tail_frequency(cells)
    return CellSet(measure.grid, cells, support[cells], frequency)


def estimate_statistical_attractor(system, grid, seed, n_samples, n_steps, transient, theta, kappa, measure=None):
    """
    Cells whose limsup-surrogate frequency reaches theta for at least kappa * K samples

    :param measure: a precomputed EmpiricalMeasure of the same parameters, computed when None
    :return: CellSet
    """
    if not theta > 0:
        raise AttractorError(f"The frequency threshold must be positive (got {theta})")
    if measure is None:
        measure = empirical_measure(system, grid, seed, n_samples, n_steps, transient)
    estimate = _threshold(measure, measure.limsup_frequency() >= theta, kappa)
    logger.debug(f"Statistical attractor estimate: {len(estimate)} cells (theta={theta}, kappa={kappa})")
    return estimate


def estimate_milnor_attractor(system, grid, seed, n_samples, n_steps, transient, kappa, measure=None):
    """
    Cells visited during the tail by at least kappa * K samples

    :return: CellSet
    """
    if measure is None:
        measure = empirical_measure(system, grid, seed, n_samples, n_steps, transient)
    estimate = _threshold(measure, measure.tail_visited(), kappa)
    logger.debug(f"Milnor attractor estimate: {len(estimate)} cells (kappa={kappa})")
    return estimate


class FiberSubset:
    """
    A union of fiber bins, kept as a bitarray mask, optionally with its exact intervals
    """

    def __init__(self, domain, bins, mask=None, exact_intervals=None):
        self.domain = domain
        self.bins = bins
        if mask is None:
            mask = bitarray(bins)
            mask.setall(0)
        if len(mask) != bins:
            raise AttractorError(f"Mask of {len(mask)} bits for {bins} bins")
        self.mask = mask
        self.exact_intervals = exact_intervals
        self.flagged = False

    @classmethod
    def from_indicator(cls, domain, bins, indicator):
        mask = bitarray()
        mask.pack(np.asarray(indicator, dtype=np.uint8).tobytes())
        return cls(domain, bins, mask)

    @classmethod
    def from_bins(cls, domain, bins, indices):
        indicator = np.zeros(bins, dtype=bool)
        indicator[np.asarray(list(indices), dtype=np.int64)] = True
        return cls.from_indicator(domain, bins, indicator)

    @classmethod
    def from_intervals(cls, domain, bins, intervals):
        """ Bins meeting the given (lo, hi) intervals; the intervals are kept as exact data """
        indices = set()
        for lo, hi in intervals:
            indices.update(domain.bins_meeting(lo, hi, bins))
        subset = cls.from_bins(domain, bins, sorted(indices))
        subset.exact_intervals = [(float(lo), float(hi)) for lo, hi in intervals]
        return subset

    @classmethod
    def point(cls, domain, bins, x):
        return cls.from_bins(domain, bins, [domain.bin_index(x, bins)])

    @classmethod
    def full(cls, domain, bins):
        mask = bitarray(bins)
        mask.setall(1)
        return cls(domain, bins, mask)

    def indicator(self):
        return np.frombuffer(self.mask.unpack(), dtype=np.uint8).astype(bool)

    def indices(self):
        return np.nonzero(self.indicator())[0]

    def __len__(self):
        return self.mask.count()

    def __contains__(self, x):
        return bool(self.mask[self.domain.bin_index(x, self.bins)])

    def __eq__(self, other):
        if not isinstance(other, FiberSubset):
            return NotImplemented
        return self.bins == other.bins and self.domain == other.domain and self.mask == other.mask

    def is_empty(self):
        return not self.mask.any()

    def is_full(self):
        return self.mask.all()

    def issubset(self, other):
        self._check(other)
        return not (self.mask & ~other.mask).any()

    def union(self, other):
        self._check(other)
        return FiberSubset(self.domain, self.bins, self.mask | other.mask)

    def dilate(self, k=1):
        """ The subset extended by k bins on both sides (wrapping around on a circle) """
        indicator = self.indicator()
        result = indicator.copy()
        for offset in range(1, k + 1):
            if self.domain.is_circle:
                result |= np.roll(indicator, offset) | np.roll(indicator, -offset)
            else:
                result[offset:] |= indicator[:-offset]
                result[:-offset] |= indicator[offset:]
        return FiberSubset.from_indicator(self.domain, self.bins, result)

    def runs(self):
        """
        Maximal runs of marked bins as (first, last) index pairs; on a circle a run may wrap,
        in which case first > last
        """
        indicator = self.indicator()
        if not indicator.any():
            return []
        if indicator.all():
            return [(0, self.bins - 1)]

        runs = []
        for value, group in itertools.groupby(enumerate(indicator), key=lambda item: item[1]):
            group = list(group)
            if value:
                runs.append((group[0][0], group[-1][0]))
        if self.domain.is_circle and len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == self.bins - 1:
            runs = [(runs[-1][0], runs[0][1])] + runs[1:-1]
        return runs

    def intervals(self):
        """ Closed intervals covered by the marked bins, as lifts (lo < hi) """
        if self.is_full() and self.domain.is_circle:
            return [(0.0, self.domain.circumference)]
        result = []
        for first, last in self.runs():
            lo, _ = self.domain.bin_bounds(first, self.bins)
            last = last + self.bins if last < first else last
            _, hi = self.domain.bin_bounds(last, self.bins)
            result.append((lo, hi))
        return result

    def centers(self):
        return self.domain.bin_centers(self.bins)[self.indices()]

    def _check(self, other):
        if self.bins != other.bins or self.domain != other.domain:
            raise AttractorError("Fiber subsets live on different grids")

    def __repr__(self):
        return f"FiberSubset({len(self)}/{self.bins} bins, {self.intervals()})"


def fiber_projection(cell_set):
    """
    Union of the fiber bins of the cells

    :param cell_set: CellSet
    :return: FiberSubset
    """
    _, bins = cell_set.grid.split(cell_set.cells)
    return FiberSubset.from_bins(cell_set.grid.domain, cell_set.grid.bins, np.unique(bins))


def past_words(s, length):
    """ All words of the given length in lexicographic order, (s^length, length) """
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(1, s + 1), repeat=length)), dtype=np.int64)


def reconstruct_from_projection(system, projection, depth):
    """
    Rebuilds the attractor, keyed by past words, from its fiber projection

    The cell (w, bin) is kept when every backward image of the bin center through the
    past word w is defined and lies in the projection dilated by one bin.

    :param system: SkewSystem
    :param projection: FiberSubset, nonempty
    :param depth: int - past word length n
    :return: CellSet on the grid (past=n, future=0)
    """
    if projection.is_empty():
        raise AttractorError("Can not reconstruct from an empty projection")

    grid = CellGrid(depth, 0, projection.bins, system.domain, system.s)
    allowed = projection.dilate(1).indicator()
    words = past_words(system.s, depth)
    points = np.broadcast_to(system.domain.bin_centers(projection.bins), (len(words), projection.bins)).copy()
    alive = np.broadcast_to(allowed, points.shape).copy()

    for k in range(1, depth + 1):
        symbols = words[:, depth - k]
        preimages = np.full(points.shape, np.nan)
        for index, fiber_map in enumerate(system.maps, start=1):
            rows = symbols == index
            if rows.any():
                preimages[rows] = fiber_map.inverse_or_nan(points[rows])
        defined = ~np.isnan(preimages)
        alive &= defined
        points = np.where(defined, preimages, points)
        alive &= allowed[system.domain.bin_index(points, projection.bins)]

    word_index, fiber_bin = np.nonzero(alive)
    codes = np.array([grid.word_code(word) for word in words], dtype=np.int64)
    cells = codes[word_index] * grid.bins + fiber_bin
    logger.debug(f"Reconstruction at depth {depth}: {len(cells)} of {grid.n_cells} cells")
    return CellSet(grid, cells)


def visit_frequency(trace, region, transient=0):
    """
    Frequency of visits of an orbit to a cell set

    :param trace: OrbitTrace recorded with stride 1
    :param region: CellSet
    :param transient: int - records excluded at the start
    :return: (limsup surrogate, tail average)
    """
    if trace.stride != 1:
        raise AttractorError("Visit frequencies need a trace recorded with stride 1")
    n_records = len(trace)
    if n_records <= transient:
        raise EmptyTrace(f"No records after the transient ({n_records} <= {transient})")

    cells = region.grid.cells_along(trace.window, 0, n_records, trace.points)
    inside = np.isin(cells, region.cells)

    averages = []
    for boundary in dyadic_boundaries(n_records, transient):
        if boundary < n_records:
            averages.append(float(np.mean(inside[boundary:])))
    return max(averages), averages[0]


class CylinderReturnStats:
    """ Returns of an orbit to U and to its cylinder refinement U_w """

    def __init__(self, word, visits, word_visits, s):
        self.word = tuple(word)
        self.visits = visits
        self.word_visits = word_visits
        self.fraction = word_visits / visits
        self.bound = 1.0 / (len(word) * s ** len(word))

    def to_dict(self):
        return {"word": "".join(map(str, self.word)), "fraction": self.fraction, "visits": self.visits,
                "word_visits": self.word_visits, "bound": self.bound}


def cylinder_return_stats(system, seed, n_steps, word, region, stream=0, point=None):
    """
    Share of the visits to U = Sigma x U_M that also start the word w

    :param system: SkewSystem
    :param seed: int
    :param n_steps: int - N
    :param word: tuple of symbols
    :param region: FiberSubset - U_M
    :param stream: int - symbol stream of the orbit
    :param point: initial fiber point, drawn from the stream when None
    :return: CylinderReturnStats
    """
    word = np.asarray(word, dtype=np.int64)
    if word.size == 0 or np.any((word < 1) | (word > system.s)):
        raise AttractorError(f"Invalid cylinder word {tuple(word)}")

    allowed = region.indicator()
    visits = word_visits = 0
    points = None if point is None else [point]
    for chunk in ensemble_chunks(system, seed, [stream], n_steps, 0, len(word), points):
        length = chunk.stop - chunk.start
        in_region = allowed[system.domain.bin_index(chunk.points[0], region.bins)]
        matches = np.ones(length, dtype=bool)
        for i, symbol in enumerate(word):
            matches &= chunk.symbols[0, i:i + length] == symbol
        visits += int(in_region.sum())
        word_visits += int((in_region & matches).sum())

    if visits < MIN_RETURN_VISITS:
        raise InsufficientVisits(f"Only {visits} visits to the region (at least {MIN_RETURN_VISITS} needed)")
    return CylinderReturnStats(tuple(int(symbol) for symbol in word), visits, word_visits, system.s)


def fiber_histogram(measure):
    """ Normalised fiber-bin histogram of all tail visits """
    totals = measure.density().sum(axis=0)
    if totals.sum() == 0:
        raise AttractorError("The measure has no tail visits")
    return totals / totals.sum()


def histogram_drift(measure):
    """ Total variation distance between the fiber histograms of the two tail halves """
    first, second = measure.half_counts.sum(axis=0)
    if first.sum() == 0 or second.sum() == 0:
        raise AttractorError("The measure has an empty tail half")
    return 0.5 * float(np.abs(first / first.sum() - second / second.sum()).sum())


class AttractorError(Exception):
    """ Exception raised in the attractor lab module """


class EmptyTrace(AttractorError):
    """ The trace has no records to count """


class InsufficientVisits(AttractorError):
    """ The orbit visited the region too rarely for return statistics """
