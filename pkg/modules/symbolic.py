#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# The symbolic base of every skew product in the laboratory: bi-infinite sequences over
# the alphabet {1, ..., s} with the Bernoulli measure, the left shift, the 2^-m metric
# and cylinder sets.

# A bi-infinite sequence can not be stored, so it is represented lazily:
#   * the symbol at absolute index n is a pure function of (seed, stream, n)
#   * indices are grouped in blocks of BLOCK_SIZE, every block is drawn from its own
#     Philox generator keyed by SeedSequence(seed, spawn_key=(stream, zigzag(block), 0))
#   * uniforms are turned into symbols through the cumulative probability table,
#     symbol = searchsorted(cumulative, u, side='right') + 1
#   * negative blocks (the past half of the sequence) are folded onto non-negative
#     spawn keys with the zigzag map, so the past extends exactly like the future does
#
# The 'stream' number separates the independent samples of Monte-Carlo ensembles.
# Spawn keys ending with 1 are reserved for initial fiber points of those samples.

import math
import logging
import functools

import numpy as np

BLOCK_SIZE = 4096
SEED_MASK = (1 << 64) - 1
PROBABILITY_TOLERANCE = 1e-9

logger = logging.getLogger('symbolic')


def zigzag(n):
    """
    Folds an integer onto the non-negative integers: 0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ...

    :param n: int - block number, possibly negative
    :return: int
    """
    return 2 * n if n >= 0 else -2 * n - 1


def validate_probabilities(probs, s):
    """
    Checks a symbol probability vector, substituting the uniform one for None

    :param probs: sequence of s positive reals summing to 1, or None
    :param s: int - alphabet size
    :return: tuple of floats
    """
    if s < 1:
        raise SymbolicError(f"Alphabet size must be positive (got {s})")
    if probs is None:
        return tuple([1.0 / s] * s)

    probs = tuple(float(p) for p in probs)
    if len(probs) != s:
        raise BadProbabilities(f"Expected {s} symbol probabilities, got {len(probs)}")
    if any(not math.isfinite(p) or p <= 0 for p in probs):
        raise BadProbabilities(f"Every symbol probability has to be positive: {probs}")
    if abs(math.fsum(probs) - 1.0) > PROBABILITY_TOLERANCE:
        raise BadProbabilities(f"Symbol probabilities have to sum to 1: {probs}")
    return probs


def cumulative_table(probs):
    """ Cumulative probability table used to turn uniforms into symbols """
    cumulative = np.cumsum(np.asarray(probs, dtype=float))
    cumulative[-1] = 1.0
    return cumulative


@functools.lru_cache(maxsize=256)
def _uniform_block(seed, stream, block):
    """
    Uniforms of one block of absolute indices [block*BLOCK_SIZE, (block+1)*BLOCK_SIZE)

    :return: np.ndarray of BLOCK_SIZE floats in [0, 1), read-only
    """
    sequence = np.random.SeedSequence(seed & SEED_MASK, spawn_key=(stream, zigzag(block), 0))
    block_values = np.random.Generator(np.random.Philox(sequence)).random(BLOCK_SIZE)
    block_values.flags.writeable = False
    return block_values


def lazy_symbols(seed, stream, start, stop, cumulative):
    """
    Symbols of the lazy sequence at absolute indices [start, stop)

    :param seed: int - 64-bit seed
    :param stream: int - sample stream number
    :param start: int - first absolute index (may be negative)
    :param stop: int - end of the range (exclusive)
    :param cumulative: np.ndarray - cumulative probability table
    :return: np.ndarray of int64 symbols in {1, ..., s}
    """
    if stop <= start:
        return np.zeros(0, dtype=np.int64)

    pieces = []
    first_block, last_block = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE
    for block in range(first_block, last_block + 1):
        block_start = block * BLOCK_SIZE
        low = max(start, block_start) - block_start
        high = min(stop, block_start + BLOCK_SIZE) - block_start
        pieces.append(_uniform_block(seed, stream, block)[low:high])

    uniforms = np.concatenate(pieces)
    return np.searchsorted(cumulative, uniforms, side='right').astype(np.int64) + 1


def initial_uniforms(seed, stream, count):
    """
    Uniforms reserved for the initial fiber points of a sample stream

    :param seed: int - 64-bit seed
    :param stream: int - sample stream number
    :param count: int - how many uniforms
    :return: np.ndarray of floats in [0, 1)
    """
    sequence = np.random.SeedSequence(seed & SEED_MASK, spawn_key=(stream, 0, 1))
    return np.random.Generator(np.random.Philox(sequence)).random(count)


def sample_words(seed, count, length, probs, stream=0):
    """
    Draws independent words of a fixed length, symbols i.i.d. according to probs

    :param seed: int - 64-bit seed
    :param count: int - number of words
    :param length: int - symbols per word
    :param probs: tuple of symbol probabilities
    :param stream: int - stream number, so that different consumers do not share words
    :return: np.ndarray of shape (count, length) with symbols in {1, ..., s}
    """
    sequence = np.random.SeedSequence(seed & SEED_MASK, spawn_key=(stream, 0, 2))
    uniforms = np.random.Generator(np.random.Philox(sequence)).random((count, length))
    return np.searchsorted(cumulative_table(probs), uniforms, side='right').astype(np.int64) + 1


class SymbolWindow:
    """
    A finite observed window of a lazily generated bi-infinite symbol sequence

    Relative index 0 is the current position; relative index n is stored at absolute
    index n + origin_offset. Prescribed symbols (overrides) take priority over the
    generated ones and are stored by absolute index, so they travel with the shift.
    """

    def __init__(self, seed, alphabet_size, n_past=0, n_future=0, probs=None, stream=0,
                 origin_offset=0, overrides=None):
        """
        Creates a new window.

        :param seed: int - 64-bit seed of the lazy sequence
        :param alphabet_size: int - s >= 1
        :param n_past: int - observed symbols at relative indices -n_past..-1
        :param n_future: int - observed symbols at relative indices 0..n_future-1
        :param probs: symbol probabilities (uniform when None)
        :param stream: int - sample stream number
        :param origin_offset: int - total shift applied so far
        :param overrides: dict {absolute index: symbol} of prescribed symbols
        :return: NoneType
        """
        if n_past < 0 or n_future < 0:
            raise SymbolicError(f"Window extents must be non-negative ({n_past}, {n_future})")

        self.seed = int(seed) & SEED_MASK
        self.alphabet_size = int(alphabet_size)
        self.probs = validate_probabilities(probs, self.alphabet_size)
        self.stream = int(stream)
        self.n_past = int(n_past)
        self.n_future = int(n_future)
        self.origin_offset = int(origin_offset)
        self._cumulative = cumulative_table(self.probs)

        self.overrides = dict()
        for index, symbol in (overrides or dict()).items():
            if not 1 <= int(symbol) <= self.alphabet_size:
                raise SymbolicError(f"Symbol {symbol} is outside of the alphabet 1..{self.alphabet_size}")
            self.overrides[int(index)] = int(symbol)

    def symbol(self, n):
        """
        Returns the symbol at relative index n, extending the window lazily

        :param n: int - relative index
        :return: int in {1, ..., s}
        """
        absolute = n + self.origin_offset
        if absolute in self.overrides:
            return self.overrides[absolute]
        return int(lazy_symbols(self.seed, self.stream, absolute, absolute + 1, self._cumulative)[0])

    def symbols(self, start, stop):
        """
        Returns the symbols at relative indices [start, stop)

        :return: np.ndarray of int64
        """
        values = lazy_symbols(self.seed, self.stream, start + self.origin_offset,
                              stop + self.origin_offset, self._cumulative)
        for absolute, symbol in self.overrides.items():
            relative = absolute - self.origin_offset
            if start <= relative < stop:
                values[relative - start] = symbol
        return values

    def word(self, start, length):
        """ Tuple of symbols at relative indices start..start+length-1 """
        return tuple(int(symbol) for symbol in self.symbols(start, start + length))

    def past_word(self, length):
        """ The word (w_{-length}, ..., w_{-1}), oldest symbol first """
        return self.word(-length, length)

    @property
    def past(self):
        return self.word(-self.n_past, self.n_past)

    @property
    def future(self):
        return self.word(0, self.n_future)

    def with_symbols(self, prescribed):
        """
        Returns a copy of the window with prescribed symbols at the given relative indices

        :param prescribed: dict {relative index: symbol}
        :return: SymbolWindow
        """
        overrides = dict(self.overrides)
        for relative, symbol in prescribed.items():
            overrides[relative + self.origin_offset] = symbol
        return SymbolWindow(self.seed, self.alphabet_size, self.n_past, self.n_future, self.probs,
                            self.stream, self.origin_offset, overrides)

    def sequence_key(self):
        """ Two windows with equal keys represent the same bi-infinite sequence """
        return (self.seed, self.stream, self.alphabet_size, self.probs, self.origin_offset,
                tuple(sorted(self.overrides.items())))

    def __eq__(self, other):
        if not isinstance(other, SymbolWindow):
            return NotImplemented
        return (self.sequence_key() == other.sequence_key()
                and (self.n_past, self.n_future) == (other.n_past, other.n_future))

    def __hash__(self):
        return hash((self.sequence_key(), self.n_past, self.n_future))

    def __repr__(self):
        return (f"SymbolWindow(seed={self.seed}, stream={self.stream}, offset={self.origin_offset}, "
                f"past={self.past}, future={self.future})")


class CylinderSpec:
    """
    Cylinder set of sequences with finitely many prescribed symbols
    """

    def __init__(self, constraints=()):
        """
        :param constraints: iterable of (position, symbol) pairs
        """
        self.constraints = tuple((int(position), int(symbol)) for position, symbol in constraints)

    def normalized(self):
        """
        Collapses duplicate positions

        :return: dict {position: symbol}, or None when two constraints conflict (empty cylinder)
        """
        result = dict()
        for position, symbol in self.constraints:
            if result.get(position, symbol) != symbol:
                return None
            result[position] = symbol
        return result

    def translated(self, k):
        """ The same cylinder with every position moved by k """
        return CylinderSpec((position + k, symbol) for position, symbol in self.constraints)

    def union(self, other):
        """ Intersection of the two cylinders, i.e. the union of their constraint lists """
        return CylinderSpec(self.constraints + other.constraints)

    def contains(self, window):
        """ Whether the sequence of the window belongs to the cylinder """
        normalized = self.normalized()
        if normalized is None:
            return False
        return all(window.symbol(position) == symbol for position, symbol in normalized.items())

    def __repr__(self):
        return f"CylinderSpec({list(self.constraints)})"


def sample_window(seed, n_past, n_future, s, probs=None, stream=0):
    """
    Samples a mu-random window (deterministic in seed and absolute index)

    :param seed: int - 64-bit seed
    :param n_past: int - past extent
    :param n_future: int - future extent
    :param s: int - alphabet size
    :param probs: symbol probabilities, uniform by default
    :param stream: int - sample stream
    :return: SymbolWindow
    """
    return SymbolWindow(seed, s, n_past, n_future, probs, stream)


def shift(window, k):
    """
    Applies sigma^k: the symbol at relative index n moves to index n - k

    :param window: SymbolWindow
    :param k: int - shift count, negative for the inverse shift
    :return: SymbolWindow
    """
    if k == 0:
        return window
    return SymbolWindow(window.seed, window.alphabet_size, window.n_past, window.n_future, window.probs,
                        window.stream, window.origin_offset + k, window.overrides)


def base_distance(w1, w2, m_max=64):
    """
    The metric d(w1, w2) = 2^-m, m being the smallest |n| with w1_n != w2_n

    Windows representing the same sequence are at distance 0. When no disagreement is
    found for |n| <= m_max, IncomparableExtents is raised carrying the upper bound 2^-(m_max+1).

    :param w1: SymbolWindow
    :param w2: SymbolWindow
    :param m_max: int - largest |n| inspected
    :return: float
    """
    if w1.sequence_key() == w2.sequence_key():
        return 0.0

    first = w1.symbols(-m_max, m_max + 1)
    second = w2.symbols(-m_max, m_max + 1)
    differ = np.nonzero(first != second)[0]
    if differ.size == 0:
        bound = 2.0 ** -(m_max + 1)
        logger.warning(f"No disagreement within |n| <= {m_max}, distance bounded by {bound}")
        raise IncomparableExtents(bound)

    m = int(np.min(np.abs(differ - m_max)))
    return 2.0 ** -m


def cylinder_measure(spec, s, probs=None):
    """
    Bernoulli measure of a cylinder: product of the probabilities of the prescribed symbols

    :param spec: CylinderSpec
    :param s: int - alphabet size
    :param probs: symbol probabilities (uniform by default)
    :return: float in [0, 1]
    """
    probs = validate_probabilities(probs, s)
    normalized = spec.normalized()
    if normalized is None:
        return 0.0
    for symbol in normalized.values():
        if not 1 <= symbol <= s:
            raise SymbolicError(f"Symbol {symbol} is outside of the alphabet 1..{s}")
    return math.prod(probs[symbol - 1] for symbol in normalized.values())


class SymbolicError(Exception):
    """ Exception raised in the symbolic base module """


class BadProbabilities(SymbolicError):
    """ Symbol probabilities are not a positive probability vector """


class IncomparableExtents(SymbolicError):
    """ No disagreement found within the inspected extents; carries an upper bound """

    def __init__(self, bound):
        super().__init__(f"Sequences agree on the inspected range, distance <= {bound}")
        self.bound = bound
