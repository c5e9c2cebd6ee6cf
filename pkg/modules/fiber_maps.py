#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# One-dimensional fiber maps of the skew products: orientation preserving diffeomorphisms
# of a circle or of a segment into itself.

# Conventions:
#   * circle points live in [0, circumference); every map is given by a degree-one lift
#     (lift(x + C) = lift(x) + C), compositions and root searches are done on lifts
#   * interval maps send [lo, hi] into itself; their inverses are partial, defined on
#     the image [f(lo), f(hi)] only
#   * derivatives are closed-form for every builtin family, inverses are closed-form where
#     it is cheap and bisection (polished with one Newton step) otherwise
#   * every method accepts floats as well as numpy arrays
#
# The builtin families and their parameter keys are listed in families.json, which also
# serves the experiment configuration. Programmatic users may add families at runtime with
# register_family.

import os
import json
import math
import logging
import functools

import numpy as np
from scipy import optimize

MODULE_DIRECTORY = os.path.dirname(os.path.abspath(__file__))
VERIFICATION_POINTS = 10_000
BISECTION_STEPS = 90
DOMAIN_TOLERANCE = 1e-12

logger = logging.getLogger('fibers')


def _like(x, result):
    """ Returns a python float for scalar input, the array otherwise """
    if np.ndim(x) == 0:
        return float(result)
    return result


class FiberDomain:
    """
    Fiber of the skew product: a circle of given circumference or a segment [lo, hi]
    """

    def __init__(self, kind, circumference=None, lo=None, hi=None):
        """
        :param kind: 'circle' or 'interval'
        :param circumference: positive real (circle)
        :param lo: left end of the segment (interval)
        :param hi: right end of the segment (interval)
        """
        self.kind = kind
        if kind == "circle":
            if circumference is None or not circumference > 0:
                raise FiberMapError(f"Circle circumference must be positive (got {circumference})")
            self.circumference = float(circumference)
            self.lo, self.hi = 0.0, self.circumference
        elif kind == "interval":
            if lo is None or hi is None or not lo < hi:
                raise FiberMapError(f"Interval fiber must be nondegenerate (got [{lo}, {hi}])")
            self.circumference = None
            self.lo, self.hi = float(lo), float(hi)
        else:
            raise FiberMapError(f"Unknown fiber kind: {kind}")

    @classmethod
    def circle(cls, circumference=1.0):
        return cls("circle", circumference=circumference)

    @classmethod
    def interval(cls, lo=0.0, hi=1.0):
        return cls("interval", lo=lo, hi=hi)

    @classmethod
    def from_config(cls, description):
        """ Builds the domain from its JSON description """
        kind = description.get("kind")
        if kind == "circle":
            return cls.circle(description.get("circumference", 1.0))
        return cls("interval", lo=description.get("lo"), hi=description.get("hi"))

    def to_dict(self):
        if self.is_circle:
            return {"kind": "circle", "circumference": self.circumference}
        return {"kind": "interval", "lo": self.lo, "hi": self.hi}

    @property
    def is_circle(self):
        return self.kind == "circle"

    @property
    def size(self):
        return self.hi - self.lo

    def contains(self, x, tolerance=DOMAIN_TOLERANCE):
        """ Whether every given point belongs to the fiber """
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return False
        if self.is_circle:
            return True
        return bool(np.all((x >= self.lo - tolerance) & (x <= self.hi + tolerance)))

    def wrap(self, x):
        """ Reduces lifts to [0, circumference) on the circle, identity on the segment """
        if self.is_circle:
            return _like(x, np.mod(x, self.circumference))
        return x

    def distance(self, x, y):
        """ Arc distance on the circle, absolute difference on the segment """
        difference = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.is_circle:
            difference = np.mod(difference, self.circumference)
            difference = np.minimum(difference, self.circumference - difference)
        return _like(np.add(x, y), difference)

    def bin_width(self, m):
        return self.size / m

    def bin_index(self, x, m):
        """
        Fiber bin of the points

        Segment bins are [lo + k*w, lo + (k+1)*w); circle bins are centered at k*w, so that
        bin 0 is a neighbourhood of the point 0 from both sides.
        """
        width = self.bin_width(m)
        x = np.asarray(x, dtype=float)
        if self.is_circle:
            index = np.mod(np.floor(x / width + 0.5).astype(np.int64), m)
        else:
            index = np.clip(np.floor((x - self.lo) / width).astype(np.int64), 0, m - 1)
        if index.ndim == 0:
            return int(index)
        return index

    def bin_bounds(self, k, m):
        """ Bounds (as lifts on the circle) of the fiber bin k """
        width = self.bin_width(m)
        if self.is_circle:
            return (k - 0.5) * width, (k + 0.5) * width
        return self.lo + k * width, self.lo + (k + 1) * width

    def bin_centers(self, m):
        width = self.bin_width(m)
        if self.is_circle:
            return np.arange(m) * width
        return self.lo + (np.arange(m) + 0.5) * width

    def bins_meeting(self, lo, hi, m):
        """
        Bins meeting the interval (lo, hi), given by lifts with lo <= hi

        A degenerate interval meets the bin of its point.

        :return: list of bin indices
        """
        width = self.bin_width(m)
        if self.is_circle:
            first = math.floor(lo / width + 0.5)
            last = math.ceil(hi / width + 0.5) - 1 if hi > lo else first
            if last - first + 1 >= m:
                return list(range(m))
            return sorted({k % m for k in range(first, max(first, last) + 1)})

        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if hi < lo:
            return []
        first = min(max(math.floor((lo - self.lo) / width), 0), m - 1)
        last = min(max(math.ceil((hi - self.lo) / width) - 1, first), m - 1) if hi > lo else first
        return list(range(first, last + 1))

    def uniform_points(self, uniforms):
        """ Maps uniforms in [0, 1) onto the fiber """
        return self.lo + np.asarray(uniforms, dtype=float) * self.size

    def __eq__(self, other):
        if not isinstance(other, FiberDomain):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))

    def __repr__(self):
        if self.is_circle:
            return f"FiberDomain(circle, circumference={self.circumference})"
        return f"FiberDomain(interval, [{self.lo}, {self.hi}])"


class FiberMap:
    """
    Monotone increasing fiber map, base class of every family

    Subclasses provide lift, derivative and (optionally) _inverse_lift.
    """

    family = "custom"
    partial = False

    def __init__(self, domain, params=None, lipschitz_bound=None):
        self.domain = domain
        self.params = dict(params or dict())
        self.lipschitz_bound = lipschitz_bound

    def lift(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def evaluate(self, x):
        """ Image of fiber points """
        values = self.lift(x)
        if self.partial and np.any(np.isnan(values)):
            bad = np.asarray(x, dtype=float)[np.isnan(np.asarray(values))] if np.ndim(x) else x
            raise NotInImage(float(np.ravel(bad)[0]))
        return self.domain.wrap(values)

    def image(self):
        """ Image interval (segment maps) as a pair of endpoints """
        return float(self.lift(self.domain.lo)), float(self.lift(self.domain.hi))

    def _inverse_lift(self, y):
        """ Preimage of lifts by bisection on the monotone lift, then one Newton step """
        y = np.asarray(y, dtype=float)
        if self.domain.is_circle:
            span = 3 * self.domain.circumference
            low, high = y - span, y + span
        else:
            low = np.full(y.shape, self.domain.lo)
            high = np.full(y.shape, self.domain.hi)

        for _ in range(BISECTION_STEPS):
            middle = 0.5 * (low + high)
            above = self.lift(middle) > y
            high = np.where(above, middle, high)
            low = np.where(above, low, middle)

        x = 0.5 * (low + high)
        x = x - (self.lift(x) - y) / self.derivative(self.domain.wrap(x))
        if not self.domain.is_circle:
            x = np.clip(x, self.domain.lo, self.domain.hi)
        return _like(y, x)

    def inverse_or_nan(self, y):
        """ Preimage of the points, NaN where the preimage is not defined """
        y = np.asarray(y, dtype=float)
        if self.domain.is_circle:
            return _like(y, self.domain.wrap(self._inverse_lift(y)))

        low, high = self.image()
        defined = (y >= low - DOMAIN_TOLERANCE) & (y <= high + DOMAIN_TOLERANCE) & np.isfinite(y)
        clipped = np.clip(np.where(defined, y, low), low, high)
        result = np.where(defined, self._inverse_lift(clipped), np.nan)
        return _like(y, result)

    def inverse(self, y):
        """ Unique preimage; raises NotInImage outside of the image """
        result = self.inverse_or_nan(y)
        if np.any(np.isnan(result)):
            bad = np.asarray(y, dtype=float)[np.isnan(np.asarray(result))] if np.ndim(y) else y
            raise NotInImage(float(np.ravel(bad)[0]))
        return result

    def shifted(self, c):
        """ The map f + c """
        return ShiftedMap(self, c)

    def inverted(self):
        """ The (partial) inverse map """
        return InverseMap(self)

    def verify(self, points=VERIFICATION_POINTS):
        """
        Checks monotonicity, positivity of the derivative and the mapping of the fiber
        into itself on a uniform grid. Raises NotADiffeomorphism on failure.
        """
        if self.domain.is_circle:
            grid = np.linspace(0.0, self.domain.circumference, points, endpoint=False)
        else:
            grid = np.linspace(self.domain.lo, self.domain.hi, points)

        values = self.lift(grid)
        if not np.all(np.isfinite(values)) or not np.all(np.diff(values) > 0):
            raise NotADiffeomorphism(f"{self} is not strictly increasing")
        if not np.all(self.derivative(grid) > 0):
            raise NotADiffeomorphism(f"{self} has a non-positive derivative")

        if self.domain.is_circle:
            degree = self.lift(grid + self.domain.circumference) - values
            if not np.allclose(degree, self.domain.circumference, atol=1e-9):
                raise NotADiffeomorphism(f"{self} is not a degree-one circle map")
        elif values[0] < self.domain.lo - DOMAIN_TOLERANCE or values[-1] > self.domain.hi + DOMAIN_TOLERANCE:
            raise NotADiffeomorphism(f"{self} does not map the segment into itself")
        return self

    def to_dict(self):
        return {"family": self.family, "params": dict(self.params)}

    def __repr__(self):
        parameters = ", ".join(f"{key}={value}" for key, value in self.params.items())
        return f"{type(self).__name__}({parameters})"


class AffineMap(FiberMap):
    """ x -> lambda * x + b on a segment """

    family = "affine"

    def __init__(self, lam, b, domain=None):
        domain = domain or FiberDomain.interval(0.0, 1.0)
        if domain.is_circle:
            raise FiberMapError("Affine maps are defined on segments only")
        if not lam > 0:
            raise NotADiffeomorphism(f"Affine slope must be positive (got {lam})")
        super().__init__(domain, {"lambda": lam, "b": b}, lipschitz_bound=lam)
        self.lam, self.b = float(lam), float(b)

    def lift(self, x):
        return _like(x, self.lam * np.asarray(x, dtype=float) + self.b)

    def derivative(self, x):
        return _like(x, np.full(np.shape(x), self.lam))

    def _inverse_lift(self, y):
        return _like(y, (np.asarray(y, dtype=float) - self.b) / self.lam)


class RotationMap(FiberMap):
    """ x -> x + alpha on a circle """

    family = "rotation"

    def __init__(self, alpha, domain=None):
        domain = domain or FiberDomain.circle(1.0)
        if not domain.is_circle:
            raise FiberMapError("Rotations are defined on circles only")
        super().__init__(domain, {"alpha": alpha}, lipschitz_bound=1.0)
        self.alpha = float(alpha)

    def lift(self, x):
        return _like(x, np.asarray(x, dtype=float) + self.alpha)

    def derivative(self, x):
        return _like(x, np.ones(np.shape(x)))

    def _inverse_lift(self, y):
        return _like(y, np.asarray(y, dtype=float) - self.alpha)


class SineCircleMap(FiberMap):
    """ x -> x + a + (b C / 2pi) sin(2pi x / C); on the unit circle x + a + (b / 2pi) sin(2pi x) """

    family = "sine_circle"

    def __init__(self, a, b, domain=None):
        domain = domain or FiberDomain.circle(1.0)
        if not domain.is_circle:
            raise FiberMapError("sine_circle maps are defined on circles only")
        if not abs(b) < 1:
            raise NotADiffeomorphism(f"sine_circle needs |b| < 1 (got {b})")
        super().__init__(domain, {"a": a, "b": b}, lipschitz_bound=1.0 + abs(b))
        self.a, self.b = float(a), float(b)
        self._frequency = 2 * math.pi / domain.circumference

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        return _like(x, x + self.a + self.b / self._frequency * np.sin(self._frequency * x))

    def derivative(self, x):
        return _like(x, 1.0 + self.b * np.cos(self._frequency * np.asarray(x, dtype=float)))


class SemistableMap(FiberMap):
    """ x -> x + 0.1 (1 - cos x) on R / 2pi Z, the unique fixed point 0 is semi-stable """

    family = "semistable"

    def __init__(self, domain=None):
        domain = domain or FiberDomain.circle(2 * math.pi)
        if not domain.is_circle or abs(domain.circumference - 2 * math.pi) > 1e-12:
            raise FiberMapError("The semistable map lives on the circle of circumference 2pi")
        super().__init__(domain, {}, lipschitz_bound=1.1)

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        return _like(x, x + 0.1 * (1.0 - np.cos(x)))

    def derivative(self, x):
        return _like(x, 1.0 + 0.1 * np.sin(np.asarray(x, dtype=float)))


class BlendedExpansion(FiberMap):
    """
    The expanding map of the degenerate random-walk pair on [-1, 1]

    Odd map: 2x on |x| <= zone, a cubic Hermite blend on zone <= |x| <= knee joining with
    matched slopes the affine piece that reaches outer_value at |x| = 1.
    """

    family = "example41"

    def __init__(self, domain=None, zone=0.25, knee=0.4, knee_value=0.6, outer_value=0.9):
        domain = domain or FiberDomain.interval(-1.0, 1.0)
        super().__init__(domain, {"role": "f_2", "zone": zone}, lipschitz_bound=2.0)
        self.zone, self.knee = zone, knee
        self.zone_value, self.knee_value = 2 * zone, knee_value
        self.outer_slope = (outer_value - knee_value) / (1.0 - knee)
        self._step = knee - zone

    def _hermite(self, x):
        """ Value and derivative of the blend for zone <= x <= knee """
        t = (x - self.zone) / self._step
        h = self._step
        value = ((2 * t ** 3 - 3 * t ** 2 + 1) * self.zone_value + (t ** 3 - 2 * t ** 2 + t) * h * 2.0
                 + (-2 * t ** 3 + 3 * t ** 2) * self.knee_value + (t ** 3 - t ** 2) * h * self.outer_slope)
        slope = ((6 * t ** 2 - 6 * t) * self.zone_value + (3 * t ** 2 - 4 * t + 1) * h * 2.0
                 + (-6 * t ** 2 + 6 * t) * self.knee_value + (3 * t ** 2 - 2 * t) * h * self.outer_slope) / h
        return value, slope

    def _positive(self, r):
        """ Value and derivative on |x| = r >= 0 """
        blend_value, blend_slope = self._hermite(np.clip(r, self.zone, self.knee))
        value = np.where(r <= self.zone, 2 * r,
                         np.where(r <= self.knee, blend_value, self.knee_value + self.outer_slope * (r - self.knee)))
        slope = np.where(r <= self.zone, 2.0, np.where(r <= self.knee, blend_slope, self.outer_slope))
        return value, slope

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        value, _ = self._positive(np.abs(x))
        return _like(x, np.sign(x) * value)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        _, slope = self._positive(np.abs(x))
        return _like(x, slope)

    def _inverse_lift(self, y):
        y = np.asarray(y, dtype=float)
        r = np.abs(y)
        linear = np.where(r <= self.zone_value, r / 2.0, self.knee + (r - self.knee_value) / self.outer_slope)
        blended = np.asarray(super()._inverse_lift(r), dtype=float)
        inside = (r > self.zone_value) & (r < self.knee_value)
        return _like(y, np.sign(y) * np.where(inside, blended, linear))


class ShiftedMap(FiberMap):
    """ f + c, the uniform perturbation of a fiber map """

    family = "shifted"

    def __init__(self, base, c):
        super().__init__(base.domain, {"base": base.to_dict(), "c": c}, lipschitz_bound=base.lipschitz_bound)
        self.base, self.c = base, float(c)
        self.partial = base.partial

    def lift(self, x):
        return _like(x, np.asarray(self.base.lift(x)) + self.c)

    def derivative(self, x):
        return self.base.derivative(x)

    def _inverse_lift(self, y):
        return self.base._inverse_lift(np.asarray(y, dtype=float) - self.c)


class InverseMap(FiberMap):
    """ f^-1, partial on segments (defined on the image of f) """

    family = "inverse"

    def __init__(self, base):
        if base.domain.is_circle:
            grid = np.linspace(0.0, base.domain.circumference, 4096, endpoint=False)
        else:
            grid = np.linspace(base.domain.lo, base.domain.hi, 4096)
        lipschitz = 1.0 / float(np.min(base.derivative(grid)))
        super().__init__(base.domain, {"base": base.to_dict()}, lipschitz_bound=lipschitz)
        self.base = base
        self.partial = not base.domain.is_circle

    def lift(self, x):
        if self.domain.is_circle:
            return self.base._inverse_lift(x)
        return self.base.inverse_or_nan(x)

    def derivative(self, x):
        preimage = self.lift(x)
        return _like(x, 1.0 / np.asarray(self.base.derivative(self.domain.wrap(preimage))))

    def _inverse_lift(self, y):
        return self.base.lift(y)

    def inverse_or_nan(self, y):
        return self.base.evaluate(y) if self.domain.contains(y) else _like(y, np.full(np.shape(y), np.nan))

    def image(self):
        return self.domain.lo, self.domain.hi

    def inverted(self):
        return self.base


class PeriodicOrbitRecord:
    """
    Hyperbolic periodic orbit of a circle map
    """

    def __init__(self, point, period, multiplier, orbit):
        self.point = point
        self.period = period
        self.multiplier = multiplier
        self.orbit = tuple(orbit)
        self.kind = "sink" if multiplier < 1 else "source"

    def to_dict(self):
        return {"point": self.point, "period": self.period, "multiplier": self.multiplier, "type": self.kind}

    def __repr__(self):
        return (f"PeriodicOrbitRecord({self.kind}, point={self.point:.12g}, q={self.period}, "
                f"mult={self.multiplier:.12g})")


class GenericityResult:
    """ Outcome of the f_j(y) versus Per(f_1) check """

    def __init__(self, passed, witnesses, records):
        self.passed = passed
        self.witnesses = witnesses
        self.records = records

    def to_dict(self):
        return {"passed": self.passed,
                "witnesses": [{"y": y, "map": j, "image": image} for y, j, image in self.witnesses]}


def _build_affine(params, domain):
    return AffineMap(params["lambda"], params["b"], domain)


def _build_rotation(params, domain):
    return RotationMap(params["alpha"], domain)


def _build_sine_circle(params, domain):
    return SineCircleMap(params["a"], params["b"], domain)


def _build_semistable(params, domain):
    return SemistableMap(domain)


def _build_example41(params, domain):
    contraction = AffineMap(0.5, 0.0, domain)
    contraction.family = "example41"
    contraction.params = {"role": "f_1"}
    return contraction, BlendedExpansion(domain, zone=load_families()["example41"]["linear_zone"])


FAMILY_BUILDERS = {
    "affine": _build_affine,
    "rotation": _build_rotation,
    "sine_circle": _build_sine_circle,
    "semistable": _build_semistable,
    "example41": _build_example41,
}


@functools.lru_cache(maxsize=1)
def load_families():
    """ Reads the builtin family table """
    with open(os.path.join(MODULE_DIRECTORY, "families.json"), "r") as file:
        families = json.load(file)
    families.pop("comments", None)
    return families


_registered_families = dict()


def register_family(name, builder, params=(), domain=None):
    """
    Registers a custom family for programmatic use

    :param name: str - family name
    :param builder: callable(params: dict, domain: FiberDomain) -> FiberMap or tuple of FiberMaps
    :param params: required parameter keys
    :param domain: default FiberDomain
    """
    _registered_families[name] = (builder, tuple(params), domain)


def family_names():
    return sorted(set(load_families()) | set(_registered_families))


def make_builtin(family, params=None, domain=None):
    """
    Constructs a builtin (or registered) fiber map and verifies it on a 10^4-point grid

    :param family: str - family name
    :param params: dict of parameters
    :param domain: FiberDomain, the family default when None
    :return: FiberMap, or the ordered pair (f_1, f_2) for example41
    """
    params = dict(params or dict())
    if family in _registered_families:
        builder, keys, default_domain = _registered_families[family]
    elif family in load_families():
        description = load_families()[family]
        builder, keys = FAMILY_BUILDERS[family], description["params"]
        default_domain = FiberDomain.from_config(description["domain"])
    else:
        raise UnknownFamily(f"Unknown fiber map family: {family}")

    missing = [key for key in keys if key not in params]
    if missing:
        raise FiberMapError(f"Family {family} needs parameters {missing}")

    maps = builder(params, domain or default_domain)
    for fiber_map in (maps if isinstance(maps, tuple) else (maps,)):
        fiber_map.verify()
    logger.debug(f"Built {family} map(s) with {params}")
    return maps


def apply(fiber_map, x, mode="eval"):
    """
    Evaluates a fiber map, its derivative or its inverse at a fiber point

    :param fiber_map: FiberMap
    :param x: float - fiber point
    :param mode: 'eval', 'deriv' or 'inverse'
    :return: float
    """
    domain = fiber_map.domain
    if not domain.contains(x):
        raise OutOfDomain(f"{x} is outside of {domain}")
    x = domain.wrap(float(x))

    if mode == "eval":
        return float(fiber_map.evaluate(x))
    if mode == "deriv":
        return float(fiber_map.derivative(x))
    if mode == "inverse":
        return float(fiber_map.inverse(x))
    raise FiberMapError(f"Unknown application mode: {mode}")


def compose_word(system, word, x, direction="forward"):
    """
    Applies a composition of fiber maps along a word

    forward:  f_{word[-1]} o ... o f_{word[0]} (x), word[0] is applied first
    backward: f_{word[0]}^-1 o ... o f_{word[-1]}^-1 (x), i.e. the inverse of the forward
              composition; word[-1] is undone first

    :param system: anything with a 'maps' list (SkewSystem)
    :param word: sequence of symbols in {1, ..., s}
    :param x: float - fiber point
    :param direction: 'forward' or 'backward'
    :return: float
    """
    maps = system.maps
    domain = maps[0].domain
    if not domain.contains(x):
        raise OutOfDomain(f"{x} is outside of {domain}")
    x = domain.wrap(float(x))

    if direction == "forward":
        for symbol in word:
            x = float(maps[symbol - 1].evaluate(x))
        return x

    if direction == "backward":
        for step, symbol in enumerate(reversed(list(word)), start=1):
            try:
                x = float(maps[symbol - 1].inverse(x))
            except NotInImage:
                raise PreimageUndefined(step)
        return x

    raise FiberMapError(f"Unknown composition direction: {direction}")


def iterate_lift(fiber_map, x, q):
    """ q-th iterate of the lift """
    for _ in range(q):
        x = fiber_map.lift(x)
    return x


def rotation_number(fiber_map, n_iter=10_000, x0=0.0):
    """
    Rotation number of a circle map, in [0, 1)

    :param fiber_map: FiberMap on a circle
    :param n_iter: int - number of lifted iterates
    :param x0: float - starting point
    :return: float
    """
    if not fiber_map.domain.is_circle:
        raise FiberMapError("Rotation numbers are defined for circle maps only")
    displacement = (iterate_lift(fiber_map, float(x0), n_iter) - x0) / (n_iter * fiber_map.domain.circumference)
    number = displacement - math.floor(displacement)
    return 0.0 if 1.0 - number < 1e-9 else number


def classify_morse_smale(fiber_map, max_period=8, tol=1e-6, grid_points=4096):
    """
    Finds all periodic orbits of period <= max_period of a circle diffeomorphism

    For every period q the lifted displacement f^q(x) - x - pC is scanned on a uniform grid
    for every integer p in its range; sign changes are refined with brentq and exact grid
    zeros are taken as they are.

    :param fiber_map: FiberMap on a circle
    :param max_period: int
    :param tol: float - hyperbolicity gap |multiplier - 1| > tol
    :param grid_points: int
    :return: list of PeriodicOrbitRecord
    """
    domain = fiber_map.domain
    if not domain.is_circle:
        raise FiberMapError("Morse-Smale classification needs a circle fiber")

    circumference = domain.circumference
    grid = np.linspace(0.0, circumference, grid_points, endpoint=False)
    found_points, records = [], []

    def already_found(point):
        return any(domain.distance(point, other) < 1e-7 for other in found_points)

    for q in range(1, max_period + 1):
        displacement = iterate_lift(fiber_map, grid, q) - grid
        closed_grid = np.append(grid, circumference)
        closed_displacement = np.append(displacement, displacement[0])

        lowest, highest = math.floor(displacement.min() / circumference), math.ceil(displacement.max() / circumference)
        for p in range(lowest, highest + 1):
            values = closed_displacement - p * circumference
            values[np.abs(values) <= 1e-12] = 0.0

            roots = [float(closed_grid[i]) for i in np.nonzero(values[:-1] == 0.0)[0]]
            for i in np.nonzero(values[:-1] * values[1:] < 0)[0]:
                roots.append(optimize.brentq(lambda x: iterate_lift(fiber_map, x, q) - x - p * circumference,
                                             closed_grid[i], closed_grid[i + 1], xtol=1e-15, rtol=1e-15))

            for root in roots:
                root = float(domain.wrap(root))
                if already_found(root):
                    continue

                orbit, multiplier, x = [], 1.0, root
                for _ in range(q):
                    orbit.append(float(domain.wrap(x)))
                    multiplier *= float(fiber_map.derivative(x))
                    x = fiber_map.lift(x)

                if abs(multiplier - 1.0) <= tol:
                    raise NonHyperbolicDetected(root)
                found_points.extend(orbit)
                records.append(PeriodicOrbitRecord(root, q, multiplier, orbit))

    if not records:
        raise NotMorseSmale(f"No periodic points of period <= {max_period}")

    logger.debug(f"Morse-Smale classification of {fiber_map}: {records}")
    return records


def genericity_check(system, max_period=8, tol=1e-6):
    """
    Verifies that no f_j (j >= 2) sends a periodic point of f_1 onto a periodic point of f_1

    :param system: SkewSystem whose first map is a Morse-Smale circle diffeomorphism
    :param max_period: int
    :param tol: float - minimal allowed distance
    :return: GenericityResult
    """
    records = classify_morse_smale(system.maps[0], max_period, tol)
    periodic = [point for record in records for point in record.orbit]
    domain = system.maps[0].domain

    witnesses = []
    for j, fiber_map in enumerate(system.maps[1:], start=2):
        for y in periodic:
            image = float(fiber_map.evaluate(y))
            if min(domain.distance(image, point) for point in periodic) <= tol:
                witnesses.append((y, j, image))

    return GenericityResult(not witnesses, witnesses, records)


class FiberMapError(Exception):
    """ Exception raised in the fiber maps module """


class UnknownFamily(FiberMapError):
    """ The requested family is neither builtin nor registered """


class NotADiffeomorphism(FiberMapError):
    """ Monotonicity or positivity check failed """


class OutOfDomain(FiberMapError):
    """ Point outside of the fiber """


class NotInImage(FiberMapError):
    """ Preimage requested outside of the image of a segment map """

    def __init__(self, x):
        super().__init__(f"{x} is not in the image")
        self.x = x


class PreimageUndefined(FiberMapError):
    """ Backward composition failed at the given (1-based) step """

    def __init__(self, step):
        super().__init__(f"Preimage is not defined at backward step {step}")
        self.step = step


class NotMorseSmale(FiberMapError):
    """ The circle map is not Morse-Smale """


class NonHyperbolicDetected(NotMorseSmale):
    """ A periodic point with multiplier within tolerance of 1 """

    def __init__(self, point):
        super().__init__(f"Non-hyperbolic periodic point at {point}")
        self.point = point
