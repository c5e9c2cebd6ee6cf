#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# This is the main module of the laboratory: it runs one experiment (subcommand) on an
# effective configuration and writes its artifacts.

# Workflow:
#   * resolve_config merges a user config over default_config.json and validates it
#   * Laboratory builds the skew product of the subcommand (a subcommand section may carry
#     its own 'system') and runs the subcommand method from the dispatch table
#   * every subcommand returns its results dict and writes its own tables; report.json is
#     written last, after it was checked against report_schema.json
#
# Subcommands:
#   simulate     - one orbit, trace.csv
#   attractor    - statistical and Milnor estimates, cells.csv, milnor_cells.csv, heatmap.pgm/.csv
#   graph        - pullback graph of a trapping strip, graph.csv
#   lyapunov     - fiberwise exponents of every trapping strip, contraction and Egorov drills, lyapunov.json
#   trap-scan    - trapping intervals and the Morse-Smale data of f_1 on circle fibers
#   reconstruct  - attractor rebuilt from its projection, cells_reconstructed.csv
#   stability    - stability probe of a fiber set, stability.json
#   prop-freq    - cylinder return statistics
#   example41    - the random walk example: near-zero frequencies, tail escapes, basin of the
#                  section, Ulam iteration (ulam.csv)
#   scan-c       - orbit closure jumps along f_i + c, scan.csv
#
# Seeds: sample k of an ensemble is the symbol stream k of the configured seed.

import os
import copy
import json
import time
import logging

import numpy as np
from scipy import stats

from modules.symbolic import CylinderSpec, cylinder_measure, initial_uniforms, SymbolicError
from modules.fiber_maps import classify_morse_smale, genericity_check, rotation_number, FiberMapError, NotMorseSmale
from modules.skew import GROUP_SIZE, SkewSystem, SkewState, run_orbit, initial_points, ensemble_chunks, \
    sample_groups, run_groups, SkewError
from modules.attractor import CellGrid, FiberSubset, empirical_measure, estimate_statistical_attractor, \
    estimate_milnor_attractor, fiber_projection, reconstruct_from_projection, agreement, cylinder_return_stats, \
    histogram_drift
from modules.strips import StripInterval, find_trapping_intervals, pullback_graph, bone_mass, lyapunov_on_graph, \
    contraction_check, egorov_uniformity, NoTrappingFound
from modules.stability import probe_stability, attractor_stability_via_projection, check_forward_invariance, \
    witness_orbit_exits, scan_discontinuity
from modules.transfer import ulam_operator, ulam_iterate, progression_residual
from modules.emission import write_json, write_table, write_cells, write_graph, write_scan, write_trace, \
    emit_heatmap

MODULE_DIRECTORY = os.path.dirname(os.path.abspath(__file__))
SCHEMA_VERSION = 1
SEED_LIMIT = 1 << 64
REPORT_TYPES = {"integer": int, "string": str, "object": dict, "array": list, "number": (int, float)}
SUBCOMMANDS = ("simulate", "attractor", "graph", "lyapunov", "trap-scan", "reconstruct", "stability", "prop-freq",
               "example41", "scan-c")


def load_table(name):
    with open(os.path.join(MODULE_DIRECTORY, name), "r") as file:
        table = json.load(file)
    table.pop("comments", None)
    return table


def merge(base, override):
    """ Key by key merge of nested dicts; lists and scalars of override replace those of base """
    result = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict) and key != "system":
            result[key] = merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def resolve_config(user_config=None, overrides=None):
    """
    The effective configuration: defaults, then the user config, then the flag overrides

    :param user_config: dict read from the --config file
    :param overrides: dict of command-line values, None entries are ignored
    :return: dict
    """
    defaults = load_table("default_config.json")
    user_config = dict(user_config or dict())
    user_config.pop("comments", None)

    unknown = sorted(set(user_config) - set(defaults))
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {unknown}")
    version = user_config.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"Configuration schema version {version} is not supported (expected {SCHEMA_VERSION})")

    config = merge(defaults, user_config)
    for key, value in (overrides or dict()).items():
        if value is None:
            continue
        if key in ("bins", "cyl_depth"):
            config["grid"][key] = value
        else:
            config[key] = value

    validate_config(config)
    return config


def _positive_int(config, *path):
    value = config
    for key in path:
        value = value[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{'.'.join(path)} must be a positive integer (got {value!r})")
    return value


def validate_config(config):
    """ Raises ConfigError on invalid fields """
    seed = config["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < SEED_LIMIT:
        raise ConfigError(f"The seed must be an unsigned 64-bit integer (got {seed!r})")
    for path in (("steps",), ("samples",), ("grid", "bins")):
        _positive_int(config, *path)
    depth = config["grid"]["cyl_depth"]
    if isinstance(depth, bool) or not isinstance(depth, int) or depth < 0:
        raise ConfigError(f"grid.cyl_depth must be a non-negative integer (got {depth!r})")
    if not 0 <= config["transient"] < config["steps"]:
        raise ConfigError(f"The transient must satisfy 0 <= T < N (T={config['transient']}, N={config['steps']})")
    if not config["thresholds"]["theta"] > 0 or not 0 < config["thresholds"]["kappa"] <= 1:
        raise ConfigError(f"Invalid thresholds {config['thresholds']}")
    if config["format"] not in ("csv", "json"):
        raise ConfigError(f"Unknown output format: {config['format']}")
    if not config["system"].get("maps"):
        raise ConfigError("The system lists no fiber maps")


def build_system(description):
    """ SkewSystem of a config entry, configuration problems raised as ConfigError """
    try:
        return SkewSystem.from_config(description)
    except (FiberMapError, SkewError, SymbolicError, KeyError, TypeError) as error:
        raise ConfigError(f"Invalid system description: {error}")


class Laboratory:
    """
    One experiment run: effective config, system, artifacts and the report
    """

    def __init__(self, subcommand, config, debug_mode=True):
        """
        :param subcommand: str - one of SUBCOMMANDS
        :param config: dict - effective configuration (see resolve_config)
        :param debug_mode: bool - representing whether to log the information or not
        """
        logging.basicConfig(filename="log.txt",
                            filemode='w',
                            format='%(asctime)s,%(msecs)d %(name)s %(levelname)s %(message)s',
                            datefmt='%H:%M:%S',
                            level=logging.DEBUG)
        self.logger = logging.getLogger('laboratory')
        if not debug_mode:
            self.logger.disabled = True

        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"Unknown subcommand: {subcommand}")
        self.subcommand = subcommand
        self.config = config
        self.seed = config["seed"]
        self.out = config["out"]
        self.format = config["format"]
        self.artifacts = []

        section = config.get(self.section_name, dict())
        if subcommand == "example41":
            self.system = build_system({"maps": [{"family": "example41"}]})
        else:
            self.system = build_system(section.get("system") or config["system"])
        self.logger.debug(f"Laboratory {subcommand}: seed {self.seed}, system {self.system}")

        self.dispatch = {
            "simulate": self.simulate,
            "attractor": self.attractor,
            "graph": self.graph,
            "lyapunov": self.lyapunov,
            "trap-scan": self.trap_scan,
            "reconstruct": self.reconstruct,
            "stability": self.stability,
            "prop-freq": self.prop_freq,
            "example41": self.example41,
            "scan-c": self.scan_c,
        }

    @property
    def section_name(self):
        return self.subcommand.replace("-", "_")

    @property
    def section(self):
        return self.config.get(self.section_name, dict())

    def run(self):
        """
        Runs the subcommand and writes its artifacts

        :return: dict - the report
        """
        started = time.perf_counter()
        results = self.dispatch[self.subcommand]()
        report = {"schema_version": SCHEMA_VERSION, "subcommand": self.subcommand, "seed": self.seed,
                  "config": self.config, "results": results, "artifacts": sorted(self.artifacts + ["report.json"]),
                  "wall_clock": time.perf_counter() - started}
        validate_report(report)
        write_json(self.out, "report.json", report)
        self.logger.debug(f"{self.subcommand} finished in {report['wall_clock']:.3f} s")
        return report

    def _written(self, path):
        self.artifacts.append(os.path.basename(path))

    def _grid(self):
        return CellGrid.symmetric(self.config["grid"]["cyl_depth"], self.config["grid"]["bins"], self.system)

    def _estimates(self):
        """ Empirical measure with the statistical and Milnor estimates of the configured run """
        grid = self._grid()
        config, thresholds = self.config, self.config["thresholds"]
        measure = empirical_measure(self.system, grid, self.seed, config["samples"], config["steps"],
                                    config["transient"])
        statistical = estimate_statistical_attractor(self.system, grid, self.seed, config["samples"], config["steps"],
                                                     config["transient"], thresholds["theta"], thresholds["kappa"],
                                                     measure)
        milnor = estimate_milnor_attractor(self.system, grid, self.seed, config["samples"], config["steps"],
                                           config["transient"], thresholds["kappa"], measure)
        return measure, statistical, milnor

    def _strip(self, description, trapping="strict"):
        """ The configured strip, or the first strictly trapping interval """
        if description:
            return StripInterval(description[0], description[1], trapping)
        strips = [strip for strip in find_trapping_intervals(self.system) if strip.trapping == "strict"]
        if not strips:
            raise NoTrappingFound("No strictly trapping interval")
        return strips[0]

    def _subset(self, description, bins):
        """ FiberSubset of a {'point': x} or {'intervals': [[lo, hi], ...]} description """
        domain = self.system.domain
        if "point" in description:
            return FiberSubset.point(domain, bins, description["point"])
        if "intervals" in description:
            return FiberSubset.from_intervals(domain, bins, [tuple(interval) for interval in description["intervals"]])
        raise ConfigError(f"Invalid fiber subset description: {description}")

    def simulate(self):
        section = self.section
        stream = section["stream"]
        point = section["point"]
        if point is None:
            point = float(initial_points(self.system, self.seed, [stream])[0])
        state = SkewState.initial(self.system, self.seed, point, stream)
        trace = run_orbit(self.system, state, self.config["steps"], section["stride"])
        self._written(write_trace(self.out, trace, self.format))

        symbols = np.asarray(state.window.symbols(0, self.config["steps"]))
        frequencies = [float(np.mean(symbols == symbol)) for symbol in range(1, self.system.s + 1)]
        return {"records": len(trace), "initial_point": point, "final_point": float(trace.points[-1]),
                "verified": trace.verify(self.system), "symbol_frequencies": frequencies,
                "provenance": trace.provenance}

    def attractor(self):
        measure, statistical, milnor = self._estimates()
        self._written(write_cells(self.out, statistical, self.format))
        self._written(write_table(self.out, "milnor_cells", milnor.rows(),
                                  ["past_word", "future_word", "bin_lo", "bin_hi", "freq", "support_fraction"],
                                  self.format))
        for path in emit_heatmap(measure, self.out):
            self._written(path)

        projection = fiber_projection(statistical)
        invariance = check_forward_invariance(self.system, projection) if not projection.is_empty() else None
        return {"grid": measure.grid.to_dict(), "statistical_cells": len(statistical), "milnor_cells": len(milnor),
                "contained": statistical.issubset(milnor), "projection": projection.intervals(),
                "forward_invariance": None if invariance is None else invariance.to_dict(),
                "histogram_drift": histogram_drift(measure)}

    def graph(self):
        section = self.section
        strip = self._strip(section["strip"])
        graph = pullback_graph(self.system, strip, section["depth"], section["word_budget"], section["samples"],
                               self.seed, section["restricted"])
        self._written(write_graph(self.out, graph, self.format))
        widths = [row[3] for row in graph.rows()]
        return {"strip": strip.to_dict(), "depth": graph.depth, "mode": graph.mode, "entries": len(graph),
                "max_width": max(widths) if widths else None,
                "bone_mass": bone_mass(graph, section["width_tol"]).to_dict()}

    def lyapunov(self):
        section = self.section
        domain = self.system.domain
        if section["restricted"]:
            strips = [self._strip(section["strip"] or [domain.lo, domain.hi], "none")]
        elif section["strip"]:
            strips = [self._strip(section["strip"])]
        else:
            strips = find_trapping_intervals(self.system)

        estimates = []
        for strip in strips:
            estimate = lyapunov_on_graph(self.system, strip, section["depth"], section["samples"], self.seed,
                                         section["restricted"])
            estimates.append({"strip": strip.to_dict(), **estimate.to_dict(),
                              "sign_ok": _sign_ok(strip, estimate)})

        primary = next((strip for strip in strips if strip.trapping == "strict"), None)
        contraction = egorov = None
        if primary is not None:
            if not section["restricted"]:
                contraction = self._contraction_drill(primary, section)
            drill = section["egorov"]
            egorov = egorov_uniformity(self.system, primary, drill["delta"], drill["gamma"], drill["samples"],
                                       drill["n_max"], self.seed, section["restricted"])

        document = {**(estimates[0] if estimates else dict()), "estimates": estimates}
        self._written(write_json(self.out, "lyapunov.json", document))
        return {"estimates": estimates, "contraction": contraction, "egorov": egorov}

    def _contraction_drill(self, strip, section):
        """ Contraction inequality along seeded in-strip orbits """
        drill = section["contraction"]
        graph = pullback_graph(self.system, strip, section["depth"], restricted=section["restricted"], lazy=True)
        outcomes = {"HOLDS": 0, "VIOLATED": 0, "NOT_APPLICABLE": 0}
        worst = None
        for stream in range(drill["orbits"]):
            point = strip.lo + float(initial_uniforms(self.seed, stream, 1)[0]) * strip.width
            state = SkewState.initial(self.system, self.seed, point, stream)
            result = contraction_check(self.system, graph, state, drill["epsilon"], drill["steps"])
            outcomes[result.status] += 1
            if result.slack is not None and (worst is None or result.slack < worst):
                worst = result.slack
        return {"orbits": drill["orbits"], "steps": drill["steps"], "outcomes": outcomes, "min_slack": worst}

    def trap_scan(self):
        section = self.section
        try:
            strips = [strip.to_dict() for strip in find_trapping_intervals(self.system, section["resolution"])]
        except NoTrappingFound:
            strips = []

        morse_smale = None
        if self.system.domain.is_circle:
            first = self.system.maps[0]
            try:
                records = classify_morse_smale(first, section["max_period"])
                morse_smale = {"morse_smale": True, "orbits": [record.to_dict() for record in records]}
                if self.system.s > 1:
                    morse_smale["genericity"] = genericity_check(self.system, section["max_period"]).to_dict()
            except NotMorseSmale as error:
                morse_smale = {"morse_smale": False, "reason": type(error).__name__, "message": str(error)}
            morse_smale["rotation_number"] = rotation_number(first)
        return {"resolution": section["resolution"], "strips": strips, "morse_smale": morse_smale}

    def reconstruct(self):
        section = self.section
        _, statistical, _ = self._estimates()
        projection = fiber_projection(statistical)
        rebuilt = reconstruct_from_projection(self.system, projection, section["depth"])
        self._written(write_table(self.out, "cells_reconstructed", rebuilt.rows(),
                                  ["past_word", "future_word", "bin_lo", "bin_hi", "freq", "support_fraction"],
                                  self.format))

        length = min(self.config["grid"]["cyl_depth"], section["depth"])
        covered, covering = agreement(statistical.restrict_to_past(length), rebuilt.restrict_to_past(length),
                                      section["dilation"])
        return {"depth": section["depth"], "statistical_cells": len(statistical), "reconstructed_cells": len(rebuilt),
                "agreement": {"past_length": length, "statistical_in_reconstructed": covered,
                              "reconstructed_in_statistical": covering}}

    def stability(self):
        section = self.section
        bins = self.config["grid"]["bins"]
        arguments = (section["epsilons"], section["delta_fractions"], section["depth"])
        if section["subset"]:
            subset = self._subset(section["subset"], bins)
            report = probe_stability(self.system, subset, *arguments)
        else:
            _, statistical, _ = self._estimates()
            subset = fiber_projection(statistical)
            report = attractor_stability_via_projection(self.system, statistical, *arguments)

        drill = None
        if report.verdict == "UNSTABLE":
            drill = witness_orbit_exits(self.system, report.witness, subset, report.headline.epsilon, self.seed)
        document = {**report.to_dict(), "drill": drill, "subset": subset.intervals()}
        self._written(write_json(self.out, "stability.json", document))
        return document

    def prop_freq(self):
        section = self.section
        bins = self.config["grid"]["bins"]
        region = self._subset(section["region"], bins) if section["region"] else \
            FiberSubset.full(self.system.domain, bins)

        rows = []
        for text in section["words"]:
            word = tuple(int(symbol) for symbol in str(text))
            statistic = cylinder_return_stats(self.system, self.seed, self.config["steps"], word, region,
                                              section["stream"])
            expected = cylinder_measure(CylinderSpec(enumerate(word)), self.system.s, self.system.probs)
            rows.append({**statistic.to_dict(), "expected": expected})
        return {"words": rows}

    def example41(self):
        results = example41_suite(self.system, self.seed, self.section)
        curve = [{"step": step, "mass_at_zero": mass} for step, mass in results["ulam"]["mass_at_zero"]]
        self._written(write_table(self.out, "ulam", curve, ["step", "mass_at_zero"], self.format))
        return results

    def scan_c(self):
        section = self.section
        sink = section["sink"]
        if sink is None:
            records = [record for record in classify_morse_smale(self.system.maps[0]) if record.kind == "sink"]
            records = [record for record in records if record.period == section["period"]]
            if not records:
                raise ConfigError(f"f_1 has no sink of period {section['period']}")
            sink = records[0].point

        scan = scan_discontinuity(self.system, sink, section["period"], section["c_range"], section["steps"],
                                  section["bins"], section["track"], section["tolerance_bins"], section["max_iter"])
        self._written(write_scan(self.out, scan, self.format))
        summary = scan.to_dict()
        return {"sink": sink, "period": section["period"], "max_jump": summary["max_jump"],
                "lower_semicontinuous": summary["lower_semicontinuous"], "tolerance": summary["tolerance"],
                "rows": len(summary["rows"])}


def _sign_ok(strip, estimate):
    """ Negative exponent on strictly trapping strips, positive on inverse ones, with a 3 sigma margin """
    margin = 3 * estimate.stderr
    if strip.trapping == "strict":
        return estimate.mean + margin < 0
    if strip.trapping == "inverse":
        return estimate.mean - margin > 0
    return None


def _proportion(successes, total):
    """ Fraction with its 95% binomial interval """
    interval = stats.binomtest(int(successes), int(total)).proportion_ci(confidence_level=0.95)
    return {"fraction": successes / total, "ci": [float(interval.low), float(interval.high)],
            "samples": int(total)}


def example41_suite(system, seed, settings):
    """
    Statistics of the random walk example

    (a) tail frequencies of |x| <= eta over [N/2, N) for every horizon N
    (b) share of samples leaving the linear zone during [E/2, E)
    (c) share of samples started in the zone that never leave it and end within the basin tolerance of 0
    (d) Ulam iteration: mass-at-zero curve, stationarity residual and the arithmetic progression test

    :param system: the example41 SkewSystem
    :param seed: int
    :param settings: dict - the example41 config section
    :return: dict
    """
    zone = system.maps[1].zone
    eta = settings["eta"]
    horizons = sorted(settings["horizons"])
    escape = settings["escape_steps"]
    windows = [(n // 2, n) for n in horizons] + [(escape // 2, escape)]
    horizon = max(stop for _, stop in windows)

    def walk(group):
        near = np.zeros((len(group), len(windows)), dtype=np.int64)
        away = np.zeros((len(group), len(windows)), dtype=np.int64)
        last = None
        for chunk in ensemble_chunks(system, seed, group, horizon):
            times = np.arange(chunk.start, chunk.stop)
            close, outside = np.abs(chunk.points) <= eta, np.abs(chunk.points) > zone
            for j, (start, stop) in enumerate(windows):
                selected = (times >= start) & (times < stop)
                if selected.any():
                    near[:, j] += close[:, selected].sum(axis=1)
                    away[:, j] += outside[:, selected].sum(axis=1)
            last = chunk.points[:, -1]
        return near, away, last

    results = run_groups(walk, sample_groups(settings["samples"]))
    near = np.concatenate([result[0] for result in results])
    away = np.concatenate([result[1] for result in results])
    final = np.concatenate([result[2] for result in results])

    near_zero = []
    for j, n in enumerate(horizons):
        frequencies = near[:, j] / (n - n // 2)
        near_zero.append({"steps": n, "median": float(np.median(frequencies)),
                          "quartiles": [float(np.quantile(frequencies, 0.25)), float(np.quantile(frequencies, 0.75))],
                          "mean": float(np.mean(frequencies))})
    medians = [row["median"] for row in near_zero]

    tail_escape = {"steps": escape, **_proportion(int((away[:, -1] > 0).sum()), len(away))}

    offset = settings["samples"]
    streams = list(range(offset, offset + settings["basin_samples"]))

    def basin(group):
        points = zone * (2 * np.array([initial_uniforms(seed, stream, 1)[0] for stream in group]) - 1)
        left = np.zeros(len(group), dtype=bool)
        last = points
        for chunk in ensemble_chunks(system, seed, group, settings["basin_steps"], points=points):
            left |= (np.abs(chunk.points) > zone).any(axis=1)
            last = chunk.points[:, -1]
        return left, last

    groups = [streams[first:first + GROUP_SIZE] for first in range(0, len(streams), GROUP_SIZE)]
    results = run_groups(basin, groups)
    left = np.concatenate([result[0] for result in results])
    last = np.concatenate([result[1] for result in results])
    inside = ~left & (np.abs(last) <= settings["basin_tolerance"])
    basin_result = {"steps": settings["basin_steps"], **_proportion(int(inside.sum()), len(inside)),
                    "absorbed": int((last == 0).sum())}

    operator = ulam_operator(system, settings["ulam_bins"])
    run = ulam_iterate(operator, settings["ulam_iterations"], settings["ulam_record_every"])
    progression = progression_residual(operator, run.distribution, system.maps[0], zone)

    logging.getLogger('laboratory').debug(f"example41 suite: medians {medians}, escape {tail_escape['fraction']}, "
                                          f"basin {basin_result['fraction']}")
    return {"epsilon": zone, "eta": eta,
            "near_zero": {"horizons": near_zero, "nondecreasing": all(b >= a for a, b in zip(medians, medians[1:])),
                          "absorbed": int((final == 0).sum())},
            "tail_escape": tail_escape, "basin": basin_result,
            "ulam": {**run.to_dict(), "bins": operator.bins, "progression": progression.to_dict()}}


def validate_report(report):
    """ Checks the report keys and top-level value types against report_schema.json """
    schema = load_table("report_schema.json")
    missing = [key for key in schema["report"] if key not in report]
    if missing:
        raise LaboratoryError(f"The report misses {missing}")
    mistyped = [key for key, kind in schema["report"].items() if not _has_type(report[key], kind)]
    if mistyped:
        raise LaboratoryError(f"The report has values of unexpected types at {mistyped}")
    if report["subcommand"] not in schema["results"]:
        raise LaboratoryError(f"Unknown report subcommand {report['subcommand']}")
    missing = [f"results.{key}" for key in schema["results"][report["subcommand"]] if key not in report["results"]]
    if missing:
        raise LaboratoryError(f"The {report['subcommand']} report misses {missing}")


def _has_type(value, kind):
    # bool is an int subclass, but never a valid count or seed
    if isinstance(value, bool):
        return False
    return isinstance(value, REPORT_TYPES[kind])


class LaboratoryError(Exception):
    """ Exception raised in the laboratory module """


class ConfigError(LaboratoryError):
    """ Invalid configuration """
