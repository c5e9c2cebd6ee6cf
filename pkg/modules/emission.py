#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# Writers of the laboratory artifacts.

# Tables (cells, graph, scan, trace) are lists of dicts written either as CSV with a
# header row or as a JSON list, depending on the --format flag. JSON documents
# (report, lyapunov, stability) are always JSON. Floats are written with repr, so equal
# results give byte-identical files; non-finite floats and numpy scalars are converted
# to plain JSON values first.
#
# The heatmap is a binary 16-bit PGM (P5, big-endian samples, maxval 65535): one row per
# cylinder word, one column per fiber bin, intensity log(1 + count) scaled to the maximum.
# heatmap.csv keeps the exact counts of every pixel.

import os
import csv
import json
import math
import logging

import numpy as np

PGM_MAXVAL = 65535

logger = logging.getLogger('emission')


def plain(value):
    """ JSON-ready copy of a result structure """
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _output_path(directory, name):
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as error:
        raise IoError(f"Can not create the output directory {directory}: {error}")
    return os.path.join(directory, name)


def write_json(directory, name, document):
    """
    :param directory: str - output directory, created when missing
    :param name: str - file name
    :param document: dict
    :return: str - path of the written file
    """
    path = _output_path(directory, name)
    try:
        with open(path, "w") as file:
            json.dump(plain(document), file, indent=4)
            file.write("\n")
    except OSError as error:
        raise IoError(f"Can not write {path}: {error}")
    logger.debug(f"Wrote {path}")
    return path


def write_table(directory, name, rows, fieldnames, output_format="csv"):
    """
    Writes rows (dicts) as name.csv or name.json

    :param fieldnames: list of column names, in order
    :param output_format: 'csv' or 'json'
    :return: str - path of the written file
    """
    if output_format == "json":
        return write_json(directory, f"{name}.json", [{key: row.get(key) for key in fieldnames} for row in rows])
    if output_format != "csv":
        raise EmissionError(f"Unknown table format: {output_format}")

    path = _output_path(directory, f"{name}.csv")
    try:
        with open(path, "w", newline='') as file:
            writer = csv.DictWriter(file, fieldnames=fieldnames, extrasaction='ignore', lineterminator='\n')
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _cell(row.get(key)) for key in fieldnames})
    except OSError as error:
        raise IoError(f"Can not write {path}: {error}")
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return value


def heatmap_intensities(counts):
    """
    16-bit intensities of a count matrix: round(maxval * log(1 + c) / log(1 + max c))

    :param counts: 2-D array of non-negative counts, not all zero
    :return: np.ndarray of uint16
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0 or counts.max() <= 0:
        raise EmissionError("The heatmap of an empty measure")
    scaled = np.log1p(counts) / math.log1p(int(counts.max()))
    return np.rint(scaled * PGM_MAXVAL).astype(np.uint16)


def emit_heatmap(measure, directory, name="heatmap"):
    """
    Writes the (cylinder word x fiber bin) density of an EmpiricalMeasure as name.pgm and
    the exact counts as name.csv

    :param measure: nonempty EmpiricalMeasure
    :return: (pgm path, csv path)
    """
    if measure.is_empty():
        raise EmissionError("The heatmap of an empty measure")
    counts = measure.density()
    intensities = heatmap_intensities(counts)
    height, width = intensities.shape

    path = _output_path(directory, f"{name}.pgm")
    try:
        with open(path, "wb") as file:
            file.write(f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii"))
            file.write(intensities.astype('>u2').tobytes())
    except OSError as error:
        raise IoError(f"Can not write {path}: {error}")
    logger.debug(f"Wrote a {width}x{height} heatmap to {path}")

    grid = measure.grid
    rows = []
    for word in range(height):
        past, future = grid.decode_word(word)
        for fiber_bin in range(width):
            rows.append({"row": word, "past_word": "".join(map(str, past)), "future_word": "".join(map(str, future)),
                         "bin": fiber_bin, "count": int(counts[word, fiber_bin]),
                         "intensity": int(intensities[word, fiber_bin])})
    table = write_table(directory, name, rows, ["row", "past_word", "future_word", "bin", "count", "intensity"])
    return path, table


def read_pgm(path):
    """
    Reads a binary 16-bit PGM written by emit_heatmap

    :return: np.ndarray (height, width) of intensities
    """
    try:
        with open(path, "rb") as file:
            data = file.read()
    except OSError as error:
        raise IoError(f"Can not read {path}: {error}")
    magic, size, maxval, pixels = data.split(b"\n", 3)
    if magic != b"P5" or int(maxval) != PGM_MAXVAL:
        raise EmissionError(f"{path} is not a 16-bit P5 image")
    width, height = (int(value) for value in size.split())
    return np.frombuffer(pixels, dtype='>u2').reshape(height, width)


CELL_FIELDS = ["past_word", "future_word", "bin_lo", "bin_hi", "freq", "support_fraction"]
GRAPH_FIELDS = ["word", "lo", "hi", "width"]
SCAN_FIELDS = ["c", "hausdorff_jump", "sink_location", "multiplier", "lower_distance", "upper_distance",
               "closure_bins", "flagged"]
TRACE_FIELDS = ["t", "symbol", "p"]


def write_cells(directory, cell_set, output_format="csv"):
    return write_table(directory, "cells", cell_set.rows(), CELL_FIELDS, output_format)


def write_graph(directory, graph, output_format="csv"):
    rows = [dict(zip(GRAPH_FIELDS, row)) for row in graph.rows()]
    return write_table(directory, "graph", rows, GRAPH_FIELDS, output_format)


def write_scan(directory, scan, output_format="csv"):
    return write_table(directory, "scan", [row.to_dict() for row in scan.rows], SCAN_FIELDS, output_format)


def write_trace(directory, trace, output_format="csv"):
    rows = [dict(zip(TRACE_FIELDS, row)) for row in trace.rows()]
    return write_table(directory, "trace", rows, TRACE_FIELDS, output_format)


class EmissionError(Exception):
    """ Exception raised while writing the laboratory artifacts """


class IoError(EmissionError):
    """ The file system refused an artifact """
