#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Skew Product Laboratory project 2026
# GNU General Public License v3.0

# Ulam discretization of the transfer operator of a random fiber system on a segment.

# The fiber is cut into n equal bins. The entry (j, k) of the row-stochastic matrix is
#       sum_i p_i |bin_j intersected with f_i^-1(bin_k)| / |bin_j|
# computed exactly from the preimages of the bin edges (fiber maps are increasing).
# A distribution nu over the bins is pushed forward as nu P; stationary measures satisfy
# nu = nu P, the residual |nu P - nu|_1 measures how far an iterate is from it.

import logging

import numpy as np
from scipy import sparse

logger = logging.getLogger('transfer')


class UlamOperator:
    """
    Row-stochastic sparse Ulam matrix of a SkewSystem on a segment fiber
    """

    def __init__(self, system, bins):
        """
        :param system: SkewSystem with a segment fiber
        :param bins: int - number of Ulam bins
        """
        domain = system.domain
        if domain.is_circle:
            raise TransferError("The Ulam operator is implemented for segment fibers")
        if bins < 2:
            raise TransferError(f"At least two Ulam bins are needed (got {bins})")

        self.domain = domain
        self.bins = bins
        self.edges = np.linspace(domain.lo, domain.hi, bins + 1)
        width = self.edges[1] - self.edges[0]

        rows, columns, values = [], [], []
        for probability, fiber_map in zip(system.probs, system.maps):
            low, high = fiber_map.image()
            preimages = np.asarray(fiber_map.inverse(np.clip(self.edges, low, high)), dtype=float)
            images = np.asarray(fiber_map.evaluate(self.edges), dtype=float)
            first = domain.bin_index(images[:-1], bins)
            last = domain.bin_index(np.nextafter(images[1:], -np.inf), bins)

            for source in range(bins):
                for target in range(int(first[source]), int(last[source]) + 1):
                    overlap = (min(self.edges[source + 1], preimages[target + 1])
                               - max(self.edges[source], preimages[target]))
                    if overlap > 0:
                        rows.append(source)
                        columns.append(target)
                        values.append(probability * overlap / width)

        matrix = sparse.coo_matrix((values, (rows, columns)), shape=(bins, bins)).tocsr()
        totals = np.asarray(matrix.sum(axis=1)).ravel()
        self.matrix = sparse.diags(1.0 / totals) @ matrix
        logger.debug(f"Ulam matrix: {bins} bins, {self.matrix.nnz} nonzero entries")

    def push(self, distribution):
        """ One step nu -> nu P """
        return np.asarray(self.matrix.T @ distribution).ravel()

    def residual(self, distribution):
        """ |nu P - nu|_1 """
        return float(np.abs(self.push(distribution) - distribution).sum())

    def uniform(self):
        return np.full(self.bins, 1.0 / self.bins)

    def mass(self, distribution, lo, hi):
        """ Mass of [lo, hi], bins counted by their overlap """
        overlap = np.clip(np.minimum(self.edges[1:], hi) - np.maximum(self.edges[:-1], lo), 0.0, None)
        return float(distribution @ (overlap / (self.edges[1] - self.edges[0])))

    def zero_bins(self):
        """ Bins touching the point 0 of the fiber """
        width = self.edges[1] - self.edges[0]
        return self.domain.bins_meeting(-width / 2, width / 2, self.bins)


class UlamRun:
    """ Mass-at-zero curve and the final distribution of an Ulam iteration """

    def __init__(self, iterations, curve, distribution, residual):
        self.iterations = iterations
        self.curve = curve
        self.distribution = distribution
        self.residual = residual

    def to_dict(self):
        return {"iterations": self.iterations, "mass_at_zero": [[step, mass] for step, mass in self.curve],
                "final_mass_at_zero": self.curve[-1][1], "residual": self.residual}


def ulam_operator(system, bins=512):
    """
    :param system: SkewSystem on a segment
    :param bins: int
    :return: UlamOperator
    """
    return UlamOperator(system, bins)


def ulam_iterate(operator, iterations=10_000, record_every=100, distribution=None):
    """
    Iterates nu -> nu P from the uniform distribution

    :param operator: UlamOperator
    :param iterations: int
    :param record_every: int - stride of the mass-at-zero curve
    :param distribution: initial distribution, uniform when None
    :return: UlamRun
    """
    distribution = operator.uniform() if distribution is None else np.asarray(distribution, dtype=float)
    zero = operator.zero_bins()
    curve = [(0, float(distribution[zero].sum()))]
    for step in range(1, iterations + 1):
        distribution = operator.push(distribution)
        if step % record_every == 0 or step == iterations:
            curve.append((step, float(distribution[zero].sum())))
    return UlamRun(iterations, curve, distribution, operator.residual(distribution))


class ProgressionResidual:
    def __init__(self, masses, second_differences):
        self.masses = masses
        self.second_differences = second_differences
        self.max_residual = max((abs(value) for value in second_differences), default=0.0)

    def to_dict(self):
        return {"masses": self.masses, "second_differences": self.second_differences,
                "max_residual": self.max_residual}


def progression_residual(operator, distribution, contraction, zone, min_bins=2):
    """
    Masses of the fundamental domains f_1^j(J), J = [zone / 2, zone), and their second differences

    A stationary measure charging the linear zone away from 0 would make these masses an
    arithmetic progression. Both sides of 0 are added up. Domains narrower than min_bins
    Ulam bins are not resolved and are skipped.

    :param operator: UlamOperator
    :param distribution: Ulam distribution
    :param contraction: FiberMap f_1, contracting towards 0
    :param zone: float - half width of the linear zone
    :return: ProgressionResidual
    """
    width = operator.edges[1] - operator.edges[0]
    masses, lo, hi = [], zone / 2, zone
    while hi - lo >= min_bins * width:
        masses.append(operator.mass(distribution, lo, hi) + operator.mass(distribution, -hi, -lo))
        lo, hi = float(contraction.evaluate(lo)), float(contraction.evaluate(hi))
    differences = [masses[j + 1] - 2 * masses[j] + masses[j - 1] for j in range(1, len(masses) - 1)]
    return ProgressionResidual(masses, differences)


class TransferError(Exception):
    """ Exception raised in the transfer operator module """
