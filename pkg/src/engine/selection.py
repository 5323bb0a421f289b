#!/usr/bin/env python3
"""
Redescribe Set Selection
Greedy construction of reduced redescription sets under weighted set scores

Selection starts from the redescription with the best weighted individual
score and repeatedly adds the candidate that minimises the weighted total of
the grown set, with the redundancy terms computed inside the selected set.
It stops at ``r`` members or when the padded total no longer improves.
"""

import logging
from typing import List, Sequence

import numpy as np

from engine.metrics import (
    attribute_set, complexity, p_score, pairwise_entity_jaccard, underlined,
)
from engine.redescription import Redescription

logger = logging.getLogger(__name__)


def _attribute_jaccard_rows(members: Sequence[Redescription]) -> np.ndarray:
    universe = sorted(set().union(*(attribute_set(m) for m in members)))
    column = {a: j for j, a in enumerate(universe)}
    incidence = np.zeros((len(members), max(len(universe), 1)), dtype=np.int64)
    for i, m in enumerate(members):
        for a in attribute_set(m):
            incidence[i, column[a]] = 1
    return incidence


class GreedySetSelection:
    """Greedy forward selection for one weight row."""

    def __init__(
        self,
        candidates: Sequence[Redescription],
        weights: Sequence[float],
        expected_out_size: int,
        k_c: int,
    ):
        self.candidates = list(candidates)
        self.weights = np.asarray(weights, dtype=float)
        self.expected_out_size = expected_out_size
        n = len(self.candidates)
        # Per-candidate scores that do not depend on the rest of the set
        self.j_sc = np.array([1.0 - c.jaccard for c in self.candidates])
        self.p_sc = np.array([p_score(c.pvalue) for c in self.candidates])
        self.comp_sc = np.array([complexity(c, k_c) for c in self.candidates])
        self.supports = (
            np.vstack([c.support for c in self.candidates]).astype(np.int64)
            if n else np.zeros((0, 0), dtype=np.int64)
        )
        self.sizes = self.supports.sum(axis=1) if n else np.zeros(0)
        self.incidence = _attribute_jaccard_rows(self.candidates) if n else None
        self.attr_sizes = self.incidence.sum(axis=1) if n else np.zeros(0)
        # Sums of attribute / entity Jaccard from each candidate to the selection
        self.att_to_sel = np.zeros(n)
        self.ent_to_sel = np.zeros(n)
        self.selected: List[int] = []
        self.available = np.ones(n, dtype=bool)
        self.sums = np.zeros(5)
        self.att_pairs = 0.0
        self.ent_pairs = 0.0
        self.logger = logging.getLogger('GreedySetSelection')

    def _jaccard_rows(self, index: int):
        inter = self.supports @ self.supports[index]
        union = self.sizes + self.sizes[index] - inter
        ent = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
        a_inter = self.incidence @ self.incidence[index]
        a_union = self.attr_sizes + self.attr_sizes[index] - a_inter
        att = np.where(a_union > 0, a_inter / np.maximum(a_union, 1), 0.0)
        return att, ent

    def _set_vectors(self, m: int, att_pairs, ent_pairs, base_sums):
        """Per-measure sums over members for a set of size m (vectorised)."""
        redundancy = 2.0 / (m - 1) if m > 1 else 0.0
        return (
            base_sums[0], base_sums[1],
            att_pairs * redundancy, ent_pairs * redundancy,
            base_sums[2],
        )

    def _totals(self, m: int, measure_sums) -> tuple:
        w = self.weights
        plain = sum(w[i] * measure_sums[i] / m for i in range(5))
        padded = sum(
            w[i] * underlined(measure_sums[i], m, self.expected_out_size)
            for i in range(5)
        )
        return plain, padded

    def start_index(self) -> int:
        w = self.weights
        individual = w[0] * self.j_sc + w[1] * self.p_sc + w[4] * self.comp_sc
        return int(np.argmin(individual))

    def add(self, index: int):
        att, ent = self._jaccard_rows(index)
        self.att_pairs += self.att_to_sel[index]
        self.ent_pairs += self.ent_to_sel[index]
        self.att_to_sel += att
        self.ent_to_sel += ent
        self.sums += np.array([
            self.j_sc[index], self.p_sc[index], 0.0, 0.0, self.comp_sc[index],
        ])
        self.selected.append(index)
        self.available[index] = False

    def current_padded(self) -> float:
        m = len(self.selected)
        if m == 0:
            return float(self.weights.sum())
        sums = self._set_vectors(
            m, self.att_pairs, self.ent_pairs,
            (self.sums[0], self.sums[1], self.sums[4]),
        )
        return self._totals(m, sums)[1]

    def greedy_once(self) -> bool:
        """Add the best candidate; False when none improves the padded total."""
        if not self.selected:
            self.add(self.start_index())
            return True
        pool = np.flatnonzero(self.available)
        if len(pool) == 0:
            return False
        m = len(self.selected) + 1
        sums = self._set_vectors(
            m,
            self.att_pairs + self.att_to_sel[pool],
            self.ent_pairs + self.ent_to_sel[pool],
            (
                self.sums[0] + self.j_sc[pool],
                self.sums[1] + self.p_sc[pool],
                self.sums[4] + self.comp_sc[pool],
            ),
        )
        plain, padded = self._totals(m, sums)
        best = int(np.argmin(plain))
        if padded[best] >= self.current_padded():
            return False
        self.add(int(pool[best]))
        return True

    def select(self, r: int) -> List[Redescription]:
        while len(self.selected) < r and self.greedy_once():
            pass
        return [self.candidates[i] for i in self.selected]


def grsc(
    candidates: Sequence[Redescription],
    weight_matrix: Sequence[Sequence[float]],
    r: int,
    expected_out_size: int = 200,
    k_c: int = 20,
) -> List[List[Redescription]]:
    """One reduced set of at most ``r`` redescriptions per weight row."""
    candidates = list(candidates)
    results = []
    for row in weight_matrix:
        if len(candidates) <= r:
            if len(candidates) < r:
                logger.warning(
                    f"Set selection input ({len(candidates)}) is smaller than r={r}; "
                    f"returning all of it"
                )
            results.append(list(candidates))
            continue
        selection = GreedySetSelection(candidates, row, expected_out_size, k_c)
        chosen = selection.select(r)
        logger.info(
            f"Selected {len(chosen)} of {len(candidates)} redescriptions "
            f"(r={r}, weights={list(row)})"
        )
        results.append(chosen)
    return results
