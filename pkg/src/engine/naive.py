#!/usr/bin/env python3
"""
Redescribe Naive Baseline
Exhaustive pairwise mining followed by joins of incomplete redescriptions

Every view pair is mined independently. The pairwise sets are then folded
left to right: each fold step keeps the accumulated set and adds every join
of an accumulated redescription with a redescription of the next pairwise
set. Incomplete results are dropped and near-duplicates filtered at the end.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from engine.gclusrm import GclusRM
from engine.redescription import Redescription, from_parts
from utils.config_parser import Constraints, Settings
from utils.dataset import Dataset
from utils.seeding import child_seed
from utils.tracing import OfflineTracer, Tracer

Variant = Tuple[Optional[int], Optional[int]]

logger = logging.getLogger(__name__)


def _variants(first: Tuple[int, ...], second: Tuple[int, ...]) -> List[Variant]:
    """(view dropped from first, view dropped from second) for each join result."""
    if len(second) != 2:
        raise ValueError(
            f"The second join operand must hold exactly two views, got {list(second)}"
        )
    overlap = sorted(set(first) & set(second))
    if set(first) >= set(second):
        return []
    if not overlap:
        return [(None, None)]
    k = overlap[0]
    return [(None, k), (k, None)]


def _join(
    r1: Redescription, r2: Redescription, drop1: Optional[int], drop2: Optional[int]
) -> Redescription:
    queries = list(r1.queries)
    supports = list(r1.query_supports)
    if drop1 is not None:
        queries[drop1] = None
        supports[drop1] = None
    for k in r2.views:
        if k != drop2:
            queries[k] = r2.queries[k]
            supports[k] = r2.query_supports[k]
    return from_parts(queries, supports)


def oplus(r1: Redescription, r2: Redescription) -> List[Redescription]:
    """Join of two incomplete redescriptions; zero, one or two results.

    Disjoint view sets give one result. Views overlapping in exactly one view
    k give two results, keeping either operand's query on k. When the first
    operand's views contain the second's there is nothing to join.
    """
    return [_join(r1, r2, d1, d2) for d1, d2 in _variants(r1.views, r2.views)]


def _group(members: Sequence[Redescription]) -> Dict[Tuple[int, ...], List[int]]:
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for index, red in enumerate(members):
        groups.setdefault(red.views, []).append(index)
    return groups


def _masks(
    members: Sequence[Redescription], indices: List[int], drop: Optional[int]
) -> Tuple[np.ndarray, np.ndarray]:
    """Support and query-union masks of members with the ``drop`` view ignored."""
    inter, union = [], []
    for i in indices:
        present = [
            s for k, s in enumerate(members[i].query_supports)
            if s is not None and k != drop
        ]
        inter.append(np.logical_and.reduce(present))
        union.append(np.logical_or.reduce(present))
    return np.vstack(inter).astype(np.int64), np.vstack(union).astype(np.int64)


def otimes(
    first: Sequence[Redescription],
    second: Sequence[Redescription],
    constraints: Optional[Constraints] = None,
    early_validation: bool = False,
) -> List[Redescription]:
    """``first`` plus every join of a member of ``first`` with one of ``second``.

    With ``early_validation`` joins below the minimal Jaccard or support are
    never built. With three views every join of the fold is final, so the
    output is unchanged; with more views a later overlap join may drop the
    view that sank a pruned join, so pruning can lose such candidates.
    """
    result = list(first)
    if not first or not second:
        return result
    if early_validation and constraints is None:
        raise ValueError("early_validation needs constraints")
    joins: List[Tuple[int, int, int, Redescription]] = []
    groups_first, groups_second = _group(first), _group(second)
    for views_a, rows_a in groups_first.items():
        for views_b, rows_b in groups_second.items():
            for v, (drop1, drop2) in enumerate(_variants(views_a, views_b)):
                if early_validation:
                    inter_a, union_a = _masks(first, rows_a, drop1)
                    inter_b, union_b = _masks(second, rows_b, drop2)
                    inter = inter_a @ inter_b.T
                    union = (
                        union_a.sum(axis=1)[:, None] + union_b.sum(axis=1)[None, :]
                        - union_a @ union_b.T
                    )
                    jac = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
                    keep = np.argwhere(
                        (jac >= constraints.min_jaccard)
                        & (inter >= constraints.min_support)
                    )
                else:
                    keep = itertools.product(range(len(rows_a)), range(len(rows_b)))
                for x, y in keep:
                    a, b = rows_a[x], rows_b[y]
                    joins.append((a, b, v, _join(first[a], second[b], drop1, drop2)))
    joins.sort(key=lambda item: item[:3])
    result.extend(j[3] for j in joins)
    return result


def filter_redundant(members: Sequence[Redescription], perc: float) -> List[Redescription]:
    """Drop members whose support overlaps a more accurate kept member by > perc."""
    if not 0 < perc <= 1:
        raise ValueError(f"perc must be in (0, 1], got {perc}")
    order = sorted(range(len(members)), key=lambda i: -members[i].jaccard)
    kept: List[Redescription] = []
    kept_matrix: List[np.ndarray] = []
    for i in order:
        red = members[i]
        if kept_matrix:
            matrix = np.vstack(kept_matrix).astype(np.int64)
            support = red.support.astype(np.int64)
            inter = matrix @ support
            union = matrix.sum(axis=1) + support.sum() - inter
            similar = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
            if (similar > perc).any():
                continue
        kept.append(red)
        kept_matrix.append(red.support)
    return kept


@dataclass
class NaiveResult:
    members: List[Redescription]
    pairs: List[Tuple[int, int]]
    pairwise_sizes: List[int]
    fold_steps: List[Dict[str, Any]] = field(default_factory=list)
    peak: int = 0

    @property
    def is_empty(self) -> bool:
        return not self.members

    def stats(self) -> Dict[str, Any]:
        return {
            'pairs': [f"{i}-{j}" for i, j in self.pairs],
            'pairwise_sizes': self.pairwise_sizes,
            'fold_steps': self.fold_steps,
            'peak': self.peak,
            'output': len(self.members),
        }


def _mine_pair(
    dataset: Dataset, i: int, j: int, constraints: Constraints,
    settings: Settings, seed: int, tracer: Tracer,
) -> Tuple[List[Redescription], int]:
    miner = GclusRM(dataset, i, j, constraints, settings, seed, tracer)
    found = miner.run()
    return found, miner.store.peak_size


def run_naive(
    dataset: Dataset,
    constraints: Constraints,
    settings: Settings,
    seed: Optional[int] = None,
    tracer: Optional[Tracer] = None,
    n_jobs: int = 1,
    early_validation: bool = True,
) -> NaiveResult:
    """Pairwise mining of every view pair, folded with joins and filtered."""
    if dataset.n_views < 2:
        raise ValueError(f"Need at least 2 views, got {dataset.n_views}")
    seed = settings.rng_seed if seed is None else seed
    tracer = tracer or OfflineTracer()
    constraints = constraints.resolve(dataset.n_entities)
    pairs = list(itertools.combinations(range(dataset.n_views), 2))

    mined = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_mine_pair)(
            dataset, i, j, constraints, settings,
            child_seed(seed, 'restart', 0, 'pair', i, j), tracer,
        )
        for i, j in pairs
    )
    pairwise = [found for found, _ in mined]
    sizes = [len(found) for found in pairwise]
    result = NaiveResult(members=[], pairs=pairs, pairwise_sizes=sizes)
    result.peak = max(peak for _, peak in mined)
    if not any(pairwise):
        logger.warning("Pairwise mining produced no redescription")
        return result

    held = sum(sizes)
    accumulated = pairwise[0]
    result.peak = max(result.peak, held)
    for step, addition in enumerate(pairwise[1:], start=1):
        before = len(accumulated)
        accumulated = otimes(accumulated, addition, constraints, early_validation)
        result.peak = max(result.peak, held + len(accumulated))
        record = {
            'step': step,
            'pair': f"{pairs[step][0]}-{pairs[step][1]}",
            'before': before,
            'joined': len(accumulated) - before,
            'size': len(accumulated),
        }
        result.fold_steps.append(record)
        tracer.record('fold', **record)

    complete = [
        red for red in accumulated
        if red.is_complete
        and constraints.accepts(red.jaccard, red.pvalue, red.support_size)
    ]
    result.members = filter_redundant(complete, settings.perc)
    logger.info(
        f"Naive mining: {len(accumulated)} candidates, {len(complete)} complete, "
        f"{len(result.members)} after redundancy filtering"
    )
    return result
