#!/usr/bin/env python3
"""
Redescribe Rule Extraction
Turns every tree leaf into a conjunctive rule over the view's attributes
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from engine.query import Literal, Query, conjoin, eval_support
from engine.redescription import GENERATING, Rule
from trees.pct import PredictiveClusteringTree, TreeNode
from utils.dataset import Attribute, Dataset

logger = logging.getLogger(__name__)

Condition = Tuple[int, bool, object]


def _path_conditions(tree: PredictiveClusteringTree) -> List[List[Condition]]:
    """Root-to-leaf conditions (attribute, went_left, split) for every leaf."""
    paths: List[List[Condition]] = []
    if tree.root is None:
        return paths
    stack: List[Tuple[TreeNode, List[Condition]]] = [(tree.root, [])]
    while stack:
        node, path = stack.pop()
        if node.is_leaf:
            paths.append(path)
            continue
        split = node.split
        stack.append((node.right, path + [(split.attribute, False, split)]))
        stack.append((node.left, path + [(split.attribute, True, split)]))
    return paths


class _LiteralBuilder:
    """Accumulates per-attribute bounds along a path, in first-seen order."""

    def __init__(self, attributes: Sequence[Attribute]):
        self.attributes = attributes
        self.order: List[int] = []
        self.bounds: Dict[int, List[float]] = {}
        self.levels: Dict[int, set] = {}

    def add(self, attribute: int, went_left: bool, split) -> bool:
        if attribute not in self.order:
            self.order.append(attribute)
        if split.categorical:
            allowed = self.levels.setdefault(
                attribute, set(range(len(self.attributes[attribute].levels)))
            )
            if went_left:
                allowed &= {split.level}
            else:
                allowed.discard(split.level)
            return bool(allowed)
        lo, hi = self.bounds.setdefault(attribute, [-math.inf, math.inf])
        if went_left:
            self.bounds[attribute][1] = min(hi, split.threshold)
        else:
            self.bounds[attribute][0] = max(lo, math.nextafter(split.threshold, math.inf))
        return True


def _tighten(
    column: np.ndarray, lo: float, hi: float
) -> Optional[Tuple[float, float]]:
    """Shrink [lo, hi] onto the smallest and largest observed values inside it."""
    observed = column[~np.isnan(column)]
    inside = observed[(observed >= lo) & (observed <= hi)]
    if len(inside) == 0:
        return None
    return float(inside.min()), float(inside.max())


def _leaf_query(
    path: List[Condition],
    dataset: Dataset,
    view_index: int,
    max_rule_len: int,
) -> Optional[Query]:
    view = dataset.views[view_index]
    builder = _LiteralBuilder(view.attributes)
    for attribute, went_left, split in path:
        if not builder.add(attribute, went_left, split):
            return None

    built: List[Literal] = []
    for attribute in builder.order:
        meta = view.attributes[attribute]
        if attribute in builder.levels:
            codes = sorted(builder.levels[attribute])
            built.append(Literal(
                view_index, attribute, meta.name,
                levels=tuple(meta.levels[c] for c in codes),
            ))
            continue
        lo, hi = builder.bounds[attribute]
        tight = _tighten(view.column(attribute), lo, hi)
        if tight is None:
            return None
        built.append(Literal(view_index, attribute, meta.name, tight[0], tight[1]))

    if not built:
        return None
    return conjoin(*built[:max_rule_len])


def extract_rules(
    trees: Sequence[PredictiveClusteringTree],
    dataset: Dataset,
    view_index: int,
    max_rule_len: int,
    origin: str = GENERATING,
    iteration: int = 0,
    marked: bool = True,
) -> List[Rule]:
    """One conjunctive rule per leaf, deduplicated by support (shorter rule kept)."""
    by_support: Dict[bytes, Rule] = {}
    for tree in trees:
        for path in _path_conditions(tree):
            query = _leaf_query(path, dataset, view_index, max_rule_len)
            if query is None:
                continue
            support = eval_support(query, dataset)
            rule = Rule(query, support, view_index, marked, origin, iteration)
            key = np.packbits(support).tobytes()
            kept = by_support.get(key)
            if kept is None or rule.length < kept.length:
                by_support[key] = rule
    rules = list(by_support.values())
    logger.debug(
        f"Extracted {len(rules)} {origin} rules on view "
        f"'{dataset.views[view_index].name}' from {len(trees)} trees"
    )
    return rules


def merge_rules(existing: Sequence[Rule], new: Sequence[Rule]) -> List[Rule]:
    """Add ``new`` rules whose supports are not already covered by ``existing``."""
    seen = {np.packbits(r.support).tobytes() for r in existing}
    merged = list(existing)
    for rule in new:
        key = np.packbits(rule.support).tobytes()
        if key not in seen:
            seen.add(key)
            merged.append(rule)
    return merged
