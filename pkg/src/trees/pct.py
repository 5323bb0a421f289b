#!/usr/bin/env python3
"""
Redescribe Predictive Clustering Trees
Multi-target regression trees grown by total variance reduction

A split is scored by the variance reduction summed over all targets,
computed on the entities that have a value for the split attribute. Numeric
splits send ``x <= threshold`` left, categorical splits send one level left
and the remaining levels right. Entities with a missing split value follow
the branch that received more training entities.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from utils.dataset import View

TIE_TOLERANCE = 1e-9

logger = logging.getLogger(__name__)


@dataclass
class TreeParams:
    max_depth: int = 8
    min_leaf: int = 2
    num_target_batch: int = 100


@dataclass
class SplitCandidate:
    """One way to split a node; ``order`` is the tie-break key within an attribute."""
    attribute: int
    order: float
    reduction: float
    categorical: bool
    threshold: float = math.nan
    level: int = -1
    gap: tuple = (math.nan, math.nan)

    def goes_left(self, column: np.ndarray) -> np.ndarray:
        if self.categorical:
            return column == self.level
        return column <= self.threshold


@dataclass
class TreeNode:
    samples: np.ndarray
    prediction: np.ndarray
    depth: int = 0
    split: Optional[SplitCandidate] = None
    missing_left: bool = True
    left: Optional['TreeNode'] = None
    right: Optional['TreeNode'] = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def n_samples(self) -> int:
        return int(len(self.samples))


def _sse(sum_y: np.ndarray, sum_y2: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Sum of squared errors over targets from per-target sums."""
    with np.errstate(invalid='ignore', divide='ignore'):
        return sum_y2 - np.where(n > 0, (sum_y ** 2).sum(axis=-1) / np.maximum(n, 1), 0.0)


def enumerate_candidates(
    x: np.ndarray,
    y: np.ndarray,
    categorical: bool,
    attribute: int,
    min_leaf: int,
) -> List[SplitCandidate]:
    """All valid splits of one attribute, in increasing threshold/level order."""
    present = ~np.isnan(x)
    n = int(present.sum())
    if n < 2 * min_leaf:
        return []
    xp, yp = x[present], y[present]
    total_y = yp.sum(axis=0)
    total_y2 = float((yp ** 2).sum())
    parent = float(_sse(total_y, np.array(total_y2), np.array(n)))
    candidates = []

    if categorical:
        for code in np.unique(xp):
            mask = xp == code
            n_left = int(mask.sum())
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            left_y = yp[mask].sum(axis=0)
            left_y2 = float((yp[mask] ** 2).sum())
            sse_left = float(_sse(left_y, np.array(left_y2), np.array(n_left)))
            sse_right = float(
                _sse(total_y - left_y, np.array(total_y2 - left_y2), np.array(n_right))
            )
            candidates.append(SplitCandidate(
                attribute=attribute,
                order=float(code),
                reduction=(parent - sse_left - sse_right) / n,
                categorical=True,
                level=int(code),
            ))
        return candidates

    order = np.argsort(xp, kind='stable')
    xs, ys = xp[order], yp[order]
    cum_y = np.cumsum(ys, axis=0)
    cum_y2 = np.cumsum((ys ** 2).sum(axis=1))
    boundaries = np.flatnonzero(xs[:-1] < xs[1:])
    n_left = boundaries + 1
    n_right = n - n_left
    valid = (n_left >= min_leaf) & (n_right >= min_leaf)
    boundaries, n_left, n_right = boundaries[valid], n_left[valid], n_right[valid]
    if len(boundaries) == 0:
        return []
    sse_left = _sse(cum_y[boundaries], cum_y2[boundaries], n_left)
    sse_right = _sse(
        total_y[None, :] - cum_y[boundaries], total_y2 - cum_y2[boundaries], n_right
    )
    reductions = (parent - sse_left - sse_right) / n
    for b, reduction in zip(boundaries, reductions):
        lo, hi = float(xs[b]), float(xs[b + 1])
        candidates.append(SplitCandidate(
            attribute=attribute,
            order=(lo + hi) / 2.0,
            reduction=float(reduction),
            categorical=False,
            threshold=(lo + hi) / 2.0,
            gap=(lo, hi),
        ))
    return candidates


def best_candidate(candidates: Sequence[SplitCandidate]) -> Optional[SplitCandidate]:
    """Highest reduction; near-ties go to the first candidate in (attribute, order)."""
    if not candidates:
        return None
    ranked = sorted(candidates, key=lambda c: (c.attribute, c.order))
    top = max(c.reduction for c in ranked)
    for candidate in ranked:
        if candidate.reduction >= top - TIE_TOLERANCE:
            return candidate
    return None


class PredictiveClusteringTree:
    """Multi-target tree; ``extra_k`` switches to randomized candidate sampling."""

    def __init__(
        self,
        params: TreeParams,
        extra_k: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
        features: Optional[Sequence[int]] = None,
    ):
        self.params = params
        self.extra_k = extra_k
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.features = None if features is None else sorted(int(f) for f in features)
        self.root: Optional[TreeNode] = None
        self.logger = logging.getLogger('PredictiveClusteringTree')

    def fit(
        self, values: np.ndarray, targets: np.ndarray, categorical: Sequence[bool]
    ) -> 'PredictiveClusteringTree':
        values = np.asarray(values, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if targets.ndim == 1:
            targets = targets[:, None]
        if values.shape[0] != targets.shape[0]:
            raise ValueError(
                f"{values.shape[0]} rows of attributes but {targets.shape[0]} of targets"
            )
        self._values = values
        self._targets = targets
        self._categorical = list(categorical)
        self._features = (
            list(range(values.shape[1])) if self.features is None else self.features
        )
        self.root = self._grow(np.arange(values.shape[0]), 0)
        del self._values, self._targets
        return self

    def _grow(self, samples: np.ndarray, depth: int) -> TreeNode:
        y = self._targets[samples]
        node = TreeNode(samples=samples, prediction=y.mean(axis=0), depth=depth)
        if (
            depth >= self.params.max_depth
            or len(samples) < 2 * self.params.min_leaf
            or float(((y - node.prediction) ** 2).sum()) <= TIE_TOLERANCE
        ):
            return node

        split = self._choose_split(samples, y)
        if split is None or split.reduction <= TIE_TOLERANCE:
            return node

        column = self._values[samples, split.attribute]
        missing = np.isnan(column)
        left = np.zeros(len(samples), dtype=bool)
        left[~missing] = split.goes_left(column[~missing])
        n_left = int(left.sum())
        n_right = int((~left & ~missing).sum())
        node.missing_left = n_left >= n_right
        if node.missing_left:
            left |= missing
        node.split = split
        node.left = self._grow(samples[left], depth + 1)
        node.right = self._grow(samples[~left], depth + 1)
        return node

    def _choose_split(
        self, samples: np.ndarray, y: np.ndarray
    ) -> Optional[SplitCandidate]:
        candidates: List[SplitCandidate] = []
        for a in self._features:
            candidates.extend(enumerate_candidates(
                self._values[samples, a], y, self._categorical[a], a,
                self.params.min_leaf,
            ))
        if self.extra_k is None or not candidates:
            return best_candidate(candidates)
        return best_candidate(self._sample(candidates))

    def _sample(self, candidates: List[SplitCandidate]) -> List[SplitCandidate]:
        """Draw k distinct candidates: attribute uniform, then a gap within it."""
        per_attribute: dict = {}
        for c in candidates:
            per_attribute[c.attribute] = per_attribute.get(c.attribute, 0) + 1
        weights = np.array(
            [1.0 / (len(per_attribute) * per_attribute[c.attribute]) for c in candidates]
        )
        k = min(self.extra_k or 1, len(candidates))
        chosen = self.rng.choice(
            len(candidates), size=k, replace=False, p=weights / weights.sum()
        )
        sampled = []
        for index in sorted(int(i) for i in chosen):
            c = candidates[index]
            if not c.categorical:
                lo, hi = c.gap
                threshold = float(self.rng.uniform(lo, hi))
                c = SplitCandidate(
                    attribute=c.attribute, order=c.order, reduction=c.reduction,
                    categorical=False, threshold=min(max(threshold, lo), np.nextafter(hi, lo)),
                    gap=c.gap,
                )
            sampled.append(c)
        return sampled

    def leaves(self) -> List[TreeNode]:
        result: List[TreeNode] = []
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if node.is_leaf:
                result.append(node)
            else:
                stack.extend([node.right, node.left])
        return result

    def describe(self, names: Optional[Sequence[str]] = None) -> str:
        """Indented text dump, for debugging."""
        lines: List[str] = []

        def walk(node: TreeNode, indent: str):
            if node.is_leaf:
                lines.append(f"{indent}leaf n={node.n_samples}")
                return
            s = node.split
            name = names[s.attribute] if names else f"x{s.attribute}"
            test = f"{name} = #{s.level}" if s.categorical else f"{name} <= {s.threshold:g}"
            lines.append(f"{indent}{test} (n={node.n_samples})")
            walk(node.left, indent + '  ')
            walk(node.right, indent + '  ')

        if self.root is not None:
            walk(self.root, '')
        return '\n'.join(lines)


def target_batches(n_targets: int, batch_size: int) -> List[np.ndarray]:
    """Contiguous target batches of at most ``batch_size`` columns."""
    n_batches = max(1, math.ceil(n_targets / batch_size))
    return [b for b in np.array_split(np.arange(n_targets), n_batches) if len(b)]


def train_pct(
    view: View,
    targets: np.ndarray,
    params: TreeParams,
    extra_k: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    features: Optional[Sequence[int]] = None,
) -> List[PredictiveClusteringTree]:
    """One tree per target batch (a single tree when S <= num_target_batch)."""
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    categorical = [not a.is_numeric for a in view.attributes]
    trees = []
    for batch in target_batches(targets.shape[1], params.num_target_batch):
        tree = PredictiveClusteringTree(params, extra_k=extra_k, rng=rng, features=features)
        trees.append(tree.fit(view.values, targets[:, batch], categorical))
    logger.debug(
        f"Trained {len(trees)} tree(s) on view '{view.name}' "
        f"for {targets.shape[1]} targets"
    )
    return trees


def train_extra_pct(
    view: View,
    targets: np.ndarray,
    k: int,
    params: TreeParams,
    rng: np.random.Generator,
    features: Optional[Sequence[int]] = None,
) -> List[PredictiveClusteringTree]:
    """Extra-PCT: at each node the best of k randomly drawn candidate splits."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return train_pct(view, targets, params, extra_k=k, rng=rng, features=features)

