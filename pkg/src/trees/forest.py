#!/usr/bin/env python3
"""
Redescribe Forests
Ensembles of predictive clustering trees used as rule factories

Kinds:
  pct       one PCT per target batch
  extra     T Extra-PCTs (k random candidate splits per node)
  subspace  T PCTs, each on a random attribute subset
  ros       T PCTs, each on a row sample and a random target subset

Every tree draws from its own seed derived from the forest seed before
dispatch, so the trees do not depend on worker count or scheduling.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed

from trees.pct import PredictiveClusteringTree, TreeParams, train_pct
from utils.dataset import View
from utils.seeding import make_rng

FOREST_KINDS = ('pct', 'extra', 'subspace', 'ros')
BAG_FRACTION = 0.632

logger = logging.getLogger(__name__)


@dataclass
class ForestSpec:
    kind: str = 'pct'
    n_trees: int = 1
    subspace_p: float = 0.99
    extra_k: Optional[int] = None
    target_fraction: float = 0.5
    bagging: Optional[bool] = None

    def validate(self):
        if self.kind not in FOREST_KINDS:
            raise ValueError(f"Unknown forest kind '{self.kind}'")
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0.0 < self.subspace_p < 1.0:
            raise ValueError(f"subspace_p must be in (0, 1), got {self.subspace_p}")
        if self.extra_k is not None and self.extra_k < 1:
            raise ValueError(f"extra_k must be >= 1, got {self.extra_k}")
        if not 0.0 < self.target_fraction <= 1.0:
            raise ValueError(
                f"target_fraction must be in (0, 1], got {self.target_fraction}"
            )

    @property
    def bags_rows(self) -> bool:
        return self.bagging if self.bagging is not None else self.kind == 'ros'


def subspace_size(n_attributes: int, n_trees: int, p: float) -> int:
    """Attributes per tree so each attribute is seen with probability p."""
    fraction = 1.0 - (1.0 - p) ** (1.0 / n_trees)
    size = max(
        math.ceil(n_attributes * fraction),
        math.ceil(math.log2(n_attributes)) if n_attributes > 1 else 1,
    )
    return min(max(size, 1), n_attributes)


def bag_size(n_entities: int) -> int:
    return max(1, int(math.floor(BAG_FRACTION * n_entities)))


def _train_tree(
    view: View,
    targets: np.ndarray,
    spec: ForestSpec,
    params: TreeParams,
    seed: int,
    index: int,
) -> List[PredictiveClusteringTree]:
    rng = make_rng(seed, 'tree', index)
    n, m = view.values.shape
    features = None
    extra_k = None
    rows = np.arange(n)
    columns = np.arange(targets.shape[1])

    if spec.kind == 'extra':
        extra_k = spec.extra_k or m
    elif spec.kind == 'subspace':
        size = subspace_size(m, spec.n_trees, spec.subspace_p)
        features = np.sort(rng.choice(m, size=size, replace=False))
    elif spec.kind == 'ros':
        n_targets = max(1, math.ceil(spec.target_fraction * len(columns)))
        columns = np.sort(rng.choice(len(columns), size=n_targets, replace=False))
    if spec.bags_rows:
        rows = np.sort(rng.choice(n, size=bag_size(n), replace=False))

    sub_view = View(view.name, view.attributes, view.values[rows])
    return train_pct(
        sub_view, targets[np.ix_(rows, columns)], params,
        extra_k=extra_k, rng=rng, features=features,
    )


def train_forest(
    view: View,
    targets: np.ndarray,
    spec: ForestSpec,
    params: TreeParams,
    seed: int,
    n_jobs: int = 1,
) -> List[PredictiveClusteringTree]:
    """Train the trees of ``spec`` on ``view``; identical for identical seeds."""
    spec.validate()
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    n_trees = 1 if spec.kind == 'pct' else spec.n_trees
    if n_jobs == 1 or n_trees == 1:
        batches = [
            _train_tree(view, targets, spec, params, seed, t) for t in range(n_trees)
        ]
    else:
        batches = Parallel(n_jobs=n_jobs, prefer='threads')(
            delayed(_train_tree)(view, targets, spec, params, seed, t)
            for t in range(n_trees)
        )
    trees = [tree for batch in batches for tree in batch]
    logger.debug(
        f"Forest '{spec.kind}' on view '{view.name}': {len(trees)} trees"
    )
    return trees
