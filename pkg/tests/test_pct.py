"""Tests for multi-target predictive clustering trees."""

import numpy as np
import pytest

from trees.pct import (
    PredictiveClusteringTree, TreeParams, enumerate_candidates, target_batches,
    train_extra_pct, train_pct,
)
from utils.seeding import make_rng
from helpers import numeric_view


def exhaustive_root_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """(attribute, lower gap value) of the best split by brute force."""
    n = len(y)
    parent = ((y - y.mean(axis=0)) ** 2).sum()
    best = None
    for a in range(x.shape[1]):
        values = np.unique(x[:, a])
        for lo, hi in zip(values[:-1], values[1:]):
            left = x[:, a] <= lo
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            sse = sum(
                ((y[part] - y[part].mean(axis=0)) ** 2).sum() for part in (left, ~left)
            )
            reduction = (parent - sse) / n
            if best is None or reduction > best[0] + 1e-9:
                best = (reduction, a, lo)
    return best[1], best[2]


class TestTrainPct:
    def test_perfect_split(self):
        x = np.arange(10.0)
        y = (x > 5).astype(float)
        tree = train_pct(numeric_view('V1', x), y, TreeParams())[0]
        assert tree.root.split.threshold == pytest.approx(5.5)
        assert tree.root.split.gap == (5.0, 6.0)
        assert tree.root.left.is_leaf and tree.root.right.is_leaf
        assert tree.root.left.prediction.tolist() == [0.0]
        assert tree.root.right.prediction.tolist() == [1.0]

    def test_constant_target(self):
        x = np.arange(10.0)
        tree = train_pct(numeric_view('V1', x), np.ones(10), TreeParams())[0]
        assert tree.root.is_leaf
        assert len(tree.leaves()) == 1

    def test_target_batches(self):
        assert [len(b) for b in target_batches(250, 100)] == [84, 83, 83]
        assert len(target_batches(1, 100)) == 1

    def test_one_tree_per_batch(self):
        rng = np.random.default_rng(0)
        view = numeric_view('V1', rng.uniform(size=(30, 3)))
        targets = (rng.uniform(size=(30, 250)) > 0.5).astype(float)
        trees = train_pct(view, targets, TreeParams(num_target_batch=100))
        assert len(trees) == 3

    def test_max_depth(self):
        x = np.arange(32.0)
        tree = train_pct(numeric_view('V1', x), x % 2, TreeParams(max_depth=2))[0]
        assert max(leaf.depth for leaf in tree.leaves()) <= 2

    def test_min_leaf(self):
        x = np.arange(12.0)
        y = (x == 0).astype(float)
        tree = train_pct(numeric_view('V1', x), y, TreeParams(min_leaf=3))[0]
        assert all(leaf.n_samples >= 3 for leaf in tree.leaves())

    def test_missing_values_follow_larger_branch(self):
        x = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, np.nan])
        y = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0])
        tree = train_pct(numeric_view('V1', x), y, TreeParams())[0]
        assert tree.root.missing_left
        assert 7 in tree.root.left.samples.tolist()

    def test_categorical_split(self):
        tree = PredictiveClusteringTree(TreeParams()).fit(
            np.array([[0.0], [0.0], [1.0], [1.0], [2.0], [2.0]]),
            np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            [True],
        )
        assert tree.root.split.categorical
        assert tree.root.split.level == 0

    def test_root_matches_exhaustive_search(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            x = rng.uniform(size=(20, 3)).round(2)
            y = rng.uniform(size=(20, 2))
            tree = train_pct(numeric_view('V1', x), y, TreeParams())[0]
            attribute, lo = exhaustive_root_split(x, y, 2)
            assert tree.root.split.attribute == attribute
            assert tree.root.split.gap[0] == pytest.approx(lo)

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            PredictiveClusteringTree(TreeParams()).fit(np.zeros((4, 1)), np.zeros(3), [False])


class TestExtraPct:
    @pytest.fixture
    def instance(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(size=(20, 4)).round(3)
        y = (rng.uniform(size=(20, 3)) > 0.5).astype(float)
        return numeric_view('V1', x), y

    def test_all_candidates_matches_pct(self, instance):
        view, y = instance
        plain = train_pct(view, y, TreeParams())[0]
        extra = train_extra_pct(view, y, 10_000, TreeParams(), make_rng(1, 'extra'))[0]
        assert extra.root.split.attribute == plain.root.split.attribute
        assert extra.root.split.gap == plain.root.split.gap
        lo, hi = extra.root.split.gap
        assert lo <= extra.root.split.threshold < hi

    def test_single_candidate_is_a_valid_split(self, instance):
        view, y = instance
        tree = train_extra_pct(view, y, 1, TreeParams(), make_rng(2, 'extra'))[0]
        split = tree.root.split
        candidates = enumerate_candidates(
            view.values[:, split.attribute], y, False, split.attribute, 2
        )
        assert split.gap in [c.gap for c in candidates]

    def test_same_seed_same_tree(self, instance):
        view, y = instance
        first = train_extra_pct(view, y, 2, TreeParams(), make_rng(3, 'extra'))[0]
        second = train_extra_pct(view, y, 2, TreeParams(), make_rng(3, 'extra'))[0]
        assert first.describe() == second.describe()

    def test_k_must_be_positive(self, instance):
        view, y = instance
        with pytest.raises(ValueError):
            train_extra_pct(view, y, 0, TreeParams(), make_rng(0))
