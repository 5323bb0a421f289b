"""Tests for the multi-view framework: pairwise mining plus completion."""

import dataclasses

import numpy as np
import pytest

from engine.framework import MultiViewMiner, deduplicate, run_framework, select_view_pairs
from engine.metrics import jaccard
from engine.naive import run_naive
from engine.redescription import from_parts
from utils.config_parser import Constraints, Settings
from utils.synthetic import SyntheticSpec, generate_synthetic
from helpers import make_dataset, set_red

PLANTED = Constraints(
    min_jaccard=0.6,
    min_jaccard_refine=0.5,
    max_pvalue=0.01,
    min_support=5,
    work_set_size=50,
    max_expansion_size=120,
)
QUICK = Settings(
    max_iter=2, output_set_size=20, expected_out_size=20, rng_seed=5, max_depth=1,
)


def best_block_match(members, blocks, n):
    return max(
        (jaccard([m.support, b.mask(n)]) for m in members for b in blocks),
        default=0.0,
    )


@pytest.fixture(scope='module')
def three_view_run(planted_three_view):
    dataset, blocks = planted_three_view
    sizes = []
    result = run_framework(
        dataset, PLANTED, QUICK, monitor=lambda event, size: sizes.append(size)
    )
    return dataset, blocks, result, sizes


class TestViewPairs:
    def test_all_pairs_by_default(self):
        assert select_view_pairs(3, None, 0) == [(0, 1), (0, 2), (1, 2)]

    def test_sampled_pairs_are_sorted_and_seeded(self):
        first = select_view_pairs(5, 3, seed=11)
        assert len(first) == 3
        assert first == sorted(first)
        assert len(set(first)) == 3
        assert first == select_view_pairs(5, 3, seed=11)

    def test_count_above_total_keeps_all(self):
        assert len(select_view_pairs(4, 10, 0)) == 6


class TestDeduplicate:
    def test_most_accurate_wins_in_first_position(self):
        weak = set_red(10, [[0, 1, 2], [0, 1, 2, 3]])
        other = set_red(10, [[5, 6], [5, 6]])
        strong = set_red(10, [[0, 1, 2], [0, 1, 2]], attributes=[[1], [1]])
        kept = deduplicate([weak, other, strong])
        assert kept == [strong, other]

    def test_same_support_on_other_views_is_kept(self):
        a = set_red(10, [[0, 1], [0, 1], None])
        b = set_red(10, [[0, 1], None, [0, 1]])
        assert len(deduplicate([a, b])) == 2


class TestMultiViewMiner:
    def test_single_view_is_rejected(self):
        with pytest.raises(ValueError, match='at least 2 views'):
            MultiViewMiner(make_dataset(np.arange(5.0)), PLANTED, QUICK, seed=0)

    def test_two_views_reduce_to_pairwise_mining(self):
        spec = SyntheticSpec(
            n_entities=120, n_views=2, attrs_per_view=4,
            block_sizes=[25, 25, 25], noise=0.0, seed=3,
        )
        dataset, blocks = generate_synthetic(spec)
        result = run_framework(dataset, PLANTED, QUICK)
        assert result.pairs == [(0, 1)]
        assert not result.is_empty
        assert all(red.n_views == 2 for red in result.complete)
        assert not [s for s in result.stats if s['stage'] == 'complete']
        assert best_block_match(result.complete, blocks, 120) >= 0.8

    def test_three_views_recover_a_block(self, three_view_run):
        dataset, blocks, result, _ = three_view_run
        assert not result.is_empty
        assert all(red.is_complete for red in result.complete)
        assert best_block_match(result.complete, blocks, dataset.n_entities) >= 0.8

    def test_output_meets_constraints(self, three_view_run):
        dataset, _, result, _ = three_view_run
        resolved = PLANTED.resolve(dataset.n_entities)
        assert len(result.sets) == len(QUICK.weights)
        for members in result.sets:
            assert len(members) <= QUICK.output_set_size
            for red in members:
                assert resolved.accepts(red.jaccard, red.pvalue, red.support_size)

    def test_store_never_exceeds_expansion_size(self, three_view_run):
        _, _, result, sizes = three_view_run
        assert sizes
        assert max(sizes) <= PLANTED.max_expansion_size
        assert result.store_peak <= PLANTED.max_expansion_size

    def test_every_stage_is_recorded(self, three_view_run):
        _, _, result, _ = three_view_run
        stages = {s['stage'] for s in result.stats}
        assert {'pair', 'complete', 'normalize', 'finish'} <= stages

    def test_same_seed_same_output(self, three_view_run):
        dataset, _, result, _ = three_view_run
        again = run_framework(dataset, PLANTED, QUICK, n_jobs=2)
        assert [r.key() for r in again.complete] == [r.key() for r in result.complete]

    def test_view_pair_projection(self, planted_three_view):
        dataset, _ = planted_three_view
        settings = dataclasses.replace(QUICK, view_pairs=1)
        result = run_framework(dataset, PLANTED, settings)
        assert len(result.pairs) == 1
        completions = [s for s in result.stats if s['stage'] == 'complete']
        assert len(completions) <= 1


SWEEP_SEEDS = (1, 2, 3, 4)


def drop_query(red, view):
    queries = list(red.queries)
    supports = list(red.query_supports)
    queries[view] = supports[view] = None
    return from_parts(queries, supports)


@pytest.fixture(scope='module')
def benchmark_sweep():
    """Framework and naive runs on the noisy 200-entity benchmark, one per seed."""
    runs = []
    for seed in SWEEP_SEEDS:
        spec = SyntheticSpec(
            n_entities=200, n_views=3, attrs_per_view=4,
            block_sizes=[30, 30, 30], noise=0.05, seed=seed,
        )
        dataset, blocks = generate_synthetic(spec)
        sizes = []
        result = run_framework(
            dataset, PLANTED, QUICK, seed=seed,
            monitor=lambda event, size, sizes=sizes: sizes.append(size),
        )
        normalized = [s for s in result.stats if s['stage'] == 'normalize']
        naive = run_naive(dataset, PLANTED, QUICK, seed=seed)
        runs.append((dataset, blocks, result, sizes, normalized, naive))
    return runs


class TestBenchmarkSweep:
    def test_dropping_a_query_never_lowers_accuracy(self, benchmark_sweep):
        checked = 0
        for _, _, result, _, _, _ in benchmark_sweep:
            for red in result.complete:
                for view in red.views:
                    assert drop_query(red, view).jaccard >= red.jaccard - 1e-12
                    checked += 1
        assert checked > 0

    def test_memory_stays_within_bounds(self, benchmark_sweep):
        threshold = PLANTED.resolve(200).threshold
        assert threshold == 85
        for _, _, result, sizes, normalized, _ in benchmark_sweep:
            assert max(sizes) <= PLANTED.max_expansion_size
            assert normalized
            for step in normalized:
                assert step['after'] <= threshold

    def test_framework_peak_below_naive_candidates(self, benchmark_sweep):
        below = sum(
            result.store_peak <= naive.peak
            for _, _, result, _, _, naive in benchmark_sweep
        )
        assert below >= len(SWEEP_SEEDS) - 1

    def test_both_paths_recover_a_planted_block(self, benchmark_sweep):
        framework_hits = naive_hits = 0
        for dataset, blocks, result, _, _, naive in benchmark_sweep:
            n = dataset.n_entities
            framework_hits += best_block_match(result.complete, blocks, n) >= 0.8
            naive_hits += best_block_match(naive.members, blocks, n) >= 0.8
        assert framework_hits >= len(SWEEP_SEEDS) - 1
        assert naive_hits >= len(SWEEP_SEEDS) - 1
