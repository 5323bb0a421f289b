"""Tests for the naive baseline: pairwise mining folded with joins."""

import numpy as np
import pytest

from engine.naive import filter_redundant, oplus, otimes, run_naive
from helpers import make_dataset, set_red

N = 10


class TestOplus:
    def test_disjoint_views_give_one_join(self):
        r1 = set_red(N, [[0, 1, 2], [0, 1, 2], None, None])
        r2 = set_red(N, [None, None, [1, 2], [1, 2, 3]])
        joined = oplus(r1, r2)
        assert len(joined) == 1
        assert joined[0].is_complete
        assert np.flatnonzero(joined[0].support).tolist() == [1, 2]

    def test_one_shared_view_gives_two_joins(self):
        r1 = set_red(N, [[0, 1], [0, 1, 2], None, None])
        r2 = set_red(N, [None, [1, 2], [1, 2], None])
        first, second = oplus(r1, r2)
        assert first.views == second.views == (0, 1, 2)
        assert first.queries[1] is r1.queries[1]
        assert second.queries[1] is r2.queries[1]
        assert first.support_size == 1
        assert second.support_size == 1

    def test_contained_views_give_nothing(self):
        r1 = set_red(N, [[0, 1], [0, 1], [0, 1], None])
        r2 = set_red(N, [None, [0, 1], [0, 1], None])
        assert oplus(r1, r2) == []

    def test_second_operand_needs_two_views(self):
        r1 = set_red(N, [[0, 1], [0, 1], None, None])
        r2 = set_red(N, [None, [0], [0], [0]])
        with pytest.raises(ValueError, match='exactly two views'):
            oplus(r1, r2)


class TestOtimes:
    def test_keeps_first_and_adds_joins(self):
        first = [set_red(N, [[0, 1], [0, 1], None])]
        second = [set_red(N, [None, [0, 1], [0, 1, 2]])]
        result = otimes(first, second)
        assert result[0] is first[0]
        assert len(result) == 3
        assert all(red.is_complete for red in result[1:])

    def test_empty_second_operand(self):
        first = [set_red(N, [[0, 1], [0, 1], None])]
        assert otimes(first, []) == first

    def test_early_validation_needs_constraints(self):
        first = [set_red(N, [[0, 1], [0, 1], None])]
        second = [set_red(N, [None, [0, 1], [0, 1]])]
        with pytest.raises(ValueError, match='needs constraints'):
            otimes(first, second, early_validation=True)

    def test_early_validation_keeps_every_valid_join(self, relaxed):
        rng = np.random.default_rng(8)

        def random_red(views):
            sets = [None, None, None]
            for k in views:
                sets[k] = np.flatnonzero(rng.random(N) < 0.6).tolist() or [0]
            return set_red(N, sets)

        first = [random_red((0, 1)) for _ in range(12)]
        second = [random_red((0, 2)) for _ in range(12)] + [random_red((1, 2)) for _ in range(6)]

        def valid_keys(members):
            return sorted(
                r.key() for r in members
                if r.is_complete and r.jaccard >= relaxed.min_jaccard
                and r.support_size >= relaxed.min_support
            )

        plain = otimes(first, second)
        early = otimes(first, second, relaxed, early_validation=True)
        assert len(early) <= len(plain)
        assert valid_keys(early) == valid_keys(plain)


class TestFilterRedundant:
    def test_identical_support_keeps_the_more_accurate(self):
        weak = set_red(N, [[0, 1, 2], [0, 1, 2, 3, 4]])
        strong = set_red(N, [[0, 1, 2], [0, 1, 2, 3]])
        assert weak.jaccard < strong.jaccard
        assert filter_redundant([weak, strong], 0.95) == [strong]

    def test_overlap_below_perc_is_kept(self):
        a = set_red(N, [range(10), range(10)])
        b = set_red(N, [range(9), range(9)])
        # entity Jaccard 0.9
        assert len(filter_redundant([a, b], 0.95)) == 2
        assert filter_redundant([a, b], 0.85) == [a]

    def test_perc_range(self):
        with pytest.raises(ValueError):
            filter_redundant([], 0.0)


class TestRunNaive:
    def test_single_view_is_rejected(self, planted_constraints, quick_settings):
        with pytest.raises(ValueError, match='at least 2 views'):
            run_naive(make_dataset(np.arange(5.0)), planted_constraints, quick_settings)

    def test_two_views_is_pairwise_mining(self, planted_constraints, quick_settings):
        data = np.arange(20.0)
        dataset = make_dataset(data, data)
        result = run_naive(dataset, planted_constraints, quick_settings)
        assert result.pairs == [(0, 1)]
        assert result.fold_steps == []
        assert all(red.n_views == 2 for red in result.members)

    def test_three_views_fold_twice(
        self, planted_three_view, planted_constraints, quick_settings
    ):
        dataset, _ = planted_three_view
        result = run_naive(dataset, planted_constraints, quick_settings)
        assert result.pairs == [(0, 1), (0, 2), (1, 2)]
        assert len(result.pairwise_sizes) == 3
        if any(result.pairwise_sizes):
            assert [s['step'] for s in result.fold_steps] == [1, 2]
        assert all(red.is_complete for red in result.members)
        assert result.peak >= max(result.pairwise_sizes)
        stats = result.stats()
        assert stats['output'] == len(result.members)

    def test_early_validation_does_not_change_the_output(
        self, planted_three_view, planted_constraints, quick_settings
    ):
        dataset, _ = planted_three_view
        early = run_naive(dataset, planted_constraints, quick_settings)
        late = run_naive(
            dataset, planted_constraints, quick_settings, early_validation=False
        )
        assert [r.key() for r in early.members] == [r.key() for r in late.members]
        assert late.peak >= early.peak
