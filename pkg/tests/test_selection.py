"""Tests for greedy redescription set selection."""

import itertools

import numpy as np
import pytest

from engine.metrics import set_scores
from engine.selection import grsc
from helpers import set_red

EQUAL = [0.2] * 5
J_ONLY = [1.0, 0.0, 0.0, 0.0, 0.0]


def graded(count, n=40):
    """Redescriptions with distinct supports and J = (k + 1) / 10."""
    return [
        set_red(n, [list(range(4 * k, 4 * k + 1 + (k % 9))), range(4 * k, 4 * k + 10)])
        for k in range(count)
    ]


class TestGrsc:
    def test_small_input_returned_whole(self):
        members = graded(3)
        assert grsc(members, [EQUAL], 3)[0] == members
        assert grsc(members, [EQUAL], 10)[0] == members

    def test_redundancy_dominates(self):
        a = set_red(20, [range(10), range(10)])
        twin = set_red(20, [range(10), range(10)])
        other = set_red(20, [range(10, 18), range(10, 18)], attributes=[[1], [1]])
        chosen = grsc([a, twin, other], [EQUAL], 2)[0]
        assert other in chosen
        assert len(chosen) == 2

    def test_accuracy_weights_pick_top_by_jaccard(self):
        members = graded(8)
        chosen = grsc(members, [J_ONLY], 3)[0]
        expected = sorted(members, key=lambda m: -m.jaccard)[:3]
        assert sorted(m.jaccard for m in chosen) == sorted(m.jaccard for m in expected)

    def test_accuracy_weights_match_enumeration(self):
        members = graded(7)
        chosen = grsc(members, [J_ONLY], 3, expected_out_size=3)[0]
        best = min(
            itertools.combinations(members, 3),
            key=lambda combo: set_scores(list(combo), J_ONLY, 3, 20).total_sc,
        )
        assert set_scores(chosen, J_ONLY, 3, 20).total_sc == pytest.approx(
            set_scores(list(best), J_ONLY, 3, 20).total_sc
        )

    def test_stops_when_padding_no_longer_improves(self):
        members = [
            set_red(20, [range(5), range(5)]),
            set_red(20, [range(5, 8), range(5, 11)]),
            set_red(20, [range(12, 14), range(12, 16)]),
        ]
        chosen = grsc(members, [J_ONLY], 2, expected_out_size=1)[0]
        assert chosen == [members[0]]

    def test_one_set_per_weight_row(self):
        members = graded(6)
        sets = grsc(members, [EQUAL, J_ONLY], 2)
        assert len(sets) == 2
        assert all(len(s) <= 2 for s in sets)

    def test_greedy_beats_random_subsets(self):
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            members = []
            for _ in range(12):
                core = rng.choice(40, size=int(rng.integers(3, 15)), replace=False)
                extra = rng.choice(40, size=int(rng.integers(0, 6)), replace=False)
                attributes = [rng.integers(0, 5, size=2).tolist() for _ in range(2)]
                members.append(set_red(
                    40, [sorted(core), sorted(set(core) | set(extra))], attributes,
                ))
            chosen = grsc(members, [EQUAL], 4)[0]
            greedy = set_scores(chosen, EQUAL, 200, 20).total_sc
            random_totals = [
                set_scores(
                    [members[i] for i in rng.choice(12, size=4, replace=False)],
                    EQUAL, 200, 20,
                ).total_sc
                for _ in range(100)
            ]
            wins += greedy <= np.mean(random_totals)
        assert wins >= 9
