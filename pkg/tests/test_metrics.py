"""Tests for accuracy, significance, redundancy and set scores."""

import math

import numpy as np
import pytest

from engine.metrics import (
    attribute_jaccard, avg_aj, avg_ej, complexity, entity_jaccard,
    jaccard, metric_table, p_score, p_value, set_scores, underlined,
)
from helpers import mask, set_red

EQUAL = [0.2] * 5


class TestJaccard:
    @pytest.mark.parametrize('sets, expected', [
        ([[1, 2, 3], [1, 2, 3], [1, 2, 3]], 1.0),
        ([[1, 2], [3, 4]], 0.0),
        ([[1, 2, 3], [2, 3, 4]], 0.5),
    ])
    def test_examples(self, sets, expected):
        assert jaccard([mask(6, s) for s in sets]) == pytest.approx(expected)

    def test_empty_union(self):
        assert jaccard([mask(4, []), mask(4, [])]) == 0.0


class TestPValue:
    def test_binomial_tail(self):
        assert p_value(4, [2, 2], 2) == pytest.approx(0.26171875)

    def test_zero_support(self):
        assert p_value(4, [2, 2], 0) == 1.0

    def test_full_supports(self):
        assert p_value(4, [4, 4], 4) == 1.0

    def test_matches_direct_sum(self):
        n, sizes, s = 30, [12, 9], 8
        prob = (12 / 30) * (9 / 30)
        expected = sum(
            math.comb(n, k) * prob ** k * (1 - prob) ** (n - k) for k in range(s, n + 1)
        )
        assert p_value(n, sizes, s) == pytest.approx(expected, rel=1e-9)

    def test_lower_branch(self):
        n, sizes, s = 30, [20, 25], 5
        prob = (20 / 30) * (25 / 30)
        expected = sum(
            math.comb(n, k) * prob ** k * (1 - prob) ** (n - k) for k in range(s, n + 1)
        )
        assert p_value(n, sizes, s) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize('p, expected', [
        (1.0, 1.0), (1e-17, 0.0), (10 ** -8.5, 0.5), (0.0, 0.0),
    ])
    def test_p_score(self, p, expected):
        assert p_score(p) == pytest.approx(expected)


class TestRedundancy:
    def test_attribute_jaccard(self):
        a = set_red(6, [[1], [1]], attributes=[[0, 1], [0]])
        b = set_red(6, [[1], [1]], attributes=[[0, 1], [0]])
        c = set_red(6, [[1], [1]], attributes=[[1], [0]])
        d = set_red(6, [[1], [1]], attributes=[[2], [1]])
        assert attribute_jaccard(a, b) == 1.0
        assert attribute_jaccard(c, set_red(6, [[1], [1]], attributes=[[0], [0]])) == (
            pytest.approx(1 / 3)
        )
        assert attribute_jaccard(c, d) == 0.0

    def test_entity_jaccard(self):
        a = set_red(6, [[1, 2], [1, 2]])
        assert entity_jaccard(a, set_red(6, [[1, 2], [1, 2]])) == 1.0

    def test_identical_pair(self):
        a = set_red(6, [[1, 2], [1, 2]])
        b = set_red(6, [[1, 2], [1, 2]])
        assert avg_aj(a, [a, b]) == 1.0
        assert avg_ej(a, [a, b]) == 1.0

    def test_average_entity_jaccard(self):
        r1 = set_red(8, [[0, 1, 2], [0, 1, 2]])
        r2 = set_red(8, [[1, 2, 3], [1, 2, 3]])
        r3 = set_red(8, [[5, 6], [5, 6]])
        assert avg_ej(r1, [r1, r2, r3]) == pytest.approx(0.25)

    def test_alone_in_set(self):
        a = set_red(6, [[1, 2], [1, 2]])
        assert avg_aj(a, [a]) == 0.0
        assert avg_ej(a, [a]) == 0.0

    def test_not_a_member(self):
        a = set_red(6, [[1, 2], [1, 2]])
        with pytest.raises(ValueError):
            avg_ej(a, [set_red(6, [[1], [1]])])


class TestRandomInstances:
    """Metrics against brute-force set arithmetic and an exact integer binomial tail."""

    @staticmethod
    def random_red(rng, n, n_views):
        sets, attributes = [], []
        for _ in range(n_views):
            drawn = rng.integers(0, n, size=rng.integers(0, n + 1))
            sets.append(set(drawn.tolist()))
            attributes.append(rng.integers(0, 4, size=rng.integers(1, 4)).tolist())
        red = set_red(n, [sorted(s) for s in sets], attributes=attributes)
        return red, sets, attributes

    @staticmethod
    def ratio(inter, union):
        return len(inter) / len(union) if union else 0.0

    @pytest.mark.parametrize('seed', range(5))
    def test_set_measures(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(200):
            n, n_views = int(rng.integers(1, 30)), int(rng.integers(2, 4))
            r1, sets1, attrs1 = self.random_red(rng, n, n_views)
            r2, sets2, _ = self.random_red(rng, n, n_views)
            supp1, supp2 = set.intersection(*sets1), set.intersection(*sets2)
            assert r1.jaccard == self.ratio(supp1, set.union(*sets1))
            assert entity_jaccard(r1, r2) == self.ratio(supp1 & supp2, supp1 | supp2)
            pairs1 = set(r1.attributes())
            pairs2 = set(r2.attributes())
            assert pairs1 == {(k, a) for k, attrs in enumerate(attrs1) for a in attrs}
            assert attribute_jaccard(r1, r2) == self.ratio(pairs1 & pairs2, pairs1 | pairs2)
            occurrences = sum(len(attrs) for attrs in attrs1)
            assert complexity(r1, 5) == min(occurrences / 5, 1.0)

    @pytest.mark.parametrize('seed', range(3))
    def test_p_value_matches_exact_tail(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(100):
            n = int(rng.integers(1, 201))
            sizes = rng.integers(0, n + 1, size=int(rng.integers(2, 4))).tolist()
            support = int(rng.integers(0, min(sizes) + 1))
            hits, total = math.prod(sizes), n ** len(sizes)
            numerator = sum(
                math.comb(n, k) * hits ** k * (total - hits) ** (n - k)
                for k in range(support, n + 1)
            )
            expected = numerator / total ** n
            computed = p_value(n, sizes, support)
            assert computed == pytest.approx(expected, rel=1e-10, abs=1e-300)
            assert p_score(computed) == pytest.approx(
                min(max(math.log10(max(expected, 1e-17)) / 17 + 1, 0.0), 1.0), abs=1e-9
            )


class TestComplexity:
    def test_capped_at_one(self):
        red = set_red(6, [[1], [1]], attributes=[range(10), range(10)])
        assert complexity(red, 20) == 1.0
        assert complexity(red, 5) == 1.0

    def test_fraction(self):
        red = set_red(6, [[1], [1]], attributes=[range(5), range(5)])
        assert complexity(red, 20) == 0.5


class TestSetScores:
    def test_underlined_padding(self):
        assert underlined(20.0, 100, 200) == pytest.approx(0.6)
        assert underlined(20.0, 200, 200) == pytest.approx(0.1)

    def test_empty_set(self):
        scores = set_scores([], EQUAL, 10, 20)
        assert scores.degenerate
        assert scores.u_total_sc == 1.0
        assert scores.u_j_sc == 1.0
        assert math.isnan(scores.j_sc)

    def test_no_padding_at_expected_size(self):
        members = [set_red(10, [[1, 2, 3], [1, 2]]), set_red(10, [[5, 6], [5, 6, 7]])]
        scores = set_scores(members, EQUAL, 2, 20)
        for name in ('j_sc', 'a_p_sc', 'aaj_sc', 'aej_sc', 'comp_sc', 'total_sc'):
            assert getattr(scores, f"u_{name}") == pytest.approx(getattr(scores, name))

    def test_weighted_total(self):
        members = [set_red(10, [[1, 2, 3], [1, 2]]), set_red(10, [[5, 6], [5, 6, 7]])]
        scores = set_scores(members, [1.0, 0, 0, 0, 0], 2, 20)
        assert scores.total_sc == pytest.approx(scores.j_sc)
        assert scores.j_sc == pytest.approx(1 - np.mean([2 / 3, 2 / 3]))

    def test_coverage(self, table1_dataset, fixtures_dir):
        from engine.redescription import load_redescriptions

        members = load_redescriptions(
            fixtures_dir / 'table1_redescription.yaml', table1_dataset
        )
        scores = set_scores(members, EQUAL, 1, 20, table1_dataset)
        assert scores.entity_coverage == 1.0
        assert scores.attribute_coverage == 1.0
        assert scores.j_sc == 0.0
        assert scores.degenerate

    def test_metric_table(self, table1_dataset, fixtures_dir):
        from engine.redescription import load_redescriptions

        members = load_redescriptions(
            fixtures_dir / 'table1_redescription.yaml', table1_dataset
        )
        table = metric_table(members, EQUAL, 1, 20, table1_dataset)
        assert list(table['row']) == ['0', 'summary']
        assert table.loc[0, 'jaccard'] == 1.0
