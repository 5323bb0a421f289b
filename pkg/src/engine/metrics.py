#!/usr/bin/env python3
"""
Redescribe Metrics
Accuracy, significance, redundancy and complexity of redescriptions and sets

Per-redescription scores live in score space, where 0 is best and 1 is worst:
``J_sc = 1 - J``, ``A_p_sc = p_score(p)``, ``AAJ_sc`` and ``AEJ_sc`` are the
average attribute and entity Jaccard to the other set members and ``comp_sc``
is the complexity. A set is scored by the weighted sum of the per-measure
means; the padded ("underlined") variants treat a set smaller than the
expected output size as if the gap were filled with worst-scoring members.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import gammaln, logsumexp

if TYPE_CHECKING:
    from engine.redescription import Redescription
    from utils.dataset import Dataset

MIN_PVALUE = 1e-17
PVALUE_DECADES = 17.0
MEASURES = ('j_sc', 'a_p_sc', 'aaj_sc', 'aej_sc', 'comp_sc')

logger = logging.getLogger(__name__)


def jaccard(supports: Sequence[np.ndarray]) -> float:
    """|intersection| / |union| of boolean entity masks; 0 for an empty union."""
    inter = np.count_nonzero(np.logical_and.reduce(supports))
    union = np.count_nonzero(np.logical_or.reduce(supports))
    if union == 0:
        logger.debug("Jaccard of sets with empty union, defined as 0")
        return 0.0
    return inter / union


def binomial_log_pmf(n: int, k: np.ndarray, p: float) -> np.ndarray:
    return (
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )


def p_value(
    n_entities: int, query_support_sizes: Sequence[int], support_size: int
) -> float:
    """Upper binomial tail P(X >= support_size), X ~ Bin(|E|, prod |supp(q)|/|E|).

    The tail is summed from whichever side holds less mass, in log space.
    """
    n = int(n_entities)
    s = int(support_size)
    if s <= 0 or n <= 0:
        return 1.0
    prob = 1.0
    for size in query_support_sizes:
        prob *= size / n
    if prob >= 1.0:
        return 1.0
    if prob <= 0.0 or s > n:
        return 0.0
    if s > n * prob:
        k = np.arange(s, n + 1)
        tail = math.exp(logsumexp(binomial_log_pmf(n, k, prob)))
    else:
        k = np.arange(0, s)
        tail = 1.0 - math.exp(logsumexp(binomial_log_pmf(n, k, prob)))
    return min(max(tail, 0.0), 1.0)


def p_score(p: float) -> float:
    """log10(p)/17 + 1 with p clamped to [1e-17, 1]."""
    p = min(max(p, MIN_PVALUE), 1.0)
    return min(max(math.log10(p) / PVALUE_DECADES + 1.0, 0.0), 1.0)


def attribute_set(red: 'Redescription') -> set:
    return set(red.attributes())


def attribute_jaccard(r1: 'Redescription', r2: 'Redescription') -> float:
    a1, a2 = attribute_set(r1), attribute_set(r2)
    union = a1 | a2
    if not union:
        logger.debug("Attribute Jaccard of two attribute-free redescriptions")
        return 0.0
    return len(a1 & a2) / len(union)


def entity_jaccard(r1: 'Redescription', r2: 'Redescription') -> float:
    return jaccard([r1.support, r2.support])


def _others(red: 'Redescription', members: Sequence['Redescription']) -> list:
    others = [m for m in members if m is not red]
    if len(others) == len(members):
        raise ValueError("Redescription is not a member of the set")
    return others


def avg_aj(red: 'Redescription', members: Sequence['Redescription']) -> float:
    """Mean attribute Jaccard of ``red`` to the other members; 0 when alone."""
    others = _others(red, members)
    if not others:
        return 0.0
    return float(np.mean([attribute_jaccard(red, o) for o in others]))


def avg_ej(red: 'Redescription', members: Sequence['Redescription']) -> float:
    """Mean entity Jaccard of ``red`` to the other members; 0 when alone."""
    others = _others(red, members)
    if not others:
        return 0.0
    return float(np.mean([entity_jaccard(red, o) for o in others]))


def complexity(red: 'Redescription', k_c: int) -> float:
    """Attribute occurrences over k_c, capped at 1."""
    return min(len(red.attributes()) / k_c, 1.0)


def pairwise_entity_jaccard(members: Sequence['Redescription']) -> np.ndarray:
    if not members:
        return np.zeros((0, 0))
    matrix = np.vstack([m.support for m in members]).astype(np.int64)
    inter = matrix @ matrix.T
    sizes = matrix.sum(axis=1)
    union = sizes[:, None] + sizes[None, :] - inter
    with np.errstate(invalid='ignore', divide='ignore'):
        result = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
    return result


def pairwise_attribute_jaccard(members: Sequence['Redescription']) -> np.ndarray:
    if not members:
        return np.zeros((0, 0))
    universe = sorted(set().union(*(attribute_set(m) for m in members)))
    column = {a: j for j, a in enumerate(universe)}
    matrix = np.zeros((len(members), max(len(universe), 1)), dtype=np.int64)
    for i, m in enumerate(members):
        for a in attribute_set(m):
            matrix[i, column[a]] = 1
    inter = matrix @ matrix.T
    sizes = matrix.sum(axis=1)
    union = sizes[:, None] + sizes[None, :] - inter
    return np.where(union > 0, inter / np.maximum(union, 1), 0.0)


def _mean_off_diagonal(matrix: np.ndarray) -> np.ndarray:
    m = matrix.shape[0]
    if m < 2:
        return np.zeros(m)
    return (matrix.sum(axis=1) - np.diag(matrix)) / (m - 1)


def score_matrix(members: Sequence['Redescription'], k_c: int) -> np.ndarray:
    """Per-member scores, one row per member in MEASURES order."""
    if not members:
        return np.zeros((0, len(MEASURES)))
    return np.column_stack([
        [1.0 - m.jaccard for m in members],
        [p_score(m.pvalue) for m in members],
        _mean_off_diagonal(pairwise_attribute_jaccard(members)),
        _mean_off_diagonal(pairwise_entity_jaccard(members)),
        [complexity(m, k_c) for m in members],
    ])


def underlined(score_sum: float, size: int, expected_out_size: int,
               worst: float = 1.0) -> float:
    """Mean padded up to ``expected_out_size`` members scoring ``worst``."""
    if size >= expected_out_size:
        return score_sum / size
    return (score_sum + (expected_out_size - size) * worst) / expected_out_size


@dataclass
class SetScores:
    size: int
    j_sc: float
    a_p_sc: float
    aaj_sc: float
    aej_sc: float
    comp_sc: float
    total_sc: float
    u_j_sc: float
    u_a_p_sc: float
    u_aaj_sc: float
    u_aej_sc: float
    u_comp_sc: float
    u_total_sc: float
    avg_jaccard: float
    u_avg_jaccard: float
    entity_coverage: float
    attribute_coverage: float
    degenerate: bool = False

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def set_scores(
    members: Sequence['Redescription'],
    weights: Sequence[float],
    expected_out_size: int,
    k_c: int,
    dataset: Optional['Dataset'] = None,
) -> SetScores:
    """Plain and padded set scores, their weighted totals and coverage."""
    w = np.asarray(weights, dtype=float)
    size = len(members)
    if size == 0:
        logger.debug("Scoring an empty redescription set")
        nan = float('nan')
        return SetScores(
            0, nan, nan, nan, nan, nan, nan, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
            nan, 0.0, 0.0, 0.0, degenerate=True,
        )
    scores = score_matrix(members, k_c)
    sums = scores.sum(axis=0)
    plain = sums / size
    padded = np.array([underlined(s, size, expected_out_size) for s in sums])
    jaccards = [m.jaccard for m in members]

    covered = np.logical_or.reduce([m.support for m in members])
    entity_coverage = float(np.count_nonzero(covered)) / len(covered)
    attribute_coverage = float('nan')
    if dataset is not None:
        used = set().union(*(attribute_set(m) for m in members))
        total = sum(v.n_attributes for v in dataset.views)
        attribute_coverage = len(used) / total if total else 0.0

    return SetScores(
        size=size,
        j_sc=float(plain[0]),
        a_p_sc=float(plain[1]),
        aaj_sc=float(plain[2]),
        aej_sc=float(plain[3]),
        comp_sc=float(plain[4]),
        total_sc=float(w @ plain),
        u_j_sc=float(padded[0]),
        u_a_p_sc=float(padded[1]),
        u_aaj_sc=float(padded[2]),
        u_aej_sc=float(padded[3]),
        u_comp_sc=float(padded[4]),
        u_total_sc=float(w @ padded),
        avg_jaccard=float(np.mean(jaccards)),
        u_avg_jaccard=underlined(float(np.sum(jaccards)), size, expected_out_size, 0.0),
        entity_coverage=entity_coverage,
        attribute_coverage=attribute_coverage,
        degenerate=size == 1,
    )


def metric_table(
    members: Sequence['Redescription'],
    weights: Sequence[float],
    expected_out_size: int,
    k_c: int,
    dataset: 'Dataset',
    set_label: str = 'set',
) -> pd.DataFrame:
    """One row per redescription followed by one summary row for the set."""
    from engine.redescription import format_redescription

    scores = score_matrix(members, k_c)
    rows: List[Dict[str, object]] = []
    for i, m in enumerate(members):
        row: Dict[str, object] = {
            'set': set_label,
            'row': str(i),
            'queries': format_redescription(m, dataset),
            'support_size': m.support_size,
            'jaccard': m.jaccard,
            'pvalue': m.pvalue,
        }
        row.update({name: float(scores[i, j]) for j, name in enumerate(MEASURES)})
        rows.append(row)
    summary = set_scores(members, weights, expected_out_size, k_c, dataset)
    summary_row: Dict[str, object] = {'set': set_label, 'row': 'summary'}
    summary_row.update(summary.as_dict())
    rows.append(summary_row)
    return pd.DataFrame(rows)


def individual_score(red: 'Redescription', weights: Sequence[float], k_c: int) -> float:
    """Weighted score of a redescription on its own (no redundancy terms)."""
    w = weights
    return (
        w[0] * (1.0 - red.jaccard)
        + w[1] * p_score(red.pvalue)
        + w[4] * complexity(red, k_c)
    )


def elem_jaccard_to_all(red: 'Redescription', support_matrix: np.ndarray) -> np.ndarray:
    """Entity Jaccard of ``red`` to each row of a boolean support matrix."""
    if support_matrix.shape[0] == 0:
        return np.zeros(0)
    inter = support_matrix @ red.support.astype(np.int64)
    sizes = support_matrix.sum(axis=1)
    union = sizes + red.support_size - inter
    return np.where(union > 0, inter / np.maximum(union, 1), 0.0)
