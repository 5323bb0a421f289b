#!/usr/bin/env python3
"""
Redescribe GCLUS-RM
Two-view redescription mining by alternating multi-target tree induction

The miner first learns, on each view, rules that tell real entities from
artificial ones (each artificial column is a permutation of a real column).
Every following iteration turns the rules found on one view into 0/1 target
columns for the other view, learns matching rules there, and pairs the rules
marked in the last two iterations into redescriptions. The redescription
list is bounded; when it is full a new redescription replaces the worst
incomplete member it beats.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from engine.query import conjoin, disjoin, negate
from engine.redescription import (
    GENERATING, SUPPLEMENTING, Redescription, Rule, from_parts,
)
from engine.store import RedescriptionStore
from trees.forest import ForestSpec, train_forest
from trees.pct import TreeParams
from trees.rules import extract_rules, merge_rules
from utils.config_parser import Constraints, Settings
from utils.dataset import Dataset, View
from utils.seeding import child_seed, make_rng
from utils.tracing import OfflineTracer, Tracer

JACCARD_EPSILON = 1e-12
MAX_DISJUNCTIVE_PAIRS = 50

logger = logging.getLogger(__name__)


def make_initial_task(view: View, rng: np.random.Generator) -> Tuple[View, np.ndarray]:
    """Original rows plus one artificial row per entity; target 1 marks originals."""
    n, m = view.values.shape
    artificial = np.empty_like(view.values)
    for j in range(m):
        artificial[:, j] = rng.permutation(view.values[:, j])
    augmented = View(view.name, view.attributes, np.vstack([view.values, artificial]))
    target = np.concatenate([np.ones(n), np.zeros(n)])
    return augmented, target


def clustering_targets(view: View) -> np.ndarray:
    """Standardised numeric columns and level indicators of ``view``.

    The initial trees cluster on these next to the label: an artificial column
    holds the same values as its original, so no split reduces the label variance.
    """
    columns = []
    for j, attribute in enumerate(view.attributes):
        column = view.values[:, j]
        if not attribute.is_numeric:
            columns.extend(
                (column == code).astype(float) for code in range(len(attribute.levels))
            )
            continue
        present = ~np.isnan(column)
        if present.sum() < 2:
            continue
        std = float(column[present].std())
        if std == 0.0:
            continue
        scaled = (column - column[present].mean()) / std
        columns.append(np.where(present, scaled, 0.0))
    if not columns:
        return np.zeros((view.values.shape[0], 0))
    return np.column_stack(columns)


def construct_targets(rules: Sequence[Rule]) -> np.ndarray:
    """One 0/1 column per rule: 1.0 where the entity is in the rule's support."""
    if not rules:
        raise ValueError("Cannot construct targets from an empty rule set")
    return np.column_stack([r.support.astype(float) for r in rules])


def _stack(rules: Sequence[Rule]) -> np.ndarray:
    return np.vstack([r.support for r in rules]).astype(np.int64)


def _combinations(allow_not: bool) -> List[Tuple[bool, bool]]:
    combos = [(False, False)]
    if allow_not:
        combos += [(False, True), (True, False), (True, True)]
    return combos


def _pair_jaccards(
    a: np.ndarray, b: np.ndarray, n: int, negate_a: bool, negate_b: bool
) -> Tuple[np.ndarray, np.ndarray]:
    """Intersection sizes and Jaccard of every (rule_a, rule_b) pair."""
    inter = a @ b.T
    size_a = a.sum(axis=1)[:, None]
    size_b = b.sum(axis=1)[None, :]
    if negate_a and negate_b:
        inter = n - size_a - size_b + inter
    elif negate_a:
        inter = size_b - inter
    elif negate_b:
        inter = size_a - inter
    if negate_a:
        size_a = n - size_a
    if negate_b:
        size_b = n - size_b
    union = size_a + size_b - inter
    jac = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
    return inter, jac


def _pair_redescription(
    rule_a: Rule, rule_b: Rule, n_views: int, negate_a: bool, negate_b: bool
) -> Redescription:
    queries: List = [None] * n_views
    supports: List = [None] * n_views
    queries[rule_a.view] = negate(rule_a.query) if negate_a else rule_a.query
    supports[rule_a.view] = ~rule_a.support if negate_a else rule_a.support
    queries[rule_b.view] = negate(rule_b.query) if negate_b else rule_b.query
    supports[rule_b.view] = ~rule_b.support if negate_b else rule_b.support
    return from_parts(queries, supports)


def candidate_pairs(
    marked_i: Sequence[Rule],
    marked_j: Sequence[Rule],
    n_views: int,
    constraints: Constraints,
    min_jaccard: float,
) -> List[Tuple[Redescription, Tuple[int, int, bool, bool]]]:
    """Two-query redescriptions with J >= min_jaccard and support in range."""
    if not marked_i or not marked_j:
        return []
    a, b = _stack(marked_i), _stack(marked_j)
    n = a.shape[1]
    upper = constraints.max_support if constraints.max_support is not None else n
    found = []
    for negate_a, negate_b in _combinations(constraints.allows('not')):
        inter, jac = _pair_jaccards(a, b, n, negate_a, negate_b)
        ok = (
            (jac >= min_jaccard)
            & (inter >= constraints.min_support)
            & (inter <= upper)
        )
        for x, y in np.argwhere(ok):
            red = _pair_redescription(
                marked_i[x], marked_j[y], n_views, negate_a, negate_b
            )
            found.append((red, (int(x), int(y), negate_a, negate_b)))
    return found


def create_redescriptions(
    marked_i: Sequence[Rule],
    marked_j: Sequence[Rule],
    n_views: int,
    constraints: Constraints,
) -> List[Redescription]:
    """Every operator combination of marked rule pairs that meets the constraints."""
    return [
        red
        for red, _ in candidate_pairs(
            marked_i, marked_j, n_views, constraints, constraints.min_jaccard
        )
        if constraints.accepts(red.jaccard, red.pvalue, red.support_size)
    ]


def disjunctive_candidates(
    near_misses: Sequence[Tuple[int, int]],
    marked_i: Sequence[Rule],
    marked_j: Sequence[Rule],
    n_views: int,
) -> List[Redescription]:
    """Widen one query of a near-miss pair with a same-view rule (a | a').

    The widened pair is kept only when it beats both plain pairs.
    """
    if not near_misses:
        return []
    a, b = _stack(marked_i).astype(bool), _stack(marked_j).astype(bool)
    results = []
    for x, y in near_misses[:MAX_DISJUNCTIVE_PAIRS]:
        best: Optional[Tuple[float, int, int]] = None
        for side, own, other, index, partner in (
            (0, a, b, x, y), (1, b, a, y, x)
        ):
            widened = own | own[index]
            target = other[partner]
            inter = (widened & target).sum(axis=1)
            union = (widened | target).sum(axis=1)
            jac = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
            plain_inter = (own & target).sum(axis=1)
            plain_union = (own | target).sum(axis=1)
            plain = np.where(plain_union > 0, plain_inter / np.maximum(plain_union, 1), 0.0)
            gain = jac - np.maximum(plain, plain[index])
            gain[index] = -1.0
            k = int(np.argmax(gain))
            if gain[k] > JACCARD_EPSILON and (best is None or jac[k] > best[0]):
                best = (float(jac[k]), side, k)
        if best is None:
            continue
        _, side, k = best
        rule_a, rule_b = marked_i[x], marked_j[y]
        queries: List = [None] * n_views
        supports: List = [None] * n_views
        queries[rule_a.view], supports[rule_a.view] = rule_a.query, rule_a.support
        queries[rule_b.view], supports[rule_b.view] = rule_b.query, rule_b.support
        extra = marked_i[k] if side == 0 else marked_j[k]
        base = rule_a if side == 0 else rule_b
        queries[base.view] = disjoin(base.query, extra.query)
        supports[base.view] = base.support | extra.support
        results.append(from_parts(queries, supports))
    return results


def conjunctive_refinement(
    red: Redescription, store: RedescriptionStore
) -> Optional[Redescription]:
    """Tighten ``red`` with the queries of members whose support contains it.

    Returns None when a member on the same views with the same support is at
    least as accurate as the refined redescription.
    """
    current = red
    changed = True
    while changed:
        changed = False
        for index in store.superset_indices(current.support):
            other = store[int(index)]
            common = [k for k in current.views if other.queries[k] is not None]
            if not common:
                continue
            queries = list(current.queries)
            supports = list(current.query_supports)
            for k in common:
                if queries[k] == other.queries[k]:
                    continue
                queries[k] = conjoin(queries[k], other.queries[k])
                supports[k] = supports[k] & other.query_supports[k]
            candidate = from_parts(queries, supports)
            if candidate.jaccard > current.jaccard + JACCARD_EPSILON:
                current = candidate
                changed = True
    duplicate = store.duplicate_index(current)
    if duplicate is not None and store[duplicate].jaccard >= current.jaccard:
        return None
    return current


def replace_worst(red: Redescription, store: RedescriptionStore, n_views: int) -> bool:
    """Evict the member maximising J(red) - J(R') - (1 - elemJ(red, R')).

    Only members less accurate than ``red`` and, when the data has more than
    two views, only incomplete members are eligible. Returns False (and
    discards ``red``) when no member is eligible.
    """
    if len(store) == 0:
        return store.add(red)
    jaccards = store.jaccards()
    eligible = jaccards < red.jaccard
    if n_views > 2:
        eligible &= np.array([m.n_views < n_views for m in store.members])
    if not eligible.any():
        return False
    value = red.jaccard - jaccards - (1.0 - store.elem_jaccard(red))
    value[~eligible] = -np.inf
    store.replace(int(np.argmax(value)), red)
    return True


@dataclass
class GclusState:
    rules_i: List[Rule] = field(default_factory=list)
    rules_j: List[Rule] = field(default_factory=list)
    iteration: int = 0


class GclusRM:
    """One two-view GCLUS-RM run on the view pair (view_i, view_j)."""

    def __init__(
        self,
        dataset: Dataset,
        view_i: int,
        view_j: int,
        constraints: Constraints,
        settings: Settings,
        seed: int,
        tracer: Optional[Tracer] = None,
        n_jobs: int = 1,
    ):
        self.dataset = dataset
        self.view_i = view_i
        self.view_j = view_j
        self.constraints = constraints
        self.settings = settings
        self.seed = seed
        self.tracer = tracer or OfflineTracer()
        self.n_jobs = n_jobs
        self.params = TreeParams(
            max_depth=settings.tree_depth(constraints),
            min_leaf=settings.min_leaf,
            num_target_batch=constraints.num_target_batch,
        )
        self.state = GclusState()
        self.store = RedescriptionStore(
            dataset.n_entities, constraints.max_expansion_size
        )
        self.history: List[Dict[str, int]] = []
        self.creation_index = 0
        self.logger = logging.getLogger('GclusRM')

    def _learn(
        self, view: int, targets: np.ndarray, spec: ForestSpec, seed: int,
        origin: str, iteration: int,
    ) -> List[Rule]:
        trees = train_forest(
            self.dataset.views[view], targets, spec, self.params, seed, self.n_jobs
        )
        return extract_rules(
            trees, self.dataset, view, self.constraints.max_rule_len,
            origin=origin, iteration=iteration,
        )

    def _initial_rules(self, view: int) -> List[Rule]:
        rng = make_rng(self.seed, 'init', view)
        augmented, target = make_initial_task(self.dataset.views[view], rng)
        targets = np.column_stack([target, clustering_targets(augmented)])
        trees = train_forest(
            augmented, targets, self.settings.generating_model, self.params,
            child_seed(self.seed, 'init-model', view), self.n_jobs,
        )
        return extract_rules(
            trees, self.dataset, view, self.constraints.max_rule_len,
            origin=GENERATING, iteration=0,
        )

    def _targets_from(self, rules: List[Rule], iteration: int) -> List[Rule]:
        previous = [
            r for r in rules if r.origin == GENERATING and r.iteration == iteration - 1
        ]
        return previous or [r for r in rules if r.origin == GENERATING]

    def _supplement(self, view: int, targets: np.ndarray, iteration: int) -> List[Rule]:
        spec = self.settings.supplementing_model
        if spec is None or self.constraints.num_supplement_models <= 0:
            return []
        rules: List[Rule] = []
        for s in range(self.constraints.num_supplement_models):
            seed = child_seed(self.seed, 'supplement', view, iteration, s)
            rules = merge_rules(
                rules, self._learn(view, targets, spec, seed, SUPPLEMENTING, iteration)
            )
        return rules

    def _insert(self, red: Redescription) -> str:
        duplicate = self.store.duplicate_index(red)
        if duplicate is not None:
            self.store.replace(duplicate, red)
            return 'replaced'
        if self.store.add(red):
            return 'added'
        if replace_worst(red, self.store, self.dataset.n_views):
            return 'evicted'
        return 'discarded'

    def iterate(self, iteration: int) -> Dict[str, int]:
        state = self.state
        targets_j = construct_targets(self._targets_from(state.rules_i, iteration))
        targets_i = construct_targets(self._targets_from(state.rules_j, iteration))
        model = self.settings.generating_model
        new_j = self._learn(
            self.view_j, targets_j, model,
            child_seed(self.seed, 'model', self.view_j, iteration), GENERATING, iteration,
        )
        new_i = self._learn(
            self.view_i, targets_i, model,
            child_seed(self.seed, 'model', self.view_i, iteration), GENERATING, iteration,
        )
        state.rules_i = merge_rules(state.rules_i, new_i)
        state.rules_j = merge_rules(state.rules_j, new_j)
        state.rules_i = merge_rules(
            state.rules_i, self._supplement(self.view_i, targets_i, iteration)
        )
        state.rules_j = merge_rules(
            state.rules_j, self._supplement(self.view_j, targets_j, iteration)
        )
        for rule in state.rules_i + state.rules_j:
            rule.marked = rule.iteration >= iteration - 1
        marked_i = [r for r in state.rules_i if r.marked]
        marked_j = [r for r in state.rules_j if r.marked]

        n_views = self.dataset.n_views
        pairs = candidate_pairs(
            marked_i, marked_j, n_views, self.constraints,
            self.constraints.min_jaccard_refine,
        )
        candidates = [red for red, _ in pairs]
        if self.constraints.allows('or'):
            near = sorted(
                (
                    (red.jaccard, x, y)
                    for red, (x, y, na, nb) in pairs
                    if not na and not nb and red.jaccard < self.constraints.min_jaccard
                ),
                key=lambda item: -item[0],
            )
            candidates += disjunctive_candidates(
                [(x, y) for _, x, y in near], marked_i, marked_j, n_views
            )

        indexed = []
        for red in candidates:
            indexed.append((-red.jaccard, red.support_size, self.creation_index, red))
            self.creation_index += 1
        indexed.sort(key=lambda item: item[:3])

        counts = {'added': 0, 'replaced': 0, 'evicted': 0, 'discarded': 0, 'rejected': 0}
        for _, _, _, red in indexed:
            refined = conjunctive_refinement(red, self.store)
            if refined is None or not self.constraints.accepts(
                refined.jaccard, refined.pvalue, refined.support_size
            ):
                counts['rejected'] += 1
                continue
            counts[self._insert(refined)] += 1

        stats = {
            'iteration': iteration,
            'rules_i': len(state.rules_i),
            'rules_j': len(state.rules_j),
            'marked_i': len(marked_i),
            'marked_j': len(marked_j),
            'candidates': len(candidates),
            'size': len(self.store),
        }
        stats.update(counts)

        # Supplementing rules only serve this iteration's construction
        state.rules_i = [r for r in state.rules_i if r.origin == GENERATING]
        state.rules_j = [r for r in state.rules_j if r.origin == GENERATING]
        state.iteration = iteration
        return stats

    def run(self) -> List[Redescription]:
        pair = f"{self.dataset.views[self.view_i].name}-{self.dataset.views[self.view_j].name}"
        if self.settings.max_iter <= 0:
            return []
        self.state.rules_i = self._initial_rules(self.view_i)
        self.state.rules_j = self._initial_rules(self.view_j)
        if not self.state.rules_i or not self.state.rules_j:
            self.logger.warning(f"View pair {pair} produced no rules; nothing to pair")
            return []
        for iteration in range(1, self.settings.max_iter + 1):
            stats = self.iterate(iteration)
            self.history.append(stats)
            self.tracer.record('gclus', pair=pair, **stats)
        self.logger.info(
            f"GCLUS-RM on {pair}: {len(self.store)} redescriptions "
            f"after {self.settings.max_iter} iterations"
        )
        return list(self.store.members)


def run_gclusrm(
    dataset: Dataset,
    view_i: int,
    view_j: int,
    constraints: Constraints,
    settings: Settings,
    seed: int,
    tracer: Optional[Tracer] = None,
    n_jobs: int = 1,
) -> List[Redescription]:
    """Two-view redescriptions on (view_i, view_j), all meeting the constraints."""
    miner = GclusRM(
        dataset, view_i, view_j, constraints, settings, seed, tracer, n_jobs
    )
    return miner.run()
