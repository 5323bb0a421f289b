#!/usr/bin/env python3
"""
Redescribe Completion
Extends incomplete redescriptions with rules learned on a further view

A rule r is tried on an incomplete redescription R only if the optimistic
accuracy |supp(R) & supp(r)| / |union(R) | supp(r)| already reaches the
minimal Jaccard; the completed redescription then goes through conjunctive
refinement and the store's add-discard-or-replace policy.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

import numpy as np

from engine.gclusrm import JACCARD_EPSILON, conjunctive_refinement
from engine.query import disjoin, negate
from engine.redescription import Redescription, Rule, insert_query, with_query
from engine.store import RedescriptionStore
from utils.config_parser import Constraints

logger = logging.getLogger(__name__)


@dataclass
class CompletionOutcome:
    """Bookkeeping of one completion pass on one view."""
    view: int
    tested: int = 0
    inserted: int = 0
    negated: int = 0
    replaced_queries: int = 0
    disjunctions: int = 0
    used_members: List[Redescription] = field(default_factory=list)
    used_rules: Set[int] = field(default_factory=set)

    def as_dict(self) -> Dict[str, int]:
        return {
            'view': self.view,
            'tested': self.tested,
            'inserted': self.inserted,
            'negated': self.negated,
            'replaced_queries': self.replaced_queries,
            'disjunctions': self.disjunctions,
        }


def _union_mask(red: Redescription) -> np.ndarray:
    present = [s for s in red.query_supports if s is not None]
    return np.logical_or.reduce(present)


def _jaccard(inter: np.ndarray, union: np.ndarray) -> np.ndarray:
    return np.where(union > 0, inter / np.maximum(union, 1), 0.0)


def optimistic_jaccards(
    members: Sequence[Redescription], rules: Sequence[Rule], negated: bool = False
) -> np.ndarray:
    """Bound on the accuracy of every (member, rule) completion, members x rules."""
    supports = np.vstack([m.support for m in members]).astype(np.int64)
    unions = np.vstack([_union_mask(m) for m in members]).astype(np.int64)
    rule_matrix = np.vstack([r.support for r in rules]).astype(np.int64)
    n = rule_matrix.shape[1]
    rule_sizes = rule_matrix.sum(axis=1)[None, :]
    union_sizes = unions.sum(axis=1)[:, None]
    support_sizes = supports.sum(axis=1)[:, None]
    inter = supports @ rule_matrix.T
    union_overlap = unions @ rule_matrix.T
    if negated:
        # |S & ~r| and |U | ~r|
        return _jaccard(support_sizes - inter, n - rule_sizes + union_overlap)
    return _jaccard(inter, union_sizes + rule_sizes - union_overlap)


def _others(red: Redescription, view: int):
    present = [s for k, s in enumerate(red.query_supports) if s is not None and k != view]
    if not present:
        return None, None
    return np.logical_and.reduce(present), np.logical_or.reduce(present)


def complete_redescriptions(
    store: RedescriptionStore,
    rules: Sequence[Rule],
    view: int,
    constraints: Constraints,
    n_views: int,
) -> CompletionOutcome:
    """Complete the store's members lacking ``view`` with ``rules``, in place."""
    outcome = CompletionOutcome(view=view)
    pending = [m for m in store.members if m.queries[view] is None]
    if not rules:
        return outcome

    passes = []
    if pending:
        passes.append((False, optimistic_jaccards(pending, rules)))
        if constraints.allows('not'):
            passes.append((True, optimistic_jaccards(pending, rules, negated=True)))

    touched: Dict[int, Redescription] = {}
    for negated, bounds in passes:
        for a, b in np.argwhere(bounds >= constraints.min_jaccard):
            red, rule = pending[a], rules[b]
            outcome.tested += 1
            touched[id(red)] = red
            candidate = insert_query(red, rule, view, negated=negated)
            refined = conjunctive_refinement(candidate, store)
            if refined is None or not constraints.accepts(
                refined.jaccard, refined.pvalue, refined.support_size
            ):
                continue
            if store.add_discard_or_replace(refined):
                outcome.inserted += 1
                outcome.negated += int(negated)
                touched[id(refined)] = refined
                outcome.used_rules.add(int(b))
    outcome.used_members = list(touched.values())

    guard_met = not store.incomplete_indices(n_views) and store.is_full
    if guard_met:
        outcome.replaced_queries = refine_by_query_replacement(
            store, rules, view, outcome.used_members, outcome.used_rules,
            constraints, n_views,
        )
    if constraints.allows('or'):
        outcome.disjunctions = refine_disjunctive(store, rules, view, constraints)
    return outcome


def refine_by_query_replacement(
    store: RedescriptionStore,
    rules: Sequence[Rule],
    view: int,
    used_members: Sequence[Redescription],
    used_rules: Set[int],
    constraints: Constraints,
    n_views: int,
) -> int:
    """Swap the ``view`` query of untouched members for an unused rule raising J.

    Runs only when no incomplete member is left and the store is full. Each
    member is changed at most once and each rule is used at most once.
    """
    if store.incomplete_indices(n_views) or not store.is_full:
        return 0
    used = {id(m) for m in used_members}
    free = [b for b in range(len(rules)) if b not in used_rules]
    if not free:
        return 0
    rule_matrix = np.vstack([rules[b].support for b in free])
    options = [(False, rule_matrix)]
    if constraints.allows('not'):
        options.append((True, ~rule_matrix))

    replaced = 0
    for index in range(len(store)):
        red = store[index]
        if id(red) in used or red.queries[view] is None or not free:
            continue
        inter_others, union_others = _others(red, view)
        if inter_others is None:
            continue
        best: Optional[tuple] = None
        for negated, matrix in options:
            inter = (matrix & inter_others).sum(axis=1)
            union = (matrix | union_others).sum(axis=1)
            jac = _jaccard(inter, union)
            for position in np.argsort(-jac, kind='stable'):
                if jac[position] <= red.jaccard + JACCARD_EPSILON:
                    break
                rule = rules[free[position]]
                candidate = with_query(
                    red,
                    negate(rule.query) if negated else rule.query,
                    matrix[position],
                    view,
                )
                if constraints.accepts(
                    candidate.jaccard, candidate.pvalue, candidate.support_size
                ):
                    if best is None or candidate.jaccard > best[0].jaccard:
                        best = (candidate, free[position])
                    break
        if best is None:
            continue
        candidate, rule_index = best
        duplicate = store.duplicate_index(candidate)
        if duplicate is not None and duplicate != index:
            continue
        store.replace(index, candidate)
        used_rules.add(rule_index)
        free.remove(rule_index)
        rule_matrix = np.vstack([rules[b].support for b in free]) if free else None
        options = [(False, rule_matrix)] if free else []
        if free and constraints.allows('not'):
            options.append((True, ~rule_matrix))
        replaced += 1
    logger.debug(f"Query replacement on view {view}: {replaced} members improved")
    return replaced


def refine_disjunctive(
    store: RedescriptionStore,
    rules: Sequence[Rule],
    view: int,
    constraints: Constraints,
) -> int:
    """Widen the ``view`` query with the rule best covering the entities it misses.

    The missed entities are those described by every other query but not by
    the query on ``view``.
    """
    if not rules:
        return 0
    rule_matrix = np.vstack([r.support for r in rules])
    options = [(False, rule_matrix)]
    if constraints.allows('not'):
        options.append((True, ~rule_matrix))

    widened = 0
    for index in range(len(store)):
        red = store[index]
        query = red.queries[view]
        if query is None:
            continue
        inter_others, _ = _others(red, view)
        if inter_others is None:
            continue
        missed = inter_others & ~red.support
        if not missed.any():
            continue
        best = None
        for negated, matrix in options:
            inter = (matrix & missed).sum(axis=1)
            union = (matrix | missed).sum(axis=1)
            jac = _jaccard(inter, union)
            b = int(np.argmax(jac))
            if jac[b] > 0 and (best is None or jac[b] > best[0]):
                best = (float(jac[b]), b, negated)
        if best is None:
            continue
        _, b, negated = best
        extra = negate(rules[b].query) if negated else rules[b].query
        extra_support = ~rules[b].support if negated else rules[b].support
        candidate = with_query(
            red,
            disjoin(query, extra),
            red.query_supports[view] | extra_support,
            view,
        )
        if candidate.jaccard <= red.jaccard + JACCARD_EPSILON:
            continue
        if not constraints.accepts(
            candidate.jaccard, candidate.pvalue, candidate.support_size
        ):
            continue
        duplicate = store.duplicate_index(candidate)
        if duplicate is not None and duplicate != index:
            continue
        store.replace(index, candidate)
        widened += 1
    logger.debug(f"Disjunctive refinement on view {view}: {widened} members widened")
    return widened
