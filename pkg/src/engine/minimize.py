#!/usr/bin/env python3
"""
Redescribe Query Minimization
Greedy removal of conjuncts that do not pay for themselves
"""

import logging
from typing import List, Sequence, Tuple

from engine.query import And, Not, Or, Query, eval_support, negate
from engine.redescription import Redescription, with_query
from utils.config_parser import Constraints
from utils.dataset import Dataset

Path = Tuple[int, ...]

logger = logging.getLogger(__name__)


def _removable(query: Query, path: Path = ()) -> List[Path]:
    """Paths of every child of a conjunction, at any depth."""
    found: List[Path] = []
    if isinstance(query, Not):
        found.extend(_removable(query.child, path + (0,)))
    elif isinstance(query, (And, Or)):
        for i, child in enumerate(query.children):
            if isinstance(query, And):
                found.append(path + (i,))
            found.extend(_removable(child, path + (i,)))
    return found


def _without(query: Query, path: Path) -> Query:
    head, rest = path[0], path[1:]
    if isinstance(query, Not):
        return negate(_without(query.child, rest))
    children = list(query.children)
    if rest:
        children[head] = _without(children[head], rest)
    else:
        del children[head]
    if len(children) == 1:
        return children[0]
    return type(query)(tuple(children))


def _deepest_first(paths: List[Path]) -> List[Path]:
    return sorted(paths, key=lambda p: (-len(p), tuple(-i for i in p)))


def minimize_redescription(
    red: Redescription, dataset: Dataset, constraints: Constraints
) -> Redescription:
    """Drop conjuncts, deepest first, while J does not drop and constraints hold."""
    current = red
    changed = True
    while changed:
        changed = False
        for view in current.views:
            query = current.queries[view]
            for path in _deepest_first(_removable(query)):
                shorter = _without(query, path)
                candidate = with_query(
                    current, shorter, eval_support(shorter, dataset), view
                )
                if candidate.jaccard >= current.jaccard and constraints.accepts(
                    candidate.jaccard, candidate.pvalue, candidate.support_size
                ):
                    current = candidate
                    changed = True
                    break
            if changed:
                break
    return current


def minimize_queries(
    members: Sequence[Redescription],
    dataset: Dataset,
    constraints: Constraints,
) -> List[Redescription]:
    minimized = [minimize_redescription(m, dataset, constraints) for m in members]
    dropped = sum(
        len(m.attributes()) - len(n.attributes()) for m, n in zip(members, minimized)
    )
    logger.info(f"Query minimization removed {dropped} literals from {len(members)} redescriptions")
    return minimized

