#!/usr/bin/env python3
"""
Redescribe Redescription Model
Tuples of per-view queries with cached supports and quality statistics

A redescription holds one optional query per view. Missing queries are
written ``?``; accuracy and significance are always computed over the
queries that are present.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from engine.metrics import SetScores, jaccard, p_value
from engine.query import (
    Query, QueryError, eval_support, format_query, negate, parse_query,
    query_length, literals,
)
from utils.dataset import Dataset

MISSING_QUERY = '?'
GENERATING = 'generating'
SUPPLEMENTING = 'supplementing'

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Redescription:
    """Immutable redescription; build with ``from_parts`` or ``make_redescription``."""
    queries: Tuple[Optional[Query], ...]
    query_supports: Tuple[Optional[np.ndarray], ...]
    support: np.ndarray
    union_size: int
    jaccard: float
    pvalue: float

    @property
    def n_views(self) -> int:
        return sum(q is not None for q in self.queries)

    @property
    def views(self) -> Tuple[int, ...]:
        return tuple(k for k, q in enumerate(self.queries) if q is not None)

    @property
    def is_complete(self) -> bool:
        return self.n_views == len(self.queries)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.support))

    @property
    def n_entities(self) -> int:
        return int(self.support.shape[0])

    def attributes(self) -> List[Tuple[int, int]]:
        """(view, attribute) occurrences across all queries, repeats included."""
        return [
            (lit.view, lit.attribute)
            for q in self.queries if q is not None
            for lit in literals(q)
        ]

    def key(self) -> Tuple[Tuple[int, ...], bytes]:
        """Identity of the covered view set and support, for duplicate checks."""
        return self.views, np.packbits(self.support).tobytes()

    def restrict(self, views: Sequence[int]) -> 'Redescription':
        """The redescription keeping only the queries on ``views``."""
        keep = set(views)
        queries = [q if k in keep else None for k, q in enumerate(self.queries)]
        supports = [s if k in keep else None for k, s in enumerate(self.query_supports)]
        return from_parts(queries, supports)


def from_parts(
    queries: Sequence[Optional[Query]], supports: Sequence[Optional[np.ndarray]]
) -> Redescription:
    """Assemble a redescription from queries and their already known supports."""
    present = [s for s in supports if s is not None]
    if not present:
        raise ValueError("A redescription needs at least one query")
    support = np.logical_and.reduce(present) if len(present) > 1 else present[0].copy()
    union = np.logical_or.reduce(present) if len(present) > 1 else present[0]
    n = support.shape[0]
    support_size = int(np.count_nonzero(support))
    accuracy = jaccard(present) if len(present) > 1 else (1.0 if support_size else 0.0)
    pvalue = p_value(n, [int(np.count_nonzero(s)) for s in present], support_size)
    return Redescription(
        queries=tuple(queries),
        query_supports=tuple(supports),
        support=support,
        union_size=int(np.count_nonzero(union)),
        jaccard=accuracy,
        pvalue=pvalue,
    )


def make_redescription(
    queries: Sequence[Optional[Query]], dataset: Dataset
) -> Redescription:
    """Evaluate ``queries`` (one slot per view) on ``dataset``."""
    if len(queries) != dataset.n_views:
        raise QueryError(
            f"Expected {dataset.n_views} query slots, got {len(queries)}"
        )
    supports = [None if q is None else eval_support(q, dataset) for q in queries]
    return from_parts(queries, supports)


@dataclass
class Rule:
    """Conjunctive query learned on one view, with its support."""
    query: Query
    support: np.ndarray
    view: int
    marked: bool = True
    origin: str = GENERATING
    iteration: int = 0
    support_size: int = field(init=False)

    def __post_init__(self):
        self.support_size = int(np.count_nonzero(self.support))

    @property
    def length(self) -> int:
        return query_length(self.query)


def insert_query(
    red: Redescription, rule: Rule, view: int, negated: bool = False
) -> Redescription:
    """New redescription with ``rule`` (or its negation) in the empty ``view`` slot."""
    if red.queries[view] is not None:
        raise ValueError(
            f"View {view} already holds a query; use query replacement instead"
        )
    return replace_query(red, rule, view, negated)


def replace_query(
    red: Redescription, rule: Rule, view: int, negated: bool = False
) -> Redescription:
    query = negate(rule.query) if negated else rule.query
    support = ~rule.support if negated else rule.support
    queries = list(red.queries)
    supports = list(red.query_supports)
    queries[view] = query
    supports[view] = support
    return from_parts(queries, supports)


def with_query(
    red: Redescription, query: Query, support: np.ndarray, view: int
) -> Redescription:
    queries = list(red.queries)
    supports = list(red.query_supports)
    queries[view] = query
    supports[view] = support
    return from_parts(queries, supports)


def recompute(red: Redescription, dataset: Dataset) -> Redescription:
    """Rebuild every cache from the queries alone."""
    return make_redescription(list(red.queries), dataset)


def format_redescription(red: Redescription, dataset: Dataset) -> str:
    parts = []
    for k, q in enumerate(red.queries):
        text = MISSING_QUERY if q is None else format_query(q)
        parts.append(f"{dataset.views[k].name}: {text}")
    return ' ; '.join(parts)


def to_record(red: Redescription, dataset: Dataset) -> Dict[str, Any]:
    return {
        'queries': {
            dataset.views[k].name: MISSING_QUERY if q is None else format_query(q)
            for k, q in enumerate(red.queries)
        },
        'jaccard': float(red.jaccard),
        'pvalue': float(red.pvalue),
        'support_size': red.support_size,
        'support': [dataset.entities[i] for i in np.flatnonzero(red.support)],
    }


def from_record(record: Dict[str, Any], dataset: Dataset) -> Redescription:
    """Parse a serialized record; statistics are recomputed from the queries."""
    texts = record.get('queries') or {}
    queries: List[Optional[Query]] = [None] * dataset.n_views
    for view_name, text in texts.items():
        k = dataset.view_index(str(view_name))
        if text is None or str(text).strip() == MISSING_QUERY:
            continue
        try:
            queries[k] = parse_query(str(text), dataset, k)
        except ValueError as e:
            raise QueryError(f"Query '{text}' on view '{view_name}': {e}") from e
    if all(q is None for q in queries):
        raise QueryError("Redescription record without any query")
    return make_redescription(queries, dataset)


def save_redescriptions(
    path: Path,
    members: Sequence[Redescription],
    dataset: Dataset,
    scores: Optional[SetScores] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a redescription set file (records plus optional scores block)."""
    document: Dict[str, Any] = {
        'redescriptions': [to_record(m, dataset) for m in members],
    }
    if scores is not None:
        document['scores'] = {
            k: (None if isinstance(v, float) and np.isnan(v) else v)
            for k, v in scores.as_dict().items()
        }
    if extra:
        document.update(extra)
    path = Path(path)
    path.write_text(yaml.safe_dump(document, sort_keys=False, allow_unicode=True))
    return path


def load_redescriptions(path: Path, dataset: Dataset) -> List[Redescription]:
    document = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(document, dict):
        raise QueryError(f"{path}: expected a mapping with 'redescriptions'")
    records = document.get('redescriptions') or []
    members = [from_record(record, dataset) for record in records]
    logger.info(f"Loaded {len(members)} redescriptions from {path}")
    return members
