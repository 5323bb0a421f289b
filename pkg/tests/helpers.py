"""Builders for small hand-made datasets and redescriptions used across tests."""

from typing import Iterable, Optional, Sequence

import numpy as np

from engine.query import Literal, conjoin
from engine.redescription import GENERATING, Redescription, Rule, from_parts
from utils.dataset import Attribute, AttributeKind, Dataset, View


def mask(n: int, members: Iterable[int]) -> np.ndarray:
    result = np.zeros(n, dtype=bool)
    result[list(members)] = True
    return result


def numeric_view(name: str, matrix) -> View:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    attributes = [
        Attribute(f"{name}_a{j}", AttributeKind.NUMERIC) for j in range(matrix.shape[1])
    ]
    return View(name, attributes, matrix)


def make_dataset(*matrices, names: Optional[Sequence[str]] = None) -> Dataset:
    names = names or [f"V{k + 1}" for k in range(len(matrices))]
    views = [numeric_view(name, m) for name, m in zip(names, matrices)]
    n = views[0].n_entities
    return Dataset([f"e{i}" for i in range(n)], views)


def literal(view: int, attribute: int = 0) -> Literal:
    return Literal(view, attribute, f"V{view + 1}_a{attribute}", 0.0, 1.0)


def set_red(
    n: int,
    view_sets: Sequence[Optional[Iterable[int]]],
    attributes: Optional[Sequence[Sequence[int]]] = None,
) -> Redescription:
    """Redescription whose view-k query covers ``view_sets[k]`` (None = missing)."""
    queries, supports = [], []
    for k, members in enumerate(view_sets):
        if members is None:
            queries.append(None)
            supports.append(None)
            continue
        attrs = attributes[k] if attributes is not None else [0]
        queries.append(conjoin(*(literal(k, a) for a in attrs)))
        supports.append(mask(n, members))
    return from_parts(queries, supports)


def make_rule(
    n: int,
    members: Iterable[int],
    view: int,
    attribute: int = 0,
    iteration: int = 0,
    origin: str = GENERATING,
) -> Rule:
    return Rule(literal(view, attribute), mask(n, members), view, True, origin, iteration)
