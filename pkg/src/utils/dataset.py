#!/usr/bin/env python3
"""
Redescribe Dataset Model
Entity-aligned multi-view attribute matrices and their CSV loader

Each view is one comma-separated file: the first row holds attribute names,
an optional ``id`` column identifies entities and an empty cell is a missing
value. Numeric attributes are stored as floats; categorical and boolean
attributes are stored as level codes. Missing values are NaN in both cases.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

BOOLEAN_TOKENS = {'0', '1', 'true', 'false'}
DEFAULT_ID_COLUMN = 'id'

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Raised when view files cannot be parsed or aligned."""


class AttributeKind(Enum):
    NUMERIC = 'numeric'
    CATEGORICAL = 'categorical'
    BOOLEAN = 'boolean'


@dataclass(frozen=True)
class Attribute:
    """One column of a view. ``levels`` is empty for numeric attributes."""
    name: str
    kind: AttributeKind
    levels: Tuple[str, ...] = ()

    @property
    def is_numeric(self) -> bool:
        return self.kind is AttributeKind.NUMERIC

    def level_code(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise DatasetError(
                f"Unknown level '{level}' for attribute '{self.name}'"
            ) from None


@dataclass
class View:
    """Attribute matrix of one view, rows aligned with the dataset entities."""
    name: str
    attributes: List[Attribute]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.attributes):
            raise DatasetError(
                f"View '{self.name}': value matrix shape {self.values.shape} "
                f"does not match {len(self.attributes)} attributes"
            )
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DatasetError(f"View '{self.name}': duplicate attribute names")
        self._index = {name: j for j, name in enumerate(names)}

    @property
    def n_entities(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    def attribute_index(self, name: str) -> Optional[int]:
        return self._index.get(name)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


@dataclass
class Dataset:
    """Entities plus n >= 2 views sharing the entity order."""
    entities: List[str]
    views: List[View]
    _view_index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.views) < 2:
            raise DatasetError(
                f"A dataset needs at least 2 views, got {len(self.views)}"
            )
        for view in self.views:
            if view.n_entities != len(self.entities):
                raise DatasetError(
                    f"View '{view.name}' has {view.n_entities} rows, "
                    f"expected {len(self.entities)}"
                )
        self._view_index = {v.name: k for k, v in enumerate(self.views)}
        if len(self._view_index) != len(self.views):
            raise DatasetError("Duplicate view names")

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_views(self) -> int:
        return len(self.views)

    def view_index(self, name: str) -> int:
        if name not in self._view_index:
            raise DatasetError(f"Unknown view '{name}'")
        return self._view_index[name]


@dataclass
class ViewSource:
    """Where a view comes from and how its columns are typed."""
    name: str
    path: Path
    kinds: Dict[str, AttributeKind] = field(default_factory=dict)
    id_column: str = DEFAULT_ID_COLUMN


def _is_missing(token: str) -> bool:
    return token.strip() == ''


def infer_kind(tokens: Sequence[str]) -> AttributeKind:
    present = {t.strip().lower() for t in tokens if not _is_missing(t)}
    if present and len(present) <= 2 and present <= BOOLEAN_TOKENS:
        return AttributeKind.BOOLEAN
    try:
        for token in present:
            float(token)
    except ValueError:
        return AttributeKind.CATEGORICAL
    return AttributeKind.NUMERIC


def _boolean_levels(tokens: Sequence[str]) -> Tuple[str, ...]:
    present = {t.strip().lower() for t in tokens if not _is_missing(t)}
    if present <= {'0', '1'}:
        return ('0', '1')
    return ('false', 'true')


def _encode_column(
    path: Path, column: str, tokens: Sequence[str], kind: AttributeKind
) -> Tuple[Attribute, np.ndarray]:
    values = np.full(len(tokens), np.nan)
    if kind is AttributeKind.NUMERIC:
        for i, token in enumerate(tokens):
            if _is_missing(token):
                continue
            try:
                value = float(token)
            except ValueError:
                raise DatasetError(
                    f"{path}: row {i + 2}, column '{column}': "
                    f"non-numeric token '{token}'"
                ) from None
            if not np.isfinite(value):
                raise DatasetError(
                    f"{path}: row {i + 2}, column '{column}': "
                    f"non-finite value '{token}'"
                )
            values[i] = value
        return Attribute(column, kind), values

    if kind is AttributeKind.BOOLEAN:
        levels = _boolean_levels(tokens)
        truthy = {'1', 'true'}
        for i, token in enumerate(tokens):
            t = token.strip().lower()
            if t == '':
                continue
            if t not in BOOLEAN_TOKENS:
                raise DatasetError(
                    f"{path}: row {i + 2}, column '{column}': "
                    f"non-boolean token '{token}'"
                )
            values[i] = 1.0 if t in truthy else 0.0
        return Attribute(column, kind, levels), values

    stripped = [t.strip() for t in tokens]
    levels = tuple(sorted({t for t in stripped if t != ''}))
    codes = {level: k for k, level in enumerate(levels)}
    for i, token in enumerate(stripped):
        if token != '':
            values[i] = codes[token]
    return Attribute(column, kind, levels), values


def _read_table(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"{path}: {e}") from e


def load_dataset(sources: Sequence[ViewSource], align: str = 'auto') -> Dataset:
    """Load one CSV file per view into an aligned Dataset.

    ``align`` is ``id`` (match rows by the id column), ``position`` (match
    rows by order) or ``auto`` (id when every file has its id column).
    """
    if align not in ('auto', 'id', 'position'):
        raise DatasetError(f"Unknown alignment mode '{align}'")
    tables = [(source, _read_table(Path(source.path))) for source in sources]
    have_ids = all(src.id_column in table.columns for src, table in tables)
    if align == 'id' and not have_ids:
        missing = [str(s.path) for s, t in tables if s.id_column not in t.columns]
        raise DatasetError(f"Id alignment requested but no id column in: {missing}")
    use_ids = have_ids and align != 'position'

    first_source, first_table = tables[0]
    if use_ids:
        entities = [t.strip() for t in first_table[first_source.id_column]]
        if len(set(entities)) != len(entities):
            raise DatasetError(f"{first_source.path}: duplicate entity ids")
    else:
        entities = [str(i) for i in range(len(first_table))]

    views = []
    for source, table in tables:
        if len(table) != len(entities):
            raise DatasetError(
                f"Row count mismatch: {first_source.path} has {len(entities)} "
                f"rows, {source.path} has {len(table)}"
            )
        if use_ids:
            ids = [t.strip() for t in table[source.id_column]]
            if set(ids) != set(entities) or len(set(ids)) != len(ids):
                raise DatasetError(
                    f"Entity ids of {source.path} do not match {first_source.path}"
                )
            position = {entity: i for i, entity in enumerate(ids)}
            table = table.iloc[[position[e] for e in entities]]
        columns = [
            c for c in table.columns if not (use_ids and c == source.id_column)
        ]
        if not use_ids and source.id_column in table.columns:
            columns = [c for c in columns if c != source.id_column]

        attributes = []
        matrix = np.full((len(entities), len(columns)), np.nan)
        for j, column in enumerate(columns):
            tokens = list(table[column])
            kind = source.kinds.get(column) or infer_kind(tokens)
            attribute, values = _encode_column(Path(source.path), column, tokens, kind)
            attributes.append(attribute)
            matrix[:, j] = values
        views.append(View(source.name, attributes, matrix))
        logger.info(
            f"Loaded view '{source.name}' from {source.path}: "
            f"{len(entities)} entities, {len(attributes)} attributes"
        )

    return Dataset(entities, views)


def _format_value(attribute: Attribute, value: float) -> str:
    if np.isnan(value):
        return ''
    if attribute.is_numeric:
        return repr(float(value))
    return attribute.levels[int(value)]


def save_dataset(dataset: Dataset, directory: Path) -> List[ViewSource]:
    """Write one CSV per view and return sources that reload it exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    sources = []
    for view in dataset.views:
        frame = pd.DataFrame({DEFAULT_ID_COLUMN: dataset.entities})
        for j, attribute in enumerate(view.attributes):
            frame[attribute.name] = [
                _format_value(attribute, v) for v in view.values[:, j]
            ]
        path = directory / f"{view.name}.csv"
        frame.to_csv(path, index=False, lineterminator='\n')
        sources.append(
            ViewSource(
                name=view.name,
                path=path,
                kinds={a.name: a.kind for a in view.attributes},
            )
        )
    return sources
