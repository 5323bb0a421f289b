#!/usr/bin/env python3
"""
Redescribe Query Model
Single-view logical queries, their supports and their textual form

Grammar of the textual form::

    query   := term ('|' term)*
    term    := factor ('&' factor)*
    factor  := '!' factor | '(' query ')' | literal
    literal := NUMBER '<=' NAME '<=' NUMBER
             | NUMBER '<=' NAME | NAME '<=' NUMBER | NAME '>=' NUMBER
             | NAME '=' LEVEL | NAME 'in' '{' LEVEL (',' LEVEL)* '}'

Names and levels that are not plain tokens are written in double quotes.
Intervals are closed on both ends.
"""

import math
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from utils.dataset import Dataset

PLAIN_TOKEN = re.compile(r'[A-Za-z_][A-Za-z0-9_./:\-]*$')
_TOKEN = re.compile(
    r'\s*(?:'
    r'(?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf\b)'
    r'|(?P<op><=|>=|=|&|\||!|\(|\)|\{|\}|,)'
    r'|"(?P<quoted>(?:[^"\\]|\\.)*)"'
    r'|(?P<name>[A-Za-z_][A-Za-z0-9_./:\-]*)'
    r')'
)


class QueryError(ValueError):
    """Raised when a query does not fit the dataset it is evaluated on."""


class QueryParseError(ValueError):
    """Raised for malformed query text; ``position`` is the character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Literal:
    """Condition on one attribute: closed interval, or a set of levels."""
    view: int
    attribute: int
    name: str
    lo: float = -math.inf
    hi: float = math.inf
    levels: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.levels and self.lo > self.hi:
            raise QueryError(f"Empty interval [{self.lo}, {self.hi}] on {self.name}")

    @property
    def is_interval(self) -> bool:
        return not self.levels


@dataclass(frozen=True)
class And:
    children: Tuple['Query', ...]


@dataclass(frozen=True)
class Or:
    children: Tuple['Query', ...]


@dataclass(frozen=True)
class Not:
    child: 'Query'


Query = Union[Literal, And, Or, Not]


def conjoin(*queries: Query) -> Query:
    """Conjunction with nested conjunctions flattened."""
    children: List[Query] = []
    for q in queries:
        children.extend(q.children if isinstance(q, And) else (q,))
    return children[0] if len(children) == 1 else And(tuple(children))


def disjoin(*queries: Query) -> Query:
    """Disjunction with nested disjunctions flattened."""
    children: List[Query] = []
    for q in queries:
        children.extend(q.children if isinstance(q, Or) else (q,))
    return children[0] if len(children) == 1 else Or(tuple(children))


def negate(query: Query) -> Query:
    return query.child if isinstance(query, Not) else Not(query)


def literals(query: Query) -> Iterator[Literal]:
    """Literals in left-to-right order (repeats included)."""
    if isinstance(query, Literal):
        yield query
    elif isinstance(query, Not):
        yield from literals(query.child)
    else:
        for child in query.children:
            yield from literals(child)


def query_view(query: Query) -> int:
    views = {lit.view for lit in literals(query)}
    if len(views) != 1:
        raise QueryError(f"Query spans views {sorted(views)}")
    return views.pop()


def query_length(query: Query) -> int:
    return sum(1 for _ in literals(query))


def _literal_support(literal: Literal, dataset: Dataset) -> np.ndarray:
    if not 0 <= literal.view < dataset.n_views:
        raise QueryError(f"View index {literal.view} out of range for {literal.name}")
    view = dataset.views[literal.view]
    if not 0 <= literal.attribute < view.n_attributes:
        raise QueryError(
            f"Attribute index {literal.attribute} out of range in view '{view.name}'"
        )
    attribute = view.attributes[literal.attribute]
    column = view.column(literal.attribute)
    if literal.is_interval:
        if not attribute.is_numeric:
            raise QueryError(f"Interval literal on non-numeric attribute {literal.name}")
        # NaN compares False on both sides, so missing values fail the literal
        return (column >= literal.lo) & (column <= literal.hi)
    if attribute.is_numeric:
        raise QueryError(f"Level literal on numeric attribute {literal.name}")
    codes = []
    for level in literal.levels:
        if level not in attribute.levels:
            raise QueryError(f"Unknown level '{level}' for attribute {literal.name}")
        codes.append(attribute.levels.index(level))
    return np.isin(column, codes)


def eval_support(query: Query, dataset: Dataset) -> np.ndarray:
    """Boolean entity mask of the entities satisfying ``query``."""
    if isinstance(query, Literal):
        return _literal_support(query, dataset)
    if isinstance(query, Not):
        return ~eval_support(query.child, dataset)
    supports = [eval_support(child, dataset) for child in query.children]
    if isinstance(query, And):
        return np.logical_and.reduce(supports)
    return np.logical_or.reduce(supports)


def _format_token(text: str) -> str:
    if PLAIN_TOKEN.match(text) and text not in ('in', 'inf'):
        return text
    escaped = text.replace('\\', '\\\\').replace('"', '\\"')
    return f'"{escaped}"'


def _format_number(value: float) -> str:
    return repr(float(value))


def _format_literal(literal: Literal) -> str:
    name = _format_token(literal.name)
    if not literal.is_interval:
        if len(literal.levels) == 1:
            return f"{name} = {_format_token(literal.levels[0])}"
        levels = ', '.join(_format_token(level) for level in literal.levels)
        return f"{name} in {{{levels}}}"
    if math.isinf(literal.lo) and math.isinf(literal.hi):
        return f"{_format_number(literal.lo)} <= {name} <= {_format_number(literal.hi)}"
    if math.isinf(literal.lo):
        return f"{name} <= {_format_number(literal.hi)}"
    if math.isinf(literal.hi):
        return f"{name} >= {_format_number(literal.lo)}"
    return f"{_format_number(literal.lo)} <= {name} <= {_format_number(literal.hi)}"


def format_query(query: Query) -> str:
    """Textual form of ``query``; ``parse_query`` reads it back unchanged."""
    if isinstance(query, Literal):
        return _format_literal(query)
    if isinstance(query, Not):
        return f"!({format_query(query.child)})"
    parts = []
    for child in query.children:
        text = format_query(child)
        needs_parens = isinstance(child, Or) or (
            isinstance(query, And) and isinstance(child, And)
        )
        parts.append(f"({text})" if needs_parens else text)
    return (' & ' if isinstance(query, And) else ' | ').join(parts)


class _Parser:
    """Recursive descent parser over the query grammar."""

    def __init__(self, text: str, dataset: Dataset, view: Optional[int]):
        self.text = text
        self.dataset = dataset
        self.view = view
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text: str) -> List[Tuple[str, str, int]]:
        tokens = []
        index = 0
        while index < len(text):
            if text[index:].strip() == '':
                break
            match = _TOKEN.match(text, index)
            if match is None or match.end() == index:
                raise QueryParseError(f"Unexpected character {text[index]!r}", index)
            kind = match.lastgroup or ''
            value = match.group(kind)
            start = match.start(kind)
            if kind == 'quoted':
                value = re.sub(r'\\(.)', r'\1', value)
                kind = 'name'
                start -= 1
            elif kind == 'name' and value == 'in':
                kind = 'op'
            tokens.append((kind, value, start))
            index = match.end()
        tokens.append(('end', '', len(text)))
        return tokens

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, kind: str, value: Optional[str] = None) -> Tuple[str, str, int]:
        token = self.peek()
        if token[0] != kind or (value is not None and token[1] != value):
            expected = value or kind
            found = token[1] or 'end of input'
            raise QueryParseError(f"Expected {expected}, found {found!r}", token[2])
        self.pos += 1
        return token

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        token = self.peek()
        return token[0] == kind and (value is None or token[1] == value)

    def parse(self) -> Query:
        query = self.query()
        if not self.at('end'):
            token = self.peek()
            raise QueryParseError(f"Unexpected {token[1]!r}", token[2])
        if self.view is None:
            query_view(query)
        return query

    def query(self) -> Query:
        children = [self.term()]
        while self.at('op', '|'):
            self.pos += 1
            children.append(self.term())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def term(self) -> Query:
        children = [self.factor()]
        while self.at('op', '&'):
            self.pos += 1
            children.append(self.factor())
        return children[0] if len(children) == 1 else And(tuple(children))

    def factor(self) -> Query:
        if self.at('op', '!'):
            self.pos += 1
            return negate(self.factor())
        if self.at('op', '('):
            self.pos += 1
            inner = self.query()
            self.take('op', ')')
            return inner
        return self.literal()

    def _resolve(self, name: str, position: int) -> Tuple[int, int]:
        views = range(self.dataset.n_views) if self.view is None else [self.view]
        found = [
            (k, j)
            for k in views
            for j in [self.dataset.views[k].attribute_index(name)]
            if j is not None
        ]
        if not found:
            raise QueryParseError(f"Unknown attribute {name!r}", position)
        if len(found) > 1:
            raise QueryParseError(f"Ambiguous attribute {name!r}", position)
        return found[0]

    def _number(self) -> float:
        return float(self.take('number')[1])

    def literal(self) -> Literal:
        if self.at('number'):
            lo = self._number()
            self.take('op', '<=')
            _, name, position = self.take('name')
            view, attribute = self._resolve(name, position)
            hi = math.inf
            if self.at('op', '<='):
                self.pos += 1
                hi = self._number()
            return self._interval(view, attribute, name, lo, hi, position)

        _, name, position = self.take('name')
        view, attribute = self._resolve(name, position)
        if self.at('op', '<='):
            self.pos += 1
            return self._interval(view, attribute, name, -math.inf, self._number(), position)
        if self.at('op', '>='):
            self.pos += 1
            return self._interval(view, attribute, name, self._number(), math.inf, position)
        if self.at('op', '='):
            self.pos += 1
            return Literal(view, attribute, name, levels=(self._level(),))
        if self.at('op', 'in'):
            self.pos += 1
            self.take('op', '{')
            levels = [self._level()]
            while self.at('op', ','):
                self.pos += 1
                levels.append(self._level())
            self.take('op', '}')
            return Literal(view, attribute, name, levels=tuple(levels))
        token = self.peek()
        raise QueryParseError(f"Expected comparison after {name!r}", token[2])

    def _level(self) -> str:
        token = self.peek()
        if token[0] in ('name', 'number'):
            self.pos += 1
            return token[1]
        raise QueryParseError("Expected a level", token[2])

    @staticmethod
    def _interval(
        view: int, attribute: int, name: str, lo: float, hi: float, position: int
    ) -> Literal:
        if lo > hi:
            raise QueryParseError(f"Empty interval on {name!r}", position)
        return Literal(view, attribute, name, lo, hi)


def parse_query(text: str, dataset: Dataset, view: Optional[int] = None) -> Query:
    """Parse ``text``; attribute names are looked up in ``view`` (or all views)."""
    return _Parser(text, dataset, view).parse()
