#!/usr/bin/env python3
"""
Redescribe Config Parser
Parses the YAML run configuration into constraint and setting dataclasses

A run configuration has the sections ``dataset`` (views and alignment),
``constraints`` (what a redescription must satisfy), ``settings`` (how the
search runs) and an optional ``synthetic`` section that replaces the dataset
with generated data. Paths are resolved relative to the configuration file.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from trees.forest import FOREST_KINDS, ForestSpec
from utils.dataset import AttributeKind, ViewSource
from utils.seeding import seed_from_env
from utils.synthetic import SyntheticSpec

OPERATORS = ('and', 'or', 'not')
N_MEASURES = 5
WEIGHT_TOLERANCE = 1e-9
MAX_SUPPORT_FRACTION = 0.9

# Aliases accepted for model kinds in configuration files
MODEL_ALIASES = {
    'pct': 'pct',
    'extra_pct': 'extra',
    'extra': 'extra',
    'extra_forest': 'extra',
    'subspace': 'subspace',
    'subspace_forest': 'subspace',
    'ros': 'ros',
    'ros_forest': 'ros',
}

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised when a run configuration is malformed or violates a constraint."""


@dataclass
class Constraints:
    """What every reported redescription must satisfy, plus memory limits."""
    min_jaccard: float = 0.6
    min_jaccard_refine: float = 0.5
    max_pvalue: float = 0.01
    min_support: int = 5
    max_support: Optional[int] = None
    work_set_size: int = 1000
    max_expansion_size: int = 4000
    num_supplement_models: int = 1
    max_rule_len: int = 8
    num_target_batch: int = 100
    operators: Tuple[str, ...] = OPERATORS

    def validate(self, n_entities: Optional[int] = None):
        if not 0.0 <= self.min_jaccard <= 1.0:
            raise ConfigError(f"min_jaccard must be in [0, 1], got {self.min_jaccard}")
        if not 0.0 <= self.min_jaccard_refine <= self.min_jaccard:
            raise ConfigError(
                f"min_jaccard_refine ({self.min_jaccard_refine}) must be in "
                f"[0, min_jaccard={self.min_jaccard}]"
            )
        if not 0.0 < self.max_pvalue <= 1.0:
            raise ConfigError(f"max_pvalue must be in (0, 1], got {self.max_pvalue}")
        if self.min_support < 1:
            raise ConfigError(f"min_support must be >= 1, got {self.min_support}")
        if self.max_support is not None:
            if self.max_support < self.min_support:
                raise ConfigError(
                    f"max_support ({self.max_support}) is below "
                    f"min_support ({self.min_support})"
                )
            if n_entities is not None and self.max_support > n_entities:
                raise ConfigError(
                    f"max_support ({self.max_support}) exceeds |E| = {n_entities}"
                )
        if self.work_set_size < 1:
            raise ConfigError("work_set_size must be >= 1")
        if self.work_set_size > self.max_expansion_size:
            raise ConfigError(
                f"work_set_size ({self.work_set_size}) exceeds "
                f"max_expansion_size ({self.max_expansion_size})"
            )
        if self.max_rule_len < 1 or self.num_target_batch < 1:
            raise ConfigError("max_rule_len and num_target_batch must be >= 1")
        if self.num_supplement_models < 0:
            raise ConfigError("num_supplement_models must be >= 0")
        unknown = set(self.operators) - set(OPERATORS)
        if unknown or 'and' not in self.operators:
            raise ConfigError(
                f"operators must include 'and' and be drawn from {OPERATORS}, "
                f"got {list(self.operators)}"
            )

    def resolve(self, n_entities: int) -> 'Constraints':
        """Fill the data-dependent default for max_support and validate."""
        resolved = self
        if self.max_support is None:
            resolved = replace(
                self, max_support=int(math.floor(MAX_SUPPORT_FRACTION * n_entities))
            )
        resolved.validate(n_entities)
        return resolved

    @property
    def threshold(self) -> int:
        """Memory normalisation threshold between work set and expansion size."""
        return (self.max_expansion_size + self.work_set_size) // 2

    def allows(self, operator: str) -> bool:
        return operator in self.operators

    def support_ok(self, support: int) -> bool:
        upper = self.max_support if self.max_support is not None else support
        return self.min_support <= support <= upper

    def accepts(self, jaccard: float, pvalue: float, support: int) -> bool:
        return (
            jaccard >= self.min_jaccard
            and pvalue <= self.max_pvalue
            and self.support_ok(support)
        )


@dataclass
class Settings:
    """How the search runs: restarts, iterations, models and set selection."""
    n_random_restarts: int = 1
    max_iter: int = 5
    output_set_size: int = 200
    weights: List[List[float]] = field(
        default_factory=lambda: [[0.2] * N_MEASURES]
    )
    rng_seed: int = 0
    generating_model: ForestSpec = field(default_factory=ForestSpec)
    supplementing_model: Optional[ForestSpec] = None
    expected_out_size: int = 200
    k_c: int = 20
    perc: float = 0.95
    view_pairs: Optional[int] = None
    max_depth: Optional[int] = None
    min_leaf: int = 2
    n_jobs: int = 1

    def validate(self):
        if self.n_random_restarts < 1:
            raise ConfigError("n_random_restarts must be >= 1")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.output_set_size < 1:
            raise ConfigError("output_set_size (r) must be >= 1")
        if self.expected_out_size < 1 or self.k_c < 1:
            raise ConfigError("expected_out_size and k_c must be >= 1")
        if not 0.0 < self.perc <= 1.0:
            raise ConfigError(f"perc must be in (0, 1], got {self.perc}")
        if self.view_pairs is not None and self.view_pairs < 1:
            raise ConfigError("view_pairs must be >= 1")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if not self.weights:
            raise ConfigError("weights must hold at least one row")
        for row in self.weights:
            if len(row) != N_MEASURES:
                raise ConfigError(
                    f"Each weight row needs {N_MEASURES} entries, got {len(row)}"
                )
            if any(w < 0.0 or w > 1.0 for w in row):
                raise ConfigError(f"Weights must lie in [0, 1], got {row}")
            if abs(sum(row) - 1.0) > WEIGHT_TOLERANCE:
                raise ConfigError(f"Weight row {row} sums to {sum(row)}, not 1")
        try:
            self.generating_model.validate()
            if self.supplementing_model is not None:
                self.supplementing_model.validate()
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.generating_model.kind not in ('pct', 'extra'):
            raise ConfigError(
                f"generating_model must be pct or extra_pct, "
                f"got {self.generating_model.kind}"
            )

    def tree_depth(self, constraints: Constraints) -> int:
        return self.max_depth if self.max_depth is not None else constraints.max_rule_len


@dataclass
class RunConfig:
    """A fully parsed run configuration."""
    constraints: Constraints
    settings: Settings
    views: List[ViewSource] = field(default_factory=list)
    align: str = 'auto'
    synthetic: Optional[SyntheticSpec] = None
    source: Optional[Path] = None


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"Section '{name}' must be a mapping")
    return value


def _build(cls, values: Dict[str, Any], section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {sorted(unknown)}")
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"Invalid '{section}' section: {e}") from e


def _parse_model(raw: Any, section: str) -> Optional[ForestSpec]:
    if raw is None:
        return None
    if isinstance(raw, str):
        raw = {'kind': raw}
    if not isinstance(raw, dict):
        raise ConfigError(f"'{section}' must be a kind name or a mapping")
    raw = dict(raw)
    kind = str(raw.get('kind', 'pct')).lower()
    if kind == 'none':
        return None
    if kind not in MODEL_ALIASES:
        raise ConfigError(
            f"Unknown model kind '{kind}' in '{section}', expected one of "
            f"{sorted(MODEL_ALIASES)} or none"
        )
    raw['kind'] = MODEL_ALIASES[kind]
    return _build(ForestSpec, raw, section)


def _parse_weights(raw: Any) -> List[List[float]]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("weights must be a list of 5 numbers or a list of rows")
    rows = raw if isinstance(raw[0], list) else [raw]
    try:
        return [[float(w) for w in row] for row in rows]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"weights must be numeric: {e}") from e


def _parse_constraints(data: Dict[str, Any]) -> Constraints:
    raw = dict(_section(data, 'constraints'))
    if 'support_range' in raw:
        low, high = raw.pop('support_range')
        raw['min_support'] = low
        raw['max_support'] = high
    if 'operators' in raw:
        raw['operators'] = tuple(str(op).lower() for op in raw['operators'])
    constraints = _build(Constraints, raw, 'constraints')
    constraints.validate()
    return constraints


def _parse_settings(data: Dict[str, Any]) -> Settings:
    raw = dict(_section(data, 'settings'))
    if 'weights' in raw:
        raw['weights'] = _parse_weights(raw['weights'])
    raw['generating_model'] = (
        _parse_model(raw.get('generating_model', 'pct'), 'generating_model')
        or ForestSpec()
    )
    raw['supplementing_model'] = _parse_model(
        raw.get('supplementing_model'), 'supplementing_model'
    )
    settings = _build(Settings, raw, 'settings')
    try:
        settings.rng_seed = int(seed_from_env(settings.rng_seed) or 0)
    except ValueError as e:
        raise ConfigError(f"REDESCRIBE_SEED must be an integer: {e}") from e
    settings.validate()
    return settings


def _parse_views(data: Dict[str, Any], base_dir: Path) -> Tuple[List[ViewSource], str]:
    section = _section(data, 'dataset')
    align = str(section.get('align', 'auto'))
    views = []
    for entry in section.get('views') or []:
        if not isinstance(entry, dict) or 'name' not in entry or 'path' not in entry:
            raise ConfigError("Each dataset view needs a 'name' and a 'path'")
        kinds = {}
        for column, kind in (entry.get('kinds') or {}).items():
            try:
                kinds[str(column)] = AttributeKind(str(kind).lower())
            except ValueError:
                raise ConfigError(
                    f"Unknown attribute kind '{kind}' for column '{column}'"
                ) from None
        path = Path(entry['path'])
        if not path.is_absolute():
            path = base_dir / path
        views.append(
            ViewSource(
                name=str(entry['name']),
                path=path,
                kinds=kinds,
                id_column=str(entry.get('id_column', 'id')),
            )
        )
    return views, align


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def parse_config_data(data: Dict[str, Any], base_dir: Path) -> RunConfig:
    constraints = _parse_constraints(data)
    settings = _parse_settings(data)
    views, align = _parse_views(data, base_dir)
    synthetic = None
    if data.get('synthetic') is not None:
        synthetic = _build(SyntheticSpec, _section(data, 'synthetic'), 'synthetic')
        try:
            synthetic.validate()
        except ValueError as e:
            raise ConfigError(str(e)) from e
    return RunConfig(constraints, settings, views, align, synthetic)


def load_run_config(path: Path) -> RunConfig:
    """Parse a configuration file with every default applied."""
    path = Path(path)
    config = parse_config_data(_read_yaml(path), path.parent.absolute())
    config.source = path
    logging.getLogger('ConfigParser').info(
        f"Loaded configuration {path} (seed {config.settings.rng_seed})"
    )
    return config


def load_config(path: Path) -> Tuple[Constraints, Settings]:
    """Constraints and settings of a configuration file."""
    config = load_run_config(path)
    return config.constraints, config.settings


def _model_record(spec: Optional[ForestSpec]) -> Any:
    return 'none' if spec is None else asdict(spec)


def config_to_dict(config: RunConfig) -> Dict[str, Any]:
    constraints = asdict(config.constraints)
    constraints['operators'] = list(config.constraints.operators)
    settings = asdict(config.settings)
    settings['generating_model'] = _model_record(config.settings.generating_model)
    settings['supplementing_model'] = _model_record(
        config.settings.supplementing_model
    )
    data: Dict[str, Any] = {
        'constraints': constraints,
        'settings': settings,
        'dataset': {
            'align': config.align,
            'views': [
                {
                    'name': v.name,
                    'path': str(Path(v.path).absolute()),
                    'id_column': v.id_column,
                    'kinds': {c: k.value for c, k in v.kinds.items()},
                }
                for v in config.views
            ],
        },
    }
    if config.synthetic is not None:
        data['synthetic'] = asdict(config.synthetic)
    return data


def dump_config(config: RunConfig, path: Path) -> Path:
    """Write the resolved configuration; loading it reproduces ``config``."""
    path = Path(path)
    path.write_text(yaml.safe_dump(config_to_dict(config), sort_keys=True))
    return path
