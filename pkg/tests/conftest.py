"""Shared fixtures."""

from pathlib import Path

import pytest

from utils.config_parser import Constraints, Settings, load_run_config
from utils.dataset import load_dataset
from utils.synthetic import SyntheticSpec, generate_synthetic

FIXTURES = Path(__file__).parent / 'fixtures'


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def table1_config():
    return load_run_config(FIXTURES / 'table1.yaml')


@pytest.fixture
def table1_dataset(table1_config):
    return load_dataset(table1_config.views, table1_config.align)


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv('REDESCRIBE_SEED', raising=False)


@pytest.fixture
def relaxed():
    """Constraints loose enough for tiny hand-made instances."""
    return Constraints(
        min_jaccard=0.5,
        min_jaccard_refine=0.3,
        max_pvalue=1.0,
        min_support=1,
        max_support=None,
        work_set_size=50,
        max_expansion_size=100,
    )


@pytest.fixture(scope='session')
def planted_three_view():
    spec = SyntheticSpec(
        n_entities=120, n_views=3, attrs_per_view=4,
        block_sizes=[25, 25, 25], noise=0.0, seed=3,
    )
    return generate_synthetic(spec)


@pytest.fixture
def quick_settings():
    return Settings(
        max_iter=2, output_set_size=20, expected_out_size=20, rng_seed=5, max_depth=1,
    )


@pytest.fixture
def planted_constraints():
    return Constraints(
        min_jaccard=0.6,
        min_jaccard_refine=0.5,
        max_pvalue=0.01,
        min_support=5,
        work_set_size=50,
        max_expansion_size=120,
    )
