"""Tests for the planted-block synthetic generator."""

import numpy as np
import pytest

from engine.query import Literal, eval_support
from utils.dataset import save_dataset
from utils.synthetic import SyntheticSpec, SyntheticSpecError, generate_synthetic


class TestGenerateSynthetic:
    def test_default_shape(self):
        dataset, blocks = generate_synthetic(SyntheticSpec())
        assert dataset.n_entities == 200
        assert dataset.n_views == 3
        assert all(v.n_attributes == 10 for v in dataset.views)
        assert [len(b.members) for b in blocks] == [30, 30, 30]

    def test_blocks_are_disjoint_without_overlap(self):
        _, blocks = generate_synthetic(SyntheticSpec())
        union = np.concatenate([b.members for b in blocks])
        assert len(np.unique(union)) == 90

    def test_planted_interval_describes_block(self):
        dataset, blocks = generate_synthetic(SyntheticSpec(noise=0.0))
        for block in blocks:
            lo, hi = block.interval
            for view, attribute in block.attributes:
                name = dataset.views[view].attributes[attribute].name
                support = eval_support(Literal(view, attribute, name, lo, hi), dataset)
                assert support[block.members].all()

    def test_same_seed_is_byte_identical(self, tmp_path):
        first, _ = generate_synthetic(SyntheticSpec(noise=0.1, seed=13))
        second, _ = generate_synthetic(SyntheticSpec(noise=0.1, seed=13))
        for name, dataset in (('a', first), ('b', second)):
            save_dataset(dataset, tmp_path / name)
        for view in first.views:
            a = (tmp_path / 'a' / f"{view.name}.csv").read_bytes()
            b = (tmp_path / 'b' / f"{view.name}.csv").read_bytes()
            assert a == b

    def test_noise_moves_some_carriers(self):
        dataset, blocks = generate_synthetic(SyntheticSpec(noise=0.2, seed=1))
        block = blocks[0]
        lo, hi = block.interval
        view, attribute = block.attributes[0]
        column = dataset.views[view].values[:, attribute]
        carriers = np.flatnonzero((column >= lo) & (column <= hi))
        assert len(carriers) == 30
        assert len(np.intersect1d(carriers, block.members)) == 24

    def test_missing_values_spare_planted_columns(self):
        dataset, blocks = generate_synthetic(
            SyntheticSpec(missing_rate=0.3, seed=2)
        )
        planted = {j for b in blocks for _, j in b.attributes}
        values = dataset.views[0].values
        for j in range(values.shape[1]):
            if j in planted:
                assert not np.isnan(values[:, j]).any()
        assert np.isnan(values).any()

    @pytest.mark.parametrize('spec', [
        SyntheticSpec(n_views=1),
        SyntheticSpec(block_sizes=[150, 100]),
        SyntheticSpec(noise=1.5),
        SyntheticSpec(missing_rate=1.0),
    ])
    def test_invalid_specs(self, spec):
        with pytest.raises(SyntheticSpecError):
            generate_synthetic(spec)

    def test_ground_truth_record(self):
        dataset, blocks = generate_synthetic(SyntheticSpec(n_entities=60, block_sizes=[10]))
        record = blocks[0].to_record(dataset)
        assert record['size'] == 10
        assert set(record['attributes']) == {'V1', 'V2', 'V3'}
        assert record['interval'] == [20.0, 21.0]
