import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustkbr.data import (
    Dataset, NoiseSpec, add_noise, draw_noise, fit_scaler, gen_curve_test, gen_sinc,
    inject_outliers, load_csv, scale_unit_interval, sinc, with_outliers,
)
from robustkbr.errors import DataParseError, InvalidArgumentError


class TestDataset:
    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            Dataset([[0.0], [1.0]], [0.0, np.nan])

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            Dataset([[0.0], [1.0]], [0.0])

    def test_rejects_bad_outlier_indices(self):
        with pytest.raises(InvalidArgumentError):
            Dataset([[0.0], [1.0]], [0.0, 1.0], {"outlier_indices": [1, 1]})
        with pytest.raises(InvalidArgumentError):
            Dataset([[0.0], [1.0]], [0.0, 1.0], {"outlier_indices": [2]})

    def test_subset_remaps_outliers(self):
        d = Dataset(np.arange(5.0)[:, None], np.arange(5.0), {"outlier_indices": [1, 3]})
        sub = d.subset([0, 3, 4])
        assert sub.provenance["outlier_indices"] == [1]
        np.testing.assert_array_equal(sub.targets, [0.0, 3.0, 4.0])

    def test_with_point(self):
        d = Dataset([[0.0, 1.0]], [2.0]).with_point([3.0, 4.0], 5.0)
        assert d.n_samples == 2 and d.targets[-1] == 5.0
        with pytest.raises(InvalidArgumentError):
            d.with_point([1.0], 0.0)


class TestSinc:
    def test_origin(self):
        assert sinc(0.0) == 1.0

    def test_pi(self):
        assert abs(sinc(np.pi)) <= 1e-15

    def test_sizes_and_clean_test(self):
        train, test = gen_sinc(500, 300, seed=4, noise=NoiseSpec.gaussian(0, 0.3, seed=5))
        assert train.n_samples == 500 and test.n_samples == 300
        np.testing.assert_array_equal(test.targets, sinc(test.features[:, 0]))
        assert not np.array_equal(train.targets, sinc(train.features[:, 0]))
        assert np.all(np.abs(train.features) <= 10)

    def test_deterministic_and_seed_sensitive(self):
        a, _ = gen_sinc(50, 5, seed=1)
        b, _ = gen_sinc(50, 5, seed=1)
        c, _ = gen_sinc(50, 5, seed=2)
        np.testing.assert_array_equal(a.features, b.features)
        assert not np.array_equal(a.features, c.features)

    def test_bad_counts(self):
        with pytest.raises(InvalidArgumentError):
            gen_sinc(0, 5)


class TestNoise:
    N = 100_000

    def test_gaussian_moments(self):
        e = draw_noise(self.N, NoiseSpec.gaussian(0.0, 0.3, seed=1))
        assert abs(e.mean()) <= 4 * 0.3 / math.sqrt(self.N)
        assert abs(e.var() - 0.09) <= 0.05 * 0.09

    def test_laplace_variance(self):
        e = draw_noise(self.N, NoiseSpec.laplace(0.0, 1.0, seed=2))
        assert abs(e.var() - 2.0) <= 0.05 * 2.0

    def test_chisq_mean(self):
        e = draw_noise(self.N, NoiseSpec.chisq(4, seed=3))
        assert abs(e.mean() - 4.0) <= 0.02 * 4.0
        assert np.all(e >= 0)

    def test_chisq_centering(self):
        e = draw_noise(self.N, NoiseSpec.chisq(4, seed=3, center=True))
        assert abs(e.mean()) <= 0.08

    def test_add_noise_deterministic(self):
        y = np.zeros(10)
        spec = NoiseSpec.laplace(seed=9)
        np.testing.assert_array_equal(add_noise(y, spec), add_noise(y, spec))

    @pytest.mark.parametrize("kw", [
        {"kind": "gaussian", "scale": 0.0},
        {"kind": "laplace", "scale": -1.0},
        {"kind": "chisq", "dof": 0},
        {"kind": "chisq", "dof": 2.5},
        {"kind": "cauchy"},
    ])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgumentError):
            NoiseSpec(**kw)


class TestOutliers:
    def test_twenty_percent(self):
        d = Dataset(np.arange(100.0)[:, None], np.arange(1.0, 101.0))
        c = inject_outliers(d, 0.2, 10.0, seed=0)
        idx = c.provenance["outlier_indices"]
        assert len(idx) == 20
        changed = np.flatnonzero(c.targets != d.targets)
        np.testing.assert_array_equal(changed, idx)
        np.testing.assert_array_equal(c.targets[idx], 10 * d.targets[idx])

    def test_zero_fraction(self):
        d = Dataset(np.arange(10.0)[:, None], np.arange(10.0))
        c = inject_outliers(d, 0.0, 10.0, seed=0)
        np.testing.assert_array_equal(c.targets, d.targets)
        assert c.provenance["outlier_indices"] == []

    def test_identity_factor(self):
        d = Dataset(np.arange(10.0)[:, None], np.arange(10.0))
        c = inject_outliers(d, 1.0, 1.0, seed=0)
        np.testing.assert_array_equal(c.targets, d.targets)
        assert c.provenance["outlier_indices"] == list(range(10))

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 300), frac=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
    def test_count_round_half_up(self, n, frac, seed):
        d = Dataset(np.zeros((n, 1)), np.arange(1.0, n + 1.0))
        c = inject_outliers(d, frac, 3.0, seed)
        k = int(math.floor(frac * n + 0.5))
        assert len(c.provenance["outlier_indices"]) == k
        assert np.count_nonzero(c.targets != d.targets) == k

    def test_half_rounds_up(self):
        d = Dataset(np.zeros((5, 1)), np.ones(5))
        assert len(inject_outliers(d, 0.5, 2.0).provenance["outlier_indices"]) == 3

    def test_bad_fraction(self):
        with pytest.raises(InvalidArgumentError):
            inject_outliers(Dataset([[0.0]], [1.0]), 1.5)

    def test_curve_tests(self):
        clean, outs, func = gen_curve_test("test2")
        assert clean.n_samples == 100 and len(outs) == 4
        full = with_outliers(clean, outs)
        assert full.provenance["outlier_indices"] == [100, 101, 102, 103]
        np.testing.assert_array_equal(full.targets[100:], 5.0)
        np.testing.assert_allclose(clean.targets, func(clean.features[:, 0]))
        with pytest.raises(InvalidArgumentError):
            gen_curve_test("test3")


class TestCsv:
    def test_read_back(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,3\n4,5,6\n7,8,9\n")
        d = load_csv(p)
        np.testing.assert_array_equal(d.features, [[1, 2], [4, 5], [7, 8]])
        np.testing.assert_array_equal(d.targets, [3, 6, 9])

    def test_target_by_name(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,y,b\n1,2,3\n4,5,6\n")
        d = load_csv(p, target_column="y", header=True)
        np.testing.assert_array_equal(d.targets, [2, 5])
        np.testing.assert_array_equal(d.features, [[1, 3], [4, 6]])

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,3\n4,5,abc\n")
        with pytest.raises(DataParseError) as err:
            load_csv(p)
        assert err.value.row == 2 and err.value.column == 3
        assert "row 2" in str(err.value) and "column 3" in str(err.value)

    def test_ragged(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,3\n4,5\n")
        with pytest.raises(DataParseError):
            load_csv(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(DataParseError):
            load_csv(p)

    def test_missing(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_unknown_name(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DataParseError):
            load_csv(p, target_column="z", header=True)


class TestScaling:
    def test_affine(self):
        d = Dataset([[0.0], [5.0], [10.0]], [1.0, 2.0, 3.0])
        s, _ = scale_unit_interval(d)
        np.testing.assert_array_equal(s.features[:, 0], [0.0, 0.5, 1.0])
        assert s.provenance["scaling"]["kind"] == "unit"

    def test_constant_column(self):
        d = Dataset([[1.0, 2.0], [1.0, 3.0]], [0.0, 0.0])
        s, params = scale_unit_interval(d)
        np.testing.assert_array_equal(s.features[:, 0], [0.5, 0.5])
        assert params.constant.tolist() == [True, False]

    def test_reapply_bit_exact(self):
        X = np.random.default_rng(0).normal(size=(30, 3))
        d = Dataset(X, X[:, 0])
        s, params = scale_unit_interval(d)
        np.testing.assert_array_equal(params.apply(d).features, s.features)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(scale=rng.uniform(0.1, 100), size=(20, 3))
        d = Dataset(X, rng.normal(size=20))
        s, params = scale_unit_interval(d, scale_targets=True)
        assert np.all((s.features >= 0) & (s.features <= 1))
        np.testing.assert_allclose(params.inverse(s.features), X, atol=1e-12 * np.abs(X).max())
        np.testing.assert_allclose(params.inverse_targets(s.targets), d.targets, atol=1e-12)

    def test_train_only_scaler(self):
        X = np.arange(10.0)[:, None]
        d = Dataset(X, X[:, 0])
        params = fit_scaler(d.subset(range(5)))
        out = params.apply(d.subset(range(5, 10)), mode="train")
        assert out.features.max() == 2.25
        assert out.provenance["scaling"]["mode"] == "train"
