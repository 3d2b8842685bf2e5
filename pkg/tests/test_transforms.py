from datetime import date

import numpy as np
import pytest

from smogcast.core.exceptions import DataError, NonFiniteError
from smogcast.datapipe.cube import DatasetCube
from smogcast.datapipe.transforms import (
    apply_range,
    downsample_bilinear,
    fit_range,
    impute,
    inverse_transform,
    normalize,
)


def cube_of(values, cadence=5):
    t, c = values.shape[0], values.shape[-1]
    return DatasetCube(values, [cadence * i for i in range(t)], [f"F{i}" for i in range(c)], ["1"] * c)


class TestImpute:
    def test_interior_gap_is_linear(self):
        values = np.zeros((5, 1, 1, 1))
        values[:, 0, 0, 0] = [1.0, np.nan, np.nan, 4.0, 5.0]
        out = impute(cube_of(values)).values[:, 0, 0, 0]
        np.testing.assert_allclose(out, [1.0, 2.0, 3.0, 4.0, 5.0])

    def test_edges_take_nearest_observation(self):
        values = np.zeros((4, 1, 1, 1))
        values[:, 0, 0, 0] = [np.nan, 2.0, 3.0, np.nan]
        out = impute(cube_of(values)).values[:, 0, 0, 0]
        np.testing.assert_allclose(out, [2.0, 2.0, 3.0, 3.0])

    def test_unobserved_pixel_takes_feature_mean(self):
        values = np.ones((3, 1, 2, 1))
        values[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        values[:, 0, 1, 0] = np.nan
        out = impute(cube_of(values)).values
        np.testing.assert_allclose(out[:, 0, 1, 0], 2.0)

    def test_all_missing_feature(self):
        values = np.ones((3, 2, 2, 2))
        values[..., 1] = np.nan
        with pytest.raises(DataError):
            impute(cube_of(values))

    def test_idempotent_and_leaves_observed_values(self, rng):
        values = rng.normal(size=(6, 3, 3, 2))
        mask = rng.random(values.shape) < 0.3
        mask[0] = False
        values[mask] = np.nan
        once = impute(cube_of(values))
        twice = impute(once)
        assert not np.isnan(once.values).any()
        np.testing.assert_array_equal(once.values, twice.values)
        np.testing.assert_array_equal(once.values[~mask], values[~mask].astype(np.float32))


class TestNormalize:
    def test_maps_to_unit_interval_and_inverts(self, rng):
        values = rng.normal(loc=3.0, scale=4.0, size=(5, 4, 4, 3))
        cube, stats = normalize(cube_of(values))
        assert cube.values.min() == pytest.approx(0.0, abs=1e-7)
        assert cube.values.max() == pytest.approx(1.0, abs=1e-7)
        back = inverse_transform(cube.values, stats)
        np.testing.assert_allclose(back, values.astype(np.float32), rtol=1e-6, atol=1e-6 * np.abs(values).max())

    def test_degenerate_feature_maps_to_zero(self, rng):
        values = rng.normal(size=(3, 2, 2, 2))
        values[..., 1] = 7.0
        cube, stats = normalize(cube_of(values))
        assert stats.degenerate == ["F1"]
        np.testing.assert_array_equal(cube.values[..., 1], 0.0)

    def test_supplied_statistics_clip(self):
        stats = fit_range(np.array([[0.0], [10.0]]), ["F0"])
        scaled = apply_range(np.array([[-5.0], [5.0], [15.0]]), stats, clip=True)
        np.testing.assert_allclose(scaled.ravel(), [0.0, 0.5, 1.0])
        cube, same = normalize(cube_of(np.array([-5.0, 15.0]).reshape(2, 1, 1, 1)), stats=stats)
        assert same is stats
        np.testing.assert_allclose(cube.values.ravel(), [0.0, 1.0])

    def test_fit_on_a_date_range(self):
        values = np.arange(4.0).reshape(4, 1, 1, 1)
        cube, stats = normalize(cube_of(values, cadence=1), fit_dates=(date(1970, 1, 1), date(1970, 1, 2)))
        assert (stats.minimum, stats.maximum) == ([0.0], [1.0])
        np.testing.assert_allclose(cube.values.ravel(), [0.0, 1.0, 1.0, 1.0])

    def test_refuses_missing_values(self):
        values = np.ones((2, 1, 1, 1))
        values[0] = np.nan
        with pytest.raises(NonFiniteError):
            normalize(cube_of(values))

    def test_feature_count_must_match(self):
        stats = fit_range(np.zeros((2, 3)), ["a", "b", "c"])
        with pytest.raises(DataError):
            apply_range(np.zeros((2, 2)), stats)


class TestDownsample:
    def test_same_grid_is_identity(self, rng):
        cube = cube_of(rng.normal(size=(2, 4, 5, 1)))
        np.testing.assert_array_equal(downsample_bilinear(cube, 4, 5).values, cube.values)

    def test_corners_and_linear_ramps_are_preserved(self):
        ys, xs = np.meshgrid(np.arange(9.0), np.arange(7.0), indexing="ij")
        field = (2.0 * ys + 3.0 * xs)[None, :, :, None]
        out = downsample_bilinear(cube_of(field), 5, 4).values[0, :, :, 0]
        expected_ys, expected_xs = np.meshgrid(np.linspace(0, 8, 5), np.linspace(0, 6, 4), indexing="ij")
        np.testing.assert_allclose(out, 2.0 * expected_ys + 3.0 * expected_xs, rtol=1e-6)
        assert out[0, 0] == field[0, 0, 0, 0]
        assert out[-1, -1] == field[0, -1, -1, 0]

    def test_constant_field_stays_constant(self):
        out = downsample_bilinear(cube_of(np.full((2, 6, 6, 2), 3.5)), 3, 2)
        assert out.shape == (2, 3, 2, 2)
        np.testing.assert_array_equal(out.values, 3.5)

    def test_single_output_pixel_samples_the_center(self):
        field = np.arange(9.0).reshape(1, 3, 3, 1)
        assert downsample_bilinear(cube_of(field), 1, 1).values[0, 0, 0, 0] == 4.0

    def test_errors(self, rng):
        cube = cube_of(rng.normal(size=(1, 4, 4, 1)))
        with pytest.raises(DataError):
            downsample_bilinear(cube, 5, 4)
        with pytest.raises(DataError):
            downsample_bilinear(cube, 0, 4)
        cube.values[0, 0, 0, 0] = np.nan
        with pytest.raises(NonFiniteError):
            downsample_bilinear(cube, 2, 2)
