import math

import numpy as np
import pytest

from smogcast.core.exceptions import DataError, ShapeMismatchError
from smogcast.metrics import bce, bce_grad_logits, gaussian_window, mse, ssim, ssim_series
from smogcast.models.config import SsimConfig


def ssim_oracle(x, y, c1=1e-4, c2=9e-4):
    n = x.size
    mx = sum(x.ravel()) / n
    my = sum(y.ravel()) / n
    vx = sum((a - mx) ** 2 for a in x.ravel()) / n
    vy = sum((b - my) ** 2 for b in y.ravel()) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x.ravel(), y.ravel())) / n
    return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))


class TestBce:
    def test_half_against_one_is_ln2(self):
        assert bce(np.array([1.0]), np.array([0.5])) == pytest.approx(math.log(2), abs=1e-9)

    def test_half_against_half_is_ln2(self):
        assert bce(np.full(4, 0.5), np.full(4, 0.5)) == pytest.approx(math.log(2), abs=1e-12)

    def test_matches_direct_summation(self, rng):
        y = rng.random(50)
        p = rng.uniform(0.01, 0.99, 50)
        expected = -sum(a * math.log(b) + (1 - a) * math.log(1 - b) for a, b in zip(y, p)) / 50
        assert bce(y, p) == pytest.approx(expected, rel=1e-10)

    def test_minimized_at_target(self):
        grid = np.linspace(0.01, 0.99, 99)
        for target in (0.2, 0.5, 0.7):
            losses = [bce(np.array([target]), np.array([g])) for g in grid]
            assert grid[int(np.argmin(losses))] == pytest.approx(target, abs=0.01)
            assert min(losses) >= 0

    def test_clamps_saturated_predictions(self):
        value = bce(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert math.isfinite(value)
        assert value == pytest.approx(-math.log(1e-7), rel=1e-6)

    def test_logit_gradient(self, rng):
        y = rng.random((2, 3))
        p = rng.random((2, 3))
        np.testing.assert_allclose(bce_grad_logits(y, p), (p - y) / 6)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            bce(np.zeros(3), np.zeros(4))


class TestMse:
    def test_identities(self, rng):
        x = rng.random((3, 4))
        assert mse(x, x) == 0.0
        assert mse(np.zeros(2), np.ones(2)) == 1.0

    def test_symmetric_and_matches_oracle(self, rng):
        a, b = rng.random(40), rng.random(40)
        assert mse(a, b) == mse(b, a)
        assert mse(a, b) == pytest.approx(sum((u - v) ** 2 for u, v in zip(a, b)) / 40, rel=1e-12)

    def test_empty(self):
        with pytest.raises(DataError):
            mse(np.zeros(0), np.zeros(0))


class TestSsim:
    def test_identity(self, rng):
        x = rng.random((8, 8))
        assert ssim(x, x) == pytest.approx(1.0, abs=1e-9)

    def test_constant_zero_images(self):
        assert ssim(np.zeros((4, 4)), np.zeros((4, 4))) == pytest.approx(1.0)

    def test_inverted_image_matches_oracle(self, rng):
        x = rng.random((8, 8))
        y = 1.0 - x
        assert ssim(x, y) == pytest.approx(ssim_oracle(x, y), rel=1e-10)
        assert ssim(x, y) < 0

    def test_symmetric_bounded_and_permutation_invariant(self, rng):
        x, y = rng.random((6, 7)), rng.random((6, 7))
        value = ssim(x, y)
        assert value == pytest.approx(ssim(y, x), abs=1e-15)
        assert -1.0 <= value <= 1.0
        perm = rng.permutation(x.size)
        shuffled = ssim(x.ravel()[perm].reshape(6, 7), y.ravel()[perm].reshape(6, 7))
        assert shuffled == pytest.approx(value, rel=1e-12)

    def test_default_constants(self):
        cfg = SsimConfig()
        assert cfg.c1 == pytest.approx(1e-4)
        assert cfg.c2 == pytest.approx(9e-4)

    def test_gaussian_window_mode(self, rng):
        cfg = SsimConfig(window="gaussian")
        x = rng.random((16, 16))
        assert ssim(x, x, cfg) == pytest.approx(1.0, abs=1e-9)
        value = ssim(x, rng.random((16, 16)), cfg)
        assert -1.0 <= value < 1.0
        # windows larger than the image shrink to fit
        assert ssim(x[:5, :6], x[:5, :6], cfg) == pytest.approx(1.0, abs=1e-9)

    def test_gaussian_window_is_normalized(self):
        win = gaussian_window(11, 1.5)
        assert win.shape == (11, 11)
        assert win.sum() == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(ShapeMismatchError):
            ssim(np.zeros((3, 3)), np.zeros((3, 4)))
        with pytest.raises(DataError):
            ssim(np.zeros((0, 3)), np.zeros((0, 3)))


class TestSsimSeries:
    def test_identical_series(self, rng):
        x = rng.random((5, 6, 6, 1))
        series = ssim_series(x, x)
        assert len(series.values) == 5
        assert all(v == pytest.approx(1.0, abs=1e-9) for _, v in series.values)
        assert series.mean == pytest.approx(1.0, abs=1e-9)

    def test_single_frame_equals_ssim(self, rng):
        a, b = rng.random((1, 6, 6)), rng.random((1, 6, 6))
        assert ssim_series(a, b).mean == ssim(a[0], b[0])
