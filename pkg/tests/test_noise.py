import math

import numpy as np
import pytest
from scipy import stats

from clipsgd.noise import (
    FAMILIES,
    Gaussian,
    RademacherLike,
    SymmetricExponential,
    Uniform,
    noise_from_config,
    noise_from_sigma,
)
from clipsgd.rng import make_rng

N = 1_000_000

MODELS = [Gaussian(0.7), RademacherLike(0.3, 2.0), Uniform(3.0), SymmetricExponential(1.5)]


class TestSampling:
    def test_zero_gaussian(self, rng):
        assert np.all(Gaussian(0.0).sample(rng, 1000) == 0.0)
        assert Gaussian(0.0).sample(rng) == 0.0

    def test_degenerate_rademacher(self, rng):
        x = RademacherLike(1.0, 2.0).sample(rng, N)
        assert set(np.unique(x)) == {-2.0, 2.0}
        assert abs(np.mean(x > 0) - 0.5) < 4 * math.sqrt(0.25 / N)

    def test_rademacher_atoms(self, rng):
        x = RademacherLike(0.2, 1.0).sample(rng, N)
        assert abs(np.mean(x == 0) - 0.8) < 4 * math.sqrt(0.16 / N)

    def test_uniform_variance(self, rng):
        x = Uniform(3.0).sample(rng, N)
        se = np.std(x**2) / math.sqrt(N)
        assert abs(np.mean(x**2) - 3.0) < 4 * se

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
    def test_variance_matches_second_moment(self, model, rng):
        x = model.sample(rng, N)
        se = np.std(x**2) / math.sqrt(N)
        assert abs(np.mean(x**2) - model.variance()) < 4 * se
        assert abs(np.mean(x)) < 4 * math.sqrt(model.variance() / N)

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
    def test_symmetry(self, model):
        a = model.sample(make_rng(1), N)
        b = -model.sample(make_rng(2), N)
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_scalar_sample_is_float(self, rng):
        for m in MODELS:
            assert isinstance(m.sample(rng), float)


class TestVariance:
    def test_gaussian(self):
        assert Gaussian(0.7).variance() == pytest.approx(0.49)

    def test_rademacher_from_sigma(self):
        m = RademacherLike.from_sigma(0.8, 0.2)
        assert m.lam == pytest.approx(0.8 / math.sqrt(0.2))
        assert m.variance() == pytest.approx(0.64)

    def test_uniform(self):
        assert Uniform(3.0).variance() == pytest.approx(3.0)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_from_sigma(self, family):
        assert noise_from_sigma(family, 1.7, 0.4).variance() == pytest.approx(1.7**2)


class TestValidation:
    @pytest.mark.parametrize(
        "factory",
        [
            lambda: Gaussian(-1.0),
            lambda: RademacherLike(0.0, 1.0),
            lambda: RademacherLike(1.5, 1.0),
            lambda: RademacherLike(0.5, 0.0),
            lambda: Uniform(0.0),
            lambda: SymmetricExponential(-2.0),
        ],
    )
    def test_rejects(self, factory):
        with pytest.raises(ValueError):
            factory()

    @pytest.mark.parametrize(
        "cfg, expected",
        [
            ({"family": "gaussian", "sigma": "0.5"}, Gaussian(0.5)),
            ({"family": "rademacher", "p": "0.5", "lambda": "2"}, RademacherLike(0.5, 2.0)),
            ({"family": "uniform", "M": "3"}, Uniform(3.0)),
            ({"family": "exponential", "rate": "2"}, SymmetricExponential(2.0)),
        ],
    )
    def test_from_config(self, cfg, expected):
        assert noise_from_config(cfg) == expected

    def test_missing_key_named(self):
        with pytest.raises(ValueError, match="sigma"):
            noise_from_config({"family": "gaussian"})

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="family"):
            noise_from_config({"family": "cauchy"})
