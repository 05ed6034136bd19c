import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clipsgd.criteria import ccc, ccc_zero_limit, csc, eta_star, report
from clipsgd.factors import reduction
from clipsgd.noise import Gaussian, RademacherLike, SymmetricExponential, Uniform
from clipsgd.ode import solve_isotropic
from clipsgd.schedules import Schedule
from clipsgd.spectra import default_v0, identity_spectrum, power_law_spectrum

CONTINUOUS = [Gaussian(1.0), Uniform(1.5), SymmetricExponential(1.2)]


def noises():
    s = st.floats(0.1, 8.0)
    return st.one_of(
        s.map(Gaussian),
        st.tuples(st.floats(0.05, 1.0), s).map(lambda t: RademacherLike(*t)),
        s.map(Uniform),
        s.map(lambda x: SymmetricExponential(1 / x)),
    )


class TestCsc:
    def test_unclipped(self):
        assert csc(Gaussian(1.0), 0.5, math.inf) == 1.0

    @pytest.mark.parametrize("noise", CONTINUOUS, ids=repr)
    def test_small_c_exceeds_one(self, noise):
        for c in np.logspace(-6, -3, 10):
            assert csc(noise, 0.5, c) > 1

    @pytest.mark.parametrize("noise", CONTINUOUS, ids=repr)
    def test_zero_threshold_limit(self, noise):
        assert csc(noise, 0.5, 0.0) == math.inf

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_rademacher_band_below_one(self, p):
        lam = 2.0
        r = 1e-4 * lam**2
        for c in np.linspace(math.sqrt(1 - p) * lam, lam, 12, endpoint=False)[1:]:
            assert csc(RademacherLike(p, lam), r, c) <= 1

    def test_fig2a_curve_crosses_one(self):
        noise = RademacherLike.from_sigma(9.0, 0.7)
        vals = np.array([csc(noise, 3.0, c) for c in np.logspace(-2, 3, 300)])
        assert vals.max() > 1 and vals.min() < 1


class TestCcc:
    def test_gaussian_small_c_limit(self):
        assert ccc(Gaussian(1.0), 0.7, 1e-6) == pytest.approx(2 / math.pi, abs=1e-6)
        assert ccc(Gaussian(1.0), 0.7, 0.0) == pytest.approx(2 / math.pi, abs=1e-12)
        assert 2 / math.pi == pytest.approx(0.63662, abs=1e-5)

    def test_unclipped(self):
        assert ccc(Uniform(1.0), 0.1, math.inf) == 1.0

    @pytest.mark.parametrize("p, lam, c", [(0.5, 2.0, 0.4), (0.2, 1.0, 0.5), (0.7, 3.0, 0.6)])
    def test_rademacher_small_risk(self, p, lam, c):
        want = (1 - p) ** 2 * lam**2 / c**2
        assert want > 1
        got = ccc(RademacherLike(p, lam), 0.0, c)
        assert got == pytest.approx(want, rel=1e-12)
        assert ccc(RademacherLike(p, lam), 1e-8, c) == pytest.approx(want, rel=1e-3)

    @given(noises(), st.floats(0.0, 10.0), st.floats(1e-3, 1e3))
    def test_ccc_implies_csc(self, noise, r, c):
        a, b = ccc(noise, r, c), csc(noise, r, c)
        assert a <= b * (1 + 1e-12)
        if a > 1:
            assert b > 1

    @given(st.floats(0.0, 20.0), st.floats(0.05, 10.0))
    def test_gaussian_never_exceeds_one(self, r, sigma):
        for c in np.logspace(-3, 3, 40) * math.sqrt(2 * r + sigma**2):
            assert ccc(Gaussian(sigma), r, c) <= 1 + 1e-9

    @pytest.mark.parametrize("noise", CONTINUOUS + [RademacherLike(0.4, 1.0)], ids=repr)
    def test_zero_limit_matches_numerics(self, noise):
        r = 0.3
        c = 1e-5 * math.sqrt(2 * r + noise.variance())
        assert ccc(noise, r, c) == pytest.approx(ccc_zero_limit(noise, r), rel=1e-4)

    def test_atom_at_zero_limit(self):
        assert ccc_zero_limit(RademacherLike(0.5, 1.0), 0.0) == math.inf


class TestEtaStar:
    def test_isotropic_noiseless(self):
        spec = identity_spectrum(10)
        er, ed = eta_star(default_v0(spec), spec, Gaussian(0.0), math.inf)
        assert er == pytest.approx(2.0)
        assert ed == pytest.approx(2.0)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
    def test_isotropic_noisy(self, sigma):
        spec = identity_spectrum(10)
        v = default_v0(spec)
        r = float(v @ spec.eigenvalues)
        er, ed = eta_star(v, spec, Gaussian(sigma), math.inf)
        assert er == pytest.approx(4 * r / (2 * r + sigma**2))
        assert ed == pytest.approx(er)

    @pytest.mark.parametrize("c", [0.3, 1.0, math.inf])
    @pytest.mark.parametrize("sigma", [0.0, 0.8])
    def test_zero_of_isotropic_rhs(self, c, sigma):
        spec = identity_spectrum(6)
        v = default_v0(spec)
        noise = Gaussian(sigma)
        er, _ = eta_star(v, spec, noise, c)
        r = float(v.sum())
        h, g = reduction(noise, r, c)
        assert -2 * er * h * r + er**2 * g * (r + sigma**2 / 2) == pytest.approx(0.0, abs=1e-14)

    @given(st.floats(0.01, 100.0))
    def test_homogeneous_without_noise(self, s):
        spec = power_law_spectrum(20, 0.5)
        v = np.linspace(0.1, 1.0, 20)
        a = eta_star(v, spec, Gaussian(0.0), math.inf)
        b = eta_star(s * v, spec, Gaussian(0.0), math.inf)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_rest_state(self):
        spec = identity_spectrum(3)
        with pytest.raises(ValueError, match="at rest"):
            eta_star(np.zeros(3), spec, Gaussian(0.0), 1.0)

    @pytest.mark.parametrize("factor, sign", [(0.99, -1), (1.01, 1)])
    def test_stability_sign(self, factor, sign):
        spec = identity_spectrum(8)
        v = default_v0(spec)
        noise = Gaussian(1.0)
        er, _ = eta_star(v, spec, noise, 0.5)
        tr = solve_isotropic(float(v.sum()), noise, Schedule.constant(er * factor, 0.5), 1e-3, 1e-3)
        assert np.sign(tr.risk[1] - tr.risk[0]) == sign

    def test_report_fields(self):
        spec = identity_spectrum(4)
        rep = report(default_v0(spec), spec, Gaussian(0.5), 1.0)
        assert rep.ccc <= rep.csc
        assert math.isfinite(rep.eta_star_risk) and math.isfinite(rep.eta_star_dist)
