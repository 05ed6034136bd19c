import math

import numpy as np
import pytest

from clipsgd.chsgd import SdeState, em_step, ensemble_sde, run_sde
from clipsgd.factors import reduction
from clipsgd.noise import Gaussian, RademacherLike
from clipsgd.ode import rhs, OdeState, solve
from clipsgd.rng import make_rng
from clipsgd.schedules import Schedule
from clipsgd.spectra import ProblemInstance, identity_spectrum, power_law_spectrum


@pytest.fixture(scope="module")
def small():
    return ProblemInstance(power_law_spectrum(60, 0.3), RademacherLike.from_sigma(0.8, 0.3))


class TestStep:
    def test_fixed_point(self):
        inst = ProblemInstance(identity_spectrum(4), Gaussian(0.0), np.zeros(4))
        state = SdeState(np.zeros(4), 0.0, make_rng(0))
        for _ in range(10):
            em_step(state, inst, 0.5, 1.0, 0.1)
        assert np.all(state.delta == 0)
        assert state.t == pytest.approx(1.0)

    def test_step_formula(self, small):
        delta = small.initial_delta.copy()
        eta, c, dt = 0.6, 0.7, 1e-3
        lam = small.spectrum.eigenvalues
        r = 0.5 * lam @ delta**2
        h, g = reduction(small.noise, r, c)
        p = r + 0.5 * small.noise.variance()
        xi = make_rng(9).standard_normal(lam.size)
        want = (
            delta - eta * h * dt * lam * delta
            + eta * math.sqrt(2 * g * p * dt / small.intrinsic_dim) * np.sqrt(lam) * xi
        )
        got = em_step(SdeState(delta.copy(), 0.0, make_rng(9)), small, eta, c, dt).delta
        np.testing.assert_allclose(got, want, rtol=1e-13)

    def test_unclipped_drift(self):
        inst = ProblemInstance(identity_spectrum(3), Gaussian(0.0), np.array([0.1, 0.2, 0.3]))
        got = em_step(SdeState(inst.initial_delta.copy(), 0.0, make_rng(1)), inst, 0.5, math.inf, 0.01)
        x0 = inst.initial_delta
        r = 0.5 * x0 @ x0
        noise_part = got.delta - x0 * (1 - 0.005)
        assert np.linalg.norm(noise_part) == pytest.approx(
            0.5 * math.sqrt(2 * r * 0.01 / 3) * np.linalg.norm(make_rng(1).standard_normal(3)), rel=1e-12
        )

    def test_mean_increment_matches_ode(self, small):
        # E[dR]/dt over many independent one-step draws equals lam . dv/dt
        eta, c, dt, n = 0.6, 0.7, 1e-4, 40000
        x0 = small.initial_delta
        lam = small.spectrum.eigenvalues
        rng = make_rng(0)
        r = 0.5 * lam @ x0**2
        h, g = reduction(small.noise, r, c)
        p = r + 0.5 * small.noise.variance()
        xi = rng.standard_normal((n, lam.size))
        x1 = x0 - eta * h * dt * lam * x0 + eta * math.sqrt(2 * g * p * dt / small.intrinsic_dim) * np.sqrt(lam) * xi
        dr = 0.5 * (x1**2) @ lam - r
        dv, _ = rhs(OdeState(small.v0), small, eta, c)
        want = lam @ dv
        se = dr.std() / math.sqrt(n) / dt
        assert abs(dr.mean() / dt - want) < 4 * se + 1e-3 * abs(want)

    def test_rejects_bad_dt(self, small):
        with pytest.raises(ValueError):
            em_step(SdeState(small.initial_delta.copy(), 0.0, make_rng(0)), small, 0.5, 1.0, 0.0)


class TestRun:
    def test_deterministic(self, small):
        a = run_sde(small, Schedule.constant(0.6, 0.7), 1.0, seed=5)
        b = run_sde(small, Schedule.constant(0.6, 0.7), 1.0, seed=5)
        np.testing.assert_array_equal(a.risk, b.risk)

    def test_dt_limit(self, small):
        with pytest.raises(ValueError, match="dt must be"):
            run_sde(small, Schedule.constant(0.6), 1.0, dt=2.0 / small.intrinsic_dim)

    def test_rejects_state_dependent(self, small):
        with pytest.raises(ValueError, match="resolved"):
            run_sde(small, Schedule.max_ccc(0.6), 1.0)

    def test_noiseless_isotropic_mean(self):
        inst = ProblemInstance(identity_spectrum(400), Gaussian(0.0))
        stats = ensemble_sde(inst, Schedule.constant(1.0), 2.0, 8, base_seed=0)
        want = inst.initial_risk * np.exp(-np.asarray(stats.times))
        assert np.all(np.abs(stats.mean_risk - want) <= 4 * stats.se_risk + 1e-12)

    def test_finer_dt_tracks_ode(self, small):
        sched = Schedule.constant(0.6, 0.7)
        ode = solve(small, sched, 2.0, 1e-3)
        for dt in (1.0 / small.intrinsic_dim, 0.25 / small.intrinsic_dim):
            stats = ensemble_sde(small, sched, 2.0, 20, base_seed=100, dt=dt)
            assert abs(stats.mean_risk[-1] - ode.final_risk) / ode.final_risk < 0.1

    def test_record_times_match_sgd(self, small):
        from clipsgd.csgd import run

        sde = run_sde(small, Schedule.constant(0.6), 2.0)
        sgd = run(small, Schedule.constant(0.6), math.ceil(2.0 * small.intrinsic_dim), seed=0)
        np.testing.assert_allclose(sde.times, sgd.times, rtol=1e-12)
