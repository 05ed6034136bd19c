import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clipsgd import csgd
from clipsgd.csgd import SgdState, ensemble, record_every_default, run, sgd_step
from clipsgd.noise import Gaussian, RademacherLike
from clipsgd.rng import make_rng
from clipsgd.schedules import Schedule
from clipsgd.spectra import ProblemInstance, identity_spectrum, power_law_spectrum


@pytest.fixture(scope="module")
def small():
    return ProblemInstance(power_law_spectrum(80, 0.3), Gaussian(0.5))


def replay(instance, seed):
    """The (a, eps) pair sgd_step draws first from this seed."""
    rng = make_rng(seed)
    a = instance.spectrum.sqrt_eigenvalues * rng.standard_normal(instance.spectrum.ambient_dim)
    return a, instance.noise.sample(rng)


class TestStep:
    def test_fixed_point_without_noise(self):
        inst = ProblemInstance(identity_spectrum(5), Gaussian(0.0), np.zeros(5))
        state = SgdState(np.zeros(5), 0, make_rng(1))
        for _ in range(20):
            sgd_step(state, inst, 0.5, 1.0)
        assert np.all(state.delta == 0)

    def test_unclipped_is_plain_update(self, small):
        delta = small.initial_delta.copy()
        a, eps = replay(small, 3)
        want = delta - 0.7 * (a @ delta - eps) * a
        state = sgd_step(SgdState(delta.copy(), 0, make_rng(3)), small, 0.7, math.inf)
        np.testing.assert_allclose(state.delta, want, rtol=1e-14, atol=1e-15)

    def test_clip_halves_large_gradient(self, small):
        delta = small.initial_delta.copy()
        a, eps = replay(small, 4)
        gnorm = abs(a @ delta - eps) * np.linalg.norm(a)
        plain = sgd_step(SgdState(delta.copy(), 0, make_rng(4)), small, 0.3, math.inf).delta
        half = sgd_step(SgdState(delta.copy(), 0, make_rng(4)), small, 0.3, gnorm / 2).delta
        np.testing.assert_allclose(half - delta, 0.5 * (plain - delta), rtol=1e-12)

    def test_small_gradient_untouched(self, small):
        delta = small.initial_delta.copy()
        a = sgd_step(SgdState(delta.copy(), 0, make_rng(5)), small, 0.3, 1e12).delta
        b = sgd_step(SgdState(delta.copy(), 0, make_rng(5)), small, 0.3, math.inf).delta
        np.testing.assert_array_equal(a, b)

    @given(st.floats(1e-3, 3.0), st.floats(1e-3, 10.0), st.integers(0, 500))
    def test_step_norm_bound(self, eta, c, seed):
        inst = ProblemInstance(identity_spectrum(6), RademacherLike(0.3, 2.0))
        state = SgdState(inst.initial_delta.copy(), 0, make_rng(seed))
        before = state.delta.copy()
        sgd_step(state, inst, eta, c, check=True)
        # the difference of two O(1) vectors carries ~1e-16 / step absolute error
        assert np.linalg.norm(state.delta - before) <= eta * c * (1 + 1e-12) + 1e-14


class TestRun:
    def test_deterministic(self, small):
        a = run(small, Schedule.constant(0.7, 0.5), 300, seed=11)
        b = run(small, Schedule.constant(0.7, 0.5), 300, seed=11)
        np.testing.assert_array_equal(a.risk, b.risk)
        c = run(small, Schedule.constant(0.7, 0.5), 300, seed=12)
        assert not np.array_equal(a.risk, c.risk)

    def test_one_pass(self, small):
        tr = run(small, Schedule.constant(0.7), 137, seed=0)
        assert tr.meta["samples"] == 137

    def test_recording_grid(self, small):
        m = record_every_default(small.intrinsic_dim)
        tr = run(small, Schedule.constant(0.7), 101, seed=0)
        steps = np.rint(tr.times * small.intrinsic_dim).astype(int)
        assert steps[0] == 0 and steps[-1] == 101
        assert np.all(steps[1:-1] % m == 0)
        assert tr.risk[0] == pytest.approx(small.initial_risk)

    def test_noiseless_isotropic_contracts(self):
        inst = ProblemInstance(identity_spectrum(200), Gaussian(0.0))
        tr = run(inst, Schedule.constant(0.5), 2000, seed=2)
        assert tr.final_risk < 1e-3 * inst.initial_risk
        assert np.all(np.diff(tr.risk) < 0)


class TestEnsemble:
    def test_worker_count_invariant(self, small):
        sched = Schedule.constant(0.7, 0.5)
        one = ensemble(small, sched, 120, 4, base_seed=7, workers=1)
        two = ensemble(small, sched, 120, 4, base_seed=7, workers=2)
        np.testing.assert_array_equal(one.mean_risk, two.mean_risk)
        np.testing.assert_array_equal(one.lo_risk, two.lo_risk)

    def test_env_default(self, monkeypatch):
        monkeypatch.setenv(csgd.WORKERS_ENV, "3")
        assert csgd.default_workers() == 3
        monkeypatch.delenv(csgd.WORKERS_ENV)
        assert csgd.default_workers() == 1

    def test_band_contains_median(self, small):
        stats = ensemble(small, Schedule.constant(0.7, 0.5), 200, 21, base_seed=0)
        trajs = [run(small, Schedule.constant(0.7, 0.5), 200, seed=j) for j in range(21)]
        med = np.median(np.array([t.risk for t in trajs]), axis=0)
        assert np.all(stats.lo_risk <= med) and np.all(med <= stats.hi_risk)
        assert stats.n_runs == 21

    def test_needs_two_runs(self, small):
        with pytest.raises(ValueError):
            ensemble(small, Schedule.constant(0.7), 10, 1, base_seed=0)

    def test_rejects_state_dependent(self, small):
        with pytest.raises(ValueError):
            run(small, Schedule.max_ccc(0.7), 10, seed=0)
