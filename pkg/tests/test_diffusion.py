import math

import numpy as np
import pytest

import oracles
from epcfg import (
    DegenerateAlpha,
    DiffusionSchedule,
    GuidanceParams,
    IndexOutOfRange,
    InvalidRange,
    MixtureModel,
    ShapeMismatch,
    analytic_x0,
    ddim_step,
    eps_from_x0,
    responsibilities,
    sample_batch,
    sample_trajectory,
    vp_schedule,
)

COND = MixtureModel.from_components([(1.0, 2.0, 0.5)])
UNCOND = MixtureModel.from_components([(0.5, 2.0, 0.5), (0.5, -2.0, 0.5)])


class TestMixtureModel:
    def test_validation(self):
        with pytest.raises(InvalidRange):
            MixtureModel([0.5, 0.6], [0.0, 1.0], [1.0, 1.0])
        with pytest.raises(InvalidRange):
            MixtureModel([1.0], [0.0], [0.0])
        with pytest.raises(ShapeMismatch):
            MixtureModel([0.5, 0.5], [[0.0, 1.0]], [1.0, 1.0])

    def test_dim(self):
        m = MixtureModel.from_components([(0.4, [0, 1, 2], 1.0), (0.6, [1, 1, 1], 0.5)])
        assert m.dim == 3 and m.n_components == 2

    def test_sample_moments(self):
        x = UNCOND.sample(20000, np.random.default_rng(0))
        assert abs(x.mean()) < 3 * math.sqrt(4.25 / 20000)
        assert x.var() == pytest.approx(4.25, rel=0.05)


class TestSchedule:
    def test_zero_noise(self):
        assert vp_schedule(3, 0.0, 0.0).alpha_bar.tolist() == [1.0, 1.0, 1.0, 1.0]

    def test_single_step(self):
        assert vp_schedule(1, 0.5, 0.5).alpha_bar.tolist() == [1.0, 0.5]

    def test_defaults_match_loop_oracle(self):
        s = vp_schedule()
        assert s.steps == 50
        np.testing.assert_allclose(s.alpha_bar, oracles.alpha_bar(50, 1e-4, 0.2), rtol=1e-12)
        assert np.all(np.diff(s.alpha_bar) < 0)
        assert 0 < s.alpha_bar[-1] < 1

    @pytest.mark.parametrize("args", [(0, 0.1, 0.2), (5, 0.3, 0.2), (5, -0.1, 0.2), (5, 0.1, 1.0)])
    def test_invalid(self, args):
        with pytest.raises(InvalidRange):
            vp_schedule(*args)

    def test_schedule_invariants(self):
        with pytest.raises(InvalidRange):
            DiffusionSchedule([0.9, 0.5])
        with pytest.raises(InvalidRange):
            DiffusionSchedule([1.0, 0.5, 0.6])
        with pytest.raises(InvalidRange):
            DiffusionSchedule([1.0, 0.0])


class TestAnalyticX0:
    def test_no_noise(self):
        x = np.array([0.7])
        assert analytic_x0(UNCOND, x, 1.0).tobytes() == x.tobytes()

    def test_point_mass(self):
        m = MixtureModel.from_components([(1.0, [1.5, -2.0], 1e-9)])
        for x in ([0.0, 0.0], [10.0, -3.0]):
            np.testing.assert_allclose(analytic_x0(m, x, 0.5), [1.5, -2.0], atol=1e-12)

    @pytest.mark.parametrize("x_t", [-3.0, -0.5, 0.0, 0.4, 1.7, 4.0])
    def test_quadrature(self, x_t):
        expected = oracles.posterior_mean_1d([0.5, 0.5], [2.0, -2.0], [0.5, 0.5], x_t, 0.5)
        assert analytic_x0(UNCOND, [x_t], 0.5)[0] == pytest.approx(expected, abs=1e-6)

    def test_responsibilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        m = MixtureModel.from_components(
            [(0.2, [0, 0], 0.3), (0.3, [3, 1], 1.0), (0.5, [-2, 5], 0.1)]
        )
        X = rng.standard_normal((500, 2)) * 20
        for ab in (1e-3, 0.3, 0.9, 1.0):
            r = responsibilities(m, X, ab)
            np.testing.assert_allclose(r.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(r >= 0)

    def test_single_component_affine(self):
        m = MixtureModel.from_components([(1.0, [1.0, -1.0], 0.7)])
        a, b = np.array([0.3, 2.0]), np.array([-1.0, 0.5])
        f = [analytic_x0(m, a + t * (b - a), 0.4) for t in (0.0, 0.5, 1.0)]
        np.testing.assert_allclose(f[1], 0.5 * (f[0] + f[2]), rtol=1e-12)

    def test_batch_shape(self):
        X = np.zeros((7, 1))
        assert analytic_x0(UNCOND, X, 0.3).shape == (7, 1)

    def test_dim_mismatch(self):
        with pytest.raises(ShapeMismatch):
            analytic_x0(UNCOND, [0.0, 1.0], 0.5)


class TestEps:
    def test_noiseless(self):
        ab = 0.36
        x0 = np.array([1.0, -2.0])
        np.testing.assert_allclose(eps_from_x0(math.sqrt(ab) * x0, x0, ab), 0.0, atol=1e-15)

    def test_zero_signal(self):
        x_t = np.array([0.5, -1.0])
        np.testing.assert_allclose(eps_from_x0(x_t, [0.0, 0.0], 0.75), x_t / 0.5, rtol=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for ab in (0.01, 0.5, 0.99):
            x_t, x0 = rng.standard_normal((2, 16))
            eps = eps_from_x0(x_t, x0, ab)
            np.testing.assert_allclose(math.sqrt(ab) * x0 + math.sqrt(1 - ab) * eps, x_t, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("ab", [1.0, 0.0])
    def test_degenerate(self, ab):
        with pytest.raises(DegenerateAlpha):
            eps_from_x0([1.0], [1.0], ab)


class TestDdimStep:
    def test_terminal(self):
        s = vp_schedule(3)
        x0 = np.array([0.25, -1.5])
        assert ddim_step([0.1, 0.2], x0, s, 1).tobytes() == x0.tobytes()

    def test_noop(self):
        s = DiffusionSchedule([1.0, 0.5, 0.5])
        x = np.array([0.3, -0.7])
        assert ddim_step(x, [1.0, 1.0], s, 2).tobytes() == x.tobytes()

    def test_two_step_oracle(self):
        s = vp_schedule(2, 0.1, 0.3)
        rng = np.random.default_rng(42)
        x_t, x0 = rng.standard_normal((2, 5))
        expected = oracles.ddim_update(x_t.tolist(), x0.tolist(), s.alpha_bar[2], s.alpha_bar[1])
        np.testing.assert_allclose(ddim_step(x_t, x0, s, 2), expected, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("t", [0, 4])
    def test_out_of_range(self, t):
        with pytest.raises(IndexOutOfRange):
            ddim_step([0.0], [0.0], vp_schedule(3), t)


class TestSampler:
    sched = vp_schedule(20)

    @pytest.mark.parametrize("space", ["eps", "x0"])
    @pytest.mark.parametrize("mode", ["ep", "std"])
    def test_lambda_one_any_mode_matches_unguided(self, space, mode):
        ref, ref_log = sample_batch(COND, COND, self.sched, GuidanceParams(1.0, "plain"), space, 3, 16)
        x, logs = sample_batch(COND, COND, self.sched, GuidanceParams(1.0, mode), space, 3, 16)
        assert x.tobytes() == ref.tobytes()
        assert [l.moment.tobytes() for l in logs] == [l.moment.tobytes() for l in ref_log]

    def test_unguided_matches_hand_rolled_loop(self):
        x, _ = sample_trajectory(COND, UNCOND, self.sched, GuidanceParams(1.0, "plain"), "x0", seed=9)
        state = np.random.default_rng([9, 0, 0]).standard_normal(1).tolist()
        ab = self.sched.alpha_bar
        for t in range(self.sched.steps, 0, -1):
            x0 = [oracles.posterior_mean_1d([1.0], [2.0], [0.5], state[0], ab[t])]
            state = oracles.ddim_update(state, x0, ab[t], ab[t - 1])
        assert x[0] == pytest.approx(state[0], abs=1e-6)

    def test_deterministic(self):
        params = GuidanceParams(9.0, "ep")
        a = sample_trajectory(COND, UNCOND, self.sched, params, seed=5)
        b = sample_trajectory(COND, UNCOND, self.sched, params, seed=5)
        assert a[0].tobytes() == b[0].tobytes()
        assert a[1] == b[1]

    def test_order_independent(self):
        params = GuidanceParams(5.0, "plain")
        x, logs = sample_batch(COND, UNCOND, self.sched, params, "eps", 11, 8)
        single, log = sample_trajectory(COND, UNCOND, self.sched, params, "eps", 11)
        np.testing.assert_allclose(single, x[0], rtol=1e-13)
        np.testing.assert_allclose(log.moment, logs[0].moment, rtol=1e-12)

    def test_log_shape(self):
        _, logs = sample_batch(COND, UNCOND, self.sched, GuidanceParams(3.0), "eps", 0, 4)
        assert len(logs) == 4
        assert all(len(l) == self.sched.steps for l in logs)
        assert logs[0].step.tolist() == list(range(20, 0, -1))

    @pytest.mark.parametrize("space", ["eps", "x0"])
    def test_energy_preserving_invariant(self, space):
        _, logs = sample_batch(COND, UNCOND, self.sched, GuidanceParams(9.0, "ep"), space, 0, 64)
        for log in logs:
            ok = ~log.fallback_used
            np.testing.assert_allclose(log.e_out[ok], log.e_c[ok], rtol=1e-6)
            np.testing.assert_allclose(log.scale[ok] ** 2 * log.e_cfg[ok], log.e_c[ok], rtol=1e-9)

    def test_multi_dim(self):
        cond = MixtureModel.from_components([(1.0, [1.0, 0.0, -1.0, 2.0], 0.3)])
        uncond = MixtureModel.from_components(
            [(0.5, [1.0, 0.0, -1.0, 2.0], 0.3), (0.5, [-1.0, 1.0, 1.0, 0.0], 0.3)]
        )
        x, logs = sample_batch(cond, uncond, self.sched, GuidanceParams(7.0, "ep"), "eps", 0, 32)
        assert x.shape == (32, 4)
        for log in logs:
            ok = ~log.fallback_used
            np.testing.assert_allclose(log.ratio[ok], 1.0, rtol=1e-6)

    def test_rejects_degenerate_schedule(self):
        with pytest.raises(DegenerateAlpha):
            sample_batch(COND, UNCOND, vp_schedule(3, 0.0, 0.0), GuidanceParams(2.0), "eps", 0, 1)

    def test_rejects_dim_mismatch(self):
        other = MixtureModel.from_components([(1.0, [0.0, 0.0], 1.0)])
        with pytest.raises(ShapeMismatch):
            sample_batch(COND, other, self.sched, GuidanceParams(2.0), "eps", 0, 1)

    def test_rejects_space(self):
        with pytest.raises(ValueError):
            sample_batch(COND, UNCOND, self.sched, GuidanceParams(2.0), "velocity", 0, 1)
