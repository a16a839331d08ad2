import numpy as np
import pytest

from hgl import evolution as ev
from hgl import stationary as st
from hgl.grid import BC_DIRICHLET, BC_NAVIER, GridField2D, GridSpec, sobolev_norms


def problem(n=32, bc=BC_NAVIER, lam=0.0):
    spec = GridSpec(n, n)
    return st.ProblemSpec(grid=spec, bc=bc, h=st.h_sine(spec, bc), lam=lam)


def sine_ic(spec, amp, bc=BC_NAVIER):
    f = st.h_sine(spec, bc)
    return f.with_values(amp * f.values)


class TestImexStep:
    def test_zero_fixed(self):
        ps = problem(16)
        u = GridField2D.zeros(ps.grid)
        assert np.all(ev.imex_step(u, ps, 1e-3).values == 0.0)

    def test_linear_eigenmode_decay_factor(self):
        # one step scales the first sine mode by ~1/(1 + dt 4 pi^4) + O(eps^2)
        ps = problem(64)
        eps, dt = 1e-8, 1e-3
        u = sine_ic(ps.grid, eps)
        ratio = ev.imex_step(u, ps, dt).values[32, 32] / u.values[32, 32]
        assert ratio == pytest.approx(1.0 / (1.0 + dt * 4 * np.pi**4), rel=1e-3)

    @pytest.mark.parametrize("dt", [1e-5, 1e-4, 1e-3, 1e-2, 1e-1])
    def test_unconditional_linear_stability(self, dt):
        ps = problem(32)
        u = sine_ic(ps.grid, 1e-10)
        n0 = sobolev_norms(u).sobolev22
        n1 = sobolev_norms(ev.imex_step(u, ps, dt)).sobolev22
        assert n1 <= n0 * (1 + 1e-12)

    def test_dirichlet_step_runs(self):
        ps = problem(24, bc=BC_DIRICHLET)
        u = sine_ic(ps.grid, 0.1, BC_DIRICHLET)
        out = ev.imex_step(u, ps, 1e-4)
        assert np.all(np.isfinite(out.values))
        assert out.boundary_max == 0.0


class TestEvolve:
    def test_zero_initial_decays_immediately(self):
        ps = problem(24)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=GridField2D.zeros(ps.grid), dt=1e-3, t_max=0.1))
        assert trace.outcome == ev.OUTCOME_DECAYED
        assert trace.times[-1] == 0.0

    def test_small_data_decays_monotonically(self):
        ps = problem(48)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_ic(ps.grid, 1e-2), dt=1e-4, t_max=0.1))
        assert trace.outcome == ev.OUTCOME_DECAYED
        assert trace.monotone_decreasing()
        assert trace.sobolev22[-1] <= ev.DECAY_FLOOR

    def test_large_data_blows_up(self):
        ps = problem(48)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_ic(ps.grid, 1e3), dt=1e-7, t_max=1e-3))
        assert trace.outcome == ev.OUTCOME_BLOWUP
        assert trace.t_star_estimate is not None
        assert np.isfinite(trace.t_star_estimate)
        assert trace.t_star_estimate >= trace.times[-1]
        assert trace.sobolev22[-1] >= 1e6 * trace.sobolev22[0]
        growth = np.diff(np.log(trace.sobolev22[-8:]))
        assert np.all(np.diff(growth) > 0)  # accelerating

    def test_horizon_outcome(self):
        ps = problem(24)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_ic(ps.grid, 1e-2), dt=1e-4, t_max=2e-3))
        assert trace.outcome == ev.OUTCOME_HORIZON
        assert trace.times[-1] == pytest.approx(2e-3)

    def test_series_lengths_match(self):
        ps = problem(24)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_ic(ps.grid, 1e-2), dt=1e-4, t_max=2e-3))
        assert len(trace.times) == len(trace.sobolev22) == len(trace.energies)

    def test_decay_dichotomy_monotone_in_amplitude(self):
        ps = problem(32)
        outcomes = {}
        for amp in (1e-2, 1e-1, 1e3):
            trace = ev.evolve(ev.EvolutionConfig(
                spec=ps, u0=sine_ic(ps.grid, amp), dt=1e-5, t_max=0.05))
            outcomes[amp] = trace.outcome
        decayed = [a for a, o in outcomes.items() if o == ev.OUTCOME_DECAYED]
        assert decayed, outcomes
        a_max = max(decayed)
        assert all(outcomes[a] == ev.OUTCOME_DECAYED
                   for a in outcomes if a <= a_max)
        assert outcomes[1e3] == ev.OUTCOME_BLOWUP

    def test_invalid_config_rejected(self):
        ps = problem(16)
        with pytest.raises(ValueError):
            ev.EvolutionConfig(spec=ps, u0=GridField2D.zeros(ps.grid),
                               dt=0.0, t_max=1.0)
        bad = GridField2D(ps.grid, np.ones((16, 16)))
        with pytest.raises(ValueError, match="boundary"):
            ev.EvolutionConfig(spec=ps, u0=bad, dt=1e-3, t_max=1.0)


class TestSteadyStateCompatibility:
    def test_stationary_solution_is_fixed_point(self):
        ps = problem(48, bc=BC_NAVIER, lam=1e-2)
        sol = st.fixed_point_solve(ps, tol=1e-13)
        u1 = ev.imex_step(sol.u, ps, 1e-3)
        move = sobolev_norms(sol.u.with_values(u1.values - sol.u.values)).sobolev22
        assert move <= 1e-8 * sobolev_norms(sol.u).sobolev22


class TestConsistencyOrders:
    @staticmethod
    def manufactured(spec):
        xx, yy = spec.meshgrid()
        sin = np.sin(np.pi * xx) * np.sin(np.pi * yy)
        coscos = np.cos(np.pi * xx) * np.cos(np.pi * yy)

        def u_star(t):
            return np.exp(-t) * sin

        def source(t):
            e = np.exp(-t)
            det = np.pi**4 * e**2 * (sin**2 - coscos**2)
            return (-1.0 + 4 * np.pi**4) * e * sin - det

        return u_star, source

    def run_forced(self, n, dt, t_end):
        spec = GridSpec(n, n)
        ps = st.ProblemSpec(grid=spec, bc=BC_NAVIER, h=st.h_const(spec), lam=1.0)
        u_star, source = self.manufactured(spec)
        cfg = ev.EvolutionConfig(
            spec=ps, u0=GridField2D(spec, u_star(0.0)), dt=dt, t_max=t_end,
            h_provider=source, blowup_norm_cap=1e12)
        trace = ev.evolve(cfg)
        assert trace.outcome == ev.OUTCOME_HORIZON
        return np.abs(trace.final.values - u_star(t_end)).max()

    def test_first_order_in_time(self):
        # successive differences cancel the fixed spatial error
        t_end = 0.02
        errs = [self.run_forced(48, dt, t_end) for dt in (2e-3, 1e-3, 5e-4)]
        order = np.log2((errs[0] - errs[1]) / (errs[1] - errs[2]))
        assert order >= 0.85

    def test_second_order_in_space(self):
        t_end = 2e-3
        errs = [self.run_forced(n, 2e-5, t_end) for n in (24, 48)]
        assert np.log2(errs[0] / errs[1]) >= 1.9


class TestEnergyMonitor:
    def test_requires_snapshots(self):
        ps = problem(16)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=GridField2D.zeros(ps.grid), dt=1e-3, t_max=1e-2))
        with pytest.raises(ValueError, match="snapshot"):
            ev.energy_monitor(trace, ps)

    def test_zero_trajectory_zero_series(self):
        ps = problem(16)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=GridField2D.zeros(ps.grid), dt=1e-3, t_max=1e-2,
            snapshot_every=1))
        series = ev.energy_monitor(trace, ps)
        assert np.all(series == 0.0)

    def test_dirichlet_decay_energy_decreases_to_zero(self):
        ps = problem(32, bc=BC_DIRICHLET)
        trace = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_ic(ps.grid, 1e-2, BC_DIRICHLET), dt=1e-4,
            t_max=0.05, snapshot_every=50))
        series = ev.energy_monitor(trace, ps)
        assert np.all(np.diff(series) <= 1e-14)
        assert abs(series[-1]) < abs(series[0])
