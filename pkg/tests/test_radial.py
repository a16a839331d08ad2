import numpy as np
import pytest


from hgl import radial as rd
from hgl.grid import BC_DIRICHLET, BC_NAVIER, GridField2D, GridSpec, hessian_det


def prob(nr=65, bc=BC_DIRICHLET, lam=0.0):
    return rd.RadialProblem.with_profile(nr, bc, lam)


class TestProblem:
    def test_small_grid_rejected(self):
        with pytest.raises(ValueError, match="nr"):
            rd.RadialProblem.with_profile(8, BC_DIRICHLET, 0.0)

    def test_bad_h_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            rd.RadialProblem(nr=32, bc=BC_DIRICHLET,
                             h=np.full(32, np.nan), lam=0.0)


class TestResidual:
    def test_zero_everything(self):
        p = prob(lam=0.0)
        assert np.abs(rd.radial_residual(np.zeros(p.nr), p)).max() == 0.0

    def test_pure_forcing(self):
        # u = 0, lambda = 1, h = 1: residual is minus the forcing integral r^2/2
        p = prob(lam=1.0)
        R = rd.radial_residual(np.zeros(p.nr), p)
        np.testing.assert_allclose(R, -p.r**2 / 2, atol=1e-14)

    def test_vanishes_at_center_for_polynomials(self):
        # zero integration constant: the residual of (1-r^2)^2 is O(r^2)
        # near the center, with O(dr^2) stencil error on the quartic
        errs = []
        for nr in (129, 257):
            p = prob(nr=nr, lam=0.0)
            u = (1.0 - p.r**2) ** 2
            R = rd.radial_residual(u, p)
            assert R[0] == 0.0
            assert np.abs(R[:5]).max() < 32.0 * p.r[4] ** 2 + 1e-2
            # exact profile: r w' - (u')^2/2 with w = -8 + 16 r^2; the
            # boundary-adjacent node sees the one-sided closure, so the
            # second-order check covers the interior
            exact = 32.0 * p.r**2 - 8.0 * p.r**2 * (1 - p.r**2) ** 2
            errs.append(np.abs(R[1:-4] - exact[1:-4]).max())
        assert errs[1] < errs[0] / 3.0

    def test_differentiation_oracle(self):
        # (1/r) d/dr of the first-integral residual recovers the raw
        # fourth-order residual at second order away from the closure
        # nodes (three at each end carry O(1) one-sided/center kinks)
        errs = []
        for nr in (129, 257):
            p = rd.RadialProblem.with_profile(nr, BC_DIRICHLET, 0.7)
            u = np.cos(1.5 * p.r) - np.cos(1.5)
            R1 = rd.radial_residual(u, p)
            R4 = rd.radial_residual_fourth_order(u, p)
            dR1 = np.gradient(R1, p.r, edge_order=2)
            inner = slice(3, -3)
            errs.append(np.abs(dR1[inner] / p.r[inner] - R4[inner]).max())
        assert errs[1] < errs[0] / 3.0


class TestSolve:
    def test_lambda_zero_trivial(self):
        sol = rd.radial_solve(prob(lam=0.0))
        assert sol.converged and sol.iterations == 0
        assert np.all(sol.u == 0.0)

    @pytest.mark.parametrize("bc", [BC_DIRICHLET, BC_NAVIER])
    def test_center_closure(self, bc):
        sol = rd.radial_solve(prob(nr=129, bc=bc, lam=1.0))
        assert sol.converged
        assert sol.up[0] == 0.0  # even reflection is exact
        ops = rd.radial_operators(sol.problem)
        assert (ops.D1 @ sol.lap)[0] == 0.0

    def test_outer_boundary_conditions(self):
        d = rd.radial_solve(prob(nr=129, bc=BC_DIRICHLET, lam=1.0))
        assert abs(d.u[-1]) < 1e-12
        assert abs(d.up[-1]) < 1e-10
        n = rd.radial_solve(prob(nr=129, bc=BC_NAVIER, lam=1.0))
        assert abs(n.u[-1]) < 1e-12
        assert abs(n.lap[-1]) < 1e-9

    def test_linear_scaling_small_lambda(self):
        # ||u|| proportional to lambda, corrections O(lambda^2)
        norms = []
        for lam in (1e-2, 5e-3):
            sol = rd.radial_solve(prob(nr=65, lam=lam))
            norms.append(np.abs(sol.u).max() / lam)
        assert norms[0] == pytest.approx(norms[1], rel=1e-4)

    def test_beyond_fold_fails_from_zero(self):
        p = prob(nr=65, lam=1e4)
        try:
            sol = rd.radial_solve(p, max_iter=60)
        except rd.NewtonError:
            return
        assert not sol.converged


class TestContinuation:
    def test_trivial_step(self):
        br = rd.radial_continuation(prob(lam=0.0), [1e-3])
        assert br.lam_ok == 1e-3 and br.lam_fail is None
        assert br.relative_width is None

    def test_dirichlet_fold_bracket(self):
        br = rd.radial_continuation(prob(nr=65), np.geomspace(1.0, 2000.0, 12))
        assert br.lam_ok is not None and br.lam_fail is not None
        assert br.relative_width <= 1e-3
        # the last converged solution is genuinely nonlinear
        assert np.abs(br.last_solution.u).max() > 1.0

    def test_warm_start_at_least_as_far_as_cold(self):
        br = rd.radial_continuation(prob(nr=65), np.geomspace(1.0, 2000.0, 12))
        # cold Newton at the warm bracket edge: must not exceed it
        try:
            cold = rd.radial_solve(
                rd.RadialProblem.with_profile(65, BC_DIRICHLET, br.lam_fail))
            cold_ok = cold.converged
        except rd.NewtonError:
            cold_ok = False
        assert not cold_ok
        # warm restart from the fold-edge solution converges faster than cold
        lam = br.lam_ok
        warm = rd.radial_solve(rd.RadialProblem.with_profile(65, BC_DIRICHLET, lam),
                               u0=br.last_solution.u)
        cold = rd.radial_solve(rd.RadialProblem.with_profile(65, BC_DIRICHLET, lam))
        assert warm.converged
        assert warm.iterations <= cold.iterations

    def test_nonincreasing_steps_rejected(self):
        with pytest.raises(ValueError):
            rd.radial_continuation(prob(), [1.0, 1.0])


class TestTwoDimensionalConsistency:
    def test_rotated_solution_satisfies_2d_equation(self):
        # sample a converged radial solution onto a disc-inscribed square and
        # measure the full 2D residual with raw interior stencils; the
        # profile is carried by a smooth even fit (Chebyshev in r^2), since
        # a piecewise interpolant's knot noise would be amplified by the
        # fourth-order stencil under refinement
        lam = 5.0
        rsol = rd.radial_solve(prob(nr=513, lam=lam), tol=1e-9)
        assert rsol.converged
        r = rsol.problem.r
        fit = np.polynomial.Chebyshev.fit(r**2, rsol.u, 16, domain=[0, 1])
        assert np.abs(fit(r**2) - rsol.u).max() < 1e-9

        def residual_2d(n):
            s = 0.70
            spec = GridSpec(n, n, lx=2 * s, ly=2 * s, origin=(-s, -s))
            xx, yy = spec.meshgrid()
            u = GridField2D(spec, fit(xx**2 + yy**2), BC_NAVIER)
            h = spec.hx
            v = u.values
            lap = np.zeros_like(v)
            lap[1:-1, 1:-1] = (
                (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1])
                + (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2])) / h**2
            lap2 = ((lap[2:, 1:-1] - 2 * lap[1:-1, 1:-1] + lap[:-2, 1:-1])
                    + (lap[1:-1, 2:] - 2 * lap[1:-1, 1:-1] + lap[1:-1, :-2])) / h**2
            det = hessian_det(u).values
            resid = lap2[1:-1, 1:-1] - det[2:-2, 2:-2] - lam
            return np.abs(resid).max()

        coarse = residual_2d(33)
        fine = residual_2d(65)
        assert fine < coarse / 3.0
        assert fine < 1e-4 * lam
