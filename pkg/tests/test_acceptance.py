"""Acceptance suite: one test per criterion, run with `pytest tests/test_acceptance.py -v -s`.

Each test prints a single PASS line with the measured numbers once its
assertions hold at the stated tolerance.
"""

import time

import numpy as np
import pytest

from hgl import cli
from hgl import evolution as ev
from hgl import radial as rd
from hgl import selfsim as ss
from hgl import stationary as st
from hgl.grid import (
    BC_DIRICHLET,
    BC_NAVIER,
    GridField2D,
    GridSpec,
    quadrature,
    sobolev_norms,
    trapezoid_weights,
)


class Timer:
    def __init__(self, budget):
        self.budget = budget

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.budget, (
                f"runtime {self.elapsed:.1f}s exceeds budget {self.budget}s")


def sine_field(spec, amp=1.0, bc=BC_NAVIER):
    return GridField2D.from_function(
        spec, lambda x, y: amp * np.sin(np.pi * x) * np.sin(np.pi * y), bc)


def test_c01_series_launch():
    with Timer(1.0) as t:
        worst = 0.0
        worst_ratio = np.inf
        for a in (1.0, -1.0, 10.0, -10.0):
            target = 3.0 * a * a / 8.0
            devs = []
            for eta0 in (1e-3, 5e-4):
                val = ss.rhs_eta(eta0, *ss.series_start(a, eta0))
                devs.append(abs(val - target) / target)
            assert devs[0] <= 1e-2
            assert devs[0] / devs[1] >= 3.0
            worst = max(worst, devs[0])
            worst_ratio = min(worst_ratio, devs[0] / devs[1])
    print(f"\nACCEPTANCE 1 PASS: series launch, worst dev {worst:.2e} "
          f"(<=1e-2), halving ratio >= {worst_ratio:.2f} (>=3), {t.elapsed:.2f}s")


def test_c02_blowup_suite():
    with Timer(5.0) as t:
        bars = []
        for a in (0.1, 1.0, 10.0, 100.0):
            res = ss.shoot(ss.ShootConfig(slope=a))
            assert res.termination == ss.TERM_BLOWUP, f"a={a}: {res.termination}"
            assert res.eta_bar is not None and np.isfinite(res.eta_bar)
            assert np.all(res.gp > 0.0), f"a={a}: g' not positive throughout"
            cert = ss.blowup_certificate(res)
            assert cert.passed and not cert.degenerate, f"a={a}: certificate"
            bars.append(res.eta_bar)
    print(f"\nACCEPTANCE 2 PASS: blow-up suite, eta_bar = "
          f"{[f'{b:.3f}' for b in bars]}, certificates pass, {t.elapsed:.2f}s")


def test_c03_convexity_near_origin():
    with Timer(5.0) as t:
        for a in (-1.0, -1e2, -1e4):
            res = ss.shoot(ss.ShootConfig(slope=a))
            assert np.all(res.gpp[:11] > 0.0), f"a={a}: g'' not positive early"
    print(f"\nACCEPTANCE 3 PASS: g'' > 0 on the first 10 accepted steps for "
          f"a in {{-1, -1e2, -1e4}}, {t.elapsed:.2f}s")


def test_c04_transform_equivalence():
    from scipy.interpolate import BPoly

    with Timer(5.0) as t:
        cfg = ss.ShootConfig(slope=-1.0, eta_max=10.0, rel_tol=1e-12,
                             abs_tol=1e-14)
        r_eta = ss.shoot(cfg)
        r_log = ss.shoot_log(cfg)
        assert r_eta.termination == r_log.termination == ss.TERM_REACHED_END
        h_eta = BPoly.from_derivatives(
            r_eta.eta, np.column_stack([r_eta.g, r_eta.gp, r_eta.gpp]))
        h_log = BPoly.from_derivatives(
            r_log.eta, np.column_stack([r_log.g, r_log.gp, r_log.gpp]))
        grid = np.geomspace(1e-2, 10.0, 800)
        a, b = h_eta(grid), h_log(grid)
        rel = np.max(np.abs(a - b) / np.abs(a))
        assert rel < 1e-6
    print(f"\nACCEPTANCE 4 PASS: eta/log forms agree to rel {rel:.2e} "
          f"(<=1e-6) on [1e-2, 10], {t.elapsed:.2f}s")


def test_c05_figure1_reproduction(tmp_path):
    with Timer(60.0) as t:
        runs = []
        for tag in ("first", "second"):
            outdir = tmp_path / tag
            code = cli.main(["figures", "fig1", "--outdir", str(outdir)])
            assert code == 0
            runs.append(outdir)
        n_traj = 0
        for panel in ("a", "b", "c", "d"):
            import json

            summary = json.loads(
                (runs[0] / f"panel_{panel}" / "summary.json").read_text())
            for entry in summary["trajectories"]:
                assert entry["termination"] == "ReachedEnd", entry
                a = runs[0] / f"panel_{panel}" / entry["file"]
                b = runs[1] / f"panel_{panel}" / entry["file"]
                assert a.read_bytes() == b.read_bytes(), f"nondeterministic {a}"
                n_traj += 1
        assert n_traj == 14
    print(f"\nACCEPTANCE 5 PASS: figure-1 bundles, {n_traj} trajectories all "
          f"ReachedEnd, byte-identical across reruns, {t.elapsed:.2f}s")


def test_c06_biharmonic_eigenfunction():
    with Timer(5.0) as t:
        errs = {}
        for n in (64, 128):
            spec = GridSpec(n, n)
            f = GridField2D.from_function(
                spec, lambda x, y: 4 * np.pi**4 * np.sin(np.pi * x) * np.sin(np.pi * y))
            u = st.solve_biharmonic(f, BC_NAVIER)
            exact = (np.sin(np.pi * spec.x)[:, None]
                     * np.sin(np.pi * spec.y)[None, :])
            errs[n] = np.abs(u.values - exact).max()
        order = np.log2(errs[64] / errs[128])
        assert errs[128] <= 2e-3
        assert order >= 1.9
    print(f"\nACCEPTANCE 6 PASS: hinged eigenfunction, max err {errs[128]:.2e} "
          f"(<=2e-3) at 128^2, observed order {order:.2f} (>=1.9), {t.elapsed:.2f}s")


def test_c07_energy_oracle():
    with Timer(30.0) as t:
        spec = GridSpec(256, 256)
        ps = st.ProblemSpec(grid=spec, bc=BC_NAVIER, h=st.h_sine(spec), lam=0.0)
        rep = st.energy(sine_field(spec), ps)
        q_rel = abs(rep.quadratic - np.pi**4 / 2) / (np.pi**4 / 2)
        c_rel = abs(rep.cubic - 4 * np.pi**2 / 9) / (4 * np.pi**2 / 9)
        assert q_rel <= 5e-3 and c_rel <= 5e-3

        rng = np.random.default_rng(2024)
        gspec = GridSpec(48, 48)
        gps = st.ProblemSpec(grid=gspec, bc=BC_DIRICHLET,
                             h=st.h_sine(gspec, BC_DIRICHLET), lam=0.4)
        w = trapezoid_weights(gspec)
        xx, yy = gspec.meshgrid()
        worst = 0.0
        for _ in range(5):
            def rand_field():
                v = np.zeros_like(xx)
                for k in range(1, 4):
                    for l in range(1, 4):
                        v += rng.normal() * np.sin(k * np.pi * xx) * np.sin(l * np.pi * yy)
                return GridField2D(gspec, v, BC_DIRICHLET)

            u, v = rand_field(), rand_field()
            G = st.energy_gradient(u, gps)
            pairing = float(np.sum(w * G.values * v.values))
            eps = 1e-6
            jp = st.energy(u.with_values(u.values + eps * v.values), gps).total
            jm = st.energy(u.with_values(u.values - eps * v.values), gps).total
            fd = (jp - jm) / (2 * eps)
            worst = max(worst, abs(pairing - fd) / abs(fd))
        assert worst <= 1e-5
    print(f"\nACCEPTANCE 7 PASS: energy terms rel err ({q_rel:.2e}, {c_rel:.2e}) "
          f"(<=5e-3) at 256^2; gradient vs FD worst rel {worst:.2e} (<=1e-5), "
          f"{t.elapsed:.2f}s")


def test_c08_fixed_point_vs_descent():
    with Timer(60.0) as t:
        spec = GridSpec(64, 64)
        ps = st.ProblemSpec(grid=spec, bc=BC_DIRICHLET,
                            h=st.h_sine(spec, BC_DIRICHLET), lam=1e-2)
        fp = st.fixed_point_solve(ps, tol=1e-12)
        de = st.descent_solve(ps, tol=1e-11)
        assert fp.converged and de.converged
        diff = sobolev_norms(
            fp.u.with_values(fp.u.values - de.u.values)).sobolev22
        assert diff <= 1e-5
        lam_h_norm = np.sqrt(
            quadrature(ps.h.with_values((ps.lam * ps.h.values) ** 2)))
        assert fp.residual <= 1e-6 * lam_h_norm
    print(f"\nACCEPTANCE 8 PASS: picard/descent W22 distance {diff:.2e} "
          f"(<=1e-5), residual/||lam h|| "
          f"{fp.residual / lam_h_norm:.2e} (<=1e-6), {t.elapsed:.2f}s")


def test_c09_radial_fold():
    with Timer(60.0) as t:
        brackets = {}
        for nr in (129, 257):
            tmpl = rd.RadialProblem.with_profile(nr, BC_DIRICHLET, 0.0)
            br = rd.radial_continuation(tmpl, np.geomspace(1.0, 2000.0, 12))
            assert br.lam_ok is not None and br.lam_fail is not None
            assert br.relative_width <= 1e-3
            brackets[nr] = br
        drift = abs(brackets[129].lam_ok - brackets[257].lam_ok) / brackets[257].lam_ok
        assert drift <= 0.05
    print(f"\nACCEPTANCE 9 PASS: fold bracket "
          f"[{brackets[129].lam_ok:.4f}, {brackets[129].lam_fail:.4f}] "
          f"rel width {brackets[129].relative_width:.1e} (<=1e-3), "
          f"nr-doubling drift {drift:.2%} (<=5%), {t.elapsed:.2f}s")


def test_c10_parabolic_dichotomy():
    with Timer(120.0) as t:
        spec = GridSpec(64, 64)
        ps = st.ProblemSpec(grid=spec, bc=BC_NAVIER, h=st.h_sine(spec), lam=0.0)

        small = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_field(spec, 1e-2), dt=1e-4, t_max=0.1))
        assert small.outcome == ev.OUTCOME_DECAYED
        assert small.monotone_decreasing()

        big = ev.evolve(ev.EvolutionConfig(
            spec=ps, u0=sine_field(spec, 1e3), dt=1e-7, t_max=1e-3))
        assert big.outcome == ev.OUTCOME_BLOWUP
        assert big.t_star_estimate is not None and np.isfinite(big.t_star_estimate)
        growth = np.diff(np.log(big.sobolev22[-8:]))
        assert np.all(np.diff(growth) > 0.0)

        ps_s = st.ProblemSpec(grid=spec, bc=BC_NAVIER, h=st.h_sine(spec), lam=1e-2)
        star = st.fixed_point_solve(ps_s, tol=1e-13)
        assert star.converged
        moved = ev.imex_step(star.u, ps_s, 1e-3)
        rel_move = (sobolev_norms(
            star.u.with_values(moved.values - star.u.values)).sobolev22
            / sobolev_norms(star.u).sobolev22)
        assert rel_move <= 1e-8
    print(f"\nACCEPTANCE 10 PASS: A=1e-2 Decayed monotone; A=1e3 BlowUp with "
          f"t* ~ {big.t_star_estimate:.2e}, accelerating; steady-state move "
          f"{rel_move:.2e} (<=1e-8), {t.elapsed:.2f}s")
