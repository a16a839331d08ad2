"""Radial stationary solver on the unit disc.

For rotationally invariant u the stationary equation reads

    (1/r) { r [ (1/r) (r u')' ]' }' = (1/r) u' u'' + lambda h(r).

One exact integration from 0 to r (using u'(0) = 0, which also kills the
integration constant) gives the third-order first-integral form collocated
here:

    r (Lap_r u)' = (u')^2 / 2 + lambda * int_0^r s h(s) ds,

with Lap_r u = u'' + u'/r.  Center regularity (u'(0) = (Lap_r u)'(0) = 0)
is built into the difference stencils by even reflection; the outer
boundary carries u(1) = 0 plus u'(1) = 0 (Dirichlet/clamped) or
Lap_r u(1) = 0 (Navier/hinged).

The solver is a damped Newton iteration on the collocated system; folds in
lambda show up as Newton failures and are bracketed by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import BC_DIRICHLET, BC_NAVIER

__all__ = [
    "RadialProblem", "RadialSolution", "NewtonError", "radial_operators",
    "radial_residual", "radial_residual_fourth_order", "radial_solve",
    "radial_continuation", "ContinuationStep", "FoldBracket",
]


class NewtonError(RuntimeError):
    """Newton failed: singular Jacobian or step collapse (meaningful near folds)."""


@dataclass(frozen=True)
class RadialProblem:
    """Radial problem data on the uniform grid over r in [0, 1]."""

    nr: int
    bc: str
    h: np.ndarray
    lam: float

    def __post_init__(self):
        if self.nr < 16:
            raise ValueError(f"need nr >= 16, got {self.nr}")
        if self.bc not in (BC_DIRICHLET, BC_NAVIER):
            raise ValueError(f"unknown bc {self.bc!r}")
        h = np.asarray(self.h, dtype=float)
        if h.shape != (self.nr,) or not np.all(np.isfinite(h)):
            raise ValueError("h must be nr finite radial samples")
        object.__setattr__(self, "h", h)

    @property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nr)

    @classmethod
    def with_profile(cls, nr: int, bc: str, lam: float,
                     profile: Callable[[np.ndarray], np.ndarray] | None = None):
        r = np.linspace(0.0, 1.0, nr)
        h = np.ones(nr) if profile is None else np.asarray(profile(r), dtype=float)
        return cls(nr=nr, bc=bc, h=h, lam=lam)


@dataclass
class RadialSolution:
    problem: RadialProblem
    u: np.ndarray
    up: np.ndarray
    lap: np.ndarray
    residual: float
    iterations: int
    converged: bool


def _d1_matrix(nr: int, dr: float) -> np.ndarray:
    """First derivative for even functions of r (ghost u[-1] = u[1])."""
    D = np.zeros((nr, nr))
    for i in range(1, nr - 1):
        D[i, i - 1] = -0.5 / dr
        D[i, i + 1] = 0.5 / dr
    # even symmetry at the center: u'(0) = 0 exactly (row stays zero)
    D[-1, -3] = 0.5 / dr
    D[-1, -2] = -2.0 / dr
    D[-1, -1] = 1.5 / dr
    return D


def _lap_matrix(nr: int, dr: float, r: np.ndarray) -> np.ndarray:
    """Radial Laplacian u'' + u'/r with the regular-center closure 4(u1-u0)/dr^2."""
    L = np.zeros((nr, nr))
    L[0, 0] = -4.0 / dr**2
    L[0, 1] = 4.0 / dr**2
    for i in range(1, nr - 1):
        L[i, i - 1] = 1.0 / dr**2 - 0.5 / (dr * r[i])
        L[i, i] = -2.0 / dr**2
        L[i, i + 1] = 1.0 / dr**2 + 0.5 / (dr * r[i])
    # one-sided second-order row at r = 1 (used by the hinged condition)
    L[-1, -4] = -1.0 / dr**2
    L[-1, -3] = 4.0 / dr**2
    L[-1, -2] = -5.0 / dr**2
    L[-1, -1] = 2.0 / dr**2
    L[-1, -3] += 0.5 / dr       # u'/r at r=1: one-sided derivative
    L[-1, -2] += -2.0 / dr
    L[-1, -1] += 1.5 / dr
    return L


@dataclass(frozen=True)
class _RadialOps:
    r: np.ndarray
    dr: float
    D1: np.ndarray
    Lap: np.ndarray
    forcing_integral: np.ndarray  # int_0^r s h(s) ds


def radial_operators(prob: RadialProblem) -> _RadialOps:
    r = prob.r
    dr = r[1] - r[0]
    H = cumulative_trapezoid(r * prob.h, r, initial=0.0)
    return _RadialOps(r=r, dr=dr, D1=_d1_matrix(prob.nr, dr),
                      Lap=_lap_matrix(prob.nr, dr, r), forcing_integral=H)


def radial_residual(u: np.ndarray, prob: RadialProblem,
                    ops: _RadialOps | None = None) -> np.ndarray:
    """First-integral residual r (Lap_r u)' - (u')^2/2 - lambda int_0^r s h."""
    ops = ops or radial_operators(prob)
    up = ops.D1 @ u
    w = ops.Lap @ u
    return ops.r * (ops.D1 @ w) - 0.5 * up**2 - prob.lam * ops.forcing_integral


def radial_residual_fourth_order(u: np.ndarray, prob: RadialProblem) -> np.ndarray:
    """Raw fourth-order residual Lap_r^2 u - u' u''/r - lambda h, interior nodes.

    Differentiation oracle for the first-integral reduction: (1/r) d/dr of
    the first-integral residual equals this expression.
    """
    ops = radial_operators(prob)
    r = ops.r
    w = ops.Lap @ u
    lap2 = ops.Lap @ w
    up = ops.D1 @ u
    upp = np.gradient(up, r, edge_order=2)
    out = np.full_like(u, np.nan)
    out[1:-1] = (lap2[1:-1] - up[1:-1] * upp[1:-1] / r[1:-1]
                 - prob.lam * prob.h[1:-1])
    return out


def _assemble(prob: RadialProblem, ops: _RadialOps, u: np.ndarray):
    """Nonlinear system F(u) = 0 and its Jacobian.

    Rows: collocated first-integral residual at i = 1..nr-2, then u(1) = 0,
    then the second outer condition (u'(1) = 0 clamped, Lap_r u(1) = 0
    hinged).  The center needs no row: even reflection already enforces
    u'(0) = 0 and the i = 0 residual is identically zero.
    """
    nr = prob.nr
    up = ops.D1 @ u
    w = ops.Lap @ u
    A3 = ops.r[:, None] * (ops.D1 @ ops.Lap)      # linear part, all rows
    F = np.empty(nr)
    J = np.empty((nr, nr))
    F[: nr - 2] = (A3 @ u - 0.5 * up**2 - prob.lam * ops.forcing_integral)[1:-1]
    J[: nr - 2] = (A3 - up[:, None] * ops.D1)[1:-1]
    F[nr - 2] = u[-1]
    J[nr - 2] = 0.0
    J[nr - 2, -1] = 1.0
    if prob.bc == BC_DIRICHLET:
        F[nr - 1] = up[-1]
        J[nr - 1] = ops.D1[-1]
    else:
        F[nr - 1] = w[-1]
        J[nr - 1] = ops.Lap[-1]
    return F, J


def _system_norm(F: np.ndarray, dr: float) -> float:
    return float(np.sqrt(dr * np.sum(F**2)))


def _residual_scale(prob: RadialProblem, ops: _RadialOps, u: np.ndarray) -> float:
    """Magnitude of the terms the residual balances; sets the round-off floor.

    The collocated third-order operator carries O(1/dr^3) entries, so an
    absolute tolerance of 1e-10 would be unreachable on fine grids; the
    convergence test is relative to this scale.
    """
    up = ops.D1 @ u
    w = ops.Lap @ u
    mag = (np.abs(ops.r * (ops.D1 @ np.abs(w))) + 0.5 * up**2
           + abs(prob.lam) * ops.forcing_integral)
    return max(_system_norm(mag, ops.dr), abs(prob.lam), 1.0)


def radial_solve(prob: RadialProblem, tol: float = 1e-10, max_iter: int = 50,
                 u0: np.ndarray | None = None) -> RadialSolution:
    """Damped Newton on the collocated first-integral system.

    ``tol`` is relative to the natural scale of the collocated terms.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ops = radial_operators(prob)
    u = np.zeros(prob.nr) if u0 is None else np.array(u0, dtype=float)
    F, J = _assemble(prob, ops, u)
    norm = _system_norm(F, ops.dr)
    iterations = 0
    while True:
        gate = tol * _residual_scale(prob, ops, u)
        if norm <= gate or iterations >= max_iter:
            break
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular Jacobian at iteration {iterations + 1}") from exc
        alpha = 1.0
        for _ in range(40):
            trial = u + alpha * step
            F_t, J_t = _assemble(prob, ops, trial)
            norm_t = _system_norm(F_t, ops.dr)
            if np.isfinite(norm_t) and norm_t < (1.0 - 0.5 * alpha) * norm + gate:
                u, F, J, norm = trial, F_t, J_t, norm_t
                break
            alpha *= 0.5
        else:
            raise NewtonError(
                f"step collapse at iteration {iterations + 1} (residual {norm:.3e})"
            )
        iterations += 1
    return RadialSolution(
        problem=prob, u=u, up=ops.D1 @ u, lap=ops.Lap @ u,
        residual=norm, iterations=iterations,
        converged=norm <= tol * _residual_scale(prob, ops, u),
    )


@dataclass
class ContinuationStep:
    lam: float
    converged: bool
    norm_sup: float | None
    failure: str | None = None


@dataclass
class FoldBracket:
    lam_ok: float | None
    lam_fail: float | None
    steps: list[ContinuationStep]
    last_solution: RadialSolution | None

    @property
    def relative_width(self) -> float | None:
        if self.lam_ok is None or self.lam_fail is None or self.lam_ok == 0:
            return None
        return (self.lam_fail - self.lam_ok) / self.lam_ok


def radial_continuation(prob_template: RadialProblem, lam_steps,
                        tol: float = 1e-10, rel_width: float = 1e-3,
                        max_bisect: int = 60) -> FoldBracket:
    """Warm-started continuation in lambda with fold bracketing.

    Marches the increasing lambda steps, warm-starting Newton from the last
    solution; at the first failure, bisects between the last good and the
    failed lambda until the bracket is narrower than ``rel_width``
    (relative).  Failures are data, not errors.
    """
    lams = [float(l) for l in lam_steps]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda steps must be strictly increasing")
    steps: list[ContinuationStep] = []
    u_warm = None
    lam_ok = None
    lam_fail = None
    last_sol = None

    def attempt(lam: float, warm):
        prob = replace(prob_template, lam=lam)
        try:
            sol = radial_solve(prob, tol=tol, u0=warm)
        except NewtonError as exc:
            return None, str(exc)
        if not sol.converged:
            return None, f"no convergence in {sol.iterations} iterations"
        return sol, None

    for lam in lams:
        sol, failure = attempt(lam, u_warm)
        if sol is not None:
            steps.append(ContinuationStep(lam, True, float(np.max(np.abs(sol.u)))))
            u_warm, lam_ok, last_sol = sol.u, lam, sol
        else:
            steps.append(ContinuationStep(lam, False, None, failure))
            lam_fail = lam
            break

    if lam_fail is not None and lam_ok is not None:
        for _ in range(max_bisect):
            if (lam_fail - lam_ok) / lam_ok <= rel_width:
                break
            mid = 0.5 * (lam_ok + lam_fail)
            sol, failure = attempt(mid, u_warm)
            if sol is not None:
                steps.append(ContinuationStep(mid, True, float(np.max(np.abs(sol.u)))))
                u_warm, lam_ok, last_sol = sol.u, mid, sol
            else:
                steps.append(ContinuationStep(mid, False, None, failure))
                lam_fail = mid

    return FoldBracket(lam_ok=lam_ok, lam_fail=lam_fail, steps=steps,
                       last_solution=last_sol)
