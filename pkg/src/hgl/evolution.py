"""Semi-implicit time stepping for u_t + Lap^2 u = det(D^2 u) + lambda h.

First-order IMEX splitting: the stiff bilaplacian is implicit, the
determinant nonlinearity and forcing are explicit,

    (I + dt Lap^2) u+ = u + dt (det(D^2 u) + lambda h(t)).

The implicit solve reuses the stationary module's machinery (sine
transform for hinged, preconditioned CG on the clamped operator).  Runs
track the discrete W22 norm; trajectories either reach the horizon, decay
below 1e-8, or cross the blow-up cap, in which case the singular time is
estimated by extrapolating 1/norm -> 0 over the last five samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import BC_NAVIER, GridField2D, hessian_det, sobolev_norms
from .stationary import ProblemSpec, _workspace, energy

OUTCOME_HORIZON = "ReachedHorizon"
OUTCOME_DECAYED = "Decayed"
OUTCOME_BLOWUP = "BlowUp"

DECAY_FLOOR = 1e-8


@dataclass
class EvolutionConfig:
    """One marching run: problem, initial state, step, horizon, thresholds."""

    spec: ProblemSpec
    u0: GridField2D
    dt: float
    t_max: float
    snapshot_every: int = 0          # 0: keep only the final field
    blowup_norm_cap: float | None = None  # default: 1e6 x initial norm
    h_provider: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be positive")
        if self.u0.spec != self.spec.grid:
            raise ValueError("u0 does not live on the problem grid")
        scale = float(np.max(np.abs(self.u0.values)))
        if scale > 0 and self.u0.boundary_max > 1e-9 * scale:
            raise ValueError("u0 must honor the homogeneous boundary condition")


@dataclass
class EvolutionTrace:
    times: np.ndarray
    sobolev22: np.ndarray
    outcome: str
    t_star_estimate: float | None
    energies: np.ndarray | None = None
    snapshots: list[tuple[float, GridField2D]] = field(default_factory=list)
    final: GridField2D | None = None

    def monotone_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.sobolev22) <= 0.0))


def imex_step(u: GridField2D, spec: ProblemSpec, dt: float,
              h_values: np.ndarray | None = None) -> GridField2D:
    """One semi-implicit step; h_values overrides the stationary forcing."""
    ws = _workspace(spec.grid, spec.bc)
    h = spec.h.values if h_values is None else h_values
    rhs = u.values + dt * (hessian_det(u).values + spec.lam * h)
    rhs_int = ws.to_interior(rhs)
    if spec.bc == BC_NAVIER:
        u_int = ws.solve_hinged_shifted(rhs_int, dt)
    else:
        u_int = ws.solve_clamped(rhs_int, shift_dt=dt, rtol=1e-12,
                                 x0=ws.to_interior(u.values))
    return GridField2D(spec.grid, ws.to_full(u_int), spec.bc)


def _extrapolate_t_star(times: np.ndarray, norms: np.ndarray) -> float:
    """Root of the line fitted through 1/norm over the last five samples.

    Heuristic: the theory guarantees norm divergence at T*, not a rate.
    """
    k = min(5, len(times))
    t = times[-k:]
    y = 1.0 / norms[-k:]
    m, b = np.polyfit(t, y, 1)
    if m >= 0.0:
        return float(times[-1])
    return float(max(-b / m, times[-1]))


def evolve(cfg: EvolutionConfig) -> EvolutionTrace:
    """March to the horizon, decay floor, or blow-up cap."""
    spec = cfg.spec
    u = cfg.u0
    norm0 = sobolev_norms(u).sobolev22
    cap = cfg.blowup_norm_cap
    if cap is None:
        cap = 1e6 * max(norm0, 1e-30)

    times = [0.0]
    norms = [norm0]
    energies = [energy(u, spec).total]
    snapshots: list[tuple[float, GridField2D]] = []
    if cfg.snapshot_every:
        snapshots.append((0.0, u))

    def finish(outcome: str) -> EvolutionTrace:
        ts = np.asarray(times)
        ns = np.asarray(norms)
        t_star = _extrapolate_t_star(ts, ns) if outcome == OUTCOME_BLOWUP else None
        return EvolutionTrace(
            times=ts, sobolev22=ns, outcome=outcome, t_star_estimate=t_star,
            energies=np.asarray(energies), snapshots=snapshots, final=u,
        )

    if norm0 <= DECAY_FLOOR:
        return finish(OUTCOME_DECAYED)
    if norm0 >= cap:
        return finish(OUTCOME_BLOWUP)

    n_steps = int(np.ceil(cfg.t_max / cfg.dt))
    for k in range(1, n_steps + 1):
        t_prev = (k - 1) * cfg.dt
        t = min(k * cfg.dt, cfg.t_max)
        h_values = cfg.h_provider(t_prev) if cfg.h_provider is not None else None
        u_next_values = imex_step(u, spec, t - t_prev, h_values=h_values).values
        if not np.all(np.isfinite(u_next_values)):
            # the explicit nonlinearity overshot every bounded set in one
            # step: record an infinite norm and report blow-up
            times.append(t)
            norms.append(np.inf)
            energies.append(np.nan)
            return finish(OUTCOME_BLOWUP)
        u = GridField2D(spec.grid, u_next_values, spec.bc)
        times.append(t)
        norms.append(sobolev_norms(u).sobolev22)
        energies.append(energy(u, spec).total)
        if cfg.snapshot_every and (k % cfg.snapshot_every == 0 or k == n_steps):
            snapshots.append((t, u))
        if norms[-1] >= cap:
            return finish(OUTCOME_BLOWUP)
        if norms[-1] <= DECAY_FLOOR:
            return finish(OUTCOME_DECAYED)
    return finish(OUTCOME_HORIZON)


def energy_monitor(trace: EvolutionTrace, spec: ProblemSpec) -> np.ndarray:
    """Energy along stored snapshots (meaningful for Dirichlet flows)."""
    if not trace.snapshots:
        raise ValueError("trace has no snapshots; run with snapshot_every > 0")
    return np.asarray([energy(u, spec).total for _, u in trace.snapshots])
