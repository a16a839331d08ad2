"""Stationary solvers for Lap^2 u = det(D^2 u) + lambda*h on the rectangle.

Two routes to the small solution branch:

* Picard fixed point u+ = (Lap^2)^{-1}(det(D^2 u) + lambda*h) from u0 = 0,
  for both boundary conditions (the constructive contraction argument);
* descent on the energy J(u) = 1/2 int |Lap u|^2 - int u_x u_y u_xy
  - lambda int h u, Dirichlet only (the hinged problem has no known
  functional).

Discrete operators:

* Navier (hinged): the 5-point Laplacian squared on interior nodes, solved
  exactly by sine-transform diagonalization.
* Dirichlet (clamped): the variational closure K = L~^T W L~, where L~
  evaluates the Laplacian on every node with clamped ghost reflection on
  the boundary ring and W holds trapezoid weights.  K agrees with the
  classical 13-point clamped stencil away from the boundary ring, and by
  construction the discrete energy gradient is exactly K u - grad C - that
  is what makes descent and Picard land on the same discrete solution.
  Solved by CG preconditioned with the hinged transform inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.fft import dstn, idstn
from scipy.sparse.linalg import LinearOperator, cg

from .grid import (
    BC_DIRICHLET,
    BC_NAVIER,
    GridField2D,
    GridSpec,
    hessian_det,
    quadrature,
    sobolev_norms,
    trapezoid_weights,
)


class DivergenceError(RuntimeError):
    """Fixed-point iterates left the contraction regime."""

    def __init__(self, lam: float, iterations: int, norm: float):
        super().__init__(
            f"fixed-point iteration diverged at lambda={lam:g} "
            f"(iteration {iterations}, W22 norm {norm:.3e})"
        )
        self.lam = lam
        self.iterations = iterations
        self.norm = norm


class SolverError(RuntimeError):
    """Inner linear solve or line search failed."""


@dataclass(frozen=True)
class ProblemSpec:
    """Domain, boundary condition, forcing profile and intensity."""

    grid: GridSpec
    bc: str
    h: GridField2D
    lam: float

    def __post_init__(self):
        if self.bc not in (BC_DIRICHLET, BC_NAVIER):
            raise ValueError(f"unknown bc {self.bc!r}")
        if self.h.spec != self.grid:
            raise ValueError("forcing h does not live on the problem grid")


@dataclass(frozen=True)
class EnergyReport:
    """The three terms of the growth energy; total = quadratic - cubic - linear."""

    quadratic: float
    cubic: float
    linear: float

    @property
    def total(self) -> float:
        return self.quadratic - self.cubic - self.linear


@dataclass
class StationarySolution:
    u: GridField2D
    residual: float
    iterations: int
    energy: EnergyReport
    converged: bool
    energy_history: list[float] = field(default_factory=list)


def h_const(grid: GridSpec, bc: str = BC_NAVIER) -> GridField2D:
    return GridField2D(grid, np.ones((grid.nx, grid.ny)), bc)


def h_sine(grid: GridSpec, bc: str = BC_NAVIER) -> GridField2D:
    """First sine eigenmode of the rectangle."""
    return GridField2D.from_function(
        grid,
        lambda x, y: np.sin(np.pi * (x - grid.origin[0]) / grid.lx)
        * np.sin(np.pi * (y - grid.origin[1]) / grid.ly),
        bc,
    )


# ---------------------------------------------------------------------------
# cached discrete operators per (grid, bc)
# ---------------------------------------------------------------------------


class _Workspace:
    """Sparse operators and transform plans for one (GridSpec, bc) pair."""

    def __init__(self, grid: GridSpec, bc: str):
        self.grid = grid
        self.bc = bc
        nx, ny = grid.nx, grid.ny
        hx, hy = grid.hx, grid.hy
        mx, my = nx - 2, ny - 2
        self.int_shape = (mx, my)
        self.w_int = hx * hy

        # 1D interior Laplacian eigenvalues of the 5-point stencil
        kx = np.arange(1, mx + 1)
        ky = np.arange(1, my + 1)
        mu_x = (2.0 * np.cos(np.pi * kx / (nx - 1)) - 2.0) / hx**2
        mu_y = (2.0 * np.cos(np.pi * ky / (ny - 1)) - 2.0) / hy**2
        self.lap_eig = mu_x[:, None] + mu_y[None, :]          # negative
        self.biharm_eig = self.lap_eig**2

        self.Ltilde = self._build_ltilde()
        W = sp.diags(trapezoid_weights(grid).ravel())
        self.K = (self.Ltilde.T @ W @ self.Ltilde).tocsr()
        self.Dx, self.Dy, self.Dxy = self._build_first_derivatives()

        def precond(v):
            return self.solve_hinged_biharmonic(v / self.w_int)

        self.K_precond = LinearOperator((mx * my, mx * my), matvec=precond)

    # interior <-> full-grid flattening
    def to_interior(self, values: np.ndarray) -> np.ndarray:
        return values[1:-1, 1:-1].ravel()

    def to_full(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros((self.grid.nx, self.grid.ny))
        out[1:-1, 1:-1] = vec.reshape(self.int_shape)
        return out

    def _build_ltilde(self) -> sp.csr_matrix:
        nx, ny = self.grid.nx, self.grid.ny
        hx, hy = self.grid.hx, self.grid.hy
        mx, my = self.int_shape
        ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        p_all = lambda i, j: i * ny + j
        p_int = lambda i, j: (i - 1) * my + (j - 1)

        rows, cols, vals = [], [], []

        def add(r, i, j, v):
            inside = (1 <= i) & (i <= nx - 2) & (1 <= j) & (j <= ny - 2)
            rows.append(r[inside])
            cols.append(p_int(i[inside], j[inside]))
            vals.append(np.broadcast_to(v, r.shape)[inside])

        r_int = p_all(ii, jj)
        add(r_int, ii, jj, -2.0 / hx**2 - 2.0 / hy**2)
        add(r_int, ii + 1, jj, 1.0 / hx**2)
        add(r_int, ii - 1, jj, 1.0 / hx**2)
        add(r_int, ii, jj + 1, 1.0 / hy**2)
        add(r_int, ii, jj - 1, 1.0 / hy**2)

        if self.bc == BC_DIRICHLET:
            # clamped ghost reflection: Lap u on the boundary ring reduces to
            # 2/h^2 times the adjacent interior value
            j_edge = np.arange(1, ny - 1)
            add(p_all(np.zeros_like(j_edge), j_edge),
                np.ones_like(j_edge), j_edge, 2.0 / hx**2)
            add(p_all(np.full_like(j_edge, nx - 1), j_edge),
                np.full_like(j_edge, nx - 2), j_edge, 2.0 / hx**2)
            i_edge = np.arange(1, nx - 1)
            add(p_all(i_edge, np.zeros_like(i_edge)),
                i_edge, np.ones_like(i_edge), 2.0 / hy**2)
            add(p_all(i_edge, np.full_like(i_edge, ny - 1)),
                i_edge, np.full_like(i_edge, ny - 2), 2.0 / hy**2)
        # navier: odd reflection zeroes the boundary rows entirely

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        return sp.coo_matrix((vals, (rows, cols)),
                             shape=(nx * ny, mx * my)).tocsr()

    def _build_first_derivatives(self):
        nx, ny = self.grid.nx, self.grid.ny
        hx, hy = self.grid.hx, self.grid.hy
        mx, my = self.int_shape
        ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        p_int = lambda i, j: (i - 1) * my + (j - 1)
        r = p_int(ii, jj)

        def build(offsets, scale):
            rows, cols, vals = [], [], []
            for (di, dj, v) in offsets:
                i, j = ii + di, jj + dj
                inside = (1 <= i) & (i <= nx - 2) & (1 <= j) & (j <= ny - 2)
                rows.append(r[inside])
                cols.append(p_int(i[inside], j[inside]))
                vals.append(np.full(inside.sum(), v * scale))
            return sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(mx * my, mx * my)).tocsr()

        Dx = build([(1, 0, 1.0), (-1, 0, -1.0)], 1.0 / (2 * hx))
        Dy = build([(0, 1, 1.0), (0, -1, -1.0)], 1.0 / (2 * hy))
        Dxy = build([(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)],
                    1.0 / (4 * hx * hy))
        return Dx, Dy, Dxy

    # -- transform solves (hinged eigenstructure) ---------------------------
    def _dst(self, vec: np.ndarray) -> np.ndarray:
        return dstn(vec.reshape(self.int_shape), type=1, norm="ortho")

    def _idst(self, coef: np.ndarray) -> np.ndarray:
        return idstn(coef, type=1, norm="ortho").ravel()

    def solve_hinged_biharmonic(self, f_int: np.ndarray) -> np.ndarray:
        return self._idst(self._dst(f_int) / self.biharm_eig)

    def solve_hinged_shifted(self, rhs_int: np.ndarray, dt: float) -> np.ndarray:
        return self._idst(self._dst(rhs_int) / (1.0 + dt * self.biharm_eig))

    def apply_hinged_biharmonic(self, u_int: np.ndarray) -> np.ndarray:
        return self._idst(self._dst(u_int) * self.biharm_eig)

    # -- clamped solves (CG on K with hinged preconditioner) ----------------
    def solve_clamped(self, f_int: np.ndarray, shift_dt: float = 0.0,
                      rtol: float = 1e-12, x0: np.ndarray | None = None) -> np.ndarray:
        """Solve (W + dt K) u = W rhs for dt > 0, or K u = W f for dt = 0."""
        if shift_dt > 0.0:
            A = (self.w_int * sp.identity(self.K.shape[0]) + shift_dt * self.K).tocsr()
            b = self.w_int * f_int

            def pmv(v):
                return self.solve_hinged_shifted(v / self.w_int, shift_dt)

            M = LinearOperator(A.shape, matvec=pmv)
        else:
            A = self.K
            b = self.w_int * f_int
            M = self.K_precond
        x, info = cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=4000, M=M)
        if info != 0:
            resid = float(np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300))
            raise SolverError(
                f"clamped biharmonic CG did not converge (info={info}, "
                f"achieved relative residual {resid:.3e})"
            )
        return x

    def apply_clamped_biharmonic(self, u_int: np.ndarray) -> np.ndarray:
        return (self.K @ u_int) / self.w_int


@lru_cache(maxsize=32)
def _workspace(grid: GridSpec, bc: str) -> _Workspace:
    return _Workspace(grid, bc)


# ---------------------------------------------------------------------------
# energy and gradient
# ---------------------------------------------------------------------------


def _check_field(u: GridField2D, spec: ProblemSpec):
    if u.spec != spec.grid:
        raise ValueError("field does not live on the problem grid")
    scale = np.max(np.abs(u.values))
    if scale > 0 and u.boundary_max > 1e-9 * scale:
        raise ValueError("field does not honor homogeneous boundary values")


def energy(u: GridField2D, spec: ProblemSpec) -> EnergyReport:
    """Quadratic, cubic and forcing terms of the growth energy."""
    _check_field(u, spec)
    ws = _workspace(spec.grid, spec.bc)
    u_int = ws.to_interior(u.values)
    lap_all = ws.Ltilde @ u_int
    w_all = trapezoid_weights(spec.grid).ravel()
    quadratic = 0.5 * float(w_all @ lap_all**2)
    gx = ws.Dx @ u_int
    gy = ws.Dy @ u_int
    gxy = ws.Dxy @ u_int
    cubic = ws.w_int * float(np.sum(gx * gy * gxy))
    linear = spec.lam * ws.w_int * float(ws.to_interior(spec.h.values) @ u_int)
    return EnergyReport(quadratic=quadratic, cubic=cubic, linear=linear)


def energy_gradient(u: GridField2D, spec: ProblemSpec) -> GridField2D:
    """Exact discrete first variation of the energy, zero on the boundary.

    <G, v> under trapezoid quadrature equals d/de J(u + e v) at e = 0 for
    every interior perturbation v, to round-off.
    """
    _check_field(u, spec)
    ws = _workspace(spec.grid, spec.bc)
    u_int = ws.to_interior(u.values)
    grad = ws.K @ u_int
    gx = ws.Dx @ u_int
    gy = ws.Dy @ u_int
    gxy = ws.Dxy @ u_int
    grad -= ws.w_int * (ws.Dx.T @ (gy * gxy) + ws.Dy.T @ (gx * gxy)
                        + ws.Dxy.T @ (gx * gy))
    grad -= spec.lam * ws.w_int * ws.to_interior(spec.h.values)
    return GridField2D(spec.grid, ws.to_full(grad / ws.w_int), spec.bc)


def _grad_l2(spec: ProblemSpec, g_field: GridField2D) -> float:
    ws = _workspace(spec.grid, spec.bc)
    v = ws.to_interior(g_field.values)
    return float(np.sqrt(ws.w_int * np.sum(v**2)))


# ---------------------------------------------------------------------------
# linear solve and the two nonlinear solvers
# ---------------------------------------------------------------------------


def solve_biharmonic(f: GridField2D, bc: str, rtol: float = 1e-10) -> GridField2D:
    """Invert the discrete bilaplacian under the given boundary condition.

    Navier: two nested hinged Poisson solves collapsed into one sine
    transform.  Dirichlet: CG on the clamped operator to relative residual
    ``rtol``, preconditioned by the hinged inverse.
    """
    ws = _workspace(f.spec, bc)
    f_int = ws.to_interior(f.values)
    if bc == BC_NAVIER:
        u_int = ws.solve_hinged_biharmonic(f_int)
    else:
        u_int = ws.solve_clamped(f_int, rtol=rtol)
    return GridField2D(f.spec, ws.to_full(u_int), bc)


def apply_biharmonic(u: GridField2D, bc: str) -> GridField2D:
    """Discrete Lap^2 u on interior nodes (inverse of solve_biharmonic)."""
    ws = _workspace(u.spec, bc)
    u_int = ws.to_interior(u.values)
    if bc == BC_NAVIER:
        out = ws.apply_hinged_biharmonic(u_int)
    else:
        out = ws.apply_clamped_biharmonic(u_int)
    return GridField2D(u.spec, ws.to_full(out), bc)


def pde_residual_norm(u: GridField2D, spec: ProblemSpec) -> float:
    """Quadrature L2 norm of Lap^2 u - det(D^2 u) - lambda h on the interior."""
    ws = _workspace(spec.grid, spec.bc)
    r = (ws.to_interior(apply_biharmonic(u, spec.bc).values)
         - ws.to_interior(hessian_det(u).values)
         - spec.lam * ws.to_interior(spec.h.values))
    return float(np.sqrt(ws.w_int * np.sum(r**2)))


def _forcing_scale(spec: ProblemSpec) -> float:
    lam_h = spec.h.with_values(spec.lam * spec.h.values)
    return float(np.sqrt(quadrature(lam_h.with_values(lam_h.values**2))))


def fixed_point_solve(spec: ProblemSpec, tol: float = 1e-10,
                      max_iter: int = 500) -> StationarySolution:
    """Picard iteration u+ = (Lap^2)^{-1}(det(D^2 u) + lambda h) from u0 = 0.

    Converged when successive iterates are within ``tol`` in the discrete
    W22 norm.  Iterate norms beyond 1e6 times the forcing scale raise
    :class:`DivergenceError` - the numerical shadow of the small-lambda
    existence hypothesis.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ws = _workspace(spec.grid, spec.bc)
    scale = max(_forcing_scale(spec), 1e-14)
    u = GridField2D.zeros(spec.grid, spec.bc)
    lam_h = spec.lam * spec.h.values
    prev_int = None
    for k in range(1, max_iter + 1):
        rhs = u.with_values(hessian_det(u).values + lam_h)
        rhs_int = ws.to_interior(rhs.values)
        if spec.bc == BC_NAVIER:
            u_int = ws.solve_hinged_biharmonic(rhs_int)
        else:
            u_int = ws.solve_clamped(rhs_int, rtol=1e-12, x0=prev_int)
        u_new = GridField2D(spec.grid, ws.to_full(u_int), spec.bc)
        if not np.all(np.isfinite(u_int)):
            raise DivergenceError(spec.lam, k, float("inf"))
        norm = sobolev_norms(u_new).sobolev22
        if norm > 1e6 * scale:
            raise DivergenceError(spec.lam, k, norm)
        delta = sobolev_norms(u.with_values(u_new.values - u.values)).sobolev22
        u = u_new
        prev_int = u_int
        if delta <= tol:
            return StationarySolution(
                u=u, residual=pde_residual_norm(u, spec), iterations=k,
                energy=energy(u, spec), converged=True,
            )
    return StationarySolution(
        u=u, residual=pde_residual_norm(u, spec), iterations=max_iter,
        energy=energy(u, spec), converged=False,
    )


def descent_solve(spec: ProblemSpec, tol: float = 1e-8,
                  max_iter: int = 500) -> StationarySolution:
    """Energy descent with Armijo backtracking, Dirichlet only.

    The step direction is the energy gradient raised through the clamped
    operator (a Sobolev gradient): the raw L2 gradient direction would need
    O(h^-4) steps on a fourth-order problem.  Armijo guarantees the energy
    record is non-increasing.
    """
    if spec.bc != BC_DIRICHLET:
        raise ValueError("descent needs the variational (Dirichlet) setting")
    if tol <= 0:
        raise ValueError("tol must be positive")
    ws = _workspace(spec.grid, spec.bc)
    u = GridField2D.zeros(spec.grid, spec.bc)
    J = energy(u, spec).total
    history = [J]
    for k in range(1, max_iter + 1):
        g_field = energy_gradient(u, spec)
        gnorm = _grad_l2(spec, g_field)
        if gnorm <= tol:
            return StationarySolution(
                u=u, residual=gnorm, iterations=k - 1,
                energy=energy(u, spec), converged=True, energy_history=history,
            )
        g_vec = ws.to_interior(g_field.values) * ws.w_int
        d = ws.solve_clamped(g_vec / ws.w_int, rtol=1e-12)
        slope = float(g_vec @ d)  # = <grad J, d> > 0 since K is SPD
        u_int = ws.to_interior(u.values)
        alpha = 1.0
        for _ in range(60):
            trial = GridField2D(spec.grid, ws.to_full(u_int - alpha * d), spec.bc)
            J_trial = energy(trial, spec).total
            if J_trial <= J - 1e-4 * alpha * slope:
                u, J = trial, J_trial
                history.append(J)
                break
            alpha *= 0.5
        else:
            raise SolverError(
                f"line search stagnated at iteration {k} (|grad| = {gnorm:.3e})"
            )
    g_field = energy_gradient(u, spec)
    return StationarySolution(
        u=u, residual=_grad_l2(spec, g_field), iterations=max_iter,
        energy=energy(u, spec), converged=False, energy_history=history,
    )


# ---------------------------------------------------------------------------
# lambda continuation
# ---------------------------------------------------------------------------


@dataclass
class ContinuationRow:
    lam: float
    converged: bool
    residual: float | None
    norm_w22: float | None
    iterations: int
    failure: str | None = None


@dataclass
class ContinuationTable:
    rows: list[ContinuationRow] = field(default_factory=list)

    @property
    def bracket(self) -> tuple[float | None, float | None]:
        """(last convergent lambda, first divergent lambda after it)."""
        lam_ok = None
        for row in self.rows:
            if row.converged:
                lam_ok = row.lam
        lam_fail = None
        for row in self.rows:
            if not row.converged and (lam_ok is None or row.lam > lam_ok):
                lam_fail = row.lam
                break
        return lam_ok, lam_fail


def continuation_lambda(spec_template: ProblemSpec, lambda_grid,
                        tol: float = 1e-10, max_iter: int = 200) -> ContinuationTable:
    """Run the fixed point over an increasing lambda grid; failures are data."""
    lams = [float(l) for l in lambda_grid]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be strictly increasing")
    if any(l < 0 for l in lams):
        raise ValueError("lambda grid must be nonnegative")
    table = ContinuationTable()
    for lam in lams:
        spec = replace(spec_template, lam=lam)
        try:
            sol = fixed_point_solve(spec, tol=tol, max_iter=max_iter)
        except (DivergenceError, SolverError) as exc:
            table.rows.append(ContinuationRow(
                lam=lam, converged=False, residual=None, norm_w22=None,
                iterations=getattr(exc, "iterations", 0), failure=str(exc)))
            continue
        table.rows.append(ContinuationRow(
            lam=lam, converged=sol.converged, residual=sol.residual,
            norm_w22=sobolev_norms(sol.u).sobolev22, iterations=sol.iterations,
            failure=None if sol.converged else "max_iter"))
    return table
