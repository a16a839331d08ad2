"""Uniform rectangular grids, finite-difference operators and discrete norms.

Fields live on nx*ny nodes of an axis-aligned rectangle with spacing
hx = lx/(nx-1).  All stencils are centered and second order; boundary
closures depend on the boundary-condition tag:

* ``navier`` (hinged, u = lap u = 0): odd reflection across the boundary,
  so the normal part of the Laplacian vanishes on the boundary ring.
* ``dirichlet`` (clamped, u = du/dn = 0): one-sided second-order formulas
  on the boundary ring.

Everything here is a pure function of its inputs; fields are treated as
immutable values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

BC_DIRICHLET = "dirichlet"
BC_NAVIER = "navier"
_BCS = (BC_DIRICHLET, BC_NAVIER)


def _check_bc(bc: str) -> str:
    if bc not in _BCS:
        raise ValueError(f"unknown boundary condition {bc!r}, expected one of {_BCS}")
    return bc


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform node-based grid on a rectangle."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid too small: need nx, ny >= 4, got {self.nx}x{self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("grid extents must be positive")

    @property
    def hx(self) -> float:
        return self.lx / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.ly / (self.ny - 1)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.hy * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass
class GridField2D:
    """Scalar samples on a :class:`GridSpec`, values[i, j] = f(x_i, y_j)."""

    spec: GridSpec
    values: np.ndarray
    bc: str = BC_NAVIER

    def __post_init__(self):
        _check_bc(self.bc)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.nx, self.spec.ny):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"{(self.spec.nx, self.spec.ny)}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def zeros(cls, spec: GridSpec, bc: str = BC_NAVIER) -> "GridField2D":
        return cls(spec, np.zeros((spec.nx, spec.ny)), bc)

    @classmethod
    def from_function(
        cls, spec: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
        bc: str = BC_NAVIER,
    ) -> "GridField2D":
        xx, yy = spec.meshgrid()
        return cls(spec, np.asarray(fn(xx, yy), dtype=float), bc)

    def with_values(self, values: np.ndarray) -> "GridField2D":
        return GridField2D(self.spec, values, self.bc)

    @property
    def boundary_max(self) -> float:
        v = self.values
        return max(
            np.abs(v[0, :]).max(), np.abs(v[-1, :]).max(),
            np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max(),
        )

    def assert_homogeneous(self, tol: float = 0.0):
        """Check the zero-boundary invariant of homogeneous solution fields."""
        if self.boundary_max > tol:
            raise ValueError(
                f"boundary values reach {self.boundary_max:g}, expected 0 "
                f"for a homogeneous {self.bc} field"
            )


@dataclass(frozen=True)
class NormReport:
    """Discrete L2 norms of a field, its gradient and its Hessian."""

    l2: float
    grad_l2: float
    hess_l2: float
    sobolev22: float


def _second_diff(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second derivative, centered inside and one-sided second order on the edges."""
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def laplacian(f: GridField2D) -> GridField2D:
    """5-point Laplacian; boundary ring closed per the field's bc tag."""
    spec, v = f.spec, f.values
    hx, hy = spec.hx, spec.hy

    uxx = np.zeros_like(v)
    uyy = np.zeros_like(v)
    uxx[1:-1, :] = (v[2:, :] - 2.0 * v[1:-1, :] + v[:-2, :]) / hx**2
    uyy[:, 1:-1] = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) / hy**2
    if f.bc == BC_DIRICHLET:
        uxx[0, :] = (2.0 * v[0, :] - 5.0 * v[1, :] + 4.0 * v[2, :] - v[3, :]) / hx**2
        uxx[-1, :] = (2.0 * v[-1, :] - 5.0 * v[-2, :] + 4.0 * v[-3, :] - v[-4, :]) / hx**2
        uyy[:, 0] = (2.0 * v[:, 0] - 5.0 * v[:, 1] + 4.0 * v[:, 2] - v[:, 3]) / hy**2
        uyy[:, -1] = (2.0 * v[:, -1] - 5.0 * v[:, -2] + 4.0 * v[:, -3] - v[:, -4]) / hy**2
    # navier: odd reflection makes the normal second difference vanish on the
    # boundary, so the zero initialization already is the closure.
    return f.with_values(uxx + uyy)


def hessian_det(f: GridField2D) -> GridField2D:
    """det(D^2 f) = f_xx f_yy - f_xy^2 with centered differences.

    The boundary ring is set to 0; solvers only consume interior values.
    """
    spec, v = f.spec, f.values
    hx, hy = spec.hx, spec.hy
    out = np.zeros_like(v)
    uxx = (v[2:, 1:-1] - 2.0 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / hx**2
    uyy = (v[1:-1, 2:] - 2.0 * v[1:-1, 1:-1] + v[1:-1, :-2]) / hy**2
    uxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * hx * hy)
    out[1:-1, 1:-1] = uxx * uyy - uxy**2
    return f.with_values(out)


def trapezoid_weights(spec: GridSpec) -> np.ndarray:
    """Tensor-product trapezoid quadrature weights, shape (nx, ny)."""
    wx = np.full(spec.nx, spec.hx)
    wx[0] = wx[-1] = 0.5 * spec.hx
    wy = np.full(spec.ny, spec.hy)
    wy[0] = wy[-1] = 0.5 * spec.hy
    return np.outer(wx, wy)


def quadrature(f: GridField2D) -> float:
    """2D trapezoid rule over the rectangle."""
    return float(np.sum(trapezoid_weights(f.spec) * f.values))


def sobolev_norms(f: GridField2D) -> NormReport:
    """Trapezoid-quadrature L2 norms of f, grad f and the full Hessian.

    The combined value satisfies sobolev22^2 = l2^2 + grad^2 + hess^2.
    """
    spec, v = f.spec, f.values
    hx, hy = spec.hx, spec.hy
    w = trapezoid_weights(spec)

    ux = np.gradient(v, hx, axis=0, edge_order=2)
    uy = np.gradient(v, hy, axis=1, edge_order=2)
    uxx = _second_diff(v, hx, axis=0)
    uyy = _second_diff(v, hy, axis=1)
    uxy = np.gradient(ux, hy, axis=1, edge_order=2)

    l2_sq = float(np.sum(w * v**2))
    grad_sq = float(np.sum(w * (ux**2 + uy**2)))
    hess_sq = float(np.sum(w * (uxx**2 + 2.0 * uxy**2 + uyy**2)))
    return NormReport(
        l2=np.sqrt(l2_sq),
        grad_l2=np.sqrt(grad_sq),
        hess_l2=np.sqrt(hess_sq),
        sobolev22=np.sqrt(l2_sq + grad_sq + hess_sq),
    )


_HEADER_RE = re.compile(
    r"#\s*nx=(?P<nx>\d+)\s+ny=(?P<ny>\d+)\s+lx=(?P<lx>\S+)\s+ly=(?P<ly>\S+)\s+bc=(?P<bc>\w+)"
)


def write_field_csv(f: GridField2D, path: str | Path):
    """Field file contract: header line, then ny rows of nx floats."""
    lines = [f"# nx={f.spec.nx} ny={f.spec.ny} lx={f.spec.lx!r} ly={f.spec.ly!r} bc={f.bc}"]
    for j in range(f.spec.ny):
        lines.append(",".join(repr(float(x)) for x in f.values[:, j]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_csv(path: str | Path) -> GridField2D:
    text = Path(path).read_text().strip().splitlines()
    m = _HEADER_RE.match(text[0])
    if m is None:
        raise ValueError(f"malformed field header: {text[0]!r}")
    nx, ny = int(m["nx"]), int(m["ny"])
    spec = GridSpec(nx, ny, float(m["lx"]), float(m["ly"]))
    rows = text[1:]
    if len(rows) != ny:
        raise ValueError(f"expected {ny} data rows, found {len(rows)}")
    values = np.empty((nx, ny))
    for j, row in enumerate(rows):
        vals = [float(tok) for tok in row.split(",")]
        if len(vals) != nx:
            raise ValueError(f"row {j} has {len(vals)} entries, expected {nx}")
        values[:, j] = vals
    return GridField2D(spec, values, _check_bc(m["bc"]))
