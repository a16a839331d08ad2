"""Shooting solver for the self-similar profile equation.

Height profiles of the form u(r, t) = f(r / t^(1/4)) reduce the evolution
equation (lambda = 0) to a third-order ODE for g = f' in the similarity
variable eta:

    4 g - eta^4 g - 4 eta g' - 4 eta^2 g g' + 8 eta^2 g'' + 4 eta^3 g''' = 0,
    g(0) = g''(0) = 0,   g'(eta) -> 0 as eta -> infinity.

The equation is strongly singular at eta = 0 (leading coefficient 4 eta^3),
so trajectories launch from a small eta0 > 0 with the two-term series
determined by g'''(0) = 3 g'(0)^2 / 8.  The free parameter is the slope
a = g'(0).

Integration runs either directly in eta or, after the substitution
eta = e^r, in the transformed variable r; the two routes cross-check each
other.  The hot stepping loop lives in the compiled kernel
``hgl._shoot_core`` when available, with a pure-Python twin in
``hgl._shoot_fallback``.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import BPoly

from . import _shoot_fallback

try:
    from . import _shoot_core

    HAVE_COMPILED_CORE = True
except ImportError:  # extension not built: pure-Python twin
    _shoot_core = None
    HAVE_COMPILED_CORE = False

_BACKENDS = {"python": _shoot_fallback}
if HAVE_COMPILED_CORE:
    _BACKENDS["compiled"] = _shoot_core

if os.environ.get("HGL_PURE_PYTHON"):
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "compiled" if HAVE_COMPILED_CORE else "python"

TERM_REACHED_END = "ReachedEnd"
TERM_BLOWUP = "BlowUp"
TERM_STEP_UNDERFLOW = "StepUnderflow"

_STATUS_TO_TERM = {
    _shoot_fallback.STATUS_REACHED_END: TERM_REACHED_END,
    _shoot_fallback.STATUS_BLOWUP: TERM_BLOWUP,
    _shoot_fallback.STATUS_UNDERFLOW: TERM_STEP_UNDERFLOW,
}


def rhs_eta(eta: float, g: float, g1: float, g2: float) -> float:
    """g''' solved from the profile equation; eta must be positive.

    The equation is strongly singular at eta = 0: launches go through
    :func:`series_start`, never through this right-hand side.
    """
    if eta <= 0.0:
        raise ValueError(f"rhs_eta requires eta > 0, got {eta}")
    return (eta**4 * g + 4.0 * eta * g1 + 4.0 * eta**2 * g * g1
            - 8.0 * eta**2 * g2 - 4.0 * g) / (4.0 * eta**3)


def rhs_log(r: float, h: float, h1: float, h2: float) -> float:
    """h''' for the eta = e^r transform: h''' = h'' + h' + e^r h' h + (e^4r - 4)/4 h."""
    return h2 + h1 + np.exp(r) * h1 * h + 0.25 * (np.exp(4.0 * r) - 4.0) * h


def series_start(a: float, eta0: float) -> tuple[float, float, float]:
    """Two-term series launch state (g, g', g'') at eta0.

    Uses g'''(0) = 3 a^2 / 8, the coefficient forced by the equation for
    any C^3 solution with g(0) = g''(0) = 0 and g'(0) = a.
    """
    if eta0 <= 0.0:
        raise ValueError(f"series_start requires eta0 > 0, got {eta0}")
    g = a * eta0 + (a * a / 16.0) * eta0**3
    g1 = a + (3.0 * a * a / 16.0) * eta0**2
    g2 = (3.0 * a * a / 8.0) * eta0
    return g, g1, g2


@dataclass(frozen=True)
class ShootConfig:
    """Launch parameters for one shooting run."""

    slope: float
    eta0: float = 1e-3
    eta_max: float = 20.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    g_cap: float = 1e8
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not 0.0 < self.eta0 < self.eta_max:
            raise ValueError(f"need 0 < eta0 < eta_max, got {self.eta0}, {self.eta_max}")
        for name in ("rel_tol", "abs_tol"):
            tol = getattr(self, name)
            if not 0.0 < tol <= 1e-3:
                raise ValueError(f"{name} must lie in (0, 1e-3], got {tol}")
        if self.g_cap < 1e6:
            raise ValueError(f"g_cap must be >= 1e6, got {self.g_cap}")


@dataclass
class ShootResult:
    """Accepted-step samples of one trajectory plus its termination report."""

    config: ShootConfig
    eta: np.ndarray
    g: np.ndarray
    gp: np.ndarray
    gpp: np.ndarray
    termination: str
    eta_bar: float | None = None
    decay_residual: float | None = None
    n_steps: int = 0
    n_rejected: int = 0
    form: str = "eta"
    diagnostics: str = ""


@dataclass
class FTrajectory:
    """f recovered from g = f' with the far-field anchor f(eta_max) = 0."""

    eta: np.ndarray
    f: np.ndarray
    cancellation_residual: float


@dataclass
class CertificateReport:
    """Per-sample observability of the finite-eta blow-up mechanism."""

    passed: bool
    degenerate: bool
    first_violation: int | None
    n_checked: int


@dataclass
class AnsatzReport:
    """Residual of the full evolution equation on a reconstructed u(r,t)."""

    max_residual: float
    per_time: list[tuple[float, float]]
    r_window: tuple[float, float]
    nr: int
    nt: int


def _get_backend(backend: str | None):
    name = backend or DEFAULT_BACKEND
    try:
        return _BACKENDS[name], name
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        ) from None


def _estimate_eta_bar(eta: np.ndarray, g: np.ndarray) -> float:
    """Extrapolate 1/|g| -> 0 linearly over the last three samples."""
    if len(eta) < 3:
        return float(eta[-1])
    x = eta[-3:]
    y = 1.0 / np.abs(g[-3:])
    m, b = np.polyfit(x, y, 1)
    if m >= 0.0:
        return float(eta[-1])
    return float(max(-b / m, eta[-1]))


def _package(cfg: ShootConfig, form: str, ts, gs, g1s, g2s, status, n_rej, msg) -> ShootResult:
    eta = np.asarray(ts)
    g = np.asarray(gs)
    gp = np.asarray(g1s)
    gpp = np.asarray(g2s)
    if form == "log":
        r = eta
        eta = np.exp(r)
        eta[-1] = min(eta[-1], cfg.eta_max)  # guard exp(log(x)) round-off
        gp = gp / eta
        gpp = (gpp - np.asarray(g1s)) / (eta * eta)
    termination = _STATUS_TO_TERM[status]
    eta_bar = _estimate_eta_bar(eta, g) if termination == TERM_BLOWUP else None
    decay_residual = float(abs(gp[-1])) if termination == TERM_REACHED_END else None
    return ShootResult(
        config=cfg, eta=eta, g=g, gp=gp, gpp=gpp, termination=termination,
        eta_bar=eta_bar, decay_residual=decay_residual,
        n_steps=len(eta) - 1, n_rejected=n_rej, form=form, diagnostics=msg,
    )


def shoot(cfg: ShootConfig, backend: str | None = None) -> ShootResult:
    """Integrate the profile equation in eta from the series launch."""
    core, _ = _get_backend(backend)
    g0, g1, g2 = series_start(cfg.slope, cfg.eta0)
    ts, gs, g1s, g2s, status, n_rej, msg = core.integrate(
        core.FORM_ETA, cfg.eta0, g0, g1, g2, cfg.eta_max,
        cfg.rel_tol, cfg.abs_tol, cfg.g_cap, cfg.max_steps,
    )
    return _package(cfg, "eta", ts, gs, g1s, g2s, status, n_rej, msg)


def shoot_log(cfg: ShootConfig, backend: str | None = None) -> ShootResult:
    """Integrate the e^r-transformed equation; samples mapped back to eta."""
    core, _ = _get_backend(backend)
    g0, g1, g2 = series_start(cfg.slope, cfg.eta0)
    r0 = np.log(cfg.eta0)
    r_end = np.log(cfg.eta_max)
    # pull the launch state through the chain rule: h = g, h' = eta g',
    # h'' = eta^2 g'' + eta g'
    h0 = g0
    h1 = cfg.eta0 * g1
    h2 = cfg.eta0**2 * g2 + cfg.eta0 * g1
    ts, hs, h1s, h2s, status, n_rej, msg = core.integrate(
        core.FORM_LOG, r0, h0, h1, h2, r_end,
        cfg.rel_tol, cfg.abs_tol, cfg.g_cap, cfg.max_steps,
    )
    return _package(cfg, "log", ts, hs, h1s, h2s, status, n_rej, msg)


def blowup_certificate(res: ShootResult) -> CertificateReport:
    """Check the monotonicity functional behind the finite-eta blow-up proof.

    On a trajectory with positive launch slope, phi = eta^3 g'' - eta^2 g'
    + eta g must be positive and increasing while g' stays positive.  A
    zero trajectory passes vacuously and is flagged degenerate.
    """
    eta, g, gp, gpp = res.eta, res.g, res.gp, res.gpp
    if np.max(np.abs(g)) == 0.0:
        return CertificateReport(passed=True, degenerate=True,
                                 first_violation=None, n_checked=len(eta))
    phi = eta**3 * gpp - eta**2 * gp + eta * g
    bad_gp = gp <= 0.0
    bad_phi = phi <= 0.0
    bad_incr = np.concatenate([[False], np.diff(phi) <= 0.0])
    bad = bad_gp | bad_phi | bad_incr
    if bad.any():
        return CertificateReport(passed=False, degenerate=False,
                                 first_violation=int(np.argmax(bad)),
                                 n_checked=len(eta))
    return CertificateReport(passed=True, degenerate=False,
                             first_violation=None, n_checked=len(eta))


def reconstruct_f(res: ShootResult) -> FTrajectory:
    """Integrate g = f' cumulatively and anchor f(eta_max) = 0."""
    if res.termination != TERM_REACHED_END:
        raise ValueError(
            f"reconstruct_f needs a ReachedEnd trajectory, got {res.termination}"
        )
    F = cumulative_trapezoid(res.g, res.eta, initial=0.0)
    f = F - F[-1]
    return FTrajectory(eta=res.eta, f=f, cancellation_residual=float(abs(f[0])))


def trajectory_interpolant(res: ShootResult) -> BPoly:
    """Smooth f(eta) with f(eta_max) = 0, consistent with (g, g', g'') data.

    f is the exact antiderivative of the quintic Hermite interpolant of g;
    anchoring f through quadrature-order values instead would leave the
    interpolant with an oscillatory fourth derivative.
    """
    G = BPoly.from_derivatives(res.eta, np.column_stack([res.g, res.gp, res.gpp]))
    F = G.antiderivative()
    # Bernstein basis functions sum to 1, so a constant shift moves every
    # coefficient
    return BPoly(F.c - F(res.eta[-1]), F.x)


def verify_ansatz(res: ShootResult, times: Sequence[float], nr: int = 96,
                  ht_rel: float = 1e-3, r_margin: float = 0.05,
                  interpolant=None) -> AnsatzReport:
    """Residual of u_t + Lap^2 u - det(D^2 u) = 0 for u(r,t) = f(r/t^(1/4)).

    The profile is interpolated from the trajectory and the operators are
    formed by finite differences in r and t, independently of the chain
    rule that produced the ODE.  For a trajectory that solves the profile
    equation the residual shrinks at second order under refinement.

    The r-window is shaved by ``r_margin`` on the left: the radial
    operators carry 1/r factors that would otherwise amplify truncation
    error without bound near the axis.
    """
    times = np.asarray(sorted(times), dtype=float)
    if times[0] <= 0.0:
        raise ValueError("sample times must be positive")
    H = trajectory_interpolant(res) if interpolant is None else interpolant
    eta_lo, eta_hi = res.eta[0], res.eta[-1]

    # r-window where eta = r/t^(1/4) stays inside the trajectory for t +- ht
    r_lo, r_hi = 0.0, np.inf
    for t in times:
        ht = ht_rel * t
        r_lo = max(r_lo, eta_lo * (t + ht) ** 0.25)
        r_hi = min(r_hi, eta_hi * (t - ht) ** 0.25)
    if not r_lo < r_hi:
        raise ValueError("sample times leave no common r-window inside the trajectory")
    r_lo = r_lo + r_margin * (r_hi - r_lo)
    r = np.linspace(r_lo, r_hi, nr)
    hr = r[1] - r[0]

    def u(rv, t):
        return H(rv / t**0.25)

    def radial_lap(vals, rv):
        # v'' + v'/r, centered; valid on the interior of vals
        return ((vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / hr**2
                + (vals[2:] - vals[:-2]) / (2.0 * hr) / rv[1:-1])

    per_time = []
    for t in times:
        ht = ht_rel * t
        u0 = u(r, t)
        ut = (u(r, t + ht) - u(r, t - ht)) / (2.0 * ht)
        w = radial_lap(u0, r)                    # on r[1:-1]
        lap2 = radial_lap(w, r[1:-1])            # on r[2:-2]
        ur = (u0[2:] - u0[:-2]) / (2.0 * hr)
        urr = (u0[2:] - 2.0 * u0[1:-1] + u0[:-2]) / hr**2
        det = ur * urr / r[1:-1]
        resid = ut[2:-2] + lap2 - det[1:-1]
        per_time.append((float(t), float(np.max(np.abs(resid)))))
    max_residual = max(v for _, v in per_time)
    return AnsatzReport(max_residual=max_residual, per_time=per_time,
                        r_window=(float(r_lo), float(r_hi)), nr=nr, nt=len(times))


@dataclass
class SweepReport:
    """Results of a slope sweep; failures are recorded, not raised."""

    slopes: list[float]
    results: dict[float, ShootResult | None] = field(default_factory=dict)
    errors: dict[float, str] = field(default_factory=dict)

    @property
    def tallies(self) -> dict[str, int]:
        t: dict[str, int] = {}
        for res in self.results.values():
            if res is not None:
                t[res.termination] = t.get(res.termination, 0) + 1
        if self.errors:
            t["Error"] = len(self.errors)
        return t


def sweep(slopes: Iterable[float], template: ShootConfig,
          outdir: str | Path | None = None, max_workers: int | None = None,
          backend: str | None = None) -> SweepReport:
    """Shoot every slope of the list; optionally write the CSV/JSON bundle."""
    slopes = [float(a) for a in slopes]
    if not slopes:
        raise ValueError("slope list must not be empty")
    report = SweepReport(slopes=slopes)

    def run(a: float):
        return shoot(replace(template, slope=a), backend=backend)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {a: pool.submit(run, a) for a in slopes}
            for a in slopes:
                try:
                    report.results[a] = futures[a].result()
                except Exception as exc:
                    report.results[a] = None
                    report.errors[a] = str(exc)
    else:
        for a in slopes:
            try:
                report.results[a] = run(a)
            except Exception as exc:
                report.results[a] = None
                report.errors[a] = str(exc)

    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        entries = []
        for a in slopes:
            res = report.results[a]
            if res is None:
                entries.append({"slope": a, "error": report.errors[a]})
                continue
            name = f"slope_{a:g}.csv"
            write_trajectory_csv(res, outdir / name)
            entries.append(summary_dict(res) | {"file": name})
        payload = {"trajectories": entries, "tallies": report.tallies}
        (outdir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
    return report


def summary_dict(res: ShootResult) -> dict:
    """Summary JSON contract for one trajectory."""
    return {
        "slope": res.config.slope,
        "termination": res.termination,
        "eta_bar": res.eta_bar,
        "decay_residual": res.decay_residual,
        "n_steps": res.n_steps,
    }


def write_trajectory_csv(res: ShootResult, path: str | Path):
    """Trajectory CSV contract: header eta,g,gp,gpp, one row per accepted step."""
    lines = ["eta,g,gp,gpp"]
    for vals in zip(res.eta, res.g, res.gp, res.gpp):
        lines.append(",".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path, g_cap: float = 1e8) -> ShootResult:
    """Rebuild a ShootResult from the CSV contract (termination inferred)."""
    rows = Path(path).read_text().strip().splitlines()
    if rows[0].strip() != "eta,g,gp,gpp":
        raise ValueError(f"malformed trajectory header: {rows[0]!r}")
    data = np.array([[float(tok) for tok in row.split(",")] for row in rows[1:]])
    if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] < 2:
        raise ValueError("trajectory CSV must have >= 2 rows of eta,g,gp,gpp")
    eta, g, gp, gpp = data.T
    if np.any(np.diff(eta) <= 0.0):
        raise ValueError("eta samples must be strictly increasing")
    blown = abs(g[-1]) >= g_cap
    cfg = ShootConfig(slope=float(gp[0]), eta0=float(eta[0]), eta_max=float(eta[-1]) if not blown else float(eta[-1]) * 2)
    term = TERM_BLOWUP if blown else TERM_REACHED_END
    return ShootResult(
        config=cfg, eta=eta, g=g, gp=gp, gpp=gpp, termination=term,
        eta_bar=_estimate_eta_bar(eta, g) if blown else None,
        decay_residual=float(abs(gp[-1])) if not blown else None,
        n_steps=len(eta) - 1, form="eta", diagnostics="loaded from csv",
    )
