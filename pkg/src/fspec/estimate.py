"""Scaling fits, spectrum estimation and structural diagnostics.

Two lower-bound routes are fitted per ``theta``:

* ball averages ``S(R, theta)``; their exponent bounds the spectrum from
  below and equals it whenever it stays below ``theta * d``;
* dyadic annulus integrals ``A_j = int_{R_{j-1} < |z| <= R_j} |mu_hat|^(2/theta)``;
  if ``A_j <~ R_j^(-beta)`` then the energy converges for
  ``s < theta (d + beta)``, so ``theta (d + beta)`` is also a lower bound and
  is not capped at ``theta * d``.

The annulus route is trusted only when its window slopes agree (a
confirmed power-law regime); lacunary and sub-polynomial examples produce
oscillating or drifting annulus slopes and fall back to ball averages.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyTable, compute_energy_table
from .measures import Measure, MeasureError
from .transforms import FrequencyGrid, TransformSamples, default_grid, sample_grid

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_THETAS",
    "Check",
    "DiagnosticsReport",
    "ScalingFit",
    "SpectrumCurve",
    "diagnostics",
    "estimate_fourier_dim",
    "estimate_spectrum",
    "fit_annular_dimension",
    "fit_average_dimension",
    "fit_scaling",
]

DEFAULT_THETAS = tuple(np.round(np.arange(1, 21) * 0.05, 2))
MIN_SHELLS = 6
WINDOW = 4
EQUAL_FRACTION = 0.02  # tol_equal = 0.02 * theta * d
STABLE_SPREAD = 0.05  # max window spread for an accepted annulus power law
CI_FLOOR = 1e-3


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares slope of ``y`` against ``x`` on the upper half of the shells.

    ``window_slopes`` are slopes over every run of ``WINDOW + 1`` consecutive
    shells in that range; the proxies are their extremes, widened to
    contain ``exponent``.
    """

    exponent: float
    residual: float
    window_slopes: np.ndarray
    liminf_proxy: float
    limsup_proxy: float
    stderr: float = 0.0

    @property
    def spread(self) -> float:
        return self.limsup_proxy - self.liminf_proxy

    @property
    def ci_halfwidth(self) -> float:
        return max(0.5 * self.spread, 2 * self.stderr, CI_FLOOR)


def fit_scaling(x, y, window: int = WINDOW) -> ScalingFit:
    """Fit ``y ~ exponent * x`` over the upper half of the points.

    Parameters
    ----------
    x, y : array_like
        One entry per dyadic shell, ordered by radius.  Non-finite ``y``
        values are not allowed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < MIN_SHELLS:
        raise MeasureError(f"scaling fits need at least {MIN_SHELLS} shells, got {x.size}")
    if not np.all(np.isfinite(y)):
        raise MeasureError("scaling fit received non-finite values")
    lo = x.size // 2
    xs, ys = x[lo:], y[lo:]
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ yc) / sxx
    resid = yc - slope * xc
    dof = max(xs.size - 2, 1)
    residual = float(np.sqrt(np.mean(resid**2)))
    stderr = float(np.sqrt((resid @ resid) / dof / sxx))
    w = min(window, xs.size - 1)
    wins = np.array([(ys[i + w] - ys[i]) / (xs[i + w] - xs[i]) for i in range(xs.size - w)])
    lo_p = min(float(wins.min()), slope)
    hi_p = max(float(wins.max()), slope)
    return ScalingFit(slope, residual, wins, lo_p, hi_p, stderr)


def fit_average_dimension(table: EnergyTable, theta: float) -> ScalingFit:
    """Exponent of ``theta * log S(R_j, theta)`` against ``-log R_j``."""
    if not 0 < theta <= 1:
        raise MeasureError("theta must lie in (0, 1]")
    i = table.theta_index(theta)
    return fit_scaling(-np.log(table.radii), theta * table.log_ball[i])


def fit_annular_dimension(table: EnergyTable, theta: float) -> ScalingFit:
    """Exponent ``theta (d + beta)`` from the decay ``A_j ~ R_j^-beta`` of annulus integrals."""
    if not 0 < theta <= 1:
        raise MeasureError("theta must lie in (0, 1]")
    i = table.theta_index(theta)
    lr = np.log(table.radii[1:])
    y = theta * (table.log_shell[i, 1:] - table.dim * lr)
    if not np.all(np.isfinite(y)):
        raise MeasureError("empty annulus integral")
    return fit_scaling(-lr, y)


def estimate_fourier_dim(samples: TransformSamples | EnergyTable) -> ScalingFit:
    """Decay exponent of the shell envelope ``M_j = max_{shell j} |mu_hat|``.

    Fits ``-2 log M_j`` against ``log R_j`` (the ``theta = 0`` convention
    ``sup |mu_hat|^2 |z|^s``).
    """
    if isinstance(samples, EnergyTable):
        env, radii = samples.log_envelope, samples.radii
    else:
        env = np.full(samples.n_shells, -np.inf)
        with np.errstate(divide="ignore"):
            np.maximum.at(env, samples.shell, np.log(np.abs(samples.values)))
        radii = samples.grid.radii
    env = np.maximum(env, np.log(1e-300))
    return fit_scaling(np.log(radii[1:]), -2 * env[1:])


@dataclass
class SpectrumCurve:
    """Estimated ``theta -> dim_F^theta`` with per-node uncertainty and notes."""

    thetas: np.ndarray
    values: np.ndarray
    ci_halfwidth: np.ndarray
    liminf_proxy: np.ndarray
    limsup_proxy: np.ndarray
    flags: list[str]
    dim: int
    as_set: bool = False
    routes: list[str] = field(default_factory=list)
    table: EnergyTable | None = field(default=None, repr=False)

    def value_at(self, theta: float) -> float:
        hit = np.flatnonzero(np.isclose(self.thetas, theta, rtol=0, atol=1e-12))
        if hit.size == 0:
            raise KeyError(f"theta {theta} not on the curve grid")
        return float(self.values[hit[0]])

    def ci_at(self, theta: float) -> float:
        hit = np.flatnonzero(np.isclose(self.thetas, theta, rtol=0, atol=1e-12))
        return float(self.ci_halfwidth[hit[0]])

    def rows(self):
        """CSV rows ``(theta, estimate, ci_halfwidth, liminf_proxy, limsup_proxy, flags)``."""
        for i, th in enumerate(self.thetas):
            yield (th, self.values[i], self.ci_halfwidth[i], self.liminf_proxy[i],
                   self.limsup_proxy[i], self.flags[i])


def _node_estimate(table, theta, d):
    ball = fit_average_dimension(table, theta)
    try:
        ann = fit_annular_dimension(table, theta)
    except MeasureError:
        ann = None
    tol_equal = EQUAL_FRACTION * theta * d
    saturated = ball.exponent >= theta * d - tol_equal
    notes = []
    if ann is not None and ann.spread <= STABLE_SPREAD and ann.exponent > ball.exponent:
        fit, route = ann, "annulus"
        if saturated:
            notes.append("average dimension saturated at theta*d; annulus power law used")
    else:
        fit, route = ball, "ball"
        if saturated:
            notes.append("lower bound only: average dimension ~ theta*d")
    return fit, route, notes


def estimate_spectrum(measure: Measure, theta_grid=None, grid: FrequencyGrid | None = None, *,
                      threads: int = 1, cache=False, as_set: bool = False,
                      samples: TransformSamples | None = None, s_values=(0.5,)) -> SpectrumCurve:
    """Estimate the Fourier spectrum on a ``theta`` grid.

    ``theta = 0`` (included by default) is the smaller of the envelope decay
    exponent and the linear extrapolation of the two smallest positive
    ``theta`` nodes; the spectrum is continuous at 0 for compactly supported
    measures and concave, so the extrapolation bounds it from above, while
    envelope fits overestimate sub-polynomial decay at finite radius.
    """
    if theta_grid is None:
        theta_grid = (0.0,) + DEFAULT_THETAS
    thetas = np.unique(np.asarray(theta_grid, dtype=float))
    if thetas.size == 0 or thetas.min() < 0 or thetas.max() > 1:
        raise MeasureError("theta grid must lie in [0, 1]")
    if samples is None:
        grid = grid or default_grid(measure)
        if grid.shells < MIN_SHELLS:
            raise MeasureError(f"spectrum estimates need at least {MIN_SHELLS} shells")
        samples = sample_grid(measure, grid, threads=threads, cache=cache)
    d = samples.grid.dim
    table = compute_energy_table(samples, thetas, s_values)
    n = thetas.size
    vals = np.full(n, np.nan)
    ci = np.full(n, np.nan)
    lo = np.full(n, np.nan)
    hi = np.full(n, np.nan)
    flags = [""] * n
    routes = [""] * n
    for i, th in enumerate(thetas):
        if th == 0:
            continue
        try:
            fit, route, notes = _node_estimate(table, th, d)
        except MeasureError as exc:
            flags[i] = f"fit failed: {exc}"
            continue
        vals[i], ci[i] = fit.exponent, fit.ci_halfwidth
        lo[i], hi[i] = fit.liminf_proxy, fit.limsup_proxy
        flags[i] = "; ".join(notes)
        routes[i] = route
    zero = np.flatnonzero(thetas == 0)
    if zero.size:
        i = zero[0]
        env = estimate_fourier_dim(table)
        value, ci0 = max(env.exponent, 0.0), env.ci_halfwidth
        route, note = "envelope", ""
        pos = np.flatnonzero((thetas > 0) & np.isfinite(vals))
        if pos.size >= 2:
            a, b = pos[0], pos[1]
            ta, tb = thetas[a], thetas[b]
            extrap = vals[a] - ta * (vals[b] - vals[a]) / (tb - ta)
            if max(extrap, 0.0) < value:
                value = max(extrap, 0.0)
                ci0 = ci[a] + ta / (tb - ta) * (ci[a] + ci[b])
                route = "extrapolation"
                note = f"envelope exponent {env.exponent:.4g} exceeds continuity extrapolation"
        vals[i], ci[i] = value, max(ci0, CI_FLOOR)
        lo[i], hi[i] = env.liminf_proxy, env.limsup_proxy
        flags[i], routes[i] = note, route
    if as_set:
        vals = np.clip(vals, 0.0, d)
    return SpectrumCurve(thetas, vals, ci, lo, hi, flags, d, as_set, routes, table)


# ----------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: margin={self.margin:.6g} {self.detail}".rstrip()


@dataclass(frozen=True)
class DiagnosticsReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        return "\n".join(str(c) for c in self.checks)


def diagnostics(curve: SpectrumCurve, measure: Measure | None = None, *, tol_factor: float = 3.0,
                alpha: float | None = None) -> DiagnosticsReport:
    """Structural checks of an estimated curve.

    Each inequality is tested with tolerance ``tol_factor`` times the largest
    ``ci_halfwidth`` among the nodes it involves.  The margin is the slack of
    the inequality plus that tolerance (negative means failure).
    """
    th = np.asarray(curve.thetas, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    ci = np.asarray(curve.ci_halfwidth, dtype=float)
    ok = np.isfinite(v)
    th, v, ci = th[ok], v[ok], ci[ok]
    if th.size < 5 or th[0] > 0.1 + 1e-12 or abs(th[-1] - 1) > 1e-12:
        raise MeasureError("diagnostics need >= 5 finite nodes including theta near 0 and theta = 1")
    if alpha is None:
        alpha = measure.holder_exponent if measure is not None else 1.0
    d = measure.ambient_dim if measure is not None else curve.dim
    tol = tol_factor * ci

    def summary(name, slack, tols, what):
        m = slack + tols
        k = int(np.argmin(m))
        return Check(name, bool(m[k] >= 0), float(m[k]), f"worst at theta={what[k]:.4g}")

    checks = []
    # monotone
    slack = np.diff(v)
    checks.append(summary("monotone", slack, np.maximum(tol[:-1], tol[1:]), th[1:]))
    # concave: middle value above the chord of its neighbours
    if th.size >= 3:
        t0, t1, t2 = th[:-2], th[1:-1], th[2:]
        interp = v[:-2] + (t1 - t0) / (t2 - t0) * (v[2:] - v[:-2])
        ct = np.maximum.reduce([tol[:-2], tol[1:-1], tol[2:]])
        checks.append(summary("concave", v[1:-1] - interp, ct, t1))
    v0, v1 = v[0], v[-1]
    inner = slice(1, -1)
    chord = v0 + (th[inner] - th[0]) / (1 - th[0]) * (v1 - v0)
    ct = np.maximum(np.maximum(tol[inner], tol[0]), tol[-1])
    checks.append(summary("chord_lower_bound", v[inner] - chord, ct, th[inner]))
    upper = v0 + d * (1 + v0 / (2 * alpha)) * th[1:]
    checks.append(summary("cty0_upper_bound", upper - v[1:], np.maximum(tol[1:], tol[0]), th[1:]))
    return DiagnosticsReport(tuple(checks))
