"""Convolution, sumset and distance-set criteria driven by spectrum curves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import _shell_power_sums
from .estimate import SpectrumCurve, fit_scaling
from .measures import Measure, MeasureError
from .oracle import EXACT, ClosedFormSpectrum
from .transforms import FrequencyGrid, TransformSamples, default_grid, sample_grid

__all__ = [
    "CurveAlgebra",
    "Decision",
    "DistanceReport",
    "SumsetReport",
    "convolution_improves",
    "convolution_lower_bound",
    "convolve_spectrum",
    "distance_set_check",
    "fourth_moment_check",
    "iterated_convolution_limit",
    "lambda_grid",
    "sobolev_improving",
    "sumset_bounds",
    "synthetic_samples",
]

STEP = 0.01
ORACLE_TOL = 1e-9
CAVEAT = ("criteria use the supplied curves only; optimality over all measures "
          "supported on the set is not certified")


def lambda_grid(step: float = STEP, include_one: bool = True) -> np.ndarray:
    n = int(round(1 / step))
    g = np.arange(n + 1) / n
    return g if include_one else g[:-1]


@dataclass(frozen=True)
class CurveAlgebra:
    """A spectrum curve usable at any ``theta`` in [0, 1].

    Evaluates ``scale * base(theta / scale)``; ``base`` is either an exact
    closed form or piecewise-linear interpolation of estimated nodes.
    ``scale`` records k-fold convolution so that composing convolutions is
    exact.
    """

    thetas: np.ndarray
    values: np.ndarray
    ci: np.ndarray
    exact: ClosedFormSpectrum | None = None
    scale: int = 1
    label: str = ""
    default_tol: float = ORACLE_TOL

    @classmethod
    def from_oracle(cls, oracle: ClosedFormSpectrum, step: float = STEP, label: str = ""):
        th = lambda_grid(step)
        vals = np.array([oracle.eval(t) for t in th])
        return cls(th, vals, np.zeros_like(vals), oracle, 1, label or oracle.family, ORACLE_TOL)

    @classmethod
    def from_curve(cls, curve: SpectrumCurve, label: str = ""):
        ok = np.isfinite(curve.values)
        th = np.asarray(curve.thetas)[ok]
        vals = np.asarray(curve.values)[ok]
        ci = np.asarray(curve.ci_halfwidth)[ok]
        if th.size < 2:
            raise MeasureError("curve needs at least two finite nodes")
        return cls(th, vals, ci, None, 1, label, float(np.max(ci)))

    @classmethod
    def from_points(cls, thetas, values, ci=None, label: str = ""):
        th = np.asarray(thetas, dtype=float)
        vals = np.asarray(values, dtype=float)
        order = np.argsort(th)
        ci = np.zeros_like(vals) if ci is None else np.asarray(ci, dtype=float)
        tol = float(np.max(ci)) if np.any(ci > 0) else ORACLE_TOL
        return cls(th[order], vals[order], ci[order], None, 1, label, tol)

    @classmethod
    def linear(cls, slope: float, label: str = ""):
        from .oracle import ClosedFormSpectrum as CFS

        return cls.from_oracle(CFS("linear", {"c": slope}, lambda th: slope * th), label=label or "linear")

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def _base(self, theta):
        if self.exact is not None:
            return self.exact.eval(theta)
        return float(np.interp(theta, self.thetas, self.values))

    def __call__(self, theta: float) -> float:
        theta = float(theta)
        if not 0 <= theta <= 1:
            raise MeasureError("curves are defined on theta in [0, 1] only")
        if self.thetas[0] > 0 and theta < self.thetas[0] and self.exact is None and self.scale == 1:
            raise MeasureError("theta below the first estimated node")
        return self.scale * self._base(theta / self.scale)

    def evaluate(self, thetas) -> np.ndarray:
        return np.array([self(t) for t in thetas])

    def tolerance(self, theta: float | None = None) -> float:
        if self.exact is not None:
            return ORACLE_TOL
        if theta is None:
            return self.default_tol * self.scale
        return self.scale * float(np.interp(theta / self.scale, self.thetas, self.ci))

    def kind(self, theta: float) -> str:
        if self.exact is not None:
            return self.exact.kind(theta / self.scale)
        return "estimate"


@dataclass(frozen=True)
class Decision:
    """A predicate outcome with its margin and the witnessing parameter."""

    result: bool
    margin: float
    witness: float | None = None
    detail: str = ""

    def __bool__(self):
        return self.result


def convolve_spectrum(curve: CurveAlgebra, k: int) -> CurveAlgebra:
    """Spectrum of the k-fold self-convolution: ``theta -> k curve(theta / k)``."""
    if k < 1 or int(k) != k:
        raise MeasureError("k must be a positive integer")
    return replace(curve, scale=curve.scale * int(k), label=f"{curve.label}*{k}" if curve.label else "")


def convolution_lower_bound(curve_a: CurveAlgebra, curve_b: CurveAlgebra, theta: float,
                            step: float = STEP) -> tuple[float, float]:
    """``sup_lambda curve_a(lambda theta) + curve_b((1 - lambda) theta)``; returns ``(bound, lambda)``."""
    if not 0 <= theta <= 1:
        raise MeasureError("theta must lie in [0, 1]")
    lams = lambda_grid(step)
    vals = np.array([curve_a(l * theta) + curve_b((1 - l) * theta) for l in lams])
    k = int(np.argmax(vals))
    return float(vals[k]), float(lams[k])


def convolution_improves(curve: CurveAlgebra, theta: float, tol: float | None = None,
                         step: float = STEP) -> Decision:
    """Whether ``curve(lambda theta) > lambda curve(theta) + tol`` for some sampled ``lambda < 1``."""
    if not 0 < theta <= 1:
        raise MeasureError("theta must lie in (0, 1]")
    tol = curve.tolerance(theta) if tol is None else tol
    lams = lambda_grid(step, include_one=False)
    ref = curve(theta)
    gaps = np.array([curve(l * theta) - l * ref for l in lams]) - tol
    k = int(np.argmax(gaps))
    return Decision(bool(gaps[k] > 0), float(gaps[k]), float(lams[k]), f"tol={tol:.3g}")


@dataclass(frozen=True)
class IteratedReport:
    limit: float
    regime: str
    dim_f: float


def iterated_convolution_limit(curve: CurveAlgebra, n_points: int = 3) -> IteratedReport:
    """Right derivative of the spectrum at 0, the limit of ``dim_S(mu^{*k})`` when ``dim_F = 0``.

    If the curve is positive at 0 the Sobolev dimension of ``mu^{*k}``
    grows like ``k dim_F`` instead, and that regime is reported.
    """
    v0 = curve(0.0) if (curve.is_exact or curve.thetas[0] == 0) else 0.0
    if v0 > curve.tolerance(0.0):
        return IteratedReport(math.inf, f"dim_F = {v0:.6g} > 0: dim_S(mu^*k) ~ k dim_F", v0)
    if curve.is_exact:
        th = np.array([1e-4, 2e-4, 4e-4])
    else:
        th = curve.thetas[curve.thetas > 0][:n_points] * curve.scale
    ratios = np.array([(curve(t) - v0) / t for t in th])
    if th.size >= 2:
        slope, intercept = np.polyfit(th, ratios, 1)
    else:
        intercept = ratios[0]
    return IteratedReport(float(intercept), "dim_F = 0: limit of dim_S(mu^*k)", v0)


def sobolev_improving(curve: CurveAlgebra, step: float = STEP) -> float:
    """``s* = sup_theta curve(theta) / theta`` over the positive grid."""
    th = lambda_grid(step)[1:]
    if not curve.is_exact:
        th = th[th >= curve.thetas[curve.thetas > 0][0] * curve.scale - 1e-12]
    return float(max(curve(t) / t for t in th))


@dataclass(frozen=True)
class SumsetReport:
    dimension_bound: float
    dimension_witness: float
    positive_measure: Decision
    interior: Decision
    classical: float
    caveat: str = CAVEAT

    @property
    def conclusion(self) -> str:
        if self.interior.result:
            return "non-empty interior"
        if self.positive_measure.result:
            return "positive Lebesgue measure"
        return f"dimension >= {self.dimension_bound:.6g}"


def sumset_bounds(curve_x: CurveAlgebra, curve_y: CurveAlgebra | None, dimh_y: float, d: int,
                  tol: float | None = None, step: float = STEP, measure_level: bool = True) -> SumsetReport:
    """Bounds for ``X + Y`` from the spectrum of ``X`` and ``dim_H Y``.

    ``curve_y`` is accepted for symmetry of the interface; the criteria
    depend on ``Y`` only through ``dimh_y``.
    """
    if not 0 <= dimh_y <= d:
        raise MeasureError("dim_H Y must lie in [0, d]")
    tol = curve_x.tolerance() if tol is None else tol
    lams = lambda_grid(step, include_one=False)
    cx = np.array([curve_x(l) for l in lams])
    dim_bounds = np.minimum(dimh_y + (cx - lams * dimh_y), d)
    k = int(np.argmax(dim_bounds))
    pm_gap = cx - (d - (1 - lams) * dimh_y) - tol
    kp = int(np.argmax(pm_gap))
    positive = Decision(bool(pm_gap[kp] > 0), float(pm_gap[kp]), float(lams[kp]))
    if measure_level:
        in_gap = cx - (2 * d - (1 - lams) * dimh_y) - tol
        ki = int(np.argmax(in_gap))
        interior = Decision(bool(in_gap[ki] > 0), float(in_gap[ki]), float(lams[ki]))
    else:
        interior = Decision(False, -math.inf, None, "set-level curve")
    classical = min(curve_x(0.0) + dimh_y, d)
    return SumsetReport(float(dim_bounds[k]), float(lams[k]), positive, interior, float(classical))


@dataclass(frozen=True)
class DistanceReport:
    decision: str
    margin: float
    witness: float | None
    statistic: float
    dimension_bound: float | None = None
    half_shortcut: Decision | None = None
    caveat: str = CAVEAT

    def __str__(self):
        parts = [f"decision={self.decision}", f"margin={self.margin:.6g}", f"statistic={self.statistic:.6g}"]
        if self.witness is not None:
            parts.append(f"witness={self.witness:.6g}")
        if self.dimension_bound is not None:
            parts.append(f"dimension_bound={self.dimension_bound:.6g}")
        if self.half_shortcut is not None:
            parts.append(f"theta_half={'yes' if self.half_shortcut.result else 'no'}"
                         f"({self.half_shortcut.margin:.6g})")
        return " ".join(parts) + f"\ncaveat: {self.caveat}"


def distance_set_check(curve_x: CurveAlgebra, d: int, tol: float | None = None,
                       step: float = STEP, thetas=None) -> DistanceReport:
    """Distance-set criterion from ``M = sup_theta curve(theta) + curve(1 - theta)``.

    ``M > d`` gives positive Lebesgue measure; otherwise ``1 - d + M`` bounds
    the Hausdorff dimension of the distance set from below.
    """
    if d < 2:
        raise MeasureError("distance-set criteria need d >= 2")
    tol = curve_x.tolerance() if tol is None else tol
    th = lambda_grid(step) if thetas is None else np.asarray(thetas, dtype=float)
    sums = np.array([curve_x(t) + curve_x(1 - t) for t in th])
    k = int(np.argmax(sums))
    m = float(sums[k])
    half = 2 * curve_x(0.5) - d - tol
    shortcut = Decision(bool(half > 0), float(half), 0.5)
    if m > d + tol:
        return DistanceReport("positive_measure", m - d - tol, float(th[k]), m, None, shortcut)
    bound = min(max(1 - d + m, 0.0), 1.0)
    return DistanceReport("dimension_bound", m - d - tol, float(th[k]), m, bound, shortcut)


def fourth_moment_check(measure: Measure | TransformSamples, grid: FrequencyGrid | None = None,
                        delta: float = 0.1, threads: int = 1) -> DistanceReport:
    """Decide ``int |mu_hat|^4 < inf`` from the decay rate of shell integrals.

    The rate is the fitted slope of ``log int_{shell j} |mu_hat|^4`` against
    ``log R_j``; ``<= -delta`` is convergence, ``>= delta`` divergence and
    anything in between is inconclusive.
    """
    if isinstance(measure, TransformSamples):
        samples = measure
    else:
        samples = sample_grid(measure, grid or default_grid(measure), threads=threads)
    log_shell, _ = _shell_power_sums(samples, 0.5)
    lr = np.log(samples.grid.radii[1:])
    fit = fit_scaling(lr, log_shell[1:])
    rate = fit.exponent
    if rate <= -delta:
        decision = "converges"
    elif rate >= delta:
        decision = "diverges"
    else:
        decision = "inconclusive"
    return DistanceReport(decision, float(abs(rate) - delta), None, float(rate))


def synthetic_samples(grid: FrequencyGrid, modulus, mass: float = 1.0) -> TransformSamples:
    """Samples of a prescribed radial profile ``|z| -> modulus(|z|)`` on ``grid``.

    Useful for exercising the energy and decision machinery on decay
    envelopes that need not come from a concrete measure.
    """
    z, w, shell = grid.nodes()
    r = np.linalg.norm(z, axis=1)
    vals = np.asarray(modulus(r), dtype=complex)
    return TransformSamples(grid, z, vals, np.zeros(r.size), w, shell, mass)
