"""Measure families with computable Fourier transforms.

Every family here is a finite, compactly supported Borel measure whose
transform can be evaluated either in closed form or with a certified
truncation bound.  Instances are immutable; :func:`validate` reports
violated invariants instead of raising so that callers can collect every
problem in a descriptor at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "AtomicMeasure",
    "ConvolutionMeasure",
    "CurveLiftMeasure",
    "DensityMeasure",
    "EmbeddedMeasure",
    "Measure",
    "MeasureError",
    "RieszProductMeasure",
    "SelfSimilarMeasure",
    "TrigSeries",
    "ValidationReport",
    "Violation",
    "cantor_measure",
    "firstsharp_density",
    "lebesgue_segment",
    "riesz_geometric",
    "validate",
]


class MeasureError(ValueError):
    """Raised when a measure cannot be constructed or used as requested."""


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self):
        if self.violations:
            raise MeasureError("; ".join(str(v) for v in self.violations))

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


class Measure:
    """Common interface of all measure families.

    Subclasses provide ``ambient_dim``, ``mass`` and ``support_box``.  The
    transform itself lives in :mod:`fspec.transforms`.
    """

    ambient_dim: int

    @property
    def mass(self) -> float:
        raise NotImplementedError

    @property
    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box ``(lower, upper)`` containing the support."""
        raise NotImplementedError

    @property
    def holder_exponent(self) -> float:
        # compactly supported => transform is Lipschitz
        return 1.0

    @property
    def support_diameter(self) -> float:
        lo, hi = self.support_box
        return float(np.linalg.norm(hi - lo))

    def angular_focus(self) -> float | None:
        """Direction (radians, d=2 only) where the transform decays slowest.

        Used to concentrate angular quadrature nodes; ``None`` means no
        preferred direction.
        """
        return None


# ----------------------------------------------------------------------------
# exact trigonometric series on the unit interval


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """Density ``g(x) = sum_m c_m exp(2 pi i m x)`` restricted to ``[0, 1]``.

    The transform of ``g dx`` is ``sum_m c_m K(z - m)`` with
    ``K(u) = exp(-pi i u) sinc(u)``, exact at every real ``z``.
    """

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.int64)
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        order = np.argsort(freqs, kind="stable")
        object.__setattr__(self, "freqs", freqs[order])
        object.__setattr__(self, "coeffs", coeffs[order])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        phase = np.exp(2j * np.pi * np.multiply.outer(x, self.freqs))
        return (phase @ self.coeffs).real

    @property
    def mean(self) -> float:
        hit = self.freqs == 0
        return float(self.coeffs[hit].real.sum()) if hit.any() else 0.0

    def coefficient(self, m: int) -> complex:
        i = np.searchsorted(self.freqs, m)
        if i < self.freqs.size and self.freqs[i] == m:
            return complex(self.coeffs[i])
        return 0j


# ----------------------------------------------------------------------------
# families


@dataclass(frozen=True, eq=False)
class AtomicMeasure(Measure):
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise MeasureError("atoms must be an (n, d) array of points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float).ravel())

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def support_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)


@dataclass(frozen=True, eq=False)
class DensityMeasure(Measure):
    """Absolutely continuous measure ``f dx`` on a regular cell grid (d <= 2).

    Without ``series`` the density is the piecewise-constant function with
    the given cell values and its transform is computed exactly for that
    step function.  With ``series`` (one :class:`TrigSeries` per axis) the
    density is the separable product ``g_1(x_1)...g_d(x_d)`` on the unit
    box; ``values`` then only holds grid samples for inspection.
    """

    ambient_dim: int
    cell_size: float
    values: np.ndarray | None = None
    origin: tuple[float, ...] | None = None
    series: tuple[TrigSeries, ...] | None = None
    resolution: int | None = None

    def __post_init__(self):
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * self.ambient_dim)
        if self.values is not None:
            object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def shape(self) -> tuple[int, ...]:
        if self.values is not None:
            return self.values.shape
        return (self.resolution,) * self.ambient_dim

    @cached_property
    def grid_values(self) -> np.ndarray:
        """Cell-centre samples of the density."""
        if self.values is not None:
            return self.values
        n = self.resolution
        x = (np.arange(n) + 0.5) / n
        out = np.ones((n,) * self.ambient_dim)
        for axis, s in enumerate(self.series):
            shape = [1] * self.ambient_dim
            shape[axis] = n
            out = out * s(x).reshape(shape)
        return out

    @property
    def mass(self) -> float:
        if self.series is not None:
            return float(np.prod([s.mean for s in self.series]))
        return float(self.values.sum() * self.cell_size**self.ambient_dim)

    @property
    def support_box(self):
        lo = np.asarray(self.origin, dtype=float)
        return lo, lo + np.asarray(self.shape, dtype=float) * self.cell_size


@dataclass(frozen=True, eq=False)
class SelfSimilarMeasure(Measure):
    """Distribution of ``sum_{n>=0} X_n r^n`` with ``P(X_n = t_i) = p_i``.

    Equivalently the invariant measure of the maps ``x -> r x + t_i`` with
    weights ``p_i``; its transform is the infinite product
    ``prod_n sum_i p_i exp(-2 pi i z t_i r^n)``.
    """

    ratio: float
    translations: tuple[float, ...]
    weights: tuple[float, ...]
    ambient_dim: int = field(default=1, init=False)

    def __post_init__(self):
        object.__setattr__(self, "translations", tuple(float(t) for t in self.translations))
        object.__setattr__(self, "weights", tuple(float(p) for p in self.weights))

    @property
    def mass(self) -> float:
        return 1.0

    @property
    def support_box(self):
        t = np.asarray(self.translations)
        scale = 1.0 / (1.0 - self.ratio)
        return np.array([t.min() * scale]), np.array([t.max() * scale])


@dataclass(frozen=True, eq=False)
class RieszProductMeasure(Measure):
    """Truncated Riesz product ``prod_{j<=J} (1 + a_j cos(2 pi lam_j x))`` on [0,1]."""

    a: tuple[float, ...]
    lam: tuple[int, ...]
    depth: int | None = None
    ambient_dim: int = field(default=1, init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "lam", tuple(int(v) for v in self.lam))
        if self.depth is None:
            object.__setattr__(self, "depth", len(self.lam))

    @property
    def mass(self) -> float:
        return 1.0

    @property
    def support_box(self):
        return np.zeros(1), np.ones(1)

    @property
    def exact_range(self) -> int:
        """Largest |m| at which truncated and infinite products agree.

        With only ``depth`` factors known, frequencies up to the full
        partial sum are represented exactly; if a further frequency is
        known the bound tightens to ``lam_{J+1} - sum_{j<=J} lam_j - 1``
        as long as that exceeds the partial sum.
        """
        lam = self.lam[: self.depth]
        total = sum(lam)
        if len(self.lam) > self.depth:
            return max(total, self.lam[self.depth] - total - 1)
        return total

    @cached_property
    def series(self) -> TrigSeries:
        freqs = np.zeros(1, dtype=np.int64)
        coeffs = np.ones(1, dtype=np.complex128)
        for a, lam in zip(self.a[: self.depth], self.lam[: self.depth]):
            half = a / 2.0
            freqs = np.concatenate([freqs, freqs + lam, freqs - lam])
            coeffs = np.concatenate([coeffs, coeffs * half, coeffs * half])
        return TrigSeries(freqs, coeffs)


@dataclass(frozen=True, eq=False)
class CurveLiftMeasure(Measure):
    """Lebesgue measure on [0,1] lifted to the graph ``{(x, x^p)}``."""

    p: float
    ambient_dim: int = field(default=2, init=False)

    @property
    def mass(self) -> float:
        return 1.0

    @property
    def support_box(self):
        return np.zeros(2), np.ones(2)

    def angular_focus(self):
        # slowest decay is along the vertical axis where the phase is x^p
        return math.pi / 2


@dataclass(frozen=True, eq=False)
class EmbeddedMeasure(Measure):
    """Push-forward of ``base`` under ``x -> frame @ x + offset``.

    ``frame`` is a ``(target_dim, k)`` matrix with orthonormal columns.
    """

    base: Measure
    frame: np.ndarray
    offset: np.ndarray | None = None

    def __post_init__(self):
        frame = np.atleast_2d(np.asarray(self.frame, dtype=float))
        object.__setattr__(self, "frame", frame)
        off = np.zeros(frame.shape[0]) if self.offset is None else np.asarray(self.offset, float)
        object.__setattr__(self, "offset", off)

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def mass(self) -> float:
        return self.base.mass

    @property
    def support_box(self):
        lo, hi = self.base.support_box
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(len(lo), -1)
        pts = self.frame @ corners + self.offset[:, None]
        return pts.min(axis=1), pts.max(axis=1)

    def angular_focus(self):
        if self.ambient_dim != 2 or self.frame.shape[1] != 1:
            return None
        # |transform| is constant along the normal of the embedded line
        e = self.frame[:, 0]
        return float(np.arctan2(e[0], -e[1]) % math.pi)


@dataclass(frozen=True, eq=False)
class ConvolutionMeasure(Measure):
    factors: tuple[Measure, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def ambient_dim(self) -> int:
        return self.factors[0].ambient_dim

    @property
    def mass(self) -> float:
        return float(np.prod([f.mass for f in self.factors]))

    @property
    def support_box(self):
        boxes = [f.support_box for f in self.factors]
        return sum(b[0] for b in boxes), sum(b[1] for b in boxes)

    def angular_focus(self):
        foci = {f.angular_focus() for f in self.factors}
        return foci.pop() if len(foci) == 1 else None


# ----------------------------------------------------------------------------
# validation


def _check_weights(weights, path, out):
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        out.append(Violation(path, "at least one weight required"))
    elif not np.all(np.isfinite(w)):
        out.append(Violation(path, "weights must be finite"))
    elif np.any(w <= 0):
        out.append(Violation(path, "weights must be strictly positive"))


def _validate(measure, path, out):
    if isinstance(measure, AtomicMeasure):
        _check_weights(measure.weights, f"{path}.weights", out)
        if measure.points.shape[0] != measure.weights.size:
            out.append(Violation(f"{path}.points", "one weight per atom required"))
        if not np.all(np.isfinite(measure.points)):
            out.append(Violation(f"{path}.points", "atom positions must be finite"))
    elif isinstance(measure, DensityMeasure):
        if measure.ambient_dim not in (1, 2):
            out.append(Violation(f"{path}.ambient_dim", "density measures need d in {1, 2}"))
        if not measure.cell_size > 0:
            out.append(Violation(f"{path}.cell_size", "cell size must be positive"))
        if measure.series is not None:
            if len(measure.series) != measure.ambient_dim:
                out.append(Violation(f"{path}.series", "one series per axis required"))
        elif measure.values is None:
            out.append(Violation(f"{path}.values", "values or series required"))
        else:
            v = measure.values
            if v.ndim != measure.ambient_dim:
                out.append(Violation(f"{path}.values", "value grid must have d axes"))
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                out.append(Violation(f"{path}.values", "density values must be finite and >= 0"))
        if not out and not measure.mass > 0:
            out.append(Violation(f"{path}.values", "total mass must be positive"))
    elif isinstance(measure, SelfSimilarMeasure):
        if not 0 < measure.ratio < 1:
            out.append(Violation(f"{path}.ratio", "contraction ratio must lie in (0, 1)"))
        _check_weights(measure.weights, f"{path}.weights", out)
        if len(measure.weights) != len(measure.translations):
            out.append(Violation(f"{path}.translations", "one translation per weight required"))
        if abs(sum(measure.weights) - 1.0) > 1e-12:
            out.append(Violation(f"{path}.weights", "weights must sum to 1"))
    elif isinstance(measure, RieszProductMeasure):
        lam, a = measure.lam, measure.a
        if len(a) < measure.depth or len(lam) < measure.depth:
            out.append(Violation(f"{path}.depth", "depth exceeds the number of given terms"))
        if measure.depth < 1:
            out.append(Violation(f"{path}.depth", "depth must be >= 1"))
        for j, aj in enumerate(a, start=1):
            if not -1 <= aj <= 1:
                out.append(Violation(f"{path}.a[{j}]", "|a_j| <= 1 fails"))
        if lam and lam[0] < 1:
            out.append(Violation(f"{path}.lam[1]", "frequencies must be positive integers"))
        for j in range(1, len(lam)):
            if lam[j] < 3 * lam[j - 1]:
                out.append(Violation(f"{path}.lam[{j + 1}]", f"lambda_{{j+1}} >= 3 lambda_j fails at j={j}"))
    elif isinstance(measure, CurveLiftMeasure):
        if not measure.p > 1:
            out.append(Violation(f"{path}.p", "exponent p must exceed 1"))
    elif isinstance(measure, EmbeddedMeasure):
        d, k = measure.frame.shape
        if k != measure.base.ambient_dim:
            out.append(Violation(f"{path}.frame", "frame must have one column per base dimension"))
        if not d > k:
            out.append(Violation(f"{path}.frame", "target dimension must exceed base dimension"))
        if not np.allclose(measure.frame.T @ measure.frame, np.eye(k), atol=1e-10):
            out.append(Violation(f"{path}.frame", "frame columns must be orthonormal"))
        if measure.offset.shape != (d,):
            out.append(Violation(f"{path}.offset", "offset must be a vector in the target space"))
        _validate(measure.base, f"{path}.base", out)
    elif isinstance(measure, ConvolutionMeasure):
        if not measure.factors:
            out.append(Violation(f"{path}.factors", "at least one factor required"))
            return
        dims = {f.ambient_dim for f in measure.factors}
        if len(dims) != 1:
            out.append(Violation(f"{path}.factors", "factors must share the ambient dimension"))
        for i, f in enumerate(measure.factors):
            _validate(f, f"{path}.factors[{i}]", out)
    else:
        out.append(Violation(path, f"unsupported measure type {type(measure).__name__}"))


def validate(measure: Measure) -> ValidationReport:
    """Check every family invariant; an empty report means the measure is valid."""
    out: list[Violation] = []
    _validate(measure, type(measure).__name__, out)
    return ValidationReport(tuple(out))


# ----------------------------------------------------------------------------
# constructors for the standard examples


def riesz_geometric(a: float, lam: int, r_max: float, extra: int = 1) -> RieszProductMeasure:
    """Riesz product with ``a_j = a`` and ``lam_j = lam**j``.

    The depth is the largest ``J`` with ``lam**J <= r_max``; ``extra`` further
    frequencies are recorded (not multiplied in) so that the exact coefficient
    range can be certified.
    """
    if lam < 3:
        raise MeasureError("lambda must be >= 3")
    depth = max(1, int(math.floor(math.log(r_max) / math.log(lam) + 1e-12)))
    while lam ** (depth + 1) <= r_max:
        depth += 1
    while depth > 1 and lam**depth > r_max:
        depth -= 1
    n = depth + extra
    return RieszProductMeasure(a=(a,) * n, lam=tuple(lam**j for j in range(1, n + 1)), depth=depth)


def cantor_measure(p: float, ratio: float = 1 / 3, gap: float = 2 / 3) -> SelfSimilarMeasure:
    """Bernoulli(p, 1-p) self-similar measure on a Cantor set; default: middle third on [0, 1]."""
    return SelfSimilarMeasure(ratio=ratio, translations=(0.0, gap), weights=(p, 1.0 - p))


def lebesgue_segment(length: float = 1.0) -> DensityMeasure:
    """Lebesgue measure on ``[0, length]`` as a one-cell density."""
    return DensityMeasure(ambient_dim=1, cell_size=float(length), values=np.ones(1))


def _firstsharp_series(n_max: int) -> TrigSeries:
    freqs = [0]
    coeffs = [2.0 + 0j]
    for n in range(1, n_max + 1):
        c = n**-2.0 / 2j  # sin(2 pi k x) = (e^{2 pi i k x} - e^{-2 pi i k x}) / 2i
        freqs += [2**n, -(2**n)]
        coeffs += [c, -c]
    return TrigSeries(np.array(freqs), np.array(coeffs))


def firstsharp_density(d: int, n_max: int, resolution: int | None = None) -> DensityMeasure:
    """Density ``f(x_1)...f(x_d)`` with ``f(x) = 2 + sum_{n<=n_max} n^-2 sin(2 pi 2^n x)``.

    ``resolution`` is the number of grid samples per unit length; it must
    exceed ``2**(n_max + 2)`` to avoid aliasing the top frequency.
    """
    if d < 1 or n_max < 1:
        raise MeasureError("firstsharp needs d >= 1 and n_max >= 1")
    if d > 2:
        raise MeasureError("density measures are limited to d <= 2")
    if resolution is None:
        resolution = 2 ** (n_max + 3)
    if resolution <= 2 ** (n_max + 2):
        raise MeasureError(
            f"resolution {resolution} aliases frequency 2^{n_max}; need more than {2 ** (n_max + 2)} samples per unit"
        )
    s = _firstsharp_series(n_max)
    return DensityMeasure(
        ambient_dim=d, cell_size=1.0 / resolution, series=(s,) * d, resolution=resolution
    )
