"""Fourier transform evaluation, frequency grids and sample caching.

The transform convention is ``mu_hat(z) = int exp(-2 pi i z.x) dmu(x)``.
Every evaluator returns values together with an absolute error bound.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import singledispatch
from pathlib import Path

import numpy as np
from numba import njit
from scipy.signal import fftconvolve

from .measures import (
    AtomicMeasure,
    ConvolutionMeasure,
    CurveLiftMeasure,
    DensityMeasure,
    EmbeddedMeasure,
    Measure,
    MeasureError,
    RieszProductMeasure,
    SelfSimilarMeasure,
    TrigSeries,
)

logger = logging.getLogger(__name__)

__all__ = [
    "CURVE_TOL",
    "FrequencyGrid",
    "TransformSamples",
    "default_grid",
    "eval_curve_transform",
    "eval_transform",
    "load_samples",
    "measure_key",
    "riesz_coefficient",
    "sample_grid",
    "save_samples",
    "transform",
]

EPS = np.finfo(float).eps
SELF_SIMILAR_TOL = 1e-10
CURVE_TOL = 1e-10
CURVE_NODE_BUDGET = 5_000_000
CHUNK = 4096


def _kernel(u):
    """Transform of the indicator of [0, 1]: ``exp(-pi i u) sinc(u)``."""
    return np.exp(-1j * np.pi * u) * np.sinc(u)


# ----------------------------------------------------------------------------
# pointwise evaluation


@singledispatch
def transform(measure: Measure, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the transform at the rows of ``z`` (shape ``(n, d)``).

    Returns
    -------
    values : ndarray of complex
    err : ndarray of float
        Absolute error bound per point.
    """
    raise MeasureError(f"no transform for {type(measure).__name__}")


def _as_points(measure, z):
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, measure.ambient_dim) if measure.ambient_dim > 1 else z[:, None]
    if z.shape[1] != measure.ambient_dim:
        raise MeasureError(
            f"frequency dimension {z.shape[1]} does not match ambient dimension {measure.ambient_dim}"
        )
    if not np.all(np.isfinite(z)):
        raise MeasureError("frequencies must be finite")
    return z


def eval_transform(measure: Measure, z) -> tuple[complex, float]:
    """Evaluate ``mu_hat`` at a single frequency vector ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1 or z.size != measure.ambient_dim:
        raise MeasureError(
            f"frequency has dimension {z.size}, measure lives in R^{measure.ambient_dim}"
        )
    val, err = transform(measure, z[None, :])
    return complex(val[0]), float(err[0])


@transform.register
def _(measure: AtomicMeasure, z):
    z = _as_points(measure, z)
    phase = -2.0 * np.pi * (z @ measure.points.T)
    vals = np.exp(1j * phase) @ measure.weights
    # cos/sin of a phase of size |z||x| lose about eps*|phase| absolute accuracy
    err = EPS * (4.0 + np.abs(phase).max(axis=1, initial=0.0)) * measure.mass
    return vals, err


def _trig_series_direct(series: TrigSeries, x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape, dtype=complex)
    for start in range(0, series.freqs.size, 256):
        f = series.freqs[start:start + 256]
        c = series.coeffs[start:start + 256]
        out += _kernel(x[:, None] - f[None, :]) @ c
    return out


def _series_err(series: TrigSeries, x):
    scale = np.abs(series.coeffs).sum()
    return EPS * (8.0 + np.log2(series.freqs.size + 1.0) + np.pi * np.abs(x)) * scale


@transform.register
def _(measure: DensityMeasure, z):
    z = _as_points(measure, z)
    origin = np.asarray(measure.origin, dtype=float)
    shift = np.exp(-2j * np.pi * (z @ origin))
    if measure.series is not None:
        vals = np.ones(z.shape[0], dtype=complex)
        err_rel = np.zeros(z.shape[0])
        for axis, s in enumerate(measure.series):
            v = _trig_series_direct(s, z[:, axis])
            e = _series_err(s, z[:, axis])
            err_rel = err_rel * np.abs(v) + e * np.abs(vals) + err_rel * e
            vals = vals * v
        return vals * shift, err_rel + EPS * np.abs(vals)
    h = measure.cell_size
    v = measure.values
    centres = [(np.arange(n) + 0.5) * h for n in v.shape]
    cell = np.prod(np.sinc(z * h), axis=1) * h ** measure.ambient_dim
    if measure.ambient_dim == 1:
        vals = np.exp(-2j * np.pi * np.outer(z[:, 0], centres[0])) @ v
    else:
        e1 = np.exp(-2j * np.pi * np.outer(z[:, 0], centres[0]))
        e2 = np.exp(-2j * np.pi * np.outer(z[:, 1], centres[1]))
        vals = np.einsum("ma,ab,mb->m", e1, v, e2)
    vals = vals * cell * shift
    phase = 2 * np.pi * np.abs(z).sum(axis=1) * max(v.shape) * h
    err = EPS * (8.0 + v.size + phase) * measure.mass
    return vals, err


def _self_similar_depth(measure, zmax):
    """Number of factors needed so that the omitted tail is below the tolerance."""
    tmax = max(abs(t) for t in measure.translations)
    r = measure.ratio
    if zmax * tmax == 0:
        return 0
    # tail error <= exp(2 pi |z| T r^N / (1 - r)) - 1 <= tol
    budget = math.log1p(SELF_SIMILAR_TOL)
    need = 2 * math.pi * zmax * tmax / ((1 - r) * budget)
    return max(0, math.ceil(math.log(need) / -math.log(r)))


@transform.register
def _(measure: SelfSimilarMeasure, z):
    z = _as_points(measure, z)[:, 0]
    absz = np.abs(z)
    n_fac = _self_similar_depth(measure, float(absz.max(initial=0.0)))
    t = np.asarray(measure.translations)
    p = np.asarray(measure.weights)
    vals = np.ones(z.shape, dtype=complex)
    u = z.copy()
    for _ in range(n_fac):
        vals *= np.exp(-2j * np.pi * np.outer(u, t)) @ p
        u *= measure.ratio
    tail = 2 * np.pi * absz * np.abs(t).max() * measure.ratio**n_fac / (1 - measure.ratio)
    err = np.expm1(tail) + EPS * (4.0 + n_fac) * (1.0 + 2 * np.pi * absz * np.abs(t).max())
    return vals, err


@transform.register
def _(measure: RieszProductMeasure, z):
    z = _as_points(measure, z)[:, 0]
    s = measure.series
    return _trig_series_direct(s, z), _series_err(s, z)


@transform.register
def _(measure: CurveLiftMeasure, z):
    z = _as_points(measure, z)
    return _curve_batch(measure.p, z[:, 0].copy(), z[:, 1].copy(), CURVE_TOL, CURVE_NODE_BUDGET)


@transform.register
def _(measure: EmbeddedMeasure, z):
    z = _as_points(measure, z)
    vals, err = transform(measure.base, z @ measure.frame)
    return vals * np.exp(-2j * np.pi * (z @ measure.offset)), err + EPS * np.abs(vals)


@transform.register
def _(measure: ConvolutionMeasure, z):
    z = _as_points(measure, z)
    vals = np.ones(z.shape[0], dtype=complex)
    err = np.zeros(z.shape[0])
    for f in measure.factors:
        v, e = transform(f, z)
        # |ab - a'b'| <= |a - a'| |b| + |a'| |b - b'| with |b| <= mass_b
        err = err * f.mass + e * np.abs(vals)
        vals = vals * v
    return vals, err + EPS * np.abs(vals)


# ----------------------------------------------------------------------------
# lacunary coefficients


def riesz_coefficient(measure: RieszProductMeasure, m: int) -> float:
    """Exact coefficient ``mu_hat(m)`` of a Riesz product at an integer frequency.

    Uses the greedy signed-digit representation ``m = sum eps_j lam_j`` with
    ``eps_j`` in ``{-1, 0, 1}``; the coefficient is ``prod_{eps_j != 0} a_j / 2``
    and zero if no representation exists.
    """
    m = int(m)
    if abs(m) > measure.exact_range:
        raise MeasureError(
            f"|m| = {abs(m)} exceeds the exact range {measure.exact_range} of the truncation"
        )
    lam = measure.lam[: measure.depth]
    a = measure.a[: measure.depth]
    rest = m
    coef = 1.0
    for j in range(len(lam) - 1, -1, -1):
        if rest == 0:
            break
        tail = sum(lam[:j])  # largest magnitude reachable with smaller frequencies
        if abs(rest) > tail:
            step = lam[j] if rest > 0 else -lam[j]
            rest -= step
            coef *= a[j] / 2.0
    return coef if rest == 0 else 0.0


# ----------------------------------------------------------------------------
# curve lift quadrature

_GL_N = 10
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)
# Gauss-Legendre remainder constant (n!)^4 / ((2n+1) ((2n)!)^3)
_GL_CONST = math.factorial(_GL_N) ** 4 / ((2 * _GL_N + 1) * math.factorial(2 * _GL_N) ** 3)
_PANEL_PHASE = 2 * math.pi  # at most one oscillation per panel
_GRADING = 0.1


@njit(nogil=True, cache=True)
def _panel(p, z1, z2, a, b, xg, wg):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    re = 0.0
    im = 0.0
    for i in range(xg.size):
        x = mid + half * xg[i]
        ph = -2.0 * np.pi * (z1 * x + z2 * x**p)
        re += wg[i] * math.cos(ph)
        im += wg[i] * math.sin(ph)
    return re * half, im * half


@njit(nogil=True, cache=True)
def _dphase(p, z1, z2, x):
    return 2.0 * np.pi * abs(z1 + p * z2 * x ** (p - 1.0))


@njit(nogil=True, cache=True)
def _march(p, z1, z2, a, b, xg, wg, const, budget, graded):
    """Integrate over [a, b] where |phi'| is monotone, panels of bounded phase."""
    re = 0.0
    im = 0.0
    err = 0.0
    nodes = 0
    x = a
    n = xg.size
    while x < b:
        if nodes >= budget:
            # remaining piece bounded trivially by its length
            err += b - x
            break
        g0 = _dphase(p, z1, z2, x)
        h0 = b - x if g0 * (b - x) <= _PANEL_PHASE else _PANEL_PHASE / g0
        g1 = _dphase(p, z1, z2, min(x + h0, b))
        gmax = max(g0, g1)
        h = b - x if gmax * (b - x) <= _PANEL_PHASE else _PANEL_PHASE / gmax
        h = min(h, b - x)
        if graded and x == 0.0:
            # geometric refinement towards the algebraic singularity of x^p at 0
            lo = h
            while lo > 1e-14:
                lo *= _GRADING
            left = lo
            err += lo
            while left < h:
                right = min(left / _GRADING, h)
                r, i = _panel(p, z1, z2, left, right, xg, wg)
                re += r
                im += i
                nodes += n
                left = right
        else:
            r, i = _panel(p, z1, z2, x, x + h, xg, wg)
            re += r
            im += i
            nodes += n
        phase = gmax * h
        err += h * const * phase ** (2 * n) * 10.0 + 4e-16 * h * n
        x += h
    return re, im, err, nodes


@njit(nogil=True, cache=True)
def _curve_one(p, z1, z2, tol, budget, xg, wg, const, graded):
    # stationary point of z1 x + z2 x^p
    cuts = [0.0, 1.0]
    if z2 != 0.0 and -z1 / z2 > 0.0:
        xs = (-z1 / (p * z2)) ** (1.0 / (p - 1.0))
        if 0.0 < xs < 1.0:
            cuts = [0.0, xs, 1.0]
    re = 0.0
    im = 0.0
    err = 0.0
    used = 0
    for k in range(len(cuts) - 1):
        r, i, e, n = _march(p, z1, z2, cuts[k], cuts[k + 1], xg, wg, const, budget - used, graded and k == 0)
        re += r
        im += i
        err += e
        used += n
    return re, im, err


@njit(nogil=True, cache=True)
def _curve_loop(p, z1, z2, tol, budget, xg, wg, const, graded, out_re, out_im, out_err):
    for k in range(z1.size):
        r, i, e = _curve_one(p, z1[k], z2[k], tol, budget, xg, wg, const, graded)
        out_re[k] = r
        out_im[k] = i
        out_err[k] = e


def _curve_batch(p, z1, z2, tol, budget):
    n = z1.size
    re = np.empty(n)
    im = np.empty(n)
    err = np.empty(n)
    graded = float(p) != round(float(p))
    _curve_loop(float(p), z1, z2, tol, budget, _GL_X, _GL_W, _GL_CONST, graded, re, im, err)
    return re + 1j * im, err


def eval_curve_transform(p: float, z, tol: float = CURVE_TOL) -> tuple[complex, float]:
    """Transform of the lift of Lebesgue measure on [0, 1] to ``{(x, x^p)}``.

    Adaptive panels along each side of the stationary point, with at most one
    oscillation of the phase per panel and 10-point Gauss-Legendre on each.
    If the node budget runs out the achieved error bound is reported.
    """
    if not p > 1:
        raise MeasureError("p must exceed 1")
    if not tol > 0:
        raise MeasureError("tol must be positive")
    z = np.asarray(z, dtype=float).ravel()
    if z.size != 2:
        raise MeasureError("curve transforms take z in R^2")
    v, e = _curve_batch(p, z[:1].copy(), z[1:].copy(), tol, CURVE_NODE_BUDGET)
    return complex(v[0]), float(e[0])


# ----------------------------------------------------------------------------
# frequency grids


@dataclass(frozen=True)
class FrequencyGrid:
    """Dyadic shells ``R_j = r0 * 2**j`` with quadrature nodes and weights.

    Shell 0 is the ball ``|z| <= r0``; shell ``j >= 1`` is the annulus
    ``r_{j-1} < |z| <= r_j``.  Only half of frequency space is sampled;
    conjugate symmetry of real measures accounts for the other half and the
    weights already include the factor 2.

    Parameters
    ----------
    dim : int
    shells : int
        Number ``J`` of dyadic annuli beyond the inner ball.
    r0 : float
    c : float
        Angular nodes per wavelength at the support diameter.
    diameter : float
        Support diameter used to set the angular and 1-d resolution.
    radial : int
        Log-midpoint radii per dyadic shell (d >= 2).
    focus : float or None
        Direction (d=2) around which angular nodes are concentrated.
    focus_strength : float
        Warp strength in [0, 1); 0 disables concentration.
    max_sphere_nodes : int
        Cap on nodes per sphere in d=3.
    """

    dim: int
    shells: int
    r0: float = 1.0
    c: float = 4.0
    diameter: float = 1.0
    radial: int = 8
    focus: float | None = None
    focus_strength: float = 0.0
    max_sphere_nodes: int = 32768

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise MeasureError("grids are available for d in {1, 2, 3}")
        if self.r0 < 1:
            raise MeasureError("r0 must be >= 1")
        if self.shells < 1:
            raise MeasureError("at least one shell required")
        if not 0 <= self.focus_strength < 1:
            raise MeasureError("focus strength must lie in [0, 1)")

    @property
    def radii(self) -> np.ndarray:
        """Outer radii ``R_0, ..., R_J``."""
        return self.r0 * 2.0 ** np.arange(self.shells + 1)

    @property
    def spacing(self) -> float:
        """Node spacing of the d=1 grid (a divisor of r0)."""
        q = max(8, math.ceil(2 * self.c * self.diameter))
        return 1.0 / q

    def angular_count(self, radius: float) -> int:
        """Nodes on the full circle of the given radius (d=2)."""
        return max(16, math.ceil(self.c * 2 * math.pi * self.diameter * radius), math.ceil(self.c * radius))

    def key(self) -> str:
        return repr(
            (self.dim, self.shells, self.r0, self.c, self.diameter, self.radial,
             self.focus, self.focus_strength, self.max_sphere_nodes)
        )

    def nodes(self):
        """Return ``(z, weights, shell_index)`` for this grid."""
        if self.dim == 1:
            return self._nodes_1d()
        if self.dim == 2:
            return self._nodes_2d()
        return self._nodes_3d()

    def _nodes_1d(self):
        h = self.spacing
        n_max = int(round(self.radii[-1] / h))
        k = np.arange(n_max + 1)
        z = k * h
        w = np.full(z.shape, 2 * h)
        w[0] = h
        edges = np.round(self.radii / h).astype(np.int64)
        shell = np.searchsorted(edges, k, side="left")
        return z[:, None], w, shell

    def _angles(self, count):
        """Half-circle angles and trapezoid weights (already doubled)."""
        m = max(8, math.ceil(count / 2))
        u = np.arange(m) * (np.pi / m)
        du = np.pi / m
        if self.focus is None or self.focus_strength == 0:
            return u, np.full(m, 2 * du)
        b = self.focus_strength
        a0 = self.focus
        ang = (u - 0.5 * b * np.sin(2 * (u - a0))) % np.pi
        jac = 1 - b * np.cos(2 * (u - a0))
        return ang, 2 * du * jac

    def _nodes_2d(self):
        zs, ws, ss = [], [], []
        # inner ball: Gauss-Legendre in r
        xr, wr = np.polynomial.legendre.leggauss(self.radial)
        r = 0.5 * self.r0 * (xr + 1)
        wr = 0.5 * self.r0 * wr
        ang, wa = self._angles(self.angular_count(self.r0))
        rr, aa = np.meshgrid(r, ang, indexing="ij")
        zs.append(np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2))
        ws.append((wr[:, None] * r[:, None] * wa[None, :]).ravel())
        ss.append(np.zeros(rr.size, dtype=np.int64))
        step = math.log(2.0) / self.radial
        for j in range(1, self.shells + 1):
            lo = self.radii[j - 1]
            r = lo * np.exp((np.arange(self.radial) + 0.5) * step)
            ang, wa = self._angles(self.angular_count(self.radii[j]))
            rr, aa = np.meshgrid(r, ang, indexing="ij")
            zs.append(np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2))
            ws.append((r[:, None] ** 2 * step * wa[None, :]).ravel())
            ss.append(np.full(rr.size, j, dtype=np.int64))
        return np.concatenate(zs), np.concatenate(ws), np.concatenate(ss)

    def _sphere(self, radius):
        count = self.angular_count(radius)
        n_pol = max(8, math.ceil(count / 4))
        n_az = max(16, count)
        while n_pol * n_az > self.max_sphere_nodes:
            n_pol = max(8, n_pol // 2)
            n_az = max(16, n_az // 2)
            if n_pol == 8 and n_az == 16:
                break
        # upper hemisphere only, polar cosine on (0, 1]
        x, w = np.polynomial.legendre.leggauss(n_pol)
        ct = 0.5 * (x + 1)
        wct = 0.5 * w
        phi = np.arange(n_az) * (2 * np.pi / n_az)
        wphi = 2 * np.pi / n_az
        st = np.sqrt(1 - ct**2)
        cc, pp = np.meshgrid(ct, phi, indexing="ij")
        ss_ = np.sqrt(1 - cc**2)
        dirs = np.stack([ss_ * np.cos(pp), ss_ * np.sin(pp), cc], axis=-1).reshape(-1, 3)
        wts = (2 * wct[:, None] * wphi * np.ones_like(pp)).ravel()
        del st
        return dirs, wts

    def _nodes_3d(self):
        zs, ws, ss = [], [], []
        xr, wr = np.polynomial.legendre.leggauss(self.radial)
        r = 0.5 * self.r0 * (xr + 1)
        wr = 0.5 * self.r0 * wr
        dirs, wd = self._sphere(self.r0)
        zs.append((r[:, None, None] * dirs[None]).reshape(-1, 3))
        ws.append((wr[:, None] * r[:, None] ** 2 * wd[None, :]).ravel())
        ss.append(np.zeros(r.size * wd.size, dtype=np.int64))
        step = math.log(2.0) / self.radial
        for j in range(1, self.shells + 1):
            lo = self.radii[j - 1]
            r = lo * np.exp((np.arange(self.radial) + 0.5) * step)
            dirs, wd = self._sphere(self.radii[j])
            zs.append((r[:, None, None] * dirs[None]).reshape(-1, 3))
            ws.append((r[:, None] ** 3 * step * wd[None, :]).ravel())
            ss.append(np.full(r.size * wd.size, j, dtype=np.int64))
        return np.concatenate(zs), np.concatenate(ws), np.concatenate(ss)


DEFAULT_SHELLS = {1: 16, 2: 10, 3: 8}


def default_grid(measure: Measure, shells: int | None = None, **kwargs) -> FrequencyGrid:
    """Grid with the default shell count for the ambient dimension of ``measure``."""
    d = measure.ambient_dim
    if shells is None:
        shells = DEFAULT_SHELLS[d]
    focus = measure.angular_focus() if d == 2 else None
    opts = dict(diameter=max(measure.support_diameter, 1e-3), focus=focus,
                focus_strength=0.5 if focus is not None else 0.0)
    opts.update(kwargs)
    return FrequencyGrid(dim=d, shells=shells, **opts)


@dataclass(frozen=True, eq=False)
class TransformSamples:
    """Transform values on the nodes of a :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    z: np.ndarray
    values: np.ndarray
    err: np.ndarray
    weights: np.ndarray
    shell: np.ndarray
    mass: float = 1.0
    radius: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "radius", np.linalg.norm(self.z, axis=1))

    @property
    def n_shells(self) -> int:
        return self.grid.shells + 1


# ----------------------------------------------------------------------------
# batch evaluation


def _uniform_series_values(series: TrigSeries, q: int, n_max: int) -> np.ndarray:
    """``g_hat(k / q)`` for ``k = 0..n_max`` by one FFT convolution."""
    mlo, mhi = int(series.freqs[0]), int(series.freqs[-1])
    a = np.zeros(q * (mhi - mlo) + 1, dtype=complex)
    np.add.at(a, q * (series.freqs - mlo), series.coeffs)
    t = np.arange(-q * mhi, n_max - q * mlo + 1)
    kern = _kernel(t / q)
    kern[(t % q == 0) & (t != 0)] = 0.0  # sinc vanishes exactly at nonzero integers
    full = fftconvolve(a, kern)
    off = q * (mhi - mlo)
    return full[off: off + n_max + 1]


def _fast_1d(measure, grid, z):
    """FFT route for exact trigonometric series on the uniform 1-d grid."""
    if grid.dim != 1:
        return None
    if isinstance(measure, RieszProductMeasure):
        series, origin = measure.series, 0.0
    elif isinstance(measure, DensityMeasure) and measure.series is not None:
        series, origin = measure.series[0], measure.origin[0]
    else:
        return None
    if series.freqs.size < 64:
        return None
    q = int(round(1 / grid.spacing))
    vals = _uniform_series_values(series, q, z.shape[0] - 1)
    if origin:
        vals = vals * np.exp(-2j * np.pi * z[:, 0] * origin)
    scale = np.abs(series.coeffs).sum()
    err = EPS * (16.0 + 4 * np.log2(vals.size + series.freqs.size)) * scale + EPS * np.abs(vals)
    return vals, err


def _evaluate(measure, grid, z, threads):
    """Transform on the grid nodes; convolution factors take their own fastest route."""
    if isinstance(measure, ConvolutionMeasure):
        vals = np.ones(z.shape[0], dtype=complex)
        err = np.zeros(z.shape[0])
        for f in measure.factors:
            v, e = _evaluate(f, grid, z, threads)
            err = err * f.mass + e * np.abs(vals)
            vals = vals * v
        return vals, err + EPS * np.abs(vals)
    fast = _fast_1d(measure, grid, z)
    if fast is not None:
        return fast
    vals = np.empty(z.shape[0], dtype=complex)
    err = np.empty(z.shape[0])
    starts = range(0, z.shape[0], CHUNK)

    def work(i):
        v, e = transform(measure, z[i:i + CHUNK])
        vals[i:i + CHUNK] = v
        err[i:i + CHUNK] = e

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for i in starts:
            work(i)
    return vals, err


def sample_grid(measure: Measure, grid: FrequencyGrid, threads: int = 1,
                cache: bool | str | os.PathLike = False) -> TransformSamples:
    """Evaluate the transform on every grid node.

    Nodes are processed in fixed chunks, so the result does not depend on
    ``threads``.  Per-node failures surface as large error bounds.

    Parameters
    ----------
    cache : bool or path
        ``True`` uses ``$FSPEC_CACHE_DIR`` (default ``~/.cache/fspec``); a
        path selects the cache directory explicitly.
    """
    if grid.dim != measure.ambient_dim:
        raise MeasureError("grid and measure dimensions differ")
    z, w, shell = grid.nodes()
    path = _cache_path(measure, grid, cache)
    if path is not None and path.exists():
        try:
            vals, err = load_samples(path, z)
            logger.info("loaded transform samples from %s", path)
            return TransformSamples(grid, z, vals, err, w, shell, measure.mass)
        except (ValueError, OSError) as exc:
            logger.warning("ignoring unusable cache %s: %s", path, exc)
    vals, err = _evaluate(measure, grid, z, threads)
    err = np.where(np.isfinite(vals), err, np.inf)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    if path is not None:
        save_samples(path, grid, z, vals, err)
    return TransformSamples(grid, z, vals, err, w, shell, measure.mass)


# ----------------------------------------------------------------------------
# cache file

_MAGIC = b"FSPC"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIQ")


def _canonical(obj):
    if isinstance(obj, np.ndarray):
        digest = hashlib.sha256(np.ascontiguousarray(obj).tobytes()).hexdigest()
        return ("array", obj.dtype.str, obj.shape, digest)
    if dataclasses.is_dataclass(obj):
        items = tuple((f.name, _canonical(getattr(obj, f.name))) for f in dataclasses.fields(obj) if f.init)
        return (type(obj).__name__, items)
    if isinstance(obj, (list, tuple)):
        return tuple(_canonical(v) for v in obj)
    if isinstance(obj, float):
        return float.hex(obj)
    return obj


def measure_key(measure: Measure) -> str:
    """Stable content hash of a measure."""
    return hashlib.sha256(repr(_canonical(measure)).encode()).hexdigest()[:24]


def _cache_path(measure, grid, cache):
    if not cache:
        return None
    if cache is True:
        root = Path(os.environ.get("FSPEC_CACHE_DIR", Path.home() / ".cache" / "fspec"))
    else:
        root = Path(cache)
    root.mkdir(parents=True, exist_ok=True)
    gkey = hashlib.sha256(grid.key().encode()).hexdigest()[:16]
    return root / f"{measure_key(measure)}-{gkey}.bin"


def save_samples(path, grid: FrequencyGrid, z, values, err):
    """Write samples as little-endian records ``(z_1..z_d, re, im, err)``."""
    rec = np.empty((z.shape[0], z.shape[1] + 3), dtype="<f8")
    rec[:, : z.shape[1]] = z
    rec[:, -3] = values.real
    rec[:, -2] = values.imag
    rec[:, -1] = err
    path = Path(path)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, z.shape[1], grid.shells + 1, z.shape[0]))
        fh.write(rec.tobytes())
    os.replace(tmp, path)


def read_cache(path):
    """Return ``(header dict, records)`` of a cache file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated cache header")
    magic, version, d, n_shells, n = _HEADER.unpack_from(data)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not an fspec cache file of a supported version")
    rec = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if rec.size != n * (d + 3):
        raise ValueError("record count does not match header")
    return {"version": version, "d": d, "shells": n_shells, "nodes": n}, rec.reshape(n, d + 3)


def load_samples(path, z):
    header, rec = read_cache(path)
    if rec.shape[0] != z.shape[0] or header["d"] != z.shape[1] or not np.array_equal(rec[:, : z.shape[1]], z):
        raise ValueError("cached nodes differ from the grid")
    return rec[:, -3] + 1j * rec[:, -2], rec[:, -1].copy()
