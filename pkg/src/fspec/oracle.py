"""Closed-form Fourier spectra and structural bounds.

Each oracle is a :class:`ClosedFormSpectrum`: a point value per ``theta``
together with a validity tag saying whether that value is exact or only a
bound.  Band oracles also expose ``(lower, upper)`` enclosures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import MeasureError

__all__ = [
    "ClosedFormSpectrum",
    "chord_lower_bound",
    "cty0_upper_bound",
    "oracle_bernoulli_half",
    "oracle_by_name",
    "oracle_cantor",
    "oracle_curve",
    "oracle_embedded_cube",
    "oracle_embedding_transport",
    "oracle_firstsharp",
    "oracle_riesz",
    "oracle_riesz_general",
    "riesz_general_dimension",
]

EXACT = "exact"
LOWER = "lower_bound"
UPPER = "upper_bound"


def _check_theta(theta):
    theta = float(theta)
    if not 0 <= theta <= 1:
        raise MeasureError("theta must lie in [0, 1]")
    return theta


@dataclass(frozen=True)
class ClosedFormSpectrum:
    """Closed-form ``theta -> dim_F^theta``.

    Parameters
    ----------
    family : str
    params : dict
    fn : callable
        Point value (exact or a lower bound, see ``kind``).
    kind_fn : callable
        ``theta -> "exact" | "lower_bound"``.
    band_fn : callable, optional
        ``theta -> (lower, upper)``; defaults to ``(fn, fn)`` on the exact
        range and ``(fn, inf)`` elsewhere.
    """

    family: str
    params: dict
    fn: Callable[[float], float] = field(repr=False)
    kind_fn: Callable[[float], str] = field(default=lambda th: EXACT, repr=False)
    band_fn: Callable[[float], tuple[float, float]] | None = field(default=None, repr=False)

    def eval(self, theta: float) -> float:
        return float(self.fn(_check_theta(theta)))

    __call__ = eval

    def kind(self, theta: float) -> str:
        return self.kind_fn(_check_theta(theta))

    def is_exact(self, theta: float) -> bool:
        return self.kind(theta) == EXACT

    def band(self, theta: float) -> tuple[float, float]:
        theta = _check_theta(theta)
        if self.band_fn is not None:
            return tuple(float(b) for b in self.band_fn(theta))
        v = self.eval(theta)
        return (v, v) if self.is_exact(theta) else (v, math.inf)

    def rows(self, thetas):
        """CSV rows ``(theta, value, kind)``; bands add an ``upper_bound`` row."""
        for th in thetas:
            kind = self.kind(th)
            yield th, self.eval(th), kind
            if kind != EXACT:
                hi = self.band(th)[1]
                if math.isfinite(hi):
                    yield th, hi, UPPER


def chord_lower_bound(dim_f: float, dim_s: float, theta: float) -> float:
    """``dim_F + theta (dim_S - dim_F)``, valid for any concave spectrum."""
    return dim_f + theta * (dim_s - dim_f)


def cty0_upper_bound(dim_f: float, d: int, theta: float, alpha: float = 1.0) -> float:
    """``dim_F + d (1 + dim_F / (2 alpha)) theta`` for alpha-Hoelder transforms."""
    return dim_f + d * (1 + dim_f / (2 * alpha)) * theta


def oracle_embedded_cube(k: int, d: int) -> ClosedFormSpectrum:
    """Lebesgue measure on ``[0,1]^k`` isometrically embedded in ``R^d``: ``k theta``."""
    if not 1 <= k < d:
        raise MeasureError("need 1 <= k < d")
    return ClosedFormSpectrum("embedded_cube", {"k": k, "d": d}, lambda th: k * th)


def oracle_embedding_transport(base: ClosedFormSpectrum, k: int) -> ClosedFormSpectrum:
    """Spectrum of a measure on ``R^k`` after an isometric embedding: ``min(k theta, base)``."""
    if k < 1:
        raise MeasureError("k must be >= 1")

    def band(th):
        lo, hi = base.band(th)
        return min(k * th, lo), min(k * th, hi)

    return ClosedFormSpectrum(
        "embedding_transport", {"base": base.family, "k": k, **base.params},
        lambda th: min(k * th, base.eval(th)), base.kind, band,
    )


def oracle_riesz(a: float, lam: int) -> ClosedFormSpectrum:
    """Riesz product with ``a_j = a`` and ``lam_j = lam^j``."""
    if not (-1 <= a <= 1) or a == 0:
        raise MeasureError("a must lie in [-1, 1] without 0")
    if lam < 3:
        raise MeasureError("lambda must be >= 3")
    la = math.log(abs(a))
    ll = math.log(lam)

    def fn(th):
        if th == 0:
            return 0.0
        # log(1 + |a|^(2/th) 2^(1 - 2/th)) without overflow
        x = (2 / th) * la + (1 - 2 / th) * math.log(2)
        return th - th * math.log1p(math.exp(x)) / ll

    return ClosedFormSpectrum("riesz", {"a": a, "lambda": lam}, fn)


def oracle_riesz_general(a_seq, lambda_seq, theta: float, s: float, K: int) -> np.ndarray:
    """Partial sums of ``sum_k lam_k^(s/theta - 1) prod_{j<=k} (1 + |a_j|^(2/theta) 2^(1 - 2/theta))``.

    Returns the ``K`` partial sums; overflowing sums are reported as ``inf``.
    """
    log_terms = _riesz_log_terms(a_seq, lambda_seq, theta, s, K)
    with np.errstate(over="ignore"):
        return np.cumsum(np.exp(log_terms))


def _riesz_log_terms(a_seq, lambda_seq, theta, s, K):
    theta = float(theta)
    if not 0 < theta <= 1:
        raise MeasureError("theta must lie in (0, 1]")
    a = np.abs(np.asarray(a_seq, dtype=float)[:K])
    lam = np.asarray(lambda_seq, dtype=float)[:K]
    if a.size < K or lam.size < K:
        raise MeasureError("sequences shorter than K")
    if np.any(a > 1):
        raise MeasureError("|a_j| <= 1 required")
    if np.any(lam[1:] < 3 * lam[:-1] * (1 - 1e-12)):
        raise MeasureError("lambda_{j+1} >= 3 lambda_j required")
    ratio = lam[1:] / lam[:-1]
    if ratio.size and not np.isfinite(ratio.max()):
        raise MeasureError("lambda_{j+1} <= C lambda_j must hold for a finite C")
    with np.errstate(divide="ignore"):
        la = np.log(a)
    x = (2 / theta) * la + (1 - 2 / theta) * math.log(2)
    log_prod = np.cumsum(np.log1p(np.exp(x)))
    return (s / theta - 1) * np.log(lam) + log_prod


def riesz_general_dimension(a_seq, lambda_seq, theta: float, K: int) -> float:
    """Largest ``s <= theta`` whose series terms show nonpositive fitted log-growth.

    The log-terms are affine in ``s``, so the fitted growth rate (slope of
    the log-terms against ``k``) has a single root in ``s``.
    """
    k = np.arange(K, dtype=float)
    base = _riesz_log_terms(a_seq, lambda_seq, theta, 0.0, K)  # s = 0
    loglam = np.log(np.asarray(lambda_seq, dtype=float)[:K])
    kc = k - k.mean()
    slope_base = float(kc @ (base - base.mean())) / float(kc @ kc)
    slope_lam = float(kc @ (loglam - loglam.mean())) / float(kc @ kc)
    # slope(s) = slope_base + (s / theta) * slope_lam
    root = -slope_base * theta / slope_lam
    return float(min(max(root, 0.0), theta))


def _cantor_values(p):
    v_half = math.log(p**4 + 4 * p**2 * (1 - p) ** 2 + (1 - p) ** 4) / (-2 * math.log(3))
    v_one = math.log(p**2 + (1 - p) ** 2) / (-math.log(3))
    return v_half, v_one


def oracle_cantor(p: float) -> ClosedFormSpectrum:
    """Bernoulli ``(p, 1-p)`` measure on the middle-third Cantor set.

    Exact at ``theta in {0, 1/2, 1}``; elsewhere the point value is the
    concave (piecewise-linear) interpolation, a lower bound, and the band's
    upper end combines monotonicity, concavity and the Hoelder continuity
    bound at 0.
    """
    if not 0 < p < 1:
        raise MeasureError("p must lie in (0, 1)")
    vh, v1 = _cantor_values(p)
    nodes = (0.0, 0.5, 1.0)

    def fn(th):
        if th <= 0.5:
            return 2 * th * vh
        return vh + (th - 0.5) * 2 * (v1 - vh)

    def kind(th):
        return EXACT if any(abs(th - t) < 1e-12 for t in nodes) else LOWER

    def band(th):
        lo = fn(th)
        if kind(th) == EXACT:
            return lo, lo
        if th < 0.5:
            # concavity: below the line through (1/2, vh) and (1, v1) extended left
            hi = min(th, vh - (0.5 - th) * 2 * (v1 - vh), vh)
        else:
            hi = min(2 * th * vh, v1, th)
        return lo, hi

    return ClosedFormSpectrum("cantor", {"p": p}, fn, kind, band)


def oracle_bernoulli_half(p: float) -> ClosedFormSpectrum:
    """Distribution of ``sum X_n 2^-n`` with ``P(X_n = 1) = p``; lower bound, exact at 1."""
    if not 0 < p < 1:
        raise MeasureError("p must lie in (0, 1)")
    if p == 0.5:
        raise MeasureError("p = 1/2 gives Lebesgue measure; the formula does not apply")
    b = abs(2 * p - 1)

    def fn(th):
        if th == 0:
            return 0.0
        return th - th * math.log1p(math.exp((2 / th) * math.log(b))) / math.log(2)

    def kind(th):
        return EXACT if th == 1 else LOWER

    def band(th):
        v = fn(th)
        return (v, v) if th == 1 else (v, min(th, fn(1.0)) if th > 0 else 0.0)

    return ClosedFormSpectrum("bernoulli_half", {"p": p}, fn, kind, band)


def oracle_curve(p: float) -> ClosedFormSpectrum:
    """Lift of Lebesgue measure to ``{(x, x^p)}``: ``min(2/p + theta (1 - 1/p), 1)``."""
    if not p > 1:
        raise MeasureError("p must exceed 1")
    return ClosedFormSpectrum("curve", {"p": p}, lambda th: min(2 / p + th * (1 - 1 / p), 1.0))


def oracle_firstsharp(d: int) -> ClosedFormSpectrum:
    if d < 1:
        raise MeasureError("d must be >= 1")
    return ClosedFormSpectrum("firstsharp", {"d": d}, lambda th: d * th)


def oracle_by_name(name: str, **params) -> ClosedFormSpectrum:
    """Build an oracle from a family name and keyword parameters."""
    name = name.lower()
    if name == "riesz":
        return oracle_riesz(float(params["a"]), int(params.get("lambda", params.get("lam"))))
    if name == "cantor":
        return oracle_cantor(float(params["p"]))
    if name in ("bernoulli", "bernoulli_half"):
        return oracle_bernoulli_half(float(params["p"]))
    if name == "curve":
        return oracle_curve(float(params["p"]))
    if name == "firstsharp":
        return oracle_firstsharp(int(params.get("d", 1)))
    if name in ("embedded_cube", "hyperplane"):
        return oracle_embedded_cube(int(params["k"]), int(params["d"]))
    if name == "planar_embedded":
        # planar measure with dim_F = s and dim_S = t, represented by its chord lower bound
        s, t = float(params.get("s", 1.0)), float(params.get("t", 2.0))
        base = ClosedFormSpectrum("planar_chord", {"s": s, "t": t},
                                  lambda th: chord_lower_bound(s, t, th), lambda th: LOWER)
        return oracle_embedding_transport(base, 2)
    raise MeasureError(f"unknown oracle family {name!r}")
