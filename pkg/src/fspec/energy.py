"""Truncated energies, ball averages and lattice energies.

All powers ``|mu_hat|^(2/theta)`` are formed in log space; at
``theta = 0.05`` the exponent is 40 and linear-space sums would underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, logsumexp

from .measures import Measure, MeasureError, RieszProductMeasure
from .transforms import TransformSamples, riesz_coefficient, transform

__all__ = [
    "EnergyTable",
    "ball_average",
    "compute_energy_table",
    "lattice_energy",
    "lattice_partial_sums",
    "lattice_ratio_band",
    "partial_energy",
    "sphere_area",
]

NEG_INF = -np.inf


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2 * math.pi ** (d / 2) / gamma(d / 2)


def _log_abs(samples: TransformSamples):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(samples.values))


def _shell_logsum(log_terms, shell, n_shells):
    """``log sum`` of ``exp(log_terms)`` within each shell."""
    out = np.full(n_shells, NEG_INF)
    order = np.argsort(shell, kind="stable")
    bounds = np.searchsorted(shell[order], np.arange(n_shells + 1))
    sorted_terms = log_terms[order]
    for j in range(n_shells):
        chunk = sorted_terms[bounds[j]:bounds[j + 1]]
        if chunk.size:
            out[j] = logsumexp(chunk)
    return out


def _shell_max(vals, shell, n_shells):
    out = np.full(n_shells, NEG_INF)
    np.maximum.at(out, shell, vals)
    return out


def _cumulative_logsum(log_parts):
    return np.logaddexp.accumulate(log_parts)


def _shell_power_sums(samples: TransformSamples, theta: float):
    """Per shell ``log int |mu_hat|^(2/theta)`` and its propagated error (log)."""
    n = samples.n_shells
    la = _log_abs(samples)
    lw = np.log(samples.weights)
    q = 2.0 / theta
    log_int = _shell_logsum(q * la + lw, samples.shell, n)
    # (|v| + e)^q - |v|^q
    hi = q * np.log(np.abs(samples.values) + samples.err)
    with np.errstate(invalid="ignore", divide="ignore"):
        diff = hi + np.log(-np.expm1(q * la - hi))
    diff = np.where(np.isfinite(diff), diff, hi)
    log_err = _shell_logsum(diff + lw, samples.shell, n)
    return log_int, log_err


def ball_average(samples: TransformSamples, theta: float) -> np.ndarray:
    """``R_j^-d int_{|z| <= R_j} |mu_hat|^(2/theta) dz`` for every shell.

    ``theta = 0`` returns the running envelope ``max_{|z| <= R_j} |mu_hat|^2``.
    """
    return np.exp(_log_ball_average(samples, theta))


def _log_ball_average(samples, theta):
    d = samples.grid.dim
    radii = samples.grid.radii
    if theta == 0:
        return np.maximum.accumulate(2 * _shell_max(_log_abs(samples), samples.shell, samples.n_shells))
    if not 0 < theta <= 1:
        raise MeasureError("theta must lie in [0, 1]")
    log_int, _ = _shell_power_sums(samples, theta)
    return _cumulative_logsum(log_int) - d * np.log(radii)


def _log_partial(samples, theta, s):
    """``(log J_j, log err_j, exterior_only)`` of the truncated energy per shell."""
    d = samples.grid.dim
    n = samples.n_shells
    radii = samples.grid.radii
    r = samples.radius
    la = _log_abs(samples)
    if theta == 0:
        with np.errstate(divide="ignore"):
            terms = 2 * la + s * np.log(r)
        if s == 0:
            terms = 2 * la
        env = np.maximum.accumulate(_shell_max(terms, samples.shell, n))
        e = np.maximum.accumulate(_shell_max(
            np.log(2 * np.abs(samples.values) * samples.err + samples.err**2 + 1e-300)
            + s * np.log(np.maximum(r, 1e-300)), samples.shell, n))
        return env, e, False
    q = 2.0 / theta
    a = s / theta - d
    lw = np.log(samples.weights)
    inner = samples.shell == 0
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    lr_safe = np.where(r > 0, lr, 0.0)
    log_terms = q * la + a * lr_safe + lw
    hi = q * np.log(np.abs(samples.values) + samples.err)
    with np.errstate(invalid="ignore", divide="ignore"):
        dterm = hi + np.log(-np.expm1(q * la - hi))
    dterm = np.where(np.isfinite(dterm), dterm, hi) + a * lr_safe + lw
    log_shell = _shell_logsum(np.where(inner, NEG_INF, log_terms), samples.shell, n)
    log_err = _shell_logsum(np.where(inner, NEG_INF, dterm), samples.shell, n)
    exterior_only = s == 0
    if exterior_only:
        log_shell[0] = NEG_INF
    else:
        # singular part of the inner ball integrated exactly, sampled remainder
        lm = q * math.log(samples.mass)
        # the d=1 rectangle rule covers |z| <= r0 + h/2; match that region
        r_in = radii[0] + (samples.grid.spacing / 2 if d == 1 else 0.0)
        sing = math.exp(lm) * sphere_area(d) * r_in ** (s / theta) / (s / theta)
        pos = inner & (r > 0)
        rem = (np.exp(q * la[pos]) - math.exp(lm)) * np.exp(a * lr[pos] + lw[pos])
        inner_val = max(sing + rem.sum(), 0.0)
        log_shell[0] = math.log(inner_val) if inner_val > 0 else NEG_INF
        inner_err = np.exp(dterm[pos]).sum()
        log_err[0] = math.log(inner_err) if inner_err > 0 else NEG_INF
    log_i = _cumulative_logsum(log_shell)
    log_e = _cumulative_logsum(log_err)
    # d(I^theta) = theta I^(theta - 1) dI
    with np.errstate(invalid="ignore"):
        log_j = theta * log_i
        log_dj = math.log(theta) + (theta - 1) * log_i + log_e
    return log_j, log_dj, exterior_only


def partial_energy(samples: TransformSamples, theta: float, s: float) -> np.ndarray:
    """Truncated energy ``J_{s,theta}`` on each ball ``|z| <= R_j``.

    For ``theta > 0`` this is ``(int_{|z|<=R_j} |mu_hat|^(2/theta) |z|^(s/theta-d) dz)^theta``.
    The singular part ``mass^(2/theta) |z|^(s/theta-d)`` of the inner ball is
    integrated in closed form; for ``s = 0`` only the exterior ``|z| > R_0``
    is included.  ``theta = 0`` gives ``max |mu_hat|^2 |z|^s`` over the ball.
    """
    if not 0 <= theta <= 1:
        raise MeasureError("theta must lie in [0, 1]")
    if s < 0:
        raise MeasureError("s must be nonnegative")
    log_j, _, _ = _log_partial(samples, theta, s)
    return np.exp(log_j)


@dataclass
class EnergyTable:
    """Partial energies and ball averages indexed by ``(theta, s, shell)``.

    ``log_*`` arrays hold natural logarithms; the plain properties
    exponentiate them.
    """

    thetas: np.ndarray
    s_values: np.ndarray
    radii: np.ndarray
    dim: int
    log_partial: np.ndarray  # (n_theta, n_s, n_shells)
    log_partial_err: np.ndarray
    log_ball: np.ndarray  # (n_theta, n_shells)
    log_shell: np.ndarray  # (n_theta, n_shells) per-annulus integrals
    log_envelope: np.ndarray  # (n_shells,) max |mu_hat| per annulus
    exterior_only: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    @property
    def partial_energy(self):
        return np.exp(self.log_partial)

    @property
    def ball_average(self):
        return np.exp(self.log_ball)

    @property
    def err_bound(self):
        return np.exp(self.log_partial_err)

    def theta_index(self, theta: float) -> int:
        hit = np.flatnonzero(np.isclose(self.thetas, theta, rtol=0, atol=1e-12))
        if hit.size == 0:
            raise KeyError(f"theta {theta} not in table")
        return int(hit[0])

    def rows(self):
        """Yield CSV rows ``(theta, s, shell_index, R, partial_energy, ball_average, err_bound)``."""
        pe, ba, eb = self.partial_energy, self.ball_average, self.err_bound
        for i, th in enumerate(self.thetas):
            for k, s in enumerate(self.s_values):
                for j, r in enumerate(self.radii):
                    yield th, s, j, r, pe[i, k, j], ba[i, j], eb[i, k, j]


def compute_energy_table(samples: TransformSamples, thetas, s_values=(0.5,)) -> EnergyTable:
    thetas = np.asarray(thetas, dtype=float)
    s_values = np.asarray(s_values, dtype=float)
    n = samples.n_shells
    lp = np.empty((thetas.size, s_values.size, n))
    le = np.empty_like(lp)
    lb = np.empty((thetas.size, n))
    ls = np.empty_like(lb)
    ext = np.zeros((thetas.size, s_values.size), dtype=bool)
    for i, th in enumerate(thetas):
        lb[i] = _log_ball_average(samples, th)
        if th > 0:
            ls[i] = _shell_power_sums(samples, th)[0]
        else:
            ls[i] = 2 * _shell_max(_log_abs(samples), samples.shell, n)
        for k, s in enumerate(s_values):
            lp[i, k], le[i, k], ext[i, k] = _log_partial(samples, th, s)
    env = _shell_max(_log_abs(samples), samples.shell, n)
    return EnergyTable(thetas, s_values, samples.grid.radii.copy(), samples.grid.dim,
                       lp, le, lb, ls, env, ext)


# ----------------------------------------------------------------------------
# lattice energies


def _check_unit_support(measure: Measure):
    lo, hi = measure.support_box
    if np.any(lo < -1e-12) or np.any(hi > 1 + 1e-12):
        raise MeasureError("lattice energies need a measure supported in [0, 1]^d")


def _lattice_points(d, k, radius):
    n = int(math.floor(k * radius))
    if d == 1:
        # positive half; negative frequencies enter through conjugate symmetry
        return (np.arange(1, n + 1) / k)[:, None], np.full(n, 2.0)
    axes = [np.arange(-n, n + 1)] * d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    # half space with respect to lexicographic order
    first = np.argmax(pts != 0, axis=1)
    lead = pts[np.arange(pts.shape[0]), first]
    keep = lead > 0
    pts = pts[keep] / k
    keep_r = np.linalg.norm(pts, axis=1) <= radius + 1e-12
    pts = pts[keep_r]
    return pts, np.full(pts.shape[0], 2.0)


def lattice_partial_sums(measure: Measure, k: int, s: float, radii) -> np.ndarray:
    """``sum_{z in Z^d/k, 0 < |z| <= R} |mu_hat(z)|^(2k) |z|^(s k - d)`` for each ``R``."""
    _check_unit_support(measure)
    d = measure.ambient_dim
    if k < 1 or int(k) != k:
        raise MeasureError("k must be a positive integer")
    if not 0 < s < d / k:
        raise MeasureError("lattice energies need 0 < s < d / k")
    radii = np.asarray(radii, dtype=float)
    pts, mult = _lattice_points(d, k, float(radii.max()))
    if isinstance(measure, RieszProductMeasure) and k == 1:
        vals = np.array([riesz_coefficient(measure, int(round(m))) for m in pts[:, 0]])
    else:
        vals = np.concatenate([transform(measure, pts[i:i + 8192])[0] for i in range(0, pts.shape[0], 8192)]) \
            if pts.size else np.zeros(0)
    r = np.linalg.norm(pts, axis=1)
    with np.errstate(divide="ignore"):
        terms = mult * np.abs(vals) ** (2 * k) * r ** (s * k - d)
    order = np.argsort(r, kind="stable")
    csum = np.concatenate([[0.0], np.cumsum(terms[order])])
    idx = np.searchsorted(r[order], radii + 1e-12, side="right")
    return csum[idx]


def lattice_energy(measure: Measure, k: int, s: float, R: float) -> float:
    """Partial lattice sum at ``theta = 1/k`` up to radius ``R``."""
    return float(lattice_partial_sums(measure, k, s, [R])[0])


def lattice_ratio_band(measure: Measure, samples: TransformSamples, k: int, s: float):
    """Ratio of lattice and integral energies per shell.

    Both sides are evaluated for the normalised measure ``mu / mass`` so the
    comparison is homogeneous in the mass.  Returns ``(ratios, C)`` where
    ``C = max(max ratio, 1 / min ratio)``.
    """
    theta = 1.0 / k
    radii = samples.grid.radii
    mass = measure.mass
    lat = lattice_partial_sums(measure, k, s, radii) / mass ** (2 * k)
    log_j, _, _ = _log_partial(samples, theta, s)
    # J scales like mass^2 under mu -> c mu
    integral = np.exp(log_j - 2 * math.log(mass))
    ratios = (1.0 + lat) ** theta / integral
    band = float(max(ratios.max(), 1.0 / ratios.min()))
    return ratios, band
