"""Measure descriptors (YAML) and CSV emission.

Descriptor schema
-----------------
One YAML document per measure with keys ``family``, ``params`` and an
optional ``label``.  Parameters may also be given at the top level.

=============  ==============================================================
family         params
=============  ==============================================================
atomic         ``points`` (list of coordinates or of d-vectors), ``weights``
density        ``d``, ``cell_size``, ``values`` (nested list), ``origin``
selfsimilar    ``ratio``, ``translations``, ``weights``; or ``p`` for the
               middle-third Cantor measure with weights ``(p, 1 - p)``
riesz          ``a`` and ``lambda`` (scalars for ``a_j = a``,
               ``lambda_j = lambda^j``, or lists), ``depth`` or ``r_max``
               (default 65536), ``extra`` recorded frequencies (default 1)
curve          ``p``
embedded       ``base`` (a nested descriptor), ``frame`` (d x k matrix, or
               ``dim`` for the first k coordinate axes), ``offset``
convolution    ``factors`` (nested descriptors), or ``base`` and ``k``
firstsharp     ``d`` (default 1), ``n_max`` (default log2 of the default
               grid's top radius), ``resolution``
=============  ==============================================================
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

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
    _firstsharp_series,
    cantor_measure,
    firstsharp_density,
    riesz_geometric,
    validate,
)
from .transforms import DEFAULT_SHELLS

__all__ = [
    "FAMILIES",
    "Descriptor",
    "build_measure",
    "dump_descriptor",
    "emit_descriptor",
    "format_float",
    "parse_descriptors",
    "parse_measure",
    "read_csv",
    "read_spectrum_csv",
    "write_csv",
]

FAMILIES = ("atomic", "density", "selfsimilar", "riesz", "curve", "embedded", "convolution", "firstsharp")
DEFAULT_R_MAX = 65536


@dataclass(frozen=True)
class Descriptor:
    family: str
    params: dict
    label: str
    measure: Measure


def _params(doc: dict) -> tuple[str, dict, str]:
    if not isinstance(doc, dict) or "family" not in doc:
        raise MeasureError("descriptor must be a mapping with a 'family' key")
    family = str(doc["family"]).lower()
    if family not in FAMILIES:
        raise MeasureError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    params = dict(doc.get("params") or {})
    params.update({k: v for k, v in doc.items() if k not in ("family", "params", "label")})
    return family, params, str(doc.get("label", family))


def _require(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise MeasureError(f"missing parameter(s): {', '.join(missing)}")


def _riesz(params):
    _require(params, "a", "lambda")
    a, lam = params["a"], params["lambda"]
    extra = int(params.get("extra", 1))
    if np.isscalar(a) and np.isscalar(lam):
        lam = int(lam)
        if "depth" in params:
            depth = int(params["depth"])
            n = depth + extra
            return RieszProductMeasure((float(a),) * n, tuple(lam**j for j in range(1, n + 1)), depth)
        return riesz_geometric(float(a), lam, float(params.get("r_max", DEFAULT_R_MAX)), extra)
    a = [float(a)] * len(lam) if np.isscalar(a) else [float(v) for v in a]
    lam = [int(v) for v in lam]
    return RieszProductMeasure(tuple(a), tuple(lam), params.get("depth"))


def _embedded(params):
    _require(params, "base")
    base = build_measure(params["base"])
    if "frame" in params:
        frame = np.asarray(params["frame"], dtype=float)
    else:
        _require(params, "dim")
        frame = np.eye(int(params["dim"]))[:, : base.ambient_dim]
    return EmbeddedMeasure(base, frame, params.get("offset"))


def _atomic(params):
    _require(params, "points")
    pts = np.asarray(params["points"], dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    w = params.get("weights")
    w = np.full(pts.shape[0], 1.0 / pts.shape[0]) if w is None else np.asarray(w, dtype=float)
    return AtomicMeasure(pts, w)


def _density(params):
    _require(params, "cell_size", "values")
    values = np.asarray(params["values"], dtype=float)
    d = int(params.get("d", values.ndim))
    origin = params.get("origin")
    return DensityMeasure(d, float(params["cell_size"]), values,
                          None if origin is None else tuple(float(o) for o in origin))


def _selfsimilar(params):
    if "p" in params and "weights" not in params:
        return cantor_measure(float(params["p"]))
    _require(params, "ratio", "translations", "weights")
    return SelfSimilarMeasure(float(params["ratio"]), tuple(float(t) for t in params["translations"]),
                              tuple(float(w) for w in params["weights"]))


def _convolution(params):
    if "factors" in params:
        return ConvolutionMeasure(tuple(build_measure(f) for f in params["factors"]))
    _require(params, "base", "k")
    base = build_measure(params["base"])
    return ConvolutionMeasure((base,) * int(params["k"]))


def _firstsharp(params):
    d = int(params.get("d", 1))
    n_max = int(params.get("n_max", DEFAULT_SHELLS.get(d, 10)))
    return firstsharp_density(d, n_max, params.get("resolution"))


_BUILDERS = {
    "atomic": _atomic,
    "density": _density,
    "selfsimilar": _selfsimilar,
    "riesz": _riesz,
    "curve": lambda p: CurveLiftMeasure(float(p["p"])) if "p" in p else _require(p, "p"),
    "embedded": _embedded,
    "convolution": _convolution,
    "firstsharp": _firstsharp,
}


def build_measure(doc: dict, check: bool = True) -> Measure:
    """Construct and validate the measure described by ``doc``."""
    family, params, _ = _params(doc)
    measure = _BUILDERS[family](params)
    if check:
        validate(measure).raise_if_invalid()
    return measure


def parse_descriptors(path) -> list[Descriptor]:
    """All descriptors in a YAML file, one document per measure."""
    text = Path(path).read_text()
    try:
        docs = [d for d in yaml.safe_load_all(text) if d is not None]
    except yaml.YAMLError as exc:
        raise MeasureError(f"malformed descriptor file {path}: {exc}") from exc
    if not docs:
        raise MeasureError(f"descriptor file {path} is empty")
    out = []
    for doc in docs:
        family, params, label = _params(doc)
        out.append(Descriptor(family, params, label, build_measure(doc)))
    return out


def parse_measure(path) -> Measure:
    """The measure of the first document in ``path``."""
    return parse_descriptors(path)[0].measure


# ----------------------------------------------------------------------------
# canonical emission


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def _firstsharp_params(m: DensityMeasure):
    if m.series is None or m.values is not None:
        return None
    n_max = (m.series[0].freqs.size - 1) // 2
    ref = _firstsharp_series(n_max)
    for s in m.series:
        if not (np.array_equal(s.freqs, ref.freqs) and np.array_equal(s.coeffs, ref.coeffs)):
            return None
    if m.cell_size != 1.0 / m.resolution or any(o != 0 for o in m.origin):
        return None
    return {"d": m.ambient_dim, "n_max": n_max, "resolution": m.resolution}


def emit_descriptor(measure: Measure, label: str | None = None) -> dict:
    """Canonical descriptor; ``build_measure(emit_descriptor(m))`` reproduces ``m``."""
    if isinstance(measure, AtomicMeasure):
        family, params = "atomic", {"points": _floats(measure.points), "weights": _floats(measure.weights)}
    elif isinstance(measure, DensityMeasure):
        fs = _firstsharp_params(measure)
        if fs is not None:
            family, params = "firstsharp", fs
        elif measure.values is None:
            raise MeasureError("only step densities and firstsharp series densities have descriptors")
        else:
            family = "density"
            params = {"d": measure.ambient_dim, "cell_size": float(measure.cell_size),
                      "values": _floats(measure.values), "origin": [float(o) for o in measure.origin]}
    elif isinstance(measure, SelfSimilarMeasure):
        family = "selfsimilar"
        params = {"ratio": float(measure.ratio), "translations": [float(t) for t in measure.translations],
                  "weights": [float(w) for w in measure.weights]}
    elif isinstance(measure, RieszProductMeasure):
        family = "riesz"
        a, lam = measure.a, measure.lam
        geometric = len(set(a)) == 1 and all(l == lam[0] ** (j + 1) for j, l in enumerate(lam))
        if geometric:
            params = {"a": a[0], "lambda": lam[0], "depth": measure.depth, "extra": len(lam) - measure.depth}
        else:
            params = {"a": list(a), "lambda": list(lam), "depth": measure.depth}
    elif isinstance(measure, CurveLiftMeasure):
        family, params = "curve", {"p": float(measure.p)}
    elif isinstance(measure, EmbeddedMeasure):
        family = "embedded"
        params = {"base": emit_descriptor(measure.base), "frame": _floats(measure.frame),
                  "offset": _floats(measure.offset)}
    elif isinstance(measure, ConvolutionMeasure):
        family, params = "convolution", {"factors": [emit_descriptor(f) for f in measure.factors]}
    else:
        raise MeasureError(f"no descriptor for {type(measure).__name__}")
    return {"family": family, "label": label or family, "params": params}


def dump_descriptor(measure: Measure, label: str | None = None) -> str:
    return yaml.safe_dump(emit_descriptor(measure, label), sort_keys=False)


# ----------------------------------------------------------------------------
# CSV


def format_float(x) -> str:
    """17 significant digits, enough to round-trip any float64."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(x)


def write_csv(path, header, rows) -> Path:
    """Write ``rows`` under ``header`` with full float precision; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) for v in row])
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


SPECTRUM_HEADER = ("theta", "estimate", "ci_halfwidth", "liminf_proxy", "limsup_proxy", "flags")
ENERGY_HEADER = ("theta", "s", "shell_index", "R", "partial_energy", "ball_average", "err_bound")
ORACLE_HEADER = ("theta", "value", "kind")
COMPARE_HEADER = ("theta", "estimate", "oracle", "kind", "gap", "tolerance", "within_tolerance")
PLOT_HEADER = ("series", "theta", "value")


def read_spectrum_csv(path):
    """``(thetas, estimates, ci_halfwidths, flags)`` from a spectrum CSV."""
    rows = read_csv(path)
    th = np.array([float(r["theta"]) for r in rows])
    est = np.array([float(r["estimate"]) for r in rows])
    ci = np.array([float(r["ci_halfwidth"]) for r in rows])
    return th, est, ci, [r["flags"] for r in rows]
