"""Numerical Fourier spectra of measures: transforms, energies, estimates and oracles."""
from .applications import (
    CurveAlgebra,
    convolution_improves,
    convolution_lower_bound,
    convolve_spectrum,
    distance_set_check,
    fourth_moment_check,
    iterated_convolution_limit,
    sobolev_improving,
    sumset_bounds,
)
from .energy import compute_energy_table, lattice_energy, lattice_ratio_band, partial_energy
from .estimate import SpectrumCurve, diagnostics, estimate_fourier_dim, estimate_spectrum
from .io import build_measure, emit_descriptor, parse_measure
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
    cantor_measure,
    firstsharp_density,
    lebesgue_segment,
    riesz_geometric,
    validate,
)
from .oracle import oracle_by_name
from .transforms import FrequencyGrid, default_grid, eval_transform, sample_grid, transform

__version__ = "0.1.0"
