"""Polarization entanglement of quantum-dot cascade photon pairs.

Spectral model of the biexciton-exciton cascade with fine-structure
splitting, pixelated spectral phase compensation, and timing/energy
post-selection baselines.
"""

from .compensation import (
    OpticalBench,
    PhaseMask,
    bench_throughput,
    build_mask,
    compensated_fidelity,
    diffraction_loss,
    grating_angle,
    pixel_bandwidth_from_bench,
    slm_position,
)
from .numerics import IntegralResult, QuadratureSpec, integrate_complex, integrate_real
from .postselection import (
    FrequencyBand,
    TimingGate,
    band_fidelity,
    band_norm,
    gate_alpha,
    gate_efficiency,
)
from .spectral import (
    QDotParams,
    alpha_closed_form,
    density_matrix,
    fidelity,
    ideal_overlap,
    overlap_alpha,
)

__version__ = "0.1.0"
