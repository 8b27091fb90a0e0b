"""Timing-gate and energy-band post-selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import ConvergenceError, QuadratureSpec, integrate_complex
from .spectral import QDotParams, fidelity, overlap_alpha, spectral_weight

__all__ = [
    "TimingGate",
    "FrequencyBand",
    "gate_efficiency",
    "gate_alpha",
    "gate_alpha_quadrature",
    "band_norm",
    "band_alpha",
    "band_fidelity",
]


@dataclass(frozen=True)
class TimingGate:
    """Accept pairs whose X photon arrives within ``width`` seconds of the XX photon."""

    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"gate width must be positive, got {self.width}")


@dataclass(frozen=True)
class FrequencyBand:
    """Detection band in detuning from the H exciton line (rad/s)."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or not self.lo < self.hi:
            raise ValueError(f"band needs lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def from_absolute(cls, lo: float, hi: float, omega0: float) -> FrequencyBand:
        """Band given in absolute angular frequency, shifted by the line centre."""
        return cls(lo - omega0, hi - omega0)


def gate_efficiency(qd: QDotParams, gate: TimingGate) -> float:
    """Probability the exciton photon is emitted within the gate, 1 - exp(-T/tau)."""
    return -math.expm1(-gate.width / qd.tau)


def _cexpm1(z: complex) -> complex:
    a, b = z.real, z.imag
    return complex(math.expm1(a) * math.cos(b) - 2.0 * math.sin(0.5 * b) ** 2,
                   math.exp(a) * math.sin(b))


def gate_alpha(qd: QDotParams, gate: TimingGate) -> complex:
    """Coherence of the pairs passing the gate (closed form)."""
    eff = gate_efficiency(qd, gate)
    if eff < 1e-15:
        raise ValueError(f"gate selects no photons (efficiency {eff:.3g})")
    x = qd.reduced_splitting
    if math.isinf(gate.width):
        numerator = 1.0 + 0j
    else:
        # 1 - exp((-1/tau + i S/hbar) T), written so small T keeps precision
        numerator = -_cexpm1(complex(-1.0, x) * (gate.width / qd.tau))
    return numerator / (complex(1.0, -x) * eff)


def gate_alpha_quadrature(qd: QDotParams, gate: TimingGate,
                          spec: QuadratureSpec | None = None) -> complex:
    """Gate coherence by direct quadrature of the time-domain integral."""
    tau, split = qd.tau, qd.splitting

    def integrand(t):
        return np.exp(-t / tau + 1j * split * t) / tau

    res = integrate_complex(integrand, (0.0, gate.width), spec, scale=tau)
    if not res.converged:
        raise ConvergenceError("gate integral did not converge", res.value, res.error_estimate)
    return res.value / gate_efficiency(qd, gate)


def band_norm(qd: QDotParams, band: FrequencyBand,
              spec: QuadratureSpec | None = None) -> float:
    """Fraction of X photons (H and V lines weighted equally) inside the band."""
    norm = spectral_weight(qd, band.lo, band.hi, spec)
    if norm < 1e-12:
        raise ValueError(f"empty band [{band.lo}, {band.hi}]: weight {norm:.3g}")
    return min(norm, 1.0)


def band_alpha(qd: QDotParams, band: FrequencyBand, mask=None,
               spec: QuadratureSpec | None = None, method: str = "quadrature") -> complex:
    return overlap_alpha(qd, mask, band, spec, method)


def band_fidelity(qd: QDotParams, band: FrequencyBand, mask=None,
                  spec: QuadratureSpec | None = None, method: str = "quadrature") -> float:
    return fidelity(band_alpha(qd, band, mask, spec, method))
