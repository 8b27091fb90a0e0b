"""Two-photon spectral state of a biexciton-exciton cascade.

Spectral functions take ``omega`` as the detuning (rad/s) from the
H-polarized exciton line; the V line sits at ``fss/hbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .numerics import ConvergenceError, QuadratureSpec, integrate_complex, integrate_real

if TYPE_CHECKING:
    from .compensation import PhaseMask

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "HBAR",
    "C_LIGHT",
    "MICRO_EV",
    "QDotParams",
    "amplitude_h",
    "amplitude_v",
    "phase_h",
    "phase_v",
    "phase_diff",
    "overlap_alpha",
    "alpha_closed_form",
    "ideal_overlap",
    "fidelity",
    "density_matrix",
    "apply_global_phase",
    "spectral_weight",
    "segment_overlaps",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values in SI units."""

    hbar: float = 1.054571817e-34
    c: float = 299792458.0
    microelectronvolt: float = 1.602176634e-25


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
C_LIGHT = CONSTANTS.c
MICRO_EV = CONSTANTS.microelectronvolt

DEFAULT_OMEGA0 = 2.124e15


@dataclass(frozen=True)
class QDotParams:
    """Quantum-dot emitter.

    Attributes:
        tau: exciton lifetime in seconds.
        fss: fine-structure splitting in µeV.
        omega0: absolute angular frequency of the H exciton line (rad/s).
    """

    tau: float
    fss: float
    omega0: float = DEFAULT_OMEGA0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if not (self.fss >= 0 and math.isfinite(self.fss)):
            raise ValueError(f"fss must be non-negative and finite, got {self.fss}")
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise ValueError(f"omega0 must be positive, got {self.omega0}")

    @property
    def splitting(self) -> float:
        """FSS as an angular frequency, S/hbar (rad/s)."""
        return self.fss * MICRO_EV / HBAR

    @property
    def half_width(self) -> float:
        """Amplitude half-width 1/(2 tau) of the Lorentzian lines (rad/s)."""
        return 0.5 / self.tau

    @property
    def reduced_splitting(self) -> float:
        """Dimensionless S*tau/hbar."""
        return self.splitting * self.tau


def amplitude_h(omega, qd: QDotParams):
    """Spectral amplitude of the H path, {2 pi tau [1/(2 tau)^2 + omega^2]}^(-1/2)."""
    omega = np.asarray(omega, dtype=float)
    return 1.0 / np.sqrt(2.0 * np.pi * qd.tau * (qd.half_width ** 2 + omega ** 2))


def amplitude_v(omega, qd: QDotParams):
    omega = np.asarray(omega, dtype=float)
    return 1.0 / np.sqrt(
        2.0 * np.pi * qd.tau * (qd.half_width ** 2 + (qd.splitting - omega) ** 2))


def phase_h(omega, qd: QDotParams):
    return np.arctan(-2.0 * np.asarray(omega, dtype=float) * qd.tau)


def phase_v(omega, qd: QDotParams):
    return np.arctan(2.0 * qd.tau * (qd.splitting - np.asarray(omega, dtype=float)))


def phase_diff(omega, qd: QDotParams):
    """Phase between the VV and HH decay paths, bounded in [0, pi)."""
    omega = np.asarray(omega, dtype=float)
    return np.arctan(2.0 * qd.tau * (qd.splitting - omega)) + np.arctan(2.0 * omega * qd.tau)


def _product(omega, qd):
    return amplitude_h(omega, qd) * amplitude_v(omega, qd)


def _require(result, what: str):
    if not result.converged:
        raise ConvergenceError(f"{what} did not converge", result.value, result.error_estimate)
    return result.value


def spectral_weight(qd: QDotParams, lo: float, hi: float,
                    spec: QuadratureSpec | None = None) -> float:
    """Mean H/V line probability in [lo, hi], ½∫(|f_H|² + |f_V|²)dω."""
    def integrand(w):
        return 0.5 * (amplitude_h(w, qd) ** 2 + amplitude_v(w, qd) ** 2)

    res = integrate_real(integrand, (lo, hi), spec, points=_centers(qd, lo, hi),
                         scale=qd.half_width, center=0.5 * qd.splitting)
    return _require(res, "spectral weight")


def _centers(qd, lo, hi):
    return [p for p in (0.0, 0.5 * qd.splitting, qd.splitting) if lo < p < hi]


def overlap_alpha(qd: QDotParams, mask: PhaseMask | None = None, band=None,
                  spec: QuadratureSpec | None = None, method: str = "quadrature") -> complex:
    """Off-diagonal coherence α = ∫ f_H f_V exp(i(φ + m)) dω.

    ``m`` is the phase applied by ``mask`` (zero without one). When ``band``
    (anything with ``lo``/``hi`` detunings) is given, the integral is
    restricted to it and divided by the collected line weight.

    ``method="quadrature"`` integrates numerically; ``method="exact"`` sums
    closed-form integrals of f_H f_V e^{iφ} over each constant-phase segment.
    """
    lo, hi = (-math.inf, math.inf) if band is None else (float(band.lo), float(band.hi))
    if not lo < hi:
        raise ValueError(f"band must satisfy lo < hi, got [{lo}, {hi}]")
    if mask is not None and mask.is_identity:
        mask = None
    if method == "exact":
        return _overlap_exact(qd, mask, lo, hi)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")

    points = _centers(qd, lo, hi)
    if mask is None:
        def integrand(w):
            return _product(w, qd) * np.exp(1j * phase_diff(w, qd))
    else:
        points = np.concatenate([points, mask.boundaries[(mask.boundaries > lo)
                                                         & (mask.boundaries < hi)]])

        def integrand(w):
            return _product(w, qd) * np.exp(1j * (phase_diff(w, qd) + mask.evaluate(w)))

    spec = _spec_for(spec, len(points))
    res = integrate_complex(integrand, (lo, hi), spec, points=points,
                            scale=qd.half_width, center=0.5 * qd.splitting)
    alpha = _require(res, "overlap integral")
    if band is not None:
        norm = spectral_weight(qd, lo, hi, spec)
        if norm < 1e-12:
            raise ValueError(f"empty band [{lo}, {hi}]: collected weight {norm:.3g}")
        alpha = alpha / norm
    return _clamp(alpha)


def _log1p(z):
    # log(1 + z) without cancellation for small complex z
    re, im = z.real, z.imag
    return 0.5 * np.log1p(2.0 * re + re * re + im * im) + 1j * np.arctan2(im, 1.0 + re)


def segment_overlaps(qd: QDotParams, edges) -> np.ndarray:
    """Closed-form ∫ f_H f_V e^{iφ} dω over consecutive segments of ``edges``.

    Uses f_H f_V e^{iφ} = 1 / (2πτ (Γ - iω)(Γ - i(S/ħ - ω))), whose
    antiderivative is i [log(Γ - iω) - log(Γ - iS/ħ + iω)] / (2π(1 - iSτ/ħ)).
    Edges may be infinite at either end.
    """
    edges = np.asarray(edges, dtype=float)
    gamma, split = qd.half_width, qd.splitting
    a, b = edges[:-1], edges[1:]
    out = np.empty(a.size, dtype=complex)
    finite = np.isfinite(a) & np.isfinite(b)
    if np.any(finite):
        af, width = a[finite], (b - a)[finite]
        left = gamma - 1j * af
        right = gamma - 1j * split + 1j * af
        out[finite] = _log1p(-1j * width / left) - _log1p(1j * width / right)
    for i in np.flatnonzero(~finite):
        out[i] = _log_term(b[i], gamma, split) - _log_term(a[i], gamma, split)
    return out * (1j / (2.0 * math.pi * complex(1.0, -qd.reduced_splitting)))


def _log_term(w, gamma, split):
    if w == math.inf:
        return -1j * math.pi
    if w == -math.inf:
        return 1j * math.pi
    return np.log(complex(gamma, -w)) - np.log(complex(gamma, w - split))


def _weight_exact(qd, lo, hi):
    def cdf(w, center):
        return math.atan((w - center) / qd.half_width) / math.pi
    return 0.5 * (cdf(hi, 0.0) - cdf(lo, 0.0) + cdf(hi, qd.splitting) - cdf(lo, qd.splitting))


def _overlap_exact(qd, mask, lo, hi):
    if mask is None:
        alpha = segment_overlaps(qd, [lo, hi])[0]
    else:
        inner = mask.boundaries[(mask.boundaries > lo) & (mask.boundaries < hi)]
        edges = np.concatenate([[lo], inner, [hi]])
        mids = _segment_probe(edges)
        pieces = segment_overlaps(qd, edges)
        alpha = np.sum(pieces * np.exp(1j * mask.evaluate(mids)))
    if math.isfinite(lo) or math.isfinite(hi):
        norm = _weight_exact(qd, lo, hi)
        if norm < 1e-12:
            raise ValueError(f"empty band [{lo}, {hi}]: collected weight {norm:.3g}")
        alpha = alpha / norm
    return _clamp(alpha)


def _segment_probe(edges):
    # a point strictly inside each segment, for looking up its mask phase
    a, b = edges[:-1], edges[1:]
    probe = 0.5 * (a + b)
    probe = np.where(np.isneginf(a), b - 1.0, probe)
    probe = np.where(np.isposinf(b), a + 1.0, probe)
    return probe


def _spec_for(spec, n_points):
    spec = QuadratureSpec() if spec is None else spec
    # every breakpoint starts its own interval; leave room to refine on top
    needed = 4 * (n_points + 16)
    if spec.max_subdivisions < needed:
        spec = QuadratureSpec(spec.abs_tol, spec.rel_tol, needed)
    return spec


def _clamp(alpha: complex) -> complex:
    mag = abs(alpha)
    if mag > 1.0:
        if mag > 1.0 + 1e-9:
            raise ValueError(f"|alpha| = {mag!r} exceeds 1: non-physical overlap")
        alpha = alpha / mag
    return complex(alpha)


def alpha_closed_form(qd: QDotParams) -> complex:
    """Time-domain α, ∫₀^∞ (1/τ) e^{-t/τ} e^{iSt/ħ} dt = 1/(1 - iSτ/ħ)."""
    return 1.0 / complex(1.0, -qd.reduced_splitting)


def ideal_overlap(qd: QDotParams, spec: QuadratureSpec | None = None) -> float:
    """∫ f_H f_V dω, the overlap with the phase difference removed."""
    res = integrate_real(lambda w: _product(w, qd), (-math.inf, math.inf), spec,
                         points=_centers(qd, -math.inf, math.inf),
                         scale=qd.half_width, center=0.5 * qd.splitting)
    return min(_require(res, "ideal overlap"), 1.0)


def fidelity(alpha: complex) -> float:
    """Fidelity with (HH + VV)/√2, ½(1 + Re α)."""
    return 0.5 * (1.0 + complex(alpha).real)


def density_matrix(alpha: complex) -> np.ndarray:
    """4x4 polarization density matrix in the {HH, HV, VH, VV} basis."""
    alpha = complex(alpha)
    if abs(alpha) > 1.0 + 1e-12:
        raise ValueError(f"|alpha| = {abs(alpha)!r} exceeds 1: non-physical state")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = 0.5 * alpha
    rho[3, 0] = 0.5 * alpha.conjugate()
    return rho


def apply_global_phase(alpha: complex, theta: float) -> complex:
    return complex(alpha) * complex(math.cos(theta), math.sin(theta))
