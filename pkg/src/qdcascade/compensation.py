"""Pixelated spectral phase masks and the grating/SLM bench.

A :class:`PhaseMask` holds the total phase the SLM adds to the V arm, one
value per pixel, so that the residual phase between the decay paths is
``phase_diff(omega) + m(omega)``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import QuadratureSpec
from .spectral import (
    C_LIGHT,
    QDotParams,
    fidelity,
    ideal_overlap,
    overlap_alpha,
    phase_diff,
)

__all__ = [
    "PhaseMask",
    "OpticalBench",
    "REFERENCE_BENCH",
    "EvanescentOrderError",
    "MaskTooLargeError",
    "build_mask",
    "compensated_fidelity",
    "grating_angle",
    "slm_position",
    "slm_dispersion",
    "pixel_bandwidth_from_bench",
    "diffraction_loss",
    "bench_throughput",
    "wavelength_of",
    "GEOMETRY_MODEL",
]

EXTEND_EDGE = "extend-edge"
ZERO = "zero"
MASK_CSV_HEADER = ("pixel_index", "omega_lo_rad_s", "omega_hi_rad_s", "phase_rad")

GEOMETRY_MODEL = ("single-pass lateral displacement x = L*tan(theta) between parallel "
                  "gratings, SLM in the folding-mirror plane")


class EvanescentOrderError(ValueError):
    """The first diffraction order does not propagate (|sin theta| >= 1)."""


class MaskTooLargeError(ValueError):
    pass


def wrap_phase(phase):
    """Wrap to (-pi, pi]."""
    phase = np.asarray(phase, dtype=float)
    wrapped = np.pi - np.mod(np.pi - phase, 2.0 * np.pi)
    return wrapped


@dataclass(frozen=True, eq=False)
class PhaseMask:
    """Piecewise-constant spectral phase over contiguous detuning pixels.

    ``boundaries`` has one more entry than ``phases``. Outside the tiled range
    the mask either holds the edge pixel's phase (``"extend-edge"``) or
    applies nothing (``"zero"``). ``global_offset`` is added everywhere,
    including outside the tiled range.
    """

    boundaries: np.ndarray
    phases: np.ndarray
    global_offset: float = 0.0
    outside_behavior: str = EXTEND_EDGE
    _lookup: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = np.array(self.boundaries, dtype=float)
        p = np.array(self.phases, dtype=float)
        if b.ndim != 1 or p.ndim != 1 or b.size != p.size + 1 or p.size == 0:
            raise ValueError("need len(boundaries) == len(phases) + 1 >= 2")
        if not np.all(np.isfinite(b)) or np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be finite and strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValueError("phases must be finite")
        if not math.isfinite(self.global_offset):
            raise ValueError("global_offset must be finite")
        if self.outside_behavior not in (EXTEND_EDGE, ZERO):
            raise ValueError(f"unknown outside_behavior {self.outside_behavior!r}")
        p = wrap_phase(p)
        b.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "phases", p)
        edge = (p[0], p[-1]) if self.outside_behavior == EXTEND_EDGE else (0.0, 0.0)
        lookup = np.concatenate([[edge[0]], p, [edge[1]]]) + self.global_offset
        object.__setattr__(self, "_lookup", lookup)

    def __len__(self):
        return self.phases.size

    @property
    def is_identity(self) -> bool:
        return self.global_offset == 0.0 and not np.any(self.phases)

    def evaluate(self, omega):
        """Applied phase m(omega), global offset included."""
        idx = np.searchsorted(self.boundaries, np.asarray(omega, dtype=float), side="right")
        return self._lookup[idx]

    def with_offset(self, theta: float) -> PhaseMask:
        return PhaseMask(self.boundaries, self.phases, theta, self.outside_behavior)

    def to_csv(self, path=None) -> str:
        """Serialize pixel rows (global offset excluded) and optionally write ``path``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(MASK_CSV_HEADER)
        b = self.boundaries
        for i, ph in enumerate(self.phases):
            writer.writerow([i, f"{b[i]:.17g}", f"{b[i + 1]:.17g}", f"{ph:.17g}"])
        text = buf.getvalue()
        if path is not None:
            try:
                Path(path).write_text(text, encoding="utf-8", newline="")
            except OSError as exc:
                raise OSError(f"cannot write mask CSV to {path}: {exc}") from exc
        return text

    @classmethod
    def from_csv(cls, source) -> PhaseMask:
        """Parse a mask CSV from a path or from the text itself."""
        text = source if isinstance(source, str) and "\n" in source else Path(source).read_text(
            encoding="utf-8")
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != MASK_CSV_HEADER:
            raise ValueError(f"mask CSV header must be {','.join(MASK_CSV_HEADER)}")
        body = rows[1:]
        if not body:
            raise ValueError("mask CSV has no pixels")
        lo = [float(r[1]) for r in body]
        hi = [float(r[2]) for r in body]
        if any(h != l2 for h, l2 in zip(hi[:-1], lo[1:])):
            raise ValueError("mask CSV pixels are not contiguous")
        return cls(np.array(lo + [hi[-1]]), np.array([float(r[3]) for r in body]))


def _half_range(qd: QDotParams, coverage_tol: float) -> float:
    # Both |omega| and |S/hbar - omega| exceed |u| - S/(2 hbar) with u measured
    # from the midpoint, which bounds the excluded tails of ∫ f_H f_V by
    # (2/pi)(pi/2 - arctan((W - S/2hbar)/Gamma)).
    budget = coverage_tol * ideal_overlap(qd)
    return 0.5 * qd.splitting + qd.half_width / math.tan(0.5 * math.pi * budget)


def build_mask(qd: QDotParams, pixel_bandwidth: float, coverage_tol: float = 1e-6,
               *, max_pixels: int = 1_000_000, global_offset: float = 0.0) -> PhaseMask:
    """Stepped compensation mask with pixels of width ``pixel_bandwidth``.

    Pixels are centred on the midpoint S/(2 hbar) of the two lines and extend
    until the excluded tail of ∫ f_H f_V is below ``coverage_tol`` of the
    total. Each pixel carries minus the phase difference at its centre.
    """
    if not (pixel_bandwidth > 0 and math.isfinite(pixel_bandwidth)):
        raise ValueError(f"pixel_bandwidth must be positive, got {pixel_bandwidth}")
    if not 0 < coverage_tol < 1:
        raise ValueError(f"coverage_tol must lie in (0, 1), got {coverage_tol}")

    mid = 0.5 * qd.splitting
    half_range = _half_range(qd, coverage_tol)
    k = math.ceil(half_range / pixel_bandwidth - 0.5)
    n_pixels = 2 * k + 1
    if n_pixels > max_pixels:
        raise MaskTooLargeError(
            f"mask needs {n_pixels} pixels of {pixel_bandwidth:.3g} rad/s, "
            f"above the cap of {max_pixels}")
    steps = np.arange(-k, k + 1, dtype=float)
    centers = mid + steps * pixel_bandwidth
    boundaries = mid + np.arange(-k - 0.5, k + 1.0, dtype=float) * pixel_bandwidth
    return PhaseMask(boundaries, -phase_diff(centers, qd), global_offset, EXTEND_EDGE)


def compensated_fidelity(qd: QDotParams, mask: PhaseMask,
                         spec: QuadratureSpec | None = None) -> float:
    return fidelity(overlap_alpha(qd, mask, None, spec))


@dataclass(frozen=True)
class OpticalBench:
    """Two parallel gratings, folding mirror and SLM (SI units)."""

    grating_period: float
    sin_incidence: float
    grating_separation: float
    pixel_pitch: float
    grating_efficiency: float = 1.0
    slm_efficiency: float = 1.0

    def __post_init__(self):
        if not self.grating_period > 0:
            raise ValueError("grating_period must be positive")
        if not abs(self.sin_incidence) < 1:
            raise ValueError("|sin_incidence| must be below 1")
        if not self.grating_separation > 0:
            raise ValueError("grating_separation must be positive")
        if not self.pixel_pitch > 0:
            raise ValueError("pixel_pitch must be positive")
        for name in ("grating_efficiency", "slm_efficiency"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")


REFERENCE_BENCH = OpticalBench(
    grating_period=1.1e-6,
    sin_incidence=0.18,
    grating_separation=0.29,
    pixel_pitch=20e-6,
    grating_efficiency=0.9,
    slm_efficiency=0.95,
)


def wavelength_of(omega_abs: float) -> float:
    return 2.0 * math.pi * C_LIGHT / omega_abs


def grating_angle(wavelength: float, bench: OpticalBench) -> float:
    """sin(theta) of the first diffracted order, from d sin(theta) - d sin(i) = lambda."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    sin_theta = bench.sin_incidence + wavelength / bench.grating_period
    if abs(sin_theta) >= 1:
        raise EvanescentOrderError(
            f"evanescent order: sin(theta) = {sin_theta:.6g} for wavelength {wavelength:.6g} m")
    return sin_theta


def slm_position(omega_abs: float, bench: OpticalBench, reference: float = 0.0) -> float:
    """Lateral position L*tan(theta) on the SLM plane, minus ``reference``."""
    s = grating_angle(wavelength_of(omega_abs), bench)
    return bench.grating_separation * s / math.sqrt(1.0 - s * s) - reference


def slm_dispersion(omega_abs: float, bench: OpticalBench) -> float:
    """dx/d(omega) on the SLM plane (m per rad/s); negative, blue lands lower."""
    lam = wavelength_of(omega_abs)
    s = grating_angle(lam, bench)
    cos_theta = math.sqrt(1.0 - s * s)
    dx_dlambda = bench.grating_separation / (bench.grating_period * cos_theta ** 3)
    return -dx_dlambda * lam * lam / (2.0 * math.pi * C_LIGHT)


def pixel_bandwidth_from_bench(bench: OpticalBench, omega_abs: float) -> float:
    """Angular-frequency width mapped onto one SLM pixel."""
    dispersion = slm_dispersion(omega_abs, bench)
    if dispersion == 0:
        raise ValueError("bench has zero dispersion")
    return bench.pixel_pitch / abs(dispersion)


def diffraction_loss(wavelength: float, pixel_pitch: float) -> float:
    """Estimated photon loss from pixel-edge diffraction, lambda/pitch."""
    if not (wavelength > 0 and pixel_pitch > 0):
        raise ValueError("wavelength and pixel_pitch must be positive")
    loss = wavelength / pixel_pitch
    if loss >= 1:
        warnings.warn("lambda/pitch >= 1: the diffraction-loss estimate is not valid here",
                      RuntimeWarning, stacklevel=2)
    return loss


def bench_throughput(bench: OpticalBench) -> float:
    """Four grating passes and one SLM pass."""
    return bench.grating_efficiency ** 4 * bench.slm_efficiency
