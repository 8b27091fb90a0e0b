"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import io
import math

import numpy as np

from qdcascade import cli
from qdcascade.compensation import (
    REFERENCE_BENCH,
    bench_throughput,
    build_mask,
    compensated_fidelity,
    diffraction_loss,
)
from qdcascade.experiments import SweepSpec, closed_form_uncompensated, read_csv, sweep_fss
from qdcascade.numerics import integrate_real
from qdcascade.postselection import (
    FrequencyBand,
    TimingGate,
    band_fidelity,
    band_norm,
    gate_alpha,
    gate_alpha_quadrature,
    gate_efficiency,
)
from qdcascade.spectral import (
    QDotParams,
    alpha_closed_form,
    amplitude_h,
    amplitude_v,
    density_matrix,
    fidelity,
    overlap_alpha,
    phase_diff,
)

TAU = 0.77e-9
OMEGA0 = 2.124e15


def qd(fss):
    return QDotParams(TAU, fss)


def test_criterion_01_uncompensated_2_5(verdict):
    q = qd(2.5)
    alpha = overlap_alpha(q)
    f = fidelity(alpha)
    dev = abs(alpha - alpha_closed_form(q))
    verdict("1 uncompensated F(S=2.5)", abs(f - 0.553) <= 0.002 and dev < 1e-6,
            f"F = {f:.6f} (target 0.553 ± 0.002), |α - closed form| = {dev:.1e}")


def test_criterion_02_compensated_2_5(verdict):
    q = qd(2.5)
    f = compensated_fidelity(q, build_mask(q, 1e10))
    verdict("2 compensated F(S=2.5, Δω=1e10)", abs(f - 0.764) <= 0.005,
            f"F = {f:.6f} (target 0.764 ± 0.005)")


def test_criterion_03_compensated_3_8(verdict):
    q = qd(3.8)
    f = compensated_fidelity(q, build_mask(q, 1e10))
    verdict("3 compensated F(S=3.8, Δω=1e10)", f > 0.70, f"F = {f:.6f} (target > 0.70)")


def test_criterion_04_uncompensated_2(verdict):
    f = fidelity(overlap_alpha(qd(2.0)))
    verdict("4 uncompensated F(S=2)", abs(f - 0.578) <= 0.002,
            f"F = {f:.6f} (target 0.578 ± 0.002)")


def test_criterion_05_energy_band(verdict):
    q = qd(2.0)
    band = FrequencyBand.from_absolute(2.1240006e15, 2.1240024e15, OMEGA0)
    f = band_fidelity(q, band, build_mask(q, 1e10))
    eff = band_norm(q, band)
    verdict("5 band post-selection S=2",
            abs(f - 0.90) <= 0.02 and 0.15 <= eff <= 0.25,
            f"F = {f:.6f} (target 0.90 ± 0.02), efficiency = {eff:.6f} (target [0.15, 0.25])")


def test_criterion_06_gates(verdict):
    q = qd(2.5)
    e2 = gate_efficiency(q, TimingGate(2e-9))
    e49 = gate_efficiency(q, TimingGate(49e-12))
    dev = max(abs(gate_alpha(q, TimingGate(w)) - gate_alpha_quadrature(q, TimingGate(w)))
              for w in (49e-12, 2e-9))
    verdict("6 timing gates",
            abs(e2 - 0.925) <= 0.001 and abs(e49 - 0.062) <= 0.001 and dev < 1e-9,
            f"η(2 ns) = {e2:.6f}, η(49 ps) = {e49:.6f}, closed form vs quadrature {dev:.1e}")


def test_criterion_07_diffraction_loss(verdict):
    loss = diffraction_loss(0.887e-6, 20e-6)
    verdict("7 diffraction loss λ/Δ", abs(loss - 0.04435) < 1e-15,
            f"loss = {loss!r} (target 0.04435)")


def test_criterion_08_throughput(verdict):
    t = bench_throughput(REFERENCE_BENCH)
    verdict("8 bench throughput", abs(t - 0.9 ** 4 * 0.95) < 1e-15 and round(100 * t) == 62,
            f"throughput = {t:.6f} → {round(100 * t)}%")


def _properties():
    failures = []
    grid = np.linspace(0.0, 4.0, 17)

    for s in (0.0, 2.5, 6.0):
        q = qd(s)
        for amp in (amplitude_h, amplitude_v):
            norm = integrate_real(lambda w: amp(w, q) ** 2, (-math.inf, math.inf),
                                  scale=q.half_width, center=0.5 * q.splitting).value
            if abs(norm - 1) >= 1e-8:
                failures.append(f"normalization S={s}: {norm}")

    for s in (0.1, 2.5, 3.8):
        q = qd(s)
        w = np.linspace(-1e3 * q.half_width, 1e3 * q.half_width, 20_001)
        phi = phase_diff(w, q)
        if not (np.all(phi > 0) and np.all(phi < np.pi)):
            failures.append(f"phase bound S={s}")

    for s in grid:
        rho = density_matrix(alpha_closed_form(qd(s)))
        if not (np.allclose(rho, rho.conj().T, atol=1e-12)
                and abs(np.trace(rho) - 1) < 1e-12
                and np.linalg.eigvalsh(rho).min() >= -1e-12):
            failures.append(f"density matrix S={s}")

    q = qd(2.5)
    refined = [fidelity(overlap_alpha(q, build_mask(q, bw), method="exact"))
               for bw in (4e10, 2e10, 1e10, 5e9, 2.5e9)]
    if any(b < a - 1e-12 for a, b in zip(refined, refined[1:])):
        failures.append(f"refinement monotonicity {refined}")

    unrestricted = fidelity(alpha_closed_form(q))
    wide = FrequencyBand(-1e6 * q.half_width, 1e6 * q.half_width)
    if abs(band_fidelity(q, wide) - unrestricted) >= 1e-6:
        failures.append("full-band reduction")
    if abs(fidelity(gate_alpha(q, TimingGate(math.inf))) - unrestricted) >= 1e-6:
        failures.append("infinite-gate reduction")

    for row in sweep_fss(SweepSpec(0.0, 4.0, 41)):
        if not (row.fidelity_uncompensated <= row.fidelity_compensated
                <= row.fidelity_ideal + 1e-9):
            failures.append(f"row ordering S={row.fss_uev}")
    return failures


def test_criterion_09_property_suite(verdict):
    failures = _properties()
    verdict("9 property suite", not failures,
            "all properties hold" if not failures else "; ".join(failures))


def test_criterion_10_figure_sweep(verdict, tmp_path):
    path = tmp_path / "fig3.csv"
    out, err = io.StringIO(), io.StringIO()
    code = cli.parse_and_dispatch(["sweep", "--fss-min", "0", "--fss-max", "4", "--steps", "81",
                                   "--out", str(path)], stdout=out, stderr=err)
    rows = read_csv(path) if code == 0 else []
    dev = max((abs(r.fidelity_uncompensated - closed_form_uncompensated(r.fss_uev))
               for r in rows), default=math.inf)
    monotone = all(
        all(b <= a for a, b in zip(col, col[1:]))
        for col in ([getattr(r, n) for r in rows] for n in (
            "fidelity_uncompensated", "fidelity_compensated", "fidelity_ideal")))
    verdict("10 fidelity-vs-FSS sweep",
            code == 0 and len(rows) == 81 and dev < 1e-6 and monotone,
            f"exit {code}, {len(rows)} rows, max closed-form deviation {dev:.1e}, "
            f"monotone columns: {monotone}")
