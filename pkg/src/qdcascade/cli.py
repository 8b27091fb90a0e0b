"""Command-line front end.

Values resolve as: command-line flag, then ``--config`` JSON file, then
built-in defaults. Exit codes: 0 success, 2 invalid input, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields

from .compensation import (
    GEOMETRY_MODEL,
    REFERENCE_BENCH,
    EvanescentOrderError,
    MaskTooLargeError,
    OpticalBench,
    bench_throughput,
    build_mask,
    diffraction_loss,
    grating_angle,
    pixel_bandwidth_from_bench,
    slm_dispersion,
    wavelength_of,
)
from .experiments import SweepSpec, sweep_fss, write_csv
from .numerics import ConvergenceError
from .postselection import (
    FrequencyBand,
    TimingGate,
    band_fidelity,
    band_norm,
    gate_alpha,
    gate_efficiency,
)
from .spectral import DEFAULT_OMEGA0, QDotParams, fidelity, overlap_alpha

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

BENCH_FIELDS = {f.name for f in fields(OpticalBench)}


class UsageError(Exception):
    """Invalid input; the message names the offending flag."""


@dataclass
class RunConfig:
    tau_ns: float = 0.77
    fss_uev: float = 0.0
    omega0: float = DEFAULT_OMEGA0
    pixel_bandwidth: float = 1e10
    coverage_tol: float = 1e-6
    bench: dict = field(default_factory=dict)
    output: str = "text"
    out_path: str | None = None

    def validate(self):
        for name, flag in (("tau_ns", "--tau-ns"), ("omega0", "--omega0"),
                           ("pixel_bandwidth", "--pixel-bw")):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise UsageError(f"{flag} must be a positive number, got {value!r}")
        if not (isinstance(self.coverage_tol, (int, float)) and 0 < self.coverage_tol < 1):
            raise UsageError(f"--coverage must lie in (0, 1), got {self.coverage_tol!r}")
        if not (isinstance(self.fss_uev, (int, float)) and self.fss_uev >= 0):
            raise UsageError(f"--fss-uev must be >= 0, got {self.fss_uev!r}")
        if self.output not in ("text", "json", "csv"):
            raise UsageError(f"--output must be text, json or csv, got {self.output!r}")
        unknown = set(self.bench) - BENCH_FIELDS
        if unknown:
            raise UsageError(f"--config: unknown bench fields {sorted(unknown)}")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("--config: file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)}")
    return data


def resolve_config(args) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    flag_map = {
        "tau_ns": args.tau_ns,
        "fss_uev": getattr(args, "fss_uev", None),
        "omega0": args.omega0,
        "pixel_bandwidth": getattr(args, "pixel_bw", None),
        "coverage_tol": getattr(args, "coverage", None),
        "output": args.output,
        "out_path": getattr(args, "out", None),
    }
    for key, value in flag_map.items():
        if value is not None:
            values[key] = value
    cfg = RunConfig(**values)
    cfg.bench = dict(cfg.bench or {})
    cfg.validate()
    return cfg


def _qd(cfg: RunConfig) -> QDotParams:
    return QDotParams(cfg.tau_ns * 1e-9, cfg.fss_uev, cfg.omega0)


def _text(value) -> str:
    if not isinstance(value, float):
        return str(value)
    if value == 0 or 1e-3 <= abs(value) < 1e4:
        return f"{value:.3f}"
    return f"{value:.3e}"


def _emit(result: dict, cfg: RunConfig, out) -> None:
    if cfg.output == "json":
        out.write(json.dumps(result) + "\n")
    elif cfg.output == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(result))
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v
                         for v in result.values()])
        out.write(buf.getvalue())
    else:
        for key, value in result.items():
            out.write(f"{key} {_text(value)}\n")


def cmd_fidelity(args, cfg, out):
    qd = _qd(cfg)
    if args.compensate:
        mask = build_mask(qd, cfg.pixel_bandwidth, cfg.coverage_tol)
        alpha = overlap_alpha(qd, mask)
    else:
        alpha = overlap_alpha(qd)
    _emit({"fidelity": fidelity(alpha), "re_alpha": alpha.real, "im_alpha": alpha.imag,
           "abs_alpha": abs(alpha)}, cfg, out)


def cmd_sweep(args, cfg, out):
    if cfg.out_path is None:
        raise UsageError("--out is required for sweep")
    try:
        spec = SweepSpec(args.fss_min, args.fss_max, args.steps, cfg.tau_ns * 1e-9,
                         cfg.pixel_bandwidth, cfg.coverage_tol)
    except ValueError as exc:
        raise UsageError(f"--fss-min/--fss-max/--steps: {exc}") from exc
    rows = sweep_fss(spec)
    write_csv(rows, cfg.out_path)
    _emit({"rows": len(rows), "path": str(cfg.out_path)}, cfg, out)


def cmd_mask(args, cfg, out):
    if cfg.out_path is None:
        raise UsageError("--out is required for mask")
    qd = _qd(cfg)
    mask = build_mask(qd, cfg.pixel_bandwidth, cfg.coverage_tol)
    mask.to_csv(cfg.out_path)
    _emit({"pixels": len(mask), "pixel_bandwidth_rad_s": float(cfg.pixel_bandwidth),
           "path": str(cfg.out_path)}, cfg, out)


def cmd_gate(args, cfg, out):
    if not (args.width_ps > 0):
        raise UsageError(f"--width-ps must be positive, got {args.width_ps}")
    qd = _qd(cfg)
    gate = TimingGate(args.width_ps * 1e-12)
    try:
        alpha = gate_alpha(qd, gate)
    except ValueError as exc:
        raise UsageError(f"--width-ps: {exc}") from exc
    _emit({"efficiency": gate_efficiency(qd, gate), "fidelity": fidelity(alpha)}, cfg, out)


def cmd_band(args, cfg, out):
    qd = _qd(cfg)
    try:
        if args.absolute:
            band = FrequencyBand.from_absolute(args.lo, args.hi, cfg.omega0)
        else:
            band = FrequencyBand(args.lo, args.hi)
    except ValueError as exc:
        raise UsageError(f"--lo/--hi: {exc}") from exc
    mask = build_mask(qd, cfg.pixel_bandwidth, cfg.coverage_tol) if args.compensate else None
    try:
        eff = band_norm(qd, band)
    except ValueError as exc:
        raise UsageError(f"--lo/--hi: {exc}") from exc
    _emit({"efficiency": eff, "fidelity": band_fidelity(qd, band, mask)}, cfg, out)


def cmd_bench(args, cfg, out):
    values = {f.name: getattr(REFERENCE_BENCH, f.name) for f in fields(OpticalBench)}
    values.update(cfg.bench)
    for name, flag, scale in (("grating_period", "d_um", 1e-6),
                              ("sin_incidence", "sin_i", 1.0),
                              ("grating_separation", "sep_m", 1.0),
                              ("pixel_pitch", "pixel_um", 1e-6),
                              ("grating_efficiency", "grating_eff", 1.0),
                              ("slm_efficiency", "slm_eff", 1.0)):
        value = getattr(args, flag)
        if value is not None:
            values[name] = value * scale
    try:
        bench = OpticalBench(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bench parameters: {exc}") from exc
    lam = wavelength_of(cfg.omega0)
    try:
        sin_theta = grating_angle(lam, bench)
    except EvanescentOrderError as exc:
        raise UsageError(f"--d-um/--sin-i: {exc}") from exc
    _emit({
        "wavelength_m": lam,
        "sin_theta": sin_theta,
        "dispersion_m_per_rad_s": slm_dispersion(cfg.omega0, bench),
        "pixel_bandwidth_rad_s": pixel_bandwidth_from_bench(bench, cfg.omega0),
        "diffraction_loss": diffraction_loss(lam, bench.pixel_pitch),
        "throughput": bench_throughput(bench),
        "model": GEOMETRY_MODEL,
    }, cfg, out)


def _common(parser: argparse.ArgumentParser, fss: bool = True):
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    parser.add_argument("--output", choices=("text", "json", "csv"), default=None)
    parser.add_argument("--tau-ns", type=float, default=None, help="exciton lifetime (ns)")
    parser.add_argument("--omega0", type=float, default=None,
                        help="H exciton line angular frequency (rad/s)")
    if fss:
        parser.add_argument("--fss-uev", type=float, default=None, help="FSS energy (µeV)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdcascade",
        description="Entanglement of quantum-dot cascade photons with spectral phase compensation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="Bell-state fidelity and overlap")
    _common(p)
    p.add_argument("--compensate", action="store_true")
    p.add_argument("--pixel-bw", type=float, default=None, help="mask pixel bandwidth (rad/s)")
    p.add_argument("--coverage", type=float, default=None,
                   help="fraction of the overlap integral the mask may leave uncovered")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("sweep", help="fidelity-vs-FSS curves as CSV")
    _common(p, fss=False)
    p.add_argument("--fss-min", type=float, default=0.0)
    p.add_argument("--fss-max", type=float, default=4.0)
    p.add_argument("--steps", type=int, default=81)
    p.add_argument("--pixel-bw", type=float, default=None)
    p.add_argument("--coverage", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mask", help="write a compensation mask CSV")
    _common(p)
    p.add_argument("--pixel-bw", type=float, default=None)
    p.add_argument("--coverage", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("gate", help="timing-gate post-selection")
    _common(p)
    p.add_argument("--width-ps", type=float, required=True)
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("band", help="energy-band post-selection")
    _common(p)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--absolute", action="store_true",
                   help="--lo/--hi are absolute angular frequencies (rad/s)")
    p.add_argument("--compensate", action="store_true")
    p.add_argument("--pixel-bw", type=float, default=None)
    p.add_argument("--coverage", type=float, default=None)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("bench", help="grating/SLM geometry and efficiency")
    _common(p, fss=False)
    p.add_argument("--d-um", type=float, default=None, help="grating period (µm)")
    p.add_argument("--sin-i", type=float, default=None, help="sine of incidence angle")
    p.add_argument("--sep-m", type=float, default=None, help="grating separation (m)")
    p.add_argument("--pixel-um", type=float, default=None, help="SLM pixel pitch (µm)")
    p.add_argument("--grating-eff", type=float, default=None)
    p.add_argument("--slm-eff", type=float, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def parse_and_dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        cfg = resolve_config(args)
        args.func(args, cfg, stdout)
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except MaskTooLargeError as exc:
        stderr.write(f"error: --pixel-bw: {exc}\n")
        return EXIT_INVALID
    except ConvergenceError as exc:
        stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main():  # pragma: no cover
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":  # pragma: no cover
    main()
