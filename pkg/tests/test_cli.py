import io
import json
import math

import pytest

from qdcascade import cli
from qdcascade.compensation import PhaseMask
from qdcascade.experiments import closed_form_uncompensated, read_csv
from qdcascade.numerics import ConvergenceError


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.parse_and_dispatch(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_fidelity_text_2_5():
    code, out, _ = run("fidelity", "--tau-ns", "0.77", "--fss-uev", "2.5")
    assert code == 0
    # 0.55234 at three decimals
    assert "fidelity 0.552\n" in out
    assert "re_alpha 0.105" in out
    assert "im_alpha 0.306" in out


def test_fidelity_text_zero_splitting():
    code, out, _ = run("fidelity", "--tau-ns", "0.77", "--fss-uev", "0")
    assert code == 0
    assert out.startswith("fidelity 1.000\n")


def test_fidelity_compensated():
    code, out, _ = run("fidelity", "--fss-uev", "2.5", "--compensate", "--pixel-bw", "1e9",
                       "--coverage", "1e-4", "--output", "json")
    assert code == 0
    assert json.loads(out)["fidelity"] == pytest.approx(0.757, abs=0.002)


def test_gate_text():
    code, out, _ = run("gate", "--width-ps", "49", "--fss-uev", "2.5")
    assert code == 0
    assert "efficiency 0.062" in out


def test_band_absolute():
    code, out, _ = run("band", "--lo", "2.1240006e15", "--hi", "2.1240024e15", "--absolute",
                       "--compensate", "--fss-uev", "2", "--output", "json")
    assert code == 0
    doc = json.loads(out)
    assert 0.15 <= doc["efficiency"] <= 0.25
    assert doc["fidelity"] == pytest.approx(0.90, abs=0.02)


def test_bench_reports_model():
    code, out, _ = run("bench", "--d-um", "1.1", "--sin-i", "0.18", "--sep-m", "0.29",
                       "--pixel-um", "20", "--output", "json")
    assert code == 0
    doc = json.loads(out)
    assert 1e8 <= doc["pixel_bandwidth_rad_s"] <= 1e11
    assert doc["model"] == cli.GEOMETRY_MODEL
    assert doc["throughput"] == pytest.approx(0.6233, abs=1e-4)
    code, text, _ = run("bench")
    assert "model " in text


@pytest.mark.parametrize("argv", [
    ["fidelity", "--fss-uev", "2.5"],
    ["fidelity", "--fss-uev", "1", "--compensate"],
    ["gate", "--width-ps", "500", "--fss-uev", "1"],
    ["band", "--lo=-1e9", "--hi", "1e9", "--fss-uev", "1"],
    ["bench"],
    ["sweep", "--fss-max", "1", "--steps", "3", "--out", "{tmp}/s.csv"],
    ["mask", "--fss-uev", "1", "--out", "{tmp}/m.csv"],
])
def test_json_output_is_single_document(argv, tmp_path):
    argv = [a.replace("{tmp}", str(tmp_path)) for a in argv]
    code, out, _ = run(*argv, "--output", "json")
    assert code == 0
    assert isinstance(json.loads(out), dict)
    assert out.count("\n") == 1


def test_csv_output():
    code, out, _ = run("gate", "--width-ps", "2000", "--fss-uev", "2.5", "--output", "csv")
    assert code == 0
    header, values = out.splitlines()
    assert header == "efficiency,fidelity"
    assert float(values.split(",")[0]) == pytest.approx(0.925, abs=1e-3)


def test_precedence_flag_over_config_over_default(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"fss_uev": 2.5, "tau_ns": 0.77}))
    _, default, _ = run("fidelity", "--output", "json")
    _, from_file, _ = run("fidelity", "--config", str(cfg), "--output", "json")
    _, from_flag, _ = run("fidelity", "--config", str(cfg), "--fss-uev", "1.0",
                          "--output", "json")
    assert json.loads(default)["fidelity"] == pytest.approx(1.0, abs=1e-12)
    assert json.loads(from_file)["fidelity"] == pytest.approx(
        closed_form_uncompensated(2.5), abs=1e-9)
    assert json.loads(from_flag)["fidelity"] == pytest.approx(
        closed_form_uncompensated(1.0), abs=1e-9)


def test_config_output_and_bench(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"output": "json", "bench": {"pixel_pitch": 10e-6}}))
    code, out, _ = run("bench", "--config", str(cfg))
    assert code == 0
    doc = json.loads(out)
    _, base, _ = run("bench", "--output", "json")
    assert doc["pixel_bandwidth_rad_s"] == pytest.approx(
        0.5 * json.loads(base)["pixel_bandwidth_rad_s"], rel=1e-12)


@pytest.mark.parametrize("argv, flag", [
    (["fidelity", "--tau-ns", "-1"], "--tau-ns"),
    (["fidelity", "--fss-uev", "-2"], "--fss-uev"),
    (["fidelity", "--compensate", "--pixel-bw", "0"], "--pixel-bw"),
    (["gate", "--width-ps", "0"], "--width-ps"),
    (["band", "--lo", "5", "--hi", "1"], "--lo"),
    (["sweep", "--fss-min", "3", "--fss-max", "1", "--out", "x.csv"], "--fss-min"),
    (["sweep"], "--out"),
    (["bench", "--d-um", "0.5", "--sin-i", "0.9"], "--d-um"),
    (["fidelity", "--compensate", "--pixel-bw", "1e3"], "--pixel-bw"),
    (["mask", "--coverage", "2", "--out", "x.csv"], "--coverage"),
])
def test_invalid_input_exit_2(argv, flag):
    code, out, err = run(*argv)
    assert code == 2
    assert flag in err
    assert out == ""


def test_argparse_errors_exit_2():
    code, out, err = run("fidelity", "--fss-uev", "abc")
    assert code == 2 and "--fss-uev" in err and out == ""
    assert run("nonsense")[0] == 2
    assert run()[0] == 2


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    code, _, err = run("fidelity", "--config", str(cfg))
    assert code == 2 and "--config" in err
    code, _, err = run("fidelity", "--config", str(tmp_path / "absent.json"))
    assert code == 2 and "--config" in err


def test_convergence_failure_exit_3(monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("overlap did not converge", 0.5, 2.5e-3)

    monkeypatch.setattr(cli, "overlap_alpha", boom)
    code, out, err = run("fidelity", "--fss-uev", "2.5")
    assert code == 3
    assert "2.500e-03" in err
    assert out == ""


def test_sweep_writes_figure_csv(tmp_path):
    path = tmp_path / "fig3.csv"
    code, out, _ = run("sweep", "--fss-min", "0", "--fss-max", "4", "--steps", "5",
                       "--out", str(path))
    assert code == 0
    assert "rows 5" in out
    rows = read_csv(path)
    assert [r.fss_uev for r in rows] == [0.0, 1.0, 2.0, 3.0, 4.0]
    for r in rows:
        assert abs(r.fidelity_uncompensated - closed_form_uncompensated(r.fss_uev)) < 1e-6


def test_mask_writes_csv(tmp_path):
    path = tmp_path / "mask.csv"
    code, out, _ = run("mask", "--fss-uev", "2.5", "--out", str(path))
    assert code == 0
    mask = PhaseMask.from_csv(path)
    assert f"pixels {len(mask)}" in out
    widths = mask.boundaries[1:] - mask.boundaries[:-1]
    assert widths == pytest.approx(1e10, rel=1e-6)
    assert all(-math.pi < p <= 0 for p in mask.phases)


def test_unwritable_output_exit_2(tmp_path):
    code, _, err = run("mask", "--fss-uev", "1", "--out", str(tmp_path / "no" / "m.csv"))
    assert code == 2
    assert "m.csv" in err
