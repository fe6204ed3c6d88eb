import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sfwiener import io as sio
from sfwiener.cli import main
from sfwiener.estimation import TimeSeries
from sfwiener.filter_design import FIR

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


def check_hashes(d):
    m = manifest(d)
    assert m["outputs"]
    for name, digest in m["outputs"].items():
        assert sio.sha256(d / name) == digest
    return m


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    cfg = json.loads((CONFIGS / "simulate_scale_free.json").read_text())
    cfg["duration"] = 48.0
    d = tmp_path_factory.mktemp("sim")
    write_json(d / "sim.json", cfg)
    assert main(["simulate", str(d / "sim.json"), "--out", str(d / "out")]) == 0
    return d


@pytest.fixture(scope="module")
def scale_free_design_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("design")
    assert main(["design", str(CONFIGS / "design_scale_free.json"), "--out", str(d)]) == 0
    return d


def test_simulate_writes_three_series(sim_dir):
    out = sim_dir / "out"
    assert {p.name for p in out.iterdir()} == {"x.csv", "n.csv", "y.csv", "manifest.json"}
    m = check_hashes(out)
    assert m["seed"] == 1 and m["command"] == "simulate"
    x, n, y = (sio.read_series(out / f"{k}.csv") for k in "xny")
    np.testing.assert_allclose(y.samples, x.samples + n.samples, rtol=1e-15, atol=1e-15)
    assert y.dt == pytest.approx(1 / 256)


def test_simulate_is_byte_deterministic(sim_dir, tmp_path):
    assert main(["simulate", str(sim_dir / "sim.json"), "--out", str(tmp_path)]) == 0
    for k in "xny":
        assert (tmp_path / f"{k}.csv").read_bytes() == (sim_dir / "out" / f"{k}.csv").read_bytes()


def test_simulate_raw_format(tmp_path):
    cfg = json.loads((CONFIGS / "simulate_scale_free.json").read_text())
    cfg.update(duration=8.0, format="f64")
    write_json(tmp_path / "s.json", cfg)
    assert main(["simulate", str(tmp_path / "s.json"), "--out", str(tmp_path / "o")]) == 0
    y = sio.read_series(tmp_path / "o" / "y.f64")
    assert len(y) == 2048
    check_hashes(tmp_path / "o")


def test_zero_duration_is_a_usage_error(tmp_path):
    cfg = json.loads((CONFIGS / "simulate_scale_free.json").read_text())
    cfg["duration"] = 0
    write_json(tmp_path / "s.json", cfg)
    assert main(["simulate", str(tmp_path / "s.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["simulate", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["frobnicate"]) == 2


def test_design_scale_free_example(scale_free_design_dir):
    m = check_hashes(scale_free_design_dir)
    flt = json.loads((scale_free_design_dir / "filter.json").read_text())
    assert len(flt["coeffs_re"]) == 100
    assert m["precondition_enabled"] is True
    assert m["budget"]["n_max"] >= 1
    assert any("TruncationWarning" in w for w in m["warnings"])
    assert m["fir"]["leakage"] < 1e-3
    assert {"response.csv", "taps.csv", "filter.json"} <= set(m["outputs"])


def test_design_infeasible_exits_3(capfd):
    assert main(["design", str(CONFIGS / "design_infeasible.json"), "--out", "/tmp/sfw_infeasible"]) == 3
    assert "2*alpha_x - alpha_y > 1 failed" in capfd.readouterr().err


def test_design_without_preconditioning_on_high_snr_data(tmp_path):
    assert main(["design", str(CONFIGS / "design_rational.json"), "--out", str(tmp_path), "--no-precondition"]) == 0
    m = check_hashes(tmp_path)
    assert m["precondition_enabled"] is False
    d = m["diagnostics"]
    # converges to rounding level well before n = 100
    assert d["dyadic_deltas"][0] > d["dyadic_deltas"][1] > d["dyadic_deltas"][-1]
    assert d["dyadic_deltas"][-1] < 1e-12


def test_design_from_series(sim_dir, tmp_path):
    cfg = {
        "series": {
            "y": str(sim_dir / "out" / "y.csv"),
            "S_xy": {"model": "lorentzian_peak"},
            "welch": {"segment_length": 2048, "window": "slepian"},
            "S_yy_exponents": [0.0, 1.8],
        },
        "design": {"n_modes": 64, "omega_0": 5.0, "exponents": [0.0, 0.9]},
    }
    write_json(tmp_path / "d.json", cfg)
    assert main(["design", str(tmp_path / "d.json"), "--out", str(tmp_path / "o")]) == 0
    m = check_hashes(tmp_path / "o")
    assert m["estimation"]["segment_length"] == 2048


def test_apply_impulse_echoes_taps(tmp_path):
    taps = np.array([0.5, 0.25, -0.125, 0.0625])
    sio.write_taps_csv(tmp_path / "taps.csv", FIR(taps, 0.01, 0.0))
    imp = np.zeros(64)
    imp[0] = 1
    sio.write_series(tmp_path / "imp.csv", TimeSeries(0.01, imp))
    assert main(["apply", str(tmp_path / "taps.csv"), str(tmp_path / "imp.csv"), "--out", str(tmp_path / "o")]) == 0
    out = sio.read_series(tmp_path / "o" / "x_hat.csv").samples
    np.testing.assert_allclose(out[:4], taps, atol=1e-15)
    assert np.max(np.abs(out[4:])) < 1e-15
    check_hashes(tmp_path / "o")


def test_apply_rate_mismatch_exits_2(tmp_path):
    sio.write_taps_csv(tmp_path / "taps.csv", FIR(np.array([1.0, 0.5]), 0.01, 0.0))
    sio.write_series(tmp_path / "y.csv", TimeSeries(0.02, np.ones(32)))
    assert main(["apply", str(tmp_path / "taps.csv"), str(tmp_path / "y.csv"), "--out", str(tmp_path / "o")]) == 2


def test_apply_recorded_scale_free_run(sim_dir, scale_free_design_dir, tmp_path):
    out = sim_dir / "out"
    args = ["apply", str(scale_free_design_dir / "filter.json"), str(out / "y.csv"), "--out", str(tmp_path),
            "--truth", str(out / "x.csv"), "--segment-length", "2048"]
    assert main(args) == 0
    m = check_hashes(tmp_path)
    assert 0 < m["error"]["ratio"] < 1
    rows = (tmp_path / "error_psd.csv").read_text().splitlines()
    assert rows[0] == "series,omega,value"
    assert {r.split(",")[0] for r in rows[1:]} == {"S_ee", "S_yy"}


def test_apply_stream_audit(sim_dir, scale_free_design_dir, tmp_path):
    sc = {
        "S_xy": {"model": "lorentzian_peak"},
        "block_length": 4096, "redesign_every": 4, "n_taps": 1024,
        "welch": {"segment_length": 1024},
        "design": {"n_modes": 32, "omega_0": 5.0, "exponents": [0.0, 0.9]},
    }
    write_json(tmp_path / "stream.json", sc)
    out = sim_dir / "out"
    args = ["apply", str(scale_free_design_dir / "filter.json"), str(out / "y.csv"), "--out", str(tmp_path / "o"),
            "--mode", "stream", "--stream-config", str(tmp_path / "stream.json")]
    assert main(args) == 0
    m = check_hashes(tmp_path / "o")
    audit = m["stream_audit"]
    assert len(audit) == 3
    for a in audit:
        assert a["latency_blocks"] <= 1
        assert a["output_first"] == a["input_first"]
    assert m["stream"]["redesigns"] >= 1 and m["stream"]["failed_redesigns"] == 0
    assert main(args[:-2]) == 2


def test_verify_suites(capsys):
    assert main(["verify", "orthonormality", "toeplitz-bounds", "rational-benchmark"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"]
    by = {s["name"]: s for s in doc["suites"]}
    assert by["orthonormality"]["metric"] < 1e-10
    assert by["rational-benchmark"]["metric"] < 1e-3
    assert main(["verify", "nonsense"]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "sfwiener.cli", "verify", "hilbert"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["passed"]
    res = subprocess.run(
        [sys.executable, "-m", "sfwiener.cli", "design", str(CONFIGS / "design_infeasible.json"), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 3
