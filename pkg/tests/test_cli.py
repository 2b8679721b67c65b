import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from polaronsim import cli
from polaronsim.ed_oracle import exact_signal
from polaronsim.errors import ConfigurationError
from polaronsim.ramsey import RamseyConfig, measure_signal

REFERENCE = Path(__file__).resolve().parents[1] / "configs" / "reference.json"


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def read_json(path):
    return json.loads(path.read_text())


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for cmd in cli.COMMANDS:
        assert cmd in text
    assert "[ramsey]" in text and "n_steps=15" in text and cli.OUT_ENV in text


def test_subcommand_flags(capsys):
    with pytest.raises(SystemExit):
        cli.main(["ramsey", "--help"])
    text = capsys.readouterr().out
    for flag in ("--config", "--seed", "--shots", "--n-steps", "--threads", "--out", "--format", "--J", "--U-ff", "--U-imp", "--time-grid"):
        assert flag in text


def test_shipped_config_parses():
    cfg = cli.load_config(REFERENCE)
    assert cfg.model.U_imp == 2.5
    assert cfg.ramsey.shots == 1000
    assert cfg.ramsey.model["U_imp"] == 1.5 and cfg.ramsey.model["U_ff"] == 0.0
    assert cfg.heatmap.u_min == 0.1 and cfg.heatmap.u_max == 5.0
    assert {1, 15} <= set(cfg.trotter_scan.n_steps)
    assert cfg.ramsey.time_grid == tuple(np.arange(0, 4.01, 0.5))


def test_benchmark_outputs(tmp_path):
    code, out = run(tmp_path, "benchmark", "--config", str(REFERENCE))
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"benchmark_ed.csv", "benchmark_circuit.csv", "benchmark_shots.csv", "benchmark_summary.json"}
    rows = read_csv(out / "benchmark_ed.csv")
    assert list(rows[0]) == ["t", "P0", "P1", "S"] and len(rows) == 9
    summary = read_json(out / "benchmark_summary.json")
    cfg = RamseyConfig()
    ref = np.max(np.abs(measure_signal(cfg).re_s - exact_signal(cfg).re_s))
    assert summary["circuit_vs_ed_sup"] == pytest.approx(ref, abs=1e-9)
    # a single seed; the 0.99 median criterion lives in the acceptance suite
    assert summary["r2_shots_vs_circuit"] >= 0.95
    assert summary["r2_circuit_vs_ed"] >= 0.95


def test_benchmark_without_coupling_is_flat(tmp_path):
    code, out = run(tmp_path, "benchmark", "--U-imp", "0")
    assert code == 0
    for stem in ("ed", "circuit", "shots"):
        assert all(float(r["S"]) == pytest.approx(1.0, abs=1e-6) for r in read_csv(out / f"benchmark_{stem}.csv"))


@pytest.mark.parametrize(
    "payload",
    ['{"model": {"U_imp": 2.5', '{"bogus": 1}', '{"ramsey": {"shotz": 10}}', '{"ramsey": {"model": {"V": 1}}}', '{"format": "xml"}', '{"ramsey": {"time_grid": [1.0, 0.5]}}'],
)
def test_malformed_config_writes_nothing(tmp_path, payload, capsys):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    code, out = run(tmp_path, "benchmark", "--config", str(path))
    assert code == 1
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    code, out = run(tmp_path, "ramsey", "--config", str(tmp_path / "nope.json"))
    assert code == 1 and not out.exists()


def test_numerical_failure_exit_code(tmp_path):
    path = tmp_path / "singular.json"
    path.write_text(json.dumps({"noise": {"readout": [[0.5, 0.5], [0.5, 0.5]], "shots": 200}}))
    code, out = run(tmp_path, "mitigate", "--config", str(path))
    assert code == 2 and not out.exists()


def test_toml_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 4\n[ramsey]\nshots = 200\ntime_grid = {start = 0.0, stop = 1.0, step = 0.5}\n[model]\nhopping_J = 0.6\n')
    cfg = cli.load_config(path)
    assert cfg.seed == 4 and cfg.ramsey.time_grid == (0.0, 0.5, 1.0) and cfg.model.hopping_J == 0.6
    code, out = run(tmp_path, "ramsey", "--config", str(path))
    assert code == 0 and len(read_csv(out / "ramsey.csv")) == 3


def test_flags_override_config(tmp_path):
    code, out = run(tmp_path, "ramsey", "--config", str(REFERENCE), "--U-imp", "3.0", "--J", "0.6", "--shots", "50", "--n-steps", "4", "--time-grid", "0,1.5", "--seed", "9")
    assert code == 0
    cfg = RamseyConfig(
        params=cli._model(cli.RunConfig(), {"U_imp": 3.0, "hopping_J": 0.6})[1],
        time_grid=(0.0, 1.5), n_steps=4, shots=50, seed=9,
    )
    rows = read_csv(out / "ramsey.csv")
    assert float(rows[1]["S"]) == pytest.approx(measure_signal(cfg).re_s[1], abs=1e-6)


def test_bad_flags(tmp_path):
    assert run(tmp_path, "ramsey", "--time-grid", "0:1")[0] == 1
    assert run(tmp_path, "ramsey", "--threads", "0")[0] == 1
    assert run(tmp_path, "ramsey", "--shots", "0")[0] == 1


def test_reproducible_and_thread_independent(tmp_path):
    args = ("ramsey", "--config", str(REFERENCE), "--seed", "5")
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, "--threads", "4", name="b")
    assert (a / "ramsey.csv").read_bytes() == (b / "ramsey.csv").read_bytes()


def test_json_format(tmp_path):
    code, out = run(tmp_path, "ramsey", "--format", "json", "--shots", "100")
    assert code == 0
    data = read_json(out / "ramsey.json")
    assert set(data) == {"t", "P0", "P1", "S"} and len(data["t"]) == 9


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["ramsey", "--shots", "10", "--time-grid", "0,1"]) == 0
    assert (tmp_path / "env" / "ramsey.csv").exists()


def test_spectrum(tmp_path):
    code, out = run(tmp_path, "spectrum", "--config", str(REFERENCE), "--U-imp", "4.0")
    assert code == 0
    summary = read_json(out / "spectrum_summary.json")
    assert summary["peak_energy"] == pytest.approx(3.236, abs=0.05)
    assert read_csv(out / "spectrum.csv")[0].keys() == {"omega", "amplitude"}


def test_heatmap_full_range(tmp_path):
    code, out = run(tmp_path, "heatmap", "--config", str(REFERENCE), "--threads", "2")
    assert code == 0
    peaks = read_csv(out / "heatmap_peaks.csv")
    assert len(peaks) == 50
    assert float(peaks[0]["U_imp"]) == pytest.approx(0.1) and float(peaks[-1]["U_imp"]) == pytest.approx(5.0)
    summary = read_json(out / "heatmap_summary.json")
    assert 0.85 <= summary["slope"] <= 1.15 and summary["r2"] >= 0.99
    header = (out / "heatmap.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "U_imp" and len(header) == 512 * 8 + 1


def test_trotter_scan_contrast(tmp_path):
    code, out = run(tmp_path, "trotter-scan", "--config", str(REFERENCE))
    assert code == 0
    summary = read_json(out / "trotter_scan_summary.json")
    assert summary["ratio_1_over_15"] >= 10
    assert -1.15 <= summary["slope"] <= -0.85
    assert [int(r["n_steps"]) for r in read_csv(out / "trotter_scan.csv")] == [1, 4, 8, 15, 16, 32, 64]


def test_mitigate(tmp_path):
    code, out = run(tmp_path, "mitigate", "--config", str(REFERENCE), "--shots", "2000")
    assert code == 0
    summary = read_json(out / "mitigation_summary.json")
    assert {"ideal", "unmitigated", "zne", "readout_raw", "readout_corrected", "readout_clipped"} <= set(summary)
    assert abs(summary["unmitigated"]) < abs(summary["ideal"])
    assert [r["scale"] for r in read_csv(out / "zne.csv")] == ["1", "3", "5", "0"]


def test_vqe_default_and_tuned(tmp_path):
    code, out = run(tmp_path, "vqe", name="default")
    assert code == 0
    rows = read_csv(out / "vqe_trace.csv")
    assert len(rows) == 300 and list(rows[0]) == ["iteration", "energy", "best_energy"]
    assert read_json(out / "vqe_summary.json")["reference_energy"] == pytest.approx(-1.0)
    code, out = run(tmp_path, "vqe", "--config", str(REFERENCE), name="tuned")
    assert read_json(out / "vqe_summary.json")["abs_error"] <= 1e-2


def test_calibrate(tmp_path, monkeypatch):
    from polaronsim import ramsey

    full = ramsey.calibration_sweep
    monkeypatch.setattr(ramsey, "calibration_sweep", lambda **kw: full(n_steps=(None, 15), **kw))
    code, out = run(tmp_path, "calibrate", "--threads", "2")
    assert code == 0
    summary = read_json(out / "calibration_summary.json")
    rows = read_csv(out / "calibration.csv")
    assert summary["best_residual"] == pytest.approx(float(rows[0]["residual"]), abs=1e-6)
    assert len(rows) == 20


def test_parse_config_validation():
    with pytest.raises(ConfigurationError):
        cli.parse_config([])
    with pytest.raises(ConfigurationError):
        cli.parse_config({"threads": 0})
    with pytest.raises(ConfigurationError):
        cli.parse_config({"ramsey": {"time_grid": {"stop": 1.0}}})
    with pytest.raises(ConfigurationError):
        cli.parse_config({"ramsey": 3})
    cfg = cli.parse_config({"trotter_scan": {"time_grid": {"start": 0, "stop": 1, "step": 0.25}}})
    assert cfg.trotter_scan.time_grid == (0.0, 0.25, 0.5, 0.75, 1.0)
