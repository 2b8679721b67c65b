"""Command-line entry point: ``polaronsim <command> [--config FILE] [flags]``.

Every command validates the whole configuration before computing anything
and writes its files only after all results are in memory. Exit status is
0 on success, 1 for configuration errors and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import CapacityError, ConfigurationError, PolaronSimError

OUT_ENV = "POLARONSIM_OUT"


@dataclass(frozen=True)
class ModelSection:
    bath_sites: int = 2
    spinful: bool = False
    impurity_present: bool = True
    impurity_sites: tuple[int, ...] | None = (0,)
    hopping_J: float = 1.0
    onsite_eps: tuple[float, ...] | None = None
    U_ff: float = 0.0
    U_imp: float = 2.5
    hopping_sign: int = -1


@dataclass(frozen=True)
class BenchmarkSection:
    model: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RamseySection:
    time_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
    initial_occupation: tuple[int, ...] | None = None
    n_steps: int = 15
    shots: int = 1000
    term_order: str = "kinetic_first"
    measure_imaginary: bool = False
    model: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SpectrumSection:
    dt: float = 0.1
    n_points: int = 512
    method: str = "ed"
    window: str = "hann"
    zero_pad_factor: int = 8
    search_range: tuple[float, float] | None = None
    model: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HeatmapSection:
    u_min: float = 0.1
    u_max: float = 5.0
    u_step: float = 0.1
    branch_u_min: float = 3.0
    model: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrotterScanSection:
    n_steps: tuple[int, ...] = (1, 4, 8, 15, 16, 32, 64)
    fit_min: int = 4
    time_grid: tuple[float, ...] = tuple(round(0.1 * k, 10) for k in range(41))
    model: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NoiseSection:
    p1: float = 0.001
    p2: float = 0.01
    readout: tuple[tuple[float, float], tuple[float, float]] | None = None
    zne_scales: tuple[int, ...] = (1, 3, 5)
    zne_order: int = 2
    zne_kind: str = "poly"
    zne_time: float = 2.0
    zne_n_steps: int = 1
    shots: int = 4000


@dataclass(frozen=True)
class VQESection:
    layers: int = 2
    entangler: str = "line"
    iterations: int = 300
    a: float = 0.2
    c: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    A: float | None = None
    shots: int | None = None
    init_scale: float = 0.1
    model: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    benchmark: BenchmarkSection = field(default_factory=BenchmarkSection)
    ramsey: RamseySection = field(default_factory=RamseySection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    heatmap: HeatmapSection = field(default_factory=HeatmapSection)
    trotter_scan: TrotterScanSection = field(default_factory=TrotterScanSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    vqe: VQESection = field(default_factory=VQESection)
    seed: int = 0
    threads: int = 1
    out: str | None = None
    format: str = "csv"


_SECTIONS: dict[str, type] = {
    "model": ModelSection,
    "benchmark": BenchmarkSection,
    "ramsey": RamseySection,
    "spectrum": SpectrumSection,
    "heatmap": HeatmapSection,
    "trotter_scan": TrotterScanSection,
    "noise": NoiseSection,
    "vqe": VQESection,
}
_MODEL_KEYS = {f.name for f in fields(ModelSection)}


def _freeze(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _expand_grid(value: Any, where: str) -> tuple[float, ...]:
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "step"}
        if extra or not {"stop", "step"} <= set(value):
            raise ConfigurationError(f"{where}: range needs start/stop/step keys")
        return _range(float(value.get("start", 0.0)), float(value["stop"]), float(value["step"]), where)
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    raise ConfigurationError(f"{where}: expected a list or a start/stop/step table")


def _range(start: float, stop: float, step: float, where: str) -> tuple[float, ...]:
    if step <= 0 or stop < start:
        raise ConfigurationError(f"{where}: empty or reversed range")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 12) for k in range(n))


def _section(cls: type, raw: Any, where: str):
    if not isinstance(raw, dict):
        raise ConfigurationError(f"[{where}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"[{where}] unknown keys: {', '.join(unknown)}")
    values = {}
    for k, v in raw.items():
        if k == "time_grid":
            v = _expand_grid(v, f"{where}.time_grid")
        elif k == "model":
            bad = sorted(set(v) - _MODEL_KEYS) if isinstance(v, dict) else ["<not a table>"]
            if bad:
                raise ConfigurationError(f"[{where}.model] unknown keys: {', '.join(bad)}")
        values[k] = _freeze(v)
    return cls(**values)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a table")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - top)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    kwargs: dict[str, Any] = {}
    for k, v in raw.items():
        kwargs[k] = _section(_SECTIONS[k], v, k) if k in _SECTIONS else v
    cfg = RunConfig(**kwargs)
    if cfg.format not in ("csv", "json"):
        raise ConfigurationError(f"format must be csv or json, got {cfg.format!r}")
    if not isinstance(cfg.threads, int) or cfg.threads < 1:
        raise ConfigurationError("threads must be a positive integer")
    return cfg


def load_config(path: str | os.PathLike) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            raw = tomllib.loads(text.decode())
        else:
            raw = json.loads(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"malformed config {p}: {exc}") from exc
    return parse_config(raw)


def _parse_time_grid(text: str) -> tuple[float, ...]:
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            return _range(*parts, "--time-grid")
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"--time-grid: expected 'start:stop:step' or a comma list, got {text!r}") from exc


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Command-line flags win over the config file."""
    model = cfg.model
    flagged = set()
    for flag, key in (("J", "hopping_J"), ("U_ff", "U_ff"), ("U_imp", "U_imp")):
        if getattr(args, flag, None) is not None:
            model = dataclasses.replace(model, **{key: getattr(args, flag)})
            flagged.add(key)
    # a flagged model key must also beat per-section model overrides
    sections = {}
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        if flagged and isinstance(getattr(sec, "model", None), dict):
            sections[name] = dataclasses.replace(sec, model={k: v for k, v in sec.model.items() if k not in flagged})
    cfg = dataclasses.replace(cfg, **sections)
    ramsey = cfg.ramsey
    if args.shots is not None:
        ramsey = dataclasses.replace(ramsey, shots=args.shots)
    if args.n_steps is not None:
        ramsey = dataclasses.replace(ramsey, n_steps=args.n_steps)
    if args.time_grid is not None:
        ramsey = dataclasses.replace(ramsey, time_grid=_parse_time_grid(args.time_grid))
    noise, vqe = cfg.noise, cfg.vqe
    if args.shots is not None:
        noise = dataclasses.replace(noise, shots=args.shots)
    changes: dict[str, Any] = {"model": model, "ramsey": ramsey, "noise": noise, "vqe": vqe}
    for name in ("seed", "threads", "out", "format"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    out = dataclasses.replace(cfg, **changes)
    if out.threads < 1:
        raise ConfigurationError("--threads must be >= 1")
    return out


def _model(cfg: RunConfig, override: dict | None = None):
    from .hamiltonian import HubbardParams, LatticeSpec

    m = dataclasses.replace(cfg.model, **{k: _freeze(v) for k, v in (override or {}).items()})
    try:
        lattice = LatticeSpec(m.bath_sites, m.spinful, m.impurity_present, m.impurity_sites)
        params = HubbardParams(m.hopping_J, m.onsite_eps, m.U_ff, m.U_imp, m.hopping_sign)
    except TypeError as exc:
        raise ConfigurationError(f"invalid model block: {exc}") from exc
    return lattice, params


def ramsey_config(cfg: RunConfig, *, model: dict | None = None, **changes):
    from .ramsey import RamseyConfig

    r = cfg.ramsey
    lattice, params = _model(cfg, model)
    base = dict(
        lattice=lattice,
        params=params,
        initial_occupation=r.initial_occupation,
        time_grid=r.time_grid,
        n_steps=r.n_steps,
        shots=r.shots,
        seed=cfg.seed,
        measure_imaginary=r.measure_imaginary,
        term_order=r.term_order,
    )
    base.update(changes)
    return RamseyConfig(**base)


class Outputs:
    """Collects named tables and summaries; nothing touches disk until ``flush``."""

    def __init__(self, fmt: str) -> None:
        self.fmt = fmt
        self.files: dict[str, str] = {}

    def table(self, stem: str, csv_text: str) -> None:
        if self.fmt == "csv":
            self.files[f"{stem}.csv"] = csv_text
            return
        lines = csv_text.strip().splitlines()
        header = lines[0].split(",")
        rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
        cols = {h: [r[k] for r in rows] for k, h in enumerate(header)}
        self.files[f"{stem}.json"] = json.dumps(cols, indent=1) + "\n"

    def summary(self, stem: str, data: dict) -> None:
        self.files[f"{stem}.json"] = json.dumps(data, indent=2, sort_keys=True) + "\n"

    def flush(self, out_dir: Path) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.files.items():
            path = out_dir / name
            path.write_text(text)
            written.append(path)
        return written


def _r(x: float | None, digits: int = 10) -> float | None:
    return None if x is None else round(float(x), digits)


def cmd_benchmark(cfg: RunConfig, out: Outputs) -> None:
    from .ed_oracle import exact_signal
    from .ramsey import fidelity_r2, measure_signal

    rc = ramsey_config(cfg, model=cfg.benchmark.model)
    ed = exact_signal(rc)
    circ = measure_signal(rc.with_(shots=None), threads=cfg.threads)
    shots = measure_signal(rc, threads=cfg.threads)
    out.table("benchmark_ed", ed.to_csv())
    out.table("benchmark_circuit", circ.to_csv())
    out.table("benchmark_shots", shots.to_csv())
    out.summary(
        "benchmark_summary",
        {
            "n_steps": rc.n_steps,
            "shots": rc.shots,
            "circuit_vs_ed_sup": _r(np.max(np.abs(circ.re_s - ed.re_s))),
            "shots_vs_ed_sup": _r(np.max(np.abs(shots.re_s - ed.re_s))),
            "r2_circuit_vs_ed": _r(fidelity_r2(circ, ed)),
            "r2_shots_vs_ed": _r(fidelity_r2(shots, ed)),
            "r2_shots_vs_circuit": _r(fidelity_r2(shots, circ)),
        },
    )


def cmd_ramsey(cfg: RunConfig, out: Outputs) -> None:
    from .ramsey import measure_signal

    sig = measure_signal(ramsey_config(cfg, model=cfg.ramsey.model), threads=cfg.threads)
    out.table("ramsey", sig.to_csv())


def _spectrum_signal(cfg: RunConfig):
    from .ed_oracle import exact_signal
    from .ramsey import measure_signal

    s = cfg.spectrum
    if s.method not in ("ed", "circuit"):
        raise ConfigurationError(f"spectrum.method must be ed or circuit, got {s.method!r}")
    if s.dt <= 0 or s.n_points < 8:
        raise ConfigurationError("spectrum needs dt > 0 and n_points >= 8")
    grid = tuple(round(k * s.dt, 12) for k in range(s.n_points))
    rc = ramsey_config(cfg, model=s.model, time_grid=grid, measure_imaginary=True)
    if s.method == "ed":
        return exact_signal(rc)
    return measure_signal(rc, threads=cfg.threads)


def cmd_spectrum(cfg: RunConfig, out: Outputs) -> None:
    from .spectroscopy import fft_spectrum, peak_energy

    s = cfg.spectrum
    spec = fft_spectrum(_spectrum_signal(cfg), s.window, s.zero_pad_factor)
    peak = peak_energy(spec, s.search_range)
    rows = "".join(f"{w:.6f},{a:.6e}\n" for w, a in zip(spec.frequencies, spec.amplitudes))
    out.table("spectrum", "omega,amplitude\n" + rows)
    out.summary("spectrum_summary", {"peak_energy": _r(peak.energy), "peak_amplitude": _r(peak.amplitude), "degenerate": peak.degenerate})


def cmd_heatmap(cfg: RunConfig, out: Outputs) -> None:
    from .spectroscopy import linear_branch_fit, sweep_phase_diagram

    h, s = cfg.heatmap, cfg.spectrum
    u_grid = _range(h.u_min, h.u_max, h.u_step, "heatmap")
    grid_t = tuple(round(k * s.dt, 12) for k in range(s.n_points))
    base = ramsey_config(cfg, model=h.model, time_grid=grid_t)
    grid = sweep_phase_diagram(
        base, u_grid, method=s.method, window=s.window, zero_pad_factor=s.zero_pad_factor,
        search_range=s.search_range, threads=cfg.threads,
    )
    fit = linear_branch_fit(grid, h.branch_u_min)
    out.table("heatmap", grid.heatmap_csv())
    out.table("heatmap_peaks", grid.peaks_csv())
    out.summary("heatmap_summary", {"branch_u_min": h.branch_u_min, "slope": _r(fit.slope), "intercept": _r(fit.intercept), "r2": _r(fit.r2)})


def cmd_trotter_scan(cfg: RunConfig, out: Outputs) -> None:
    from .ramsey import trotter_scan

    ts = cfg.trotter_scan
    rc = ramsey_config(cfg, model=ts.model, time_grid=ts.time_grid, shots=None)
    scan = trotter_scan(rc, ts.n_steps, fit_min=ts.fit_min, threads=cfg.threads)
    summary: dict[str, Any] = {"slope": _r(scan.slope), "fit_min": ts.fit_min}
    if 1 in scan.n_steps and 15 in scan.n_steps:
        summary["ratio_1_over_15"] = _r(scan.error_at(1) / scan.error_at(15))
    out.table("trotter_scan", scan.to_csv())
    out.summary("trotter_scan_summary", summary)


def cmd_mitigate(cfg: RunConfig, out: Outputs) -> None:
    from .circuit import StateVector, run_circuit
    from .mitigation import ConfusionMatrix, NoiseModel, apply_readout_noise, correct_readout, zne_signal
    from .ramsey import ANCILLA, build_ramsey_circuit

    n = cfg.noise
    rc = ramsey_config(cfg, n_steps=n.zne_n_steps)
    circ = build_ramsey_circuit(rc, n.zne_time)
    init = StateVector.basis(circ.n_qubits, 0)
    ideal = 1.0 - 2.0 * run_circuit(circ, init).probability_one(ANCILLA)
    model = NoiseModel(n.p1, n.p2, cfg.seed)
    rep = zne_signal(circ, init, model, n.shots, ANCILLA, scales=n.zne_scales, order=n.zne_order, kind=n.zne_kind, threads=cfg.threads)
    summary: dict[str, Any] = {
        "t": n.zne_time,
        "ideal": _r(ideal),
        "unmitigated": _r(rep.unmitigated),
        "zne": _r(rep.mitigated),
    }
    if n.readout is not None:
        m = ConfusionMatrix(np.array(n.readout, dtype=float))
        p0 = (1 + rep.unmitigated) / 2
        n0 = int(round(p0 * n.shots))
        noisy = apply_readout_noise(m, (n0, n.shots - n0), cfg.seed)
        corr = correct_readout(m, np.array(noisy) / n.shots)
        summary["readout_raw"] = _r((noisy[0] - noisy[1]) / n.shots)
        summary["readout_corrected"] = _r(corr.probabilities[0] - corr.probabilities[1])
        summary["readout_clipped"] = corr.clipped
    out.table("zne", rep.to_csv())
    out.summary("mitigation_summary", summary)


def cmd_vqe(cfg: RunConfig, out: Outputs) -> None:
    from .hamiltonian import build_hamiltonian
    from .jw import jordan_wigner
    from .ramsey import default_occupation
    from .vqe import AnsatzSpec, SPSAConfig, spsa_minimize

    v = cfg.vqe
    lattice, params = _model(cfg, v.model)
    h = jordan_wigner(build_hamiltonian(lattice, params))
    ref = cfg.ramsey.initial_occupation or default_occupation(lattice)
    ansatz = AnsatzSpec(h.n_qubits, v.layers, v.entangler, tuple(ref))
    spsa = SPSAConfig(v.iterations, v.a, v.c, v.alpha, v.gamma, v.A, cfg.seed, v.shots, v.init_scale)
    res = spsa_minimize(h, ansatz, spsa)
    out.table("vqe_trace", res.to_csv())
    out.summary(
        "vqe_summary",
        {
            "best_energy": _r(res.best_energy),
            "reference_energy": _r(res.reference_energy),
            "abs_error": _r(abs(res.error)),
            "iterations": v.iterations,
        },
    )


def cmd_calibrate(cfg: RunConfig, out: Outputs) -> None:
    from .ramsey import calibration_sweep

    results = calibration_sweep(threads=cfg.threads)
    lines = ["residual,label"] + [f"{r.residual:.6f},{r.label}" for r in results[:20]]
    out.files["calibration.csv"] = "\n".join(lines) + "\n"
    best = results[0]
    out.summary("calibration_summary", {"best_residual": _r(best.residual), "best": best.label})


COMMANDS: dict[str, tuple[Callable[[RunConfig, Outputs], None], str]] = {
    "benchmark": (cmd_benchmark, "ED, exact circuit and shot signals side by side (t,P0,P1,S)"),
    "ramsey": (cmd_ramsey, "time-domain Ramsey signal"),
    "spectrum": (cmd_spectrum, "FFT spectral density of S(t)"),
    "heatmap": (cmd_heatmap, "spectral density versus U_imp with peak track and branch fit"),
    "trotter-scan": (cmd_trotter_scan, "Trotter error versus n_steps against ED"),
    "mitigate": (cmd_mitigate, "zero-noise extrapolation and readout correction at one Ramsey point"),
    "vqe": (cmd_vqe, "SPSA ground-state search against the ED energy"),
    "calibrate": (cmd_calibrate, "score model variants against the reference Ramsey table"),
}


def _defaults_epilog() -> str:
    lines = ["config defaults (override in --config, JSON or TOML):"]
    for name, cls in _SECTIONS.items():
        inst = cls()
        body = ", ".join(f"{f.name}={getattr(inst, f.name)!r}" for f in fields(cls) if f.name != "model")
        lines.append(f"  [{name}] {body or 'model overrides only'}")
    lines.append("  every section except [model] and [noise] also takes a partial [<section>.model] override")
    lines.append(f"output directory: --out, else ${OUT_ENV}, else ./polaronsim_out")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polaronsim",
        description="Lattice Fermi-polaron Ramsey spectroscopy, mitigation and VQE.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON or TOML run config")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--shots", type=int, help="shots per measured point (default 1000; 4000 for mitigate)")
        p.add_argument("--n-steps", dest="n_steps", type=int, help="Trotter steps (default 15)")
        p.add_argument("--threads", type=int, help="worker threads; results do not depend on it (default 1)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
        p.add_argument("--J", dest="J", type=float, help="hopping amplitude (default 1.0)")
        p.add_argument("--U-ff", dest="U_ff", type=float, help="bath onsite interaction (default 0)")
        p.add_argument("--U-imp", dest="U_imp", type=float, help="impurity-bath coupling (default 2.5)")
        p.add_argument("--time-grid", dest="time_grid", help="'start:stop:step' or comma list (default 0:4:0.5)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = apply_overrides(cfg, args)
        out = Outputs(cfg.format)
        func(cfg, out)
        out_dir = Path(cfg.out or os.environ.get(OUT_ENV) or "polaronsim_out")
        for path in out.flush(out_dir):
            print(path)
    except (ConfigurationError, CapacityError, TypeError, ValueError) as exc:
        print(f"polaronsim: config error: {exc}", file=sys.stderr)
        return 1
    except (PolaronSimError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"polaronsim: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
