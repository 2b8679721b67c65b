import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polaronsim.circuit import PHASE, H, StateVector, X, run_circuit
from polaronsim.ed_oracle import exact_signal
from polaronsim.errors import ConfigurationError
from polaronsim.hamiltonian import HubbardParams, LatticeSpec
from polaronsim.ramsey import (
    ANCILLA,
    REFERENCE_TABLE,
    REFERENCE_TIMES,
    RamseyConfig,
    RamseySignal,
    build_ramsey_circuit,
    calibration_sweep,
    default_occupation,
    fidelity_r2,
    measure_signal,
    point_seed,
    trotter_scan,
)


def test_reference_register_is_four_qubits():
    assert build_ramsey_circuit(RamseyConfig(), 1.0).n_qubits == 4
    assert RamseyConfig().occupation == (1, 1, 0)


def test_default_occupation():
    assert default_occupation(LatticeSpec(3)) == (1, 1, 0, 0)
    assert default_occupation(LatticeSpec(2, impurity_present=False)) == (1, 0)


def test_zero_time_circuit():
    c = build_ramsey_circuit(RamseyConfig(), 0.0)
    assert c.gates == (X(1), X(2), H(0), H(0))
    out = run_circuit(c, StateVector.basis(4))
    assert out.probability_one(ANCILLA) == pytest.approx(0.0, abs=1e-15)


def test_stage_layout():
    cfg = RamseyConfig(n_steps=1)
    c = build_ramsey_circuit(cfg, 1.0, imaginary=True)
    g = c.gates
    assert g[:3] == (X(1), X(2), H(0))
    assert g[3] == X(0)
    assert g[-2:] == (PHASE(0, -np.pi / 2), H(0))
    for gate in g:
        if gate.kind == "CONTROLLED":
            assert gate.control == ANCILLA


def test_t0_signal_is_one():
    sig = measure_signal(RamseyConfig(time_grid=(0.0,)))
    assert (sig.p0[0], sig.p1[0], sig.re_s[0]) == (1.0, 0.0, 1.0)


def test_no_impurity_coupling_gives_unit_signal():
    cfg = RamseyConfig(params=HubbardParams(U_imp=0.0), time_grid=tuple(np.linspace(0, 4, 9)), measure_imaginary=True)
    sig = measure_signal(cfg)
    assert np.max(np.abs(sig.complex_s - 1)) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(
    st.floats(0.2, 2.0),
    st.floats(-3.0, 3.0),
    st.floats(-1.0, 1.0),
    st.integers(0, 7),
    st.integers(1, 20),
)
def test_exact_mode_invariants(J, U_imp, U_ff, occ, n_steps):
    bits = tuple((occ >> k) & 1 for k in range(3))
    cfg = RamseyConfig(
        params=HubbardParams(hopping_J=J, U_imp=U_imp, U_ff=U_ff),
        initial_occupation=bits,
        time_grid=(0.0, 0.7, 1.9, 3.3),
        n_steps=n_steps,
        measure_imaginary=True,
    )
    sig = measure_signal(cfg)
    assert sig.re_s[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(sig.complex_s) <= 1 + 1e-10)
    assert np.allclose(sig.p0 + sig.p1, 1, atol=1e-10)
    assert np.allclose(sig.re_s, sig.p0 - sig.p1, atol=1e-12)


def test_circuit_complex_signal_tracks_oracle():
    cfg = RamseyConfig(time_grid=tuple(np.linspace(0, 4, 9)), n_steps=400, measure_imaginary=True)
    diff = measure_signal(cfg).complex_s - exact_signal(cfg).complex_s
    assert np.max(np.abs(diff)) <= 5e-3


def test_error_decreases_with_steps():
    cfg = RamseyConfig(time_grid=tuple(np.linspace(0, 4, 9)))
    scan = trotter_scan(cfg, [4, 8, 16, 32, 64, 128, 200])
    assert all(b < a for a, b in zip(scan.errors, scan.errors[1:]))
    assert -1.15 <= scan.slope <= -0.85


def test_trotter_scan_csv_and_fit_window():
    scan = trotter_scan(RamseyConfig(time_grid=(0.0, 2.0, 4.0)), [2, 1])
    assert scan.n_steps == (1, 2)
    assert scan.slope is None
    assert scan.to_csv().splitlines()[0] == "n_steps,sup_error"
    with pytest.raises(ConfigurationError):
        trotter_scan(RamseyConfig(), [0])


def test_recurrence():
    cfg = RamseyConfig(time_grid=tuple(np.linspace(0, 60, 6001)))
    s = np.abs(exact_signal(cfg).complex_s)
    later = s[cfg.time_grid.index(next(t for t in cfg.time_grid if t >= 1.0)):]
    assert later.min() < 0.5
    assert later.max() > 0.99


def test_shot_std_matches_binomial():
    cfg = RamseyConfig(time_grid=(1.5,), shots=1000)
    s = exact_signal(cfg).re_s[0]
    est = np.array([measure_signal(cfg.with_(seed=k)).re_s[0] for k in range(200)])
    expected = np.sqrt((1 - s * s) / 1000)
    assert abs(est.std(ddof=1) / expected - 1) <= 0.2
    assert abs(est.mean() - measure_signal(cfg.with_(shots=None)).re_s[0]) <= 4 * expected / np.sqrt(200)


def test_shot_mode_probabilities_sum_exactly():
    sig = measure_signal(RamseyConfig(shots=1000, measure_imaginary=True))
    assert np.all(sig.p0 + sig.p1 == 1.0)
    assert sig.mode == "shots(1000)"
    assert np.all(np.abs(sig.im_s) <= 1)


def test_seeded_and_thread_independent():
    cfg = RamseyConfig(shots=500, seed=3, measure_imaginary=True)
    a = measure_signal(cfg)
    b = measure_signal(cfg, threads=4)
    assert np.array_equal(a.re_s, b.re_s) and np.array_equal(a.im_s, b.im_s)
    assert not np.array_equal(a.re_s, measure_signal(cfg.with_(seed=4)).re_s)


def test_point_seeds_distinct():
    seeds = {point_seed(0, k, part) for k in range(50) for part in (0, 1)}
    assert len(seeds) == 100


def test_fidelity_examples():
    exact = exact_signal(RamseyConfig())
    assert fidelity_r2(exact, exact) == 1.0
    zero = RamseySignal(exact.times, np.zeros_like(exact.re_s), np.full(9, 0.5), np.full(9, 0.5))
    assert fidelity_r2(zero, exact) <= 0
    with pytest.raises(ConfigurationError):
        fidelity_r2(exact_signal(RamseyConfig(time_grid=(0.0, 1.0))), exact)


def test_shot_fidelity():
    cfg = RamseyConfig(shots=1000)
    exact = exact_signal(cfg)
    r2 = [fidelity_r2(measure_signal(cfg.with_(seed=k)), exact) for k in range(10)]
    assert np.median(r2) >= 0.99


def test_resample_statistics():
    exact = exact_signal(RamseyConfig())
    a = exact.resample(1000, 1)
    assert np.array_equal(a.re_s, exact.resample(1000, 1).re_s)
    assert np.all(np.abs(a.re_s - exact.re_s) <= 0.2)
    assert np.allclose(a.p0 + a.p1, 1)
    with pytest.raises(ConfigurationError):
        exact.resample(0, 1)


def test_csv_layout(tmp_path):
    sig = exact_signal(RamseyConfig())
    path = tmp_path / "s.csv"
    text = sig.to_csv(path)
    lines = text.splitlines()
    assert lines[0] == "t,P0,P1,S"
    assert lines[1] == "0.000000,1.000000,0.000000,1.000000"
    assert len(lines) == 10
    assert path.read_text() == text


def test_table_reference_rows():
    assert REFERENCE_TIMES == tuple(np.arange(0, 4.01, 0.5))
    for _, p0, p1, s in REFERENCE_TABLE:
        assert p0 + p1 == pytest.approx(1.0, abs=1e-9)
        assert p0 - p1 == pytest.approx(s, abs=2e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"time_grid": ()},
        {"time_grid": (1.0, 0.5)},
        {"time_grid": (-0.1, 1.0)},
        {"initial_occupation": (1, 0)},
        {"n_steps": 0},
        {"shots": 0},
        {"params": HubbardParams(onsite_eps=(0.0,))},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        RamseyConfig(**kwargs)


def test_calibration_recovers_generated_reference():
    # rows generated by one candidate must be found with zero residual
    target = RamseyConfig(
        LatticeSpec(2, impurity_sites=(1,)),
        HubbardParams(hopping_J=0.6, U_imp=1.5, hopping_sign=1),
        (1, 0, 1),
    )
    sig = exact_signal(target)
    rows = list(zip(sig.times, sig.p0, sig.p1, sig.re_s))
    results = calibration_sweep(rows, hopping=(0.6, 1.0), u_imp=(1.5,), scale_u_by_j=(False,), n_steps=(None,))
    assert results[0].residual <= 1e-12
    assert results[0].config.occupation == (1, 0, 1)
    assert [r.residual for r in results] == sorted(r.residual for r in results)
