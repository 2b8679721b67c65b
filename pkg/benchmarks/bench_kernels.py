"""Compiled vs. numpy kernel timings on random circuits and noisy trajectories.

    python3 benchmarks/bench_kernels.py [--qubits 4 8 12 16] [--depth 200] [--shots 2000]
"""

import argparse
import timeit

import numpy as np

from polaronsim import _backend
from polaronsim.circuit import CNOT, MULTIRZ, RY, RZ, H, QuantumCircuit, StateVector, controlled
from polaronsim.mitigation import NoiseModel, run_noisy
from polaronsim.ramsey import RamseyConfig, build_ramsey_circuit


def random_circuit(rng: np.random.Generator, n: int, depth: int) -> QuantumCircuit:
    gates = []
    for _ in range(depth):
        a, b = (int(q) for q in rng.choice(n, 2, replace=False))
        theta = float(rng.uniform(-np.pi, np.pi))
        pick = int(rng.integers(5))
        if pick == 0:
            gates.append(H(a))
        elif pick == 1:
            gates.append(RZ(a, theta))
        elif pick == 2:
            gates.append(CNOT(a, b))
        elif pick == 3:
            gates.append(MULTIRZ(theta, [a, b]))
        else:
            gates.append(controlled(RY(b, theta), a))
    return QuantumCircuit(n, tuple(gates))


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def time_apply(name: str, n: int, depth: int, repeat: int) -> float:
    kern = _backend.load(name)
    ops, params = random_circuit(np.random.default_rng(n), n, depth).lowered
    init = StateVector.basis(n).amplitudes

    def go():
        s = init.copy()
        kern.apply_ops(s, ops, params)

    return best_of(go, repeat)


def time_noisy(name: str, shots: int, repeat: int) -> float:
    circ = build_ramsey_circuit(RamseyConfig(), 2.0)
    init = StateVector.basis(circ.n_qubits)
    prev = _backend.NAME
    _backend.use(name)
    try:
        return best_of(lambda: run_noisy(circ, init, NoiseModel(0.001, 0.01, 0), shots, 0), repeat)
    finally:
        _backend.use(prev)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--depth", type=int, default=200)
    ap.add_argument("--shots", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = _backend.available()
    if "cython" not in names:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"apply_ops, random circuit of {args.depth} gates (best of {args.repeat}, ms)")
    print("qubits " + "".join(f"{n:>10}" for n in names) + ("   speedup" if len(names) == 2 else ""))
    for n in args.qubits:
        t = [time_apply(name, n, args.depth, args.repeat) for name in names]
        row = f"{n:>6} " + "".join(f"{1e3 * v:>10.3f}" for v in t)
        if len(t) == 2:
            row += f"{t[1] / t[0]:>9.1f}x"
        print(row)

    print(f"\nnoisy Ramsey trajectories, {args.shots} shots (best of {args.repeat}, ms)")
    t = [time_noisy(name, args.shots, args.repeat) for name in names]
    row = "       " + "".join(f"{1e3 * v:>10.1f}" for v in t)
    if len(t) == 2:
        row += f"{t[1] / t[0]:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
