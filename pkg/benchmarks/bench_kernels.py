"""Time the numba and numpy paths of the sampler kernels.

    python3 benchmarks/bench_kernels.py [--bits 42] [--reads 20] [--sweeps 200]

Both paths draw the same random stream, so the annealing outputs are also
checked for equality.
"""
import argparse
import time

import numpy as np

from qasp_truss.samplers import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--bits", type=int, default=42, help="QUBO size for annealing")
    p.add_argument("--reads", type=int, default=20)
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--enum-bits", type=int, default=18, help="QUBO size for enumeration")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    q = np.triu(rng.normal(size=(args.bits, args.bits)))
    keys = np.arange(args.reads, dtype=np.uint64) + np.uint64(12345)
    qe = np.triu(rng.normal(size=(args.enum_bits, args.enum_bits)))

    # Warm up the JIT so compile time is not measured.
    _kernels.anneal(q, 2, keys[:1], use_numba=True)
    _kernels.enumerate_energies(qe[:4, :4], use_numba=True)

    print(f"{'kernel':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    t_nb, a_nb = best_of(lambda: _kernels.anneal(q, args.sweeps, keys, use_numba=True), args.repeat)
    t_np, a_np = best_of(lambda: _kernels.anneal(q, args.sweeps, keys, use_numba=False), args.repeat)
    label = f"anneal {args.bits}b x{args.reads}x{args.sweeps}"
    print(f"{label:<28}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}")
    assert np.array_equal(a_nb, a_np), "anneal paths disagree"

    t_nb, e_nb = best_of(lambda: _kernels.enumerate_energies(qe, use_numba=True), args.repeat)
    t_np, e_np = best_of(lambda: _kernels.enumerate_energies(qe, use_numba=False), args.repeat)
    label = f"enumerate {args.enum_bits}b"
    print(f"{label:<28}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}")
    assert np.allclose(e_nb, e_np, rtol=1e-10, atol=1e-10), "enumeration paths disagree"


if __name__ == "__main__":
    main()
