"""Compare the compiled and interpreted backends of the hot kernels.

Run with ``python3 benchmarks/bench_kernels.py``.  The interpreted backend
is what ``UAVFUZZ_DISABLE_JIT=1`` selects.
"""

from __future__ import annotations

import argparse
import random
import time
from pathlib import Path

from uavfuzz.bmc.sat import brute_force
from uavfuzz.minir import load_program
from uavfuzz.vm.machine import Executor

ROOT = Path(__file__).resolve().parent.parent


def _timed(fn, repeat: int) -> float:
    fn()  # warm up (includes JIT compilation)
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def bench_vm(execs: int) -> dict[str, float]:
    program = load_program(ROOT / "targets" / "tello_wire.uir")
    rng = random.Random(0)
    inputs = [bytes(rng.randrange(256) for _ in range(rng.randrange(1, 24))) for _ in range(execs)]
    out = {}
    for backend in ("jit", "py"):
        ex = Executor(program, backend=backend)

        def run():
            for data in inputs:
                ex.run_raw(data)
        out[backend] = _timed(run, 1) / execs
    return out


def bench_brute_force(num_vars: int, clauses: int) -> dict[str, float]:
    rng = random.Random(1)
    cnf = [[rng.choice((-1, 1)) * v for v in rng.sample(range(1, num_vars + 1), 3)]
           for _ in range(clauses)]
    return {b: _timed(lambda b=b: brute_force(num_vars, cnf, backend=b), 1) for b in ("jit", "py")}


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--execs", type=int, default=2000)
    p.add_argument("--vars", type=int, default=14)
    a = p.parse_args(argv)
    vm = bench_vm(a.execs)
    bf = bench_brute_force(a.vars, 4 * a.vars)
    print(f"{'kernel':<28}{'jit':>14}{'py':>14}{'speedup':>10}")
    print(f"{'run_vm (per execution)':<28}{vm['jit'] * 1e6:>12.1f}us{vm['py'] * 1e6:>12.1f}us"
          f"{vm['py'] / vm['jit']:>9.1f}x")
    print(f"{f'brute_force ({a.vars} vars)':<28}{bf['jit'] * 1e3:>12.2f}ms{bf['py'] * 1e3:>12.2f}ms"
          f"{bf['py'] / bf['jit']:>9.1f}x")


if __name__ == "__main__":
    main()
