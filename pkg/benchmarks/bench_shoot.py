"""Compare the compiled shooting kernel against the pure-Python fallback.

Usage: python benchmarks/bench_shoot.py [--repeats N]
"""

import argparse
import time

from hgl import selfsim as ss

WORKLOADS = {
    "blowup suite (a=0.1,1,10,100)": [
        ss.ShootConfig(slope=a) for a in (0.1, 1.0, 10.0, 100.0)],
    "panel (a) slopes, eta_max=2": [
        ss.ShootConfig(slope=a, eta_max=2.0) for a in (-1.0, -10.0, -100.0)],
    "a=-1 tight tolerance": [
        ss.ShootConfig(slope=-1.0, eta_max=10.0, rel_tol=1e-12, abs_tol=1e-14)],
}


def run(configs, backend, repeats):
    best = float("inf")
    steps = 0
    for _ in range(repeats):
        t0 = time.perf_counter()
        steps = sum(ss.shoot(cfg, backend=backend).n_steps for cfg in configs)
        best = min(best, time.perf_counter() - t0)
    return best, steps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not ss.HAVE_COMPILED_CORE:
        print("note: compiled core not built, timing the fallback only")

    print(f"{'workload':38s} {'backend':9s} {'steps':>8s} {'time':>10s} {'speedup':>8s}")
    for name, configs in WORKLOADS.items():
        py_time, steps = run(configs, "python", args.repeats)
        print(f"{name:38s} {'python':9s} {steps:8d} {py_time * 1e3:8.2f}ms")
        if ss.HAVE_COMPILED_CORE:
            c_time, steps = run(configs, "compiled", args.repeats)
            print(f"{'':38s} {'compiled':9s} {steps:8d} {c_time * 1e3:8.2f}ms "
                  f"{py_time / c_time:7.1f}x")


if __name__ == "__main__":
    main()
