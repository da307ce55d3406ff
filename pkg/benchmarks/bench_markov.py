"""Compiled versus numpy Markov kernel.

Times full Gamma evaluations (silicon, dx = 9.4 um) at a few heights with
each available backend and checks that both return the same value.  A
second table times a 40-point visibility curve with 1 and 4 worker
threads; the compiled rule releases the GIL, the numpy rule only partly.

    python benchmarks/bench_markov.py [--repeat N] [--tol REL]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from aloof.decoherence import DecoherenceInput, gamma_markov, visibility_curve
from aloof.decoherence import markov
from aloof.physics import BeamParams, InteractionGeometry, get_material

HEIGHTS_UM = (2.0, 10.0, 40.0)


def time_backend(backend, inp, cfg, repeat):
    best = {}
    values = {}
    for z_um in HEIGHTS_UM:
        runs = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            g, _ = gamma_markov(inp, z_um * 1e-6, cfg, backend=backend)
            runs.append(time.perf_counter() - t0)
        best[z_um] = min(runs)
        values[z_um] = g
    return best, values


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--tol", type=float, default=1e-4, help="relative quadrature tolerance")
    args = parser.parse_args()

    inp = DecoherenceInput(get_material("silicon-n-doped"), BeamParams(1000.0, 0.377),
                           InteractionGeometry(0.01, 9.4e-6))
    cfg = replace(markov.DEFAULT_CONFIG, relative_tolerance=args.tol)
    backends = markov.available_backends()
    print(f"backends: {', '.join(backends)} (default: {markov.get_backend()})")
    results = {b: time_backend(b, inp, cfg, args.repeat) for b in backends}

    print(f"{'z [um]':>7} " + " ".join(f"{b + ' [ms]':>15}" for b in backends)
          + ("   speedup   rel. diff" if len(backends) == 2 else ""))
    for z_um in HEIGHTS_UM:
        line = f"{z_um:7.1f} " + " ".join(f"{1e3 * results[b][0][z_um]:15.2f}" for b in backends)
        if len(backends) == 2:
            fast, slow = results["compiled"], results["python"]
            speedup = slow[0][z_um] / fast[0][z_um]
            diff = abs(fast[1][z_um] / slow[1][z_um] - 1)
            line += f"   {speedup:7.1f}x   {diff:9.2e}"
        print(line)

    z = np.linspace(1, 40, 40) * 1e-6
    print()
    print(f"{'backend':>9} {'1 thread [s]':>13} {'4 threads [s]':>14}")
    for b in backends:
        previous = markov.set_backend(b)
        try:
            times = []
            for workers in (1, 4):
                t0 = time.perf_counter()
                visibility_curve("markov", inp, cfg, workers=workers, z_grid=z)
                times.append(time.perf_counter() - t0)
        finally:
            markov.set_backend(previous)
        print(f"{b:>9} {times[0]:13.3f} {times[1]:14.3f}")


if __name__ == "__main__":
    main()
