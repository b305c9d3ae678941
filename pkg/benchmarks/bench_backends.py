"""Benchmark the compiled kernel backend against the pure-Python one.

Builds one smallest-prime-factor table, then times each hot kernel on
both backends over the same segments and checks that the results agree
bit for bit.  Run from the repository root:

    python3 benchmarks/bench_backends.py --x 2000000
"""

import argparse
import math
import time

import numpy as np

from divlab import arith, kernels


def segment_jobs(lo, hi, segment_size):
    bounds = list(range(lo, hi, segment_size)) + [hi]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def time_best(fn, repeat):
    """Best wall time of repeat runs; returns (seconds, result)."""
    best = math.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_sieve(mod, lo, hi, segment_size):
    base = lo - (lo & 1)
    base_primes = mod.sieve_primes(math.isqrt(hi - 1))

    def run():
        tab = np.full((hi - base) >> 1, kernels.SPF_NONE, dtype=np.uint16)
        for a, b in segment_jobs(base, hi, segment_size):
            mod.spf_fill(tab, base, max(a, lo), b, base_primes)
        return tab.tobytes()

    return run


def bench_scan(mod, name, args, jobs, z):
    def run():
        acc = []
        for a, b in jobs:
            if name == "totals":
                acc.append(mod.totals_scan(*args, a, b))
            elif name == "shifted":
                pr, tz, wc = mod.shifted_scan(*args, a, b, z, 0.0, 0.0)
                acc.append((pr.tobytes(), tz.tobytes(), wc.tobytes()))
            elif name == "tau2":
                acc.append(mod.tau2_scan(*args, a, b, z, z * z))
            else:
                acc.append(mod.tau_phi_over_n_scan(*args, a, b))
        return tuple(acc)

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x", type=int, default=2000000,
                    help="scan bound (default 2000000)")
    ap.add_argument("--z", type=float, default=10.0,
                    help="roughness threshold for the shifted scans")
    ap.add_argument("--segment-size", type=int,
                    default=arith.DEFAULT_SEGMENT_SIZE)
    ap.add_argument("--repeat", type=int, default=3,
                    help="runs per timing, best is kept")
    opts = ap.parse_args()

    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = kernels.backend_module(name)
        except ImportError:
            print("backend %r unavailable, skipping" % name)
    if len(backends) < 2:
        print("nothing to compare")

    x = opts.x
    t = arith.build_spf_table(2, x + 1, segment_size=opts.segment_size)
    args = t.scan_args()
    scan_jobs = segment_jobs(2, x + 1, opts.segment_size)
    totals_jobs = segment_jobs(1, x + 1, opts.segment_size)

    cases = [
        ("spf sieve [2, x]", {n: bench_sieve(m, 2, x + 1, opts.segment_size)
                              for n, m in backends.items()}),
        ("tau(phi), tau(lambda) totals", {
            n: bench_scan(m, "totals", args, totals_jobs, opts.z)
            for n, m in backends.items()}),
        ("tau_z(p-1) prime scan", {
            n: bench_scan(m, "shifted", args, scan_jobs, opts.z)
            for n, m in backends.items()}),
        ("squarefree tau''_z scan", {
            n: bench_scan(m, "tau2", args, scan_jobs, opts.z)
            for n, m in backends.items()}),
        ("tau(phi(n))/n scan", {
            n: bench_scan(m, "tau_phi", args, scan_jobs, opts.z)
            for n, m in backends.items()}),
    ]

    print("x = %d, segment_size = %d, best of %d"
          % (x, opts.segment_size, opts.repeat))
    print("%-30s %12s %12s %9s" % ("kernel", "python (s)", "cython (s)",
                                   "speedup"))
    for label, runs in cases:
        times = {}
        results = {}
        for name, fn in runs.items():
            times[name], results[name] = time_best(fn, opts.repeat)
        if len(results) == 2 and results["python"] != results["cython"]:
            raise SystemExit("backend results differ on %r" % label)
        py = times.get("python")
        cy = times.get("cython")
        print("%-30s %12s %12s %9s" % (
            label,
            "%.3f" % py if py is not None else "-",
            "%.3f" % cy if cy is not None else "-",
            "%.1fx" % (py / cy) if py and cy else "-",
        ))


if __name__ == "__main__":
    main()
