"""Time the compiled kernels against the pure-Python fallback.

Each backend runs in its own interpreter because the choice is made once,
at import, from ``FGS_TFIM_BACKEND``::

    python3 benchmarks/bench_kernels.py --sizes 10,20,40 --repeat 5
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
from fgs_tfim import BACKEND, pfaffian
from fgs_tfim.gaussian import energy_and_mean_field, random_pure_covariance
from fgs_tfim.model import ModelSpec, build_couplings

sizes, repeat = json.loads(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
out = {"backend": BACKEND, "pfaffian": {}, "energy_and_mean_field": {}}
for N in sizes:
    a = rng.standard_normal((2 * N, 2 * N))
    A = a - a.T
    out["pfaffian"][N] = min(timeit.repeat(lambda: pfaffian(A), number=1, repeat=repeat))
    g = random_pure_covariance(N, 1)
    c = build_couplings(ModelSpec(N, 0.3, 1.0))
    out["energy_and_mean_field"][N] = min(
        timeit.repeat(lambda: energy_and_mean_field(g, c), number=1, repeat=repeat))
print(json.dumps(out))
"""


def run_backend(name, sizes, repeat):
    env = dict(os.environ, FGS_TFIM_BACKEND=name)
    proc = subprocess.run([sys.executable, "-c", WORKER, json.dumps(sizes), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="10,20,40,60", help="comma-separated spin counts")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the raw timings here")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    compiled = run_backend("compiled", sizes, args.repeat)
    python = run_backend("python", sizes, args.repeat)
    if compiled["backend"] == python["backend"]:
        print("note: compiled extension not built, both runs used", python["backend"])

    print(f"{'kernel':<24}{'N':>5}{compiled['backend']:>14}{python['backend']:>14}{'speedup':>10}")
    for kernel in ("pfaffian", "energy_and_mean_field"):
        for N in sizes:
            tc, tp = compiled[kernel][str(N)], python[kernel][str(N)]
            print(f"{kernel:<24}{N:>5}{tc * 1e3:>12.3f}ms{tp * 1e3:>12.3f}ms{tp / tc:>9.2f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"compiled": compiled, "python": python}, fh, indent=2)


if __name__ == "__main__":
    main()
