"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at import
time by ``COSETGAUGE_NO_NUMBA``. Compilation is excluded: every kernel is called
once before timing.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from cosetgauge import BACKEND, kernels
from cosetgauge.cli import run_command
from cosetgauge.lie import so4

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
mats = [rng.standard_normal((4, 4)) for _ in range(200)]
pairs = [(rng.standard_normal((4, 4)), rng.standard_normal((4, 4))) for _ in range(200)]
c = so4().structure_constants


def best(fn):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


out = {
    "backend": BACKEND,
    "expm_4x4_x200": best(lambda: [kernels.expm(m) for m in mats]),
    "expm_frechet_4x4_x200": best(lambda: [kernels.expm_frechet(x, e) for x, e in pairs]),
    "jacobi_so4_x50": best(lambda: [kernels.jacobi_residual(c) for _ in range(50)]),
    "check_invariance_so3_so2_100": best(lambda: run_command("check-invariance", "so3_so2", samples=100)),
    "reconstruct_so3_so2_50": best(lambda: run_command("reconstruct", "so3_so2", samples=50)),
}
print(json.dumps(out))
"""


def run_backend(disable_numba, repeat):
    env = dict(os.environ)
    env.pop("COSETGAUGE_NO_NUMBA", None)
    if disable_numba:
        env["COSETGAUGE_NO_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                          check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write the raw timings here")
    args = parser.parse_args(argv)
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'benchmark':34s} {slow['backend']:>10s} {fast['backend']:>10s} {'speedup':>8s}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:34s} {slow[key]:10.4f} {fast[key]:10.4f} {slow[key] / fast[key]:8.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"numba": fast, "numpy": slow}, fh, indent=2)


if __name__ == "__main__":
    main()
