#!/usr/bin/env python3
"""Compare the numba kernel against the pure-Python fallback.

Each backend runs in its own interpreter because the switch is read at
import time::

    python3 benchmarks/bench_kernels.py            # both backends
    python3 benchmarks/bench_kernels.py --t-max 50 --repeat 3

Prints one line per backend with the best wall time, then the speedup and
the largest per-sample difference in I between the two paths.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

CHILD = r"""
import json, sys, time
import numpy as np
from behavsir import Fatigue, EpidemicParams, SimConfig, simulate
from behavsir._accel import backend_name

t_max, dt, repeat = float(sys.argv[1]), float(sys.argv[2]), int(sys.argv[3])
params = EpidemicParams(beta=0.4428571429, gamma=0.1428571429, eta=500.0, i0=1e-4)
model = Fatigue(c0=1.0, k=0.05, r=0.1)
cfg = SimConfig(t_max=t_max, dt=dt, stop_when_i_below=0.0)
t0 = time.perf_counter()
traj = simulate(params, model, cfg)   # includes compilation for numba
first = time.perf_counter() - t0
best = float("inf")
for _ in range(repeat):
    t0 = time.perf_counter()
    traj = simulate(params, model, cfg)
    best = min(best, time.perf_counter() - t0)
np.save(sys.argv[4], traj.i)
print(json.dumps({"backend": backend_name(), "first": first, "best": best, "steps": len(traj) - 1}))
"""


def run(disable_jit, args, out_path):
    env = dict(os.environ)
    env.pop("BEHAVSIR_DISABLE_JIT", None)
    if disable_jit:
        env["BEHAVSIR_DISABLE_JIT"] = "1"
    cmd = [sys.executable, "-c", CHILD, str(args.t_max), str(args.dt), str(args.repeat), out_path]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-max", type=float, default=200.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        paths = [os.path.join(tmp, "jit.npy"), os.path.join(tmp, "py.npy")]
        t0 = time.perf_counter()
        jit = run(False, args, paths[0])
        py = run(True, args, paths[1])
        wall = time.perf_counter() - t0
        diff = float(np.max(np.abs(np.load(paths[0]) - np.load(paths[1]))))
    for r in (jit, py):
        print(f"{r['backend']:>8}: {r['steps']} steps, first call {r['first']:.3f} s, best {r['best']:.4f} s")
    print(f"speedup {py['best'] / jit['best']:.1f}x, max |I_jit - I_py| = {diff:.3e}, total {wall:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
