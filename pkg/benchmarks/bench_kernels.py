"""Compare the compiled kernels with the plain-Python fallback.

Each backend runs in its own interpreter because the choice is made at
import time (``VARSNN_NO_NUMBA=1`` selects the fallback).  Both must produce
the same fitness values; the script exits non-zero if they do not.

    python3 benchmarks/bench_kernels.py [--trials 4] [--timesteps 2000]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from varsnn._accel import backend_name
from varsnn.config import DEFAULT_CONFIG
from varsnn.evolution import random_genome, stream
from varsnn.network import Network
from varsnn.world import run_trial

n_trials, n_steps = int(sys.argv[1]), int(sys.argv[2])
genomes = [random_genome("MEM", stream(0, 0, 0, i, 99)) for i in range(n_trials)]
cfg = DEFAULT_CONFIG.with_overrides({"trial.phase_budget": 1000})

# warm-up compiles (or is a no-op for the fallback)
run_trial(genomes[0], cfg.with_overrides({"trial.phase_budget": 5}), seed=0)
Network(genomes[0]).run_timestep(np.zeros(6))

t0 = time.perf_counter()
fit = [run_trial(g, cfg, seed=(i,)).fitness for i, g in enumerate(genomes)]
t_trial = (time.perf_counter() - t0) / n_trials

net = Network(genomes[0])
rng = np.random.default_rng(0)
sensors = rng.random((n_steps, 6))
t0 = time.perf_counter()
for s in sensors:
    net.run_timestep(s)
t_step = (time.perf_counter() - t0) / n_steps

print(json.dumps({"backend": backend_name(), "trial_s": t_trial, "timestep_s": t_step, "fitness": fit,
                  "weights": net.weights.tolist()}))
"""


def run_backend(no_numba, trials, timesteps):
    env = dict(os.environ, VARSNN_NO_NUMBA="1" if no_numba else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(trials), str(timesteps)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--timesteps", type=int, default=2000)
    args = p.parse_args(argv)
    fast = run_backend(False, args.trials, args.timesteps)
    slow = run_backend(True, args.trials, args.timesteps)
    print(f"{'backend':<8} {'trial (1000+1000 budget)':>26} {'network timestep':>18}")
    for r in (fast, slow):
        print(f"{r['backend']:<8} {r['trial_s'] * 1e3:>23.1f} ms {r['timestep_s'] * 1e6:>15.1f} us")
    print(f"speed-up: trial x{slow['trial_s'] / fast['trial_s']:.1f}, "
          f"timestep x{slow['timestep_s'] / fast['timestep_s']:.1f}")
    same = fast["fitness"] == slow["fitness"] and fast["weights"] == slow["weights"]
    print(f"identical results: {same} (fitness {fast['fitness']})")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
