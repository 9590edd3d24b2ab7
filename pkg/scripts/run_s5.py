"""Advection-diffusion simulation: joint vs single-network filters.

Trains homoscedastic models on each network's colocated sensor over the
first ``--train`` frames, then filters the remaining frames and scores grid
predictions (RMSE, MAE, coverage, width, interval score, CRPS).  Also splits
RMSE between the lower-left quadrant, where network 2 has no sensors, and
the rest of the domain.

    python scripts/run_s5.py --seed 0 --out s5.json
"""

import argparse

from mgpf.experiments import S5ExperimentConfig, run_s5

from _common import Timer, report, setup_logging


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lattice", type=int, default=71,
                   help="nodes per side on [-0.2, 1.2]; n - 1 must be a multiple of 7")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--train", type=int, default=160)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    a = p.parse_args()
    setup_logging(a.verbose)

    cfg = S5ExperimentConfig(n_lattice=a.lattice, n_steps=a.steps, n_train=a.train)

    def progress(t):
        if a.verbose:
            print(f"frame {t + 1}/{cfg.n_steps}", flush=True)

    with Timer() as tm:
        res = run_s5(cfg, a.seed, progress=progress)
    report("s5", res.summary(), tm.elapsed, a.out)


if __name__ == "__main__":
    main()
