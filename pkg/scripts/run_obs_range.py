"""Observation-model training range: full vs reduced concentration range.

Fits the log-linear variance model on data spanning the whole test range
and on data restricted to its lower part, then compares the fitted error
variance at the top of the range and the test RMSE of the inverted
readings.

    python scripts/run_obs_range.py --seed 0
"""

import argparse
from dataclasses import replace

from mgpf.experiments import RangeExperimentConfig, run_range_experiment

from _common import Timer, report, setup_logging


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=40)
    p.add_argument("--fraction", type=float, default=1 / 3, help="reduced range as a fraction")
    p.add_argument("--no-debias", action="store_true",
                   help="skip the log-residual bias correction")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    a = p.parse_args()
    setup_logging(a.verbose)

    cfg = replace(RangeExperimentConfig(), n_reps=a.reps, range_fraction=a.fraction,
                  debias=not a.no_debias)
    with Timer() as tm:
        res = run_range_experiment(cfg, a.seed)
    report("obs_range", res.summary(), tm.elapsed, a.out)


if __name__ == "__main__":
    main()
