"""Shared helpers for the experiment scripts."""

import json
import logging
import time
from pathlib import Path


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")


def report(name: str, summary: dict, elapsed: float, out: str | None) -> None:
    width = max(len(k) for k in summary)
    print(f"{name}  ({elapsed:.0f} s)")
    for k, v in summary.items():
        print(f"  {k:<{width}}  {v:.4g}")
    if out:
        Path(out).write_text(json.dumps({"experiment": name, "seconds": elapsed, **summary},
                                        indent=2, sort_keys=True) + "\n")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
