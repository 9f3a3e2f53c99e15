"""Truncation study: probability and certified tail bound against r_max.

For each r_max the script reports P(r_max), the tail bound, and the
change to the next r_max, which should never exceed the bound.

    python scripts/convergence_study.py --r-max 3 10 --times 0 1e-3 1
"""

import argparse
import csv
import sys
from dataclasses import dataclass

from padic_dirac.causality import CausalityConfig, fmt_float, reference_probability, tail_bound
from padic_dirac.padic import format_fraction


@dataclass
class StudyConfig:
    base: CausalityConfig
    r_lo: int = 3
    r_hi: int = 10
    times: tuple[float, ...] = (0.0, 1e-6, 1e-3, 1.0)


def study(cfg: StudyConfig):
    for t in cfg.times:
        probs = {R: reference_probability(cfg.base, t, r_max=R) for R in range(cfg.r_lo, cfg.r_hi + 1)}
        for R in range(cfg.r_lo, cfg.r_hi):
            bound = tail_bound(cfg.base.with_overrides(r_max=R), t)
            step = abs(probs[R + 1] - probs[R])
            yield t, R, probs[R], bound, step, step <= bound


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--r-max", nargs=2, type=int, default=(3, 10), metavar=("LO", "HI"))
    ap.add_argument("--times", nargs="+", type=float, default=[0.0, 1e-6, 1e-3, 1.0])
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--m", type=float, default=1.0)
    args = ap.parse_args()
    lo, hi = args.r_max
    b = (f"1/{args.p}^1",) * 3
    base = CausalityConfig(p=args.p, m=args.m, b=b, r_max=max(lo, 2))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("t", "r_max", "probability", "tail_bound", "step_to_next", "within_bound"))
    ok = True
    for t, R, prob, bound, step, inside in study(StudyConfig(base, lo, hi, tuple(args.times))):
        ok &= inside
        w.writerow((fmt_float(t), R, fmt_float(prob), format_fraction(bound), fmt_float(step), inside))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
