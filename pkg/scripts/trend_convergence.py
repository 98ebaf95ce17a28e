"""Convergence traces for trend filtering with r = 1 and r = 2.

Runs uFW (simple rule), uFW (line search) and uAFW on one instance per
order and writes, per solver, a CSV with the relative optimality gap of the
best value so far together with the G and H^2 gaps.  A summary is printed.

    python3 scripts/trend_convergence.py --N 200 --n 100 --iters 2000 --out traces/
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from ufw import TrendGenSpec, UfwConfig, estimate_step_eta, uafw_solve, ufw_solve
from ufw.instance_io import build_problem, make_trend_instance
from ufw.reference import reference_value, relative_gap

SOLVERS = {
    "ufw-simple": lambda obj, reg, cfg: ufw_solve(obj, reg, config=cfg),
    "ufw-linesearch": lambda obj, reg, cfg: ufw_solve(obj, reg, config=cfg),
    "uafw": lambda obj, reg, cfg: uafw_solve(obj, reg, config=cfg),
}


def run(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in (1, 2):
        spec = TrendGenSpec(N=args.N, n=args.n, r=r, snr=args.snr, seed=args.seed)
        instance = make_trend_instance(spec)
        f_star = reference_value(instance)
        objective, region = build_problem(instance)
        eta = estimate_step_eta(objective, region)
        for name, solve in SOLVERS.items():
            rule = "linesearch" if name == "ufw-linesearch" else "simple"
            # zero tolerances: run the full budget so the curves line up
            cfg = UfwConfig(eta=eta, step_rule=rule, max_iters=args.iters, tol_G=0.0, tol_H2=0.0)
            res = solve(objective, region, cfg)
            path = out / f"trend_r{r}_{name}.csv"
            best = np.inf
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["k", "rel_gap", "G", "H2"])
                for rec in res.trace:
                    best = min(best, rec.f_val)
                    w.writerow([rec.k, relative_gap(best, f_star), rec.G, rec.H ** 2])
            print(f"r={r} {name:15s} iters={res.iterations:6d} "
                  f"gap={relative_gap(res.best_f, f_star):.3e} -> {path}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--snr", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--out", default="traces")
    run(p.parse_args())


if __name__ == "__main__":
    main()
