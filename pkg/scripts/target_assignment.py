"""Target-assignment replications on ring and star networks.

Prints the equilibrium hit counts and the mean estimation error and distance
to equilibrium at a few time steps; optionally writes the summaries as JSON.

    python scripts/target_assignment.py --reps 20 --out out/target
"""
import argparse
import json
from pathlib import Path

from nearplay.benchmark import BenchmarkConfig, run_replications
from nearplay.export import write_json


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--t-final", type=int, default=50)
    p.add_argument("--init", default="uniform-prior", choices=["uniform-prior", "uniform-random"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    args = p.parse_args()

    seeds = range(args.seed_base, args.seed_base + args.reps)
    for net in ("ring", "star"):
        cfg = BenchmarkConfig(network=net, t_final=args.t_final, init=args.init)
        s = run_replications(cfg, args.reps, seeds, args.workers)
        hits = sum(r.ne_hit and r.one_to_one for r in s.replications)
        print(f"{net:5s} one-to-one pure NE: {hits}/{args.reps}")
        for t in (1, 10, 25, args.t_final):
            print(f"      t={t:3d}  estimation error {s.mean_estimation_error[t - 1]:.4f}"
                  f"  dist to NE {s.mean_dist_to_ne[t - 1]:.4f}")
        if args.out:
            write_json(Path(args.out) / f"{net}.json", s.to_dict())


if __name__ == "__main__":
    main()
