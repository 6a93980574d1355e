"""Consensus tracking error of decentralized fictitious play on a ring.

Prints max_{i,j} |copy - frequency| and the same quantity scaled by t / log t,
which stays bounded if the error decays like log(t) / t.

    python scripts/estimation_rate.py --n-agents 5 --t-final 2000
"""
import argparse
import math

from nearplay.dynamics import RunConfig, run
from nearplay.game import coordination_game
from nearplay.network import WeightRule, ring


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-agents", type=int, default=5)
    p.add_argument("--t-final", type=int, default=2000)
    p.add_argument("--self-weight", type=float, default=0.75)
    args = p.parse_args()

    n = args.n_agents
    init = tuple(i % 2 for i in range(n))
    cfg = RunConfig(
        coordination_game(n, 2), ring(n), WeightRule(args.self_weight),
        t_final=args.t_final, init=init, stride=args.t_final,
    )
    trace = run(cfg, keep_state=False)
    print(f"{'t':>6s} {'max error':>12s} {'error*t/log t':>14s}")
    t = 10
    while t <= args.t_final:
        e = trace[t - 1].max_estimation_error
        print(f"{t:6d} {e:12.3e} {e * t / math.log(t):14.4f}")
        t *= 2


if __name__ == "__main__":
    main()
