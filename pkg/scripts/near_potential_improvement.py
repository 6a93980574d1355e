"""Potential improvement of decentralized fictitious play in a near-potential game.

A 2x2 coordination game gets one payoff bumped, which puts it at distance
delta from its closest potential game.  Counts steps far from equilibrium
(psi < -(N delta + eps)) and how often the fitted potential drops there.

    python scripts/near_potential_improvement.py --bump 0.2 --eps 0.1
"""
import argparse

from nearplay.dynamics import RunConfig, run
from nearplay.game import Game, coordination_game, fit_closest_potential
from nearplay.network import ring


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bump", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--t-final", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--seeds", type=int, default=3)
    args = p.parse_args()

    u = coordination_game(2, 2).payoffs.copy()
    u[0, 0, 1] += args.bump
    game = Game(u)
    fit = fit_closest_potential(game)
    threshold = -(2 * fit.delta + args.eps)
    print(f"closest potential at delta = {fit.delta:.6f}; threshold psi < {threshold:.4f}")
    for init in [(0, 1), (1, 0), "uniform-random", "uniform-prior"]:
        for seed in range(args.seeds):
            cfg = RunConfig(game, ring(2), t_final=args.t_final + 1, seed=seed, init=init, potential=fit.potential)
            trace = run(cfg, keep_state=False)
            far = [t for t in range(args.burn_in, args.t_final + 1) if trace[t - 1].psi < threshold]
            drops = sum(trace[t].potential < trace[t - 1].potential for t in far)
            print(f"init={init!s:15s} seed={seed}  far steps {len(far):5d}  potential drops {drops:5d}"
                  f"  final psi {trace[-1].psi:.4f}")


if __name__ == "__main__":
    main()
