#!/usr/bin/env python3
"""Convergence curves for the committed leader vs the bandit no-swap-regret
learner: average utilities and swap regret at each checkpoint, conditioned on
the realized game.

Example:
    python scripts/leader_convergence.py --horizon 100000 --trials 8 --threads 2
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from stratlab.engine import ExperimentConfig, estimate
from stratlab.games import SignalModel, builtin_prior
from stratlab.learners import LearnerSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--horizon", type=int, default=20000)
    ap.add_argument("--trials", type=int, default=8)
    ap.add_argument("--seed", type=int, default=20260816)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig(
        prior=builtin_prior(f"fig1:gamma={args.gamma}"),
        signal_model=SignalModel(1.0, 0.0),
        spec1=LearnerSpec("stackelberg_leader"),
        spec2=LearnerSpec("no_swap_regret_bandit"),
        horizon=args.horizon,
        trials=args.trials,
        master_seed=args.seed,
    )
    rep = estimate(cfg, threads=args.threads)
    print(f"gamma={args.gamma}, trials={args.trials}, horizon={args.horizon}")
    print(f"{'t':>8} {'avg_u1':>9} {'avg_u2':>9} {'swap2/t':>9}")
    for row in rep.checkpoint_curves:
        print(
            f"{int(row['t']):>8} {row['avg_u1']:9.4f} {row['avg_u2']:9.4f} "
            f"{row['swap_regret2'] / row['t']:9.4f}"
        )
    for i, grp in sorted(rep.per_game.items()):
        print(f"realized {grp.get('game', i)}: trials={grp['count']} U1={grp['mean_u1']:.4f} U2={grp['mean_u2']:.4f}")
    print(f"tail mass on follower action C (last {rep.tail['window']} rounds): {rep.tail['player2'][0]:.4f}")


if __name__ == "__main__":
    main()
