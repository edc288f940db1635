"""Refuse/Filter/Allow frequencies across arrival rates, against the exact
stationary rates from the binomial signal-count distribution.

    python scripts/moderation_sweep.py --seeds 10 --out sweep.csv
"""

import argparse
from math import comb

import numpy as np

from gamekit.belief import ModerationScenario, bayes_update, belief_best_response, simulate_moderation
from gamekit.io import emit_csv


def exact_rates(sc: ModerationScenario) -> np.ndarray:
    """Stationary action probabilities without exploration."""
    n, m = sc.signals_per_user, sc.signal_model
    rates = np.zeros(3)
    for k in range(n + 1):
        beta = sc.prior_beta
        for s in [True] * k + [False] * (n - k):
            beta = bayes_update(beta, s, m)
        p_k = sum(
            w * comb(n, k) * q**k * (1 - q) ** (n - k)
            for w, q in ((1 - sc.arrival_p, m.q_leg), (sc.arrival_p, m.q_adv))
        )
        rates[belief_best_response(beta, sc.effective_payoffs())] += p_k
    return rates


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arrival", type=float, nargs="+", default=[0.05, 0.15, 0.3, 0.5])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=10_000)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = []
    print(f"{'p':>6} {'refuse':>8} {'filter':>8} {'allow':>8}   exact R/F/A")
    for p in args.arrival:
        freqs = []
        for seed in range(args.seeds):
            sc = ModerationScenario(arrival_p=p, rounds=args.rounds, seed=seed)
            freqs.append(np.bincount(simulate_moderation(sc).action, minlength=3) / sc.rounds)
        mean = np.mean(freqs, axis=0)
        exact = exact_rates(ModerationScenario(arrival_p=p))
        print(f"{p:6.3f} {mean[0]:8.4f} {mean[1]:8.4f} {mean[2]:8.4f}   " + "/".join(f"{x:.4f}" for x in exact))
        rows.append((p, *mean, *exact))
    if args.out:
        cols = ("arrival_p", "refuse", "filter", "allow", "exact_refuse", "exact_filter", "exact_allow")
        print("wrote", emit_csv(rows, cols, args.out))


if __name__ == "__main__":
    main()
