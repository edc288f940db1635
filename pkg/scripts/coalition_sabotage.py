"""How sabotage strength shapes the stable coalition and the Shapley split.

    python scripts/coalition_sabotage.py --agents 5 --weight 5 --malicious 3
"""

import argparse

import numpy as np

from gamekit.coalition import (
    CharacteristicFunction,
    SabotageModel,
    TrustSchedule,
    agents_of,
    apply_trust,
    best_coalition,
    core_contains,
    shapley,
)


def label(mask):
    return "{" + ",".join(str(a + 1) for a in agents_of(mask)) + "}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--agents", type=int, default=5)
    ap.add_argument("--weight", type=float, default=5.0)
    ap.add_argument("--malicious", type=int, nargs="+", default=[3], help="1-based agent numbers")
    ap.add_argument("--rho", type=float, default=0.8, help="trust decay per verified round")
    args = ap.parse_args()

    cf = CharacteristicFunction.pairwise(args.agents, args.weight)
    bad = [a - 1 for a in args.malicious]
    print(f"{'alpha':>6}  {'best coalition':<16} {'value':>7}  shapley (in core?)")
    for alpha in np.linspace(0, 1, 11):
        sab = SabotageModel.fractional(bad, alpha)
        mask, val = best_coalition(cf, sab)
        phi = shapley(cf, sab)
        ok, _ = core_contains(cf, sab, phi)
        print(f"{alpha:6.2f}  {label(mask):<16} {val:7.2f}  {np.round(phi, 3)} ({ok})")

    schedule = TrustSchedule(alpha0=0.5, rho=args.rho)
    print("\nverified rounds needed before the grand coalition wins:")
    for k in range(50):
        alpha = apply_trust(schedule, k)
        if best_coalition(cf, SabotageModel.fractional(bad, alpha))[0] == cf.grand:
            print(f"  k={k} (alpha={alpha:.4f})")
            break
    else:
        print("  not within 50 rounds")


if __name__ == "__main__":
    main()
