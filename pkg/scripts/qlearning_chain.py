"""Tabular Q-learning on a two-state chain against value iteration.

State 0: action 0 moves to state 1 for nothing, action 1 ends with reward 1.
State 1: action 0 ends with reward 2, action 1 ends with nothing.

    python scripts/qlearning_chain.py --seeds 10
"""

import argparse

import numpy as np

from gamekit.marl import DeterministicMDP, LearningConfig, train


def value_iteration(env, discount, tol=1e-10):
    q = np.zeros(env.reward.shape)
    while True:
        new = env.reward + np.where(env.terminal, 0.0, discount * q.max(axis=1)[env.next_state])
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--episodes", type=int, default=10_000)
    ap.add_argument("--discount", type=float, default=0.95)
    args = ap.parse_args()

    env = DeterministicMDP([[1, 0], [0, 0]], [[0.0, 1.0], [2.0, 0.0]], [[False, True], [True, True]])
    oracle = value_iteration(env, args.discount)
    print("value iteration Q*:\n", oracle)
    for seed in range(args.seeds):
        res = train(env, LearningConfig(episodes=args.episodes, discount=args.discount, seed=seed))
        q = res.q_tables[0]
        same = np.array_equal(res.greedy_policy(), np.argmax(oracle, axis=1))
        print(f"seed {seed}: policy {'matches' if same else 'DIFFERS'}, max |Q - Q*| = {np.max(np.abs(q - oracle)):.2e}")


if __name__ == "__main__":
    main()
