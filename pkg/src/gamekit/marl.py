"""Tabular multi-agent Q-learning.

Every agent keeps its own Q-table over a single shared discrete state and
its own actions.  Agents act simultaneously; the environment maps the
joint action to a next state and one payoff per agent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .belief import Action, ModerationScenario, UserType, bayes_update, clamp_belief
from .errors import InvalidInputError
from .games import NormalFormGame


class TabularEnvironment:
    """Base class for environments the learner can drive.

    Subclasses set ``n_agents``, ``state_count`` and ``action_counts`` and
    implement ``reset`` and ``step``.  Randomness must come only from the
    generator passed in.
    """

    n_agents: int
    state_count: int
    action_counts: tuple[int, ...]

    def reset(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def step(self, state: int, actions: Sequence[int], rng: np.random.Generator) -> tuple[int, np.ndarray, bool]:
        raise NotImplementedError


@dataclass(frozen=True)
class LearningConfig:
    episodes: int = 10_000
    learning_rate: float = 0.1
    discount: float = 0.95
    epsilon: float = 1.0
    epsilon_decay: float = 0.999
    epsilon_min: float = 0.05
    max_steps: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise InvalidInputError("episodes must be positive")
        if not 0 < self.learning_rate <= 1:
            raise InvalidInputError("learning_rate must lie in (0, 1]")
        if not 0 <= self.discount < 1:
            raise InvalidInputError("discount must lie in [0, 1)")
        for name in ("epsilon", "epsilon_decay", "epsilon_min"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        if self.max_steps < 1:
            raise InvalidInputError("max_steps must be positive")

    def epsilon_at(self, episode: int) -> float:
        return max(self.epsilon_min, self.epsilon * self.epsilon_decay**episode)


@dataclass
class TrainingResult:
    q_tables: list[np.ndarray]
    rewards: np.ndarray  # (episodes, n_agents) undiscounted reward sums
    epsilons: np.ndarray
    truncated: np.ndarray  # episodes cut off at max_steps

    def greedy_policy(self, agent: int = 0) -> np.ndarray:
        return np.argmax(self.q_tables[agent], axis=1)

    def curve_records(self):
        for e in range(len(self.epsilons)):
            yield e + 1, float(self.rewards[e].sum()), float(self.epsilons[e])


def q_update(
    q: np.ndarray,
    state: int,
    action: int,
    reward: float,
    next_state: int,
    terminal: bool,
    config: LearningConfig,
) -> float:
    """One TD step on ``q[state, action]`` in place; returns the new entry."""
    n_states, n_actions = q.shape
    if not (0 <= state < n_states and 0 <= next_state < n_states and 0 <= action < n_actions):
        raise InvalidInputError(f"index out of range for a {q.shape} Q-table")
    target = reward if terminal else reward + config.discount * q[next_state].max()
    q[state, action] += config.learning_rate * (target - q[state, action])
    return float(q[state, action])


def select_action(q_row, epsilon: float, rng: np.random.Generator) -> int:
    q_row = np.asarray(q_row)
    if q_row.size == 0:
        raise InvalidInputError("empty Q row")
    if not 0 <= epsilon <= 1:
        raise InvalidInputError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(q_row.size))
    return int(np.argmax(q_row))


def train(env: TabularEnvironment, config: LearningConfig | None = None) -> TrainingResult:
    config = config or LearningConfig()
    rng = np.random.default_rng(config.seed)
    q_tables = [np.zeros((env.state_count, n)) for n in env.action_counts]
    rewards = np.zeros((config.episodes, env.n_agents))
    epsilons = np.empty(config.episodes)
    truncated = np.zeros(config.episodes, dtype=bool)

    for episode in range(config.episodes):
        eps = config.epsilon_at(episode)
        epsilons[episode] = eps
        state = env.reset(rng)
        for _ in range(config.max_steps):
            actions = [select_action(q[state], eps, rng) for q in q_tables]
            next_state, payoffs, terminal = env.step(state, actions, rng)
            payoffs = np.asarray(payoffs, dtype=float)
            if payoffs.shape != (env.n_agents,) or not np.all(np.isfinite(payoffs)):
                raise InvalidInputError("environment returned malformed payoffs")
            for i, q in enumerate(q_tables):
                q_update(q, state, actions[i], payoffs[i], next_state, terminal, config)
            rewards[episode] += payoffs
            state = next_state
            if terminal:
                break
        else:
            truncated[episode] = True

    return TrainingResult(q_tables, rewards, epsilons, truncated)


class DeterministicMDP(TabularEnvironment):
    """Single-agent MDP given by ``next_state[s, a]``, ``reward[s, a]`` and
    ``terminal[s, a]`` arrays, always starting in ``start``."""

    def __init__(self, next_state, reward, terminal, start: int = 0):
        self.next_state = np.asarray(next_state, dtype=np.int64)
        self.reward = np.asarray(reward, dtype=float)
        self.terminal = np.asarray(terminal, dtype=bool)
        if not self.next_state.shape == self.reward.shape == self.terminal.shape:
            raise InvalidInputError("transition, reward and terminal arrays must share a shape")
        self.n_agents = 1
        self.state_count, n_actions = self.reward.shape
        self.action_counts = (n_actions,)
        self.start = start

    def reset(self, rng):
        return self.start

    def step(self, state, actions, rng):
        a = actions[0]
        return int(self.next_state[state, a]), np.array([self.reward[state, a]]), bool(self.terminal[state, a])


class MatrixGameEnv(TabularEnvironment):
    """Repeated one-shot play of a normal-form game (one state, one step)."""

    def __init__(self, game: NormalFormGame):
        self.game = game
        self.n_agents = game.num_players
        self.state_count = 1
        self.action_counts = game.action_counts

    def reset(self, rng):
        return 0

    def step(self, state, actions, rng):
        return 0, self.game.payoffs[(slice(None), *actions)].copy(), True


class ModerationEnv(TabularEnvironment):
    """The moderation scenario as a one-agent, one-step-per-episode task.

    ``reset`` draws a user, folds that user's signals into the prior and
    returns the belief bucket.  ``step`` realizes the stage payoff of the
    chosen action (label offsets included) and ends the episode.
    """

    def __init__(self, scenario: ModerationScenario, belief_buckets: int = 20):
        if belief_buckets < 2:
            raise InvalidInputError("belief_buckets must be at least 2")
        self.scenario = scenario
        self.table = scenario.effective_payoffs()
        self.n_agents = 1
        self.state_count = belief_buckets
        self.action_counts = (len(Action),)
        self.user_type = UserType.LEGITIMATE
        self.belief = clamp_belief(scenario.prior_beta)

    def bucket(self, beta: float) -> int:
        return min(int(beta * self.state_count), self.state_count - 1)

    def reset(self, rng):
        sc = self.scenario
        self.user_type = UserType.ADVERSARIAL if rng.random() < sc.arrival_p else UserType.LEGITIMATE
        q = sc.signal_model.rate(self.user_type)
        beta = clamp_belief(sc.prior_beta)
        for u in rng.random(sc.signals_per_user):
            beta = bayes_update(beta, bool(u < q), sc.signal_model)
        self.belief = beta
        return self.bucket(beta)

    def step(self, state, actions, rng):
        a = actions[0]
        return state, np.array([self.table.moderator[self.user_type, a]]), True


def moderation_env(scenario: ModerationScenario, belief_buckets: int = 20) -> ModerationEnv:
    return ModerationEnv(scenario, belief_buckets)
