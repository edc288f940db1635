"""Repeated Bayesian moderation game.

One moderator faces a stream of users, each Legitimate or Adversarial.
For every arriving user the moderator starts from a prior belief that the
user is adversarial, folds in a few Bernoulli "suspicious label" signals
via Bayes' rule, and then picks Refuse, Filter or Allow.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateLikelihoodError, InvalidInputError
from .games import NormalFormGame
from .labels import NO_LABEL, LabelOffsetTable, LabelSpace

BELIEF_FLOOR = 1e-6
BELIEF_CEIL = 1.0 - 1e-6
TIE_TOL = 1e-12


class Action(enum.IntEnum):
    REFUSE = 0
    FILTER = 1
    ALLOW = 2


class UserType(enum.IntEnum):
    LEGITIMATE = 0
    ADVERSARIAL = 1


@dataclass(frozen=True)
class PayoffTable:
    """Stage payoffs indexed ``[user_type, action]``.

    Defaults reproduce the moderator/user matrix of the moderation example:
    legitimate (M, L) = (2, 0), (1, 2), (3, 5); adversarial (M, A) =
    (3, -2), (-1, 1), (-6, 6) for Refuse, Filter, Allow.
    """

    moderator: np.ndarray = field(default_factory=lambda: np.array([[2.0, 1.0, 3.0], [3.0, -1.0, -6.0]]))
    user: np.ndarray = field(default_factory=lambda: np.array([[0.0, 2.0, 5.0], [-2.0, 1.0, 6.0]]))

    def __post_init__(self):
        for name in ("moderator", "user"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (2, 3):
                raise InvalidInputError(f"{name} payoffs must have shape (2 user types, 3 actions)")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} payoffs must be finite")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, PayoffTable):
            return NotImplemented
        return np.array_equal(self.moderator, other.moderator) and np.array_equal(self.user, other.user)

    def stage_game(self, user_type: UserType) -> NormalFormGame:
        """Moderator (3 actions) vs. a user of known type with a single move."""
        return NormalFormGame(np.stack([self.moderator[user_type][:, None], self.user[user_type][:, None]]))


@dataclass(frozen=True)
class SignalModel:
    """Per-signal probability of a suspicious flag for each user type."""

    q_adv: float = 0.7
    q_leg: float = 0.2

    def __post_init__(self):
        for name in ("q_adv", "q_leg"):
            q = getattr(self, name)
            if not 0.0 <= q <= 1.0:
                raise InvalidInputError(f"{name}={q} outside [0, 1]")

    def rate(self, user_type: UserType) -> float:
        return self.q_adv if user_type == UserType.ADVERSARIAL else self.q_leg


def default_label_table() -> LabelOffsetTable:
    # an apologetic refusal softens the blow for a legitimate user by +1
    space = LabelSpace(((NO_LABEL, "apology"), (NO_LABEL, "benign_request")))
    return LabelOffsetTable(space, {(1, ("apology", NO_LABEL)): 1.0})


@dataclass(frozen=True)
class ModerationLabels:
    """Who says what: the moderator labels by action, the user by type.

    ``table`` has two players, moderator (0) then user (1).
    """

    table: LabelOffsetTable = field(default_factory=default_label_table)
    moderator_label: tuple[str, str, str] = ("apology", NO_LABEL, NO_LABEL)
    user_label: tuple[str, str] = (NO_LABEL, "benign_request")

    def __post_init__(self):
        if self.table.space.num_players != 2:
            raise InvalidInputError("moderation label space must have exactly 2 players")
        if len(self.moderator_label) != 3 or len(self.user_label) != 2:
            raise InvalidInputError("need one moderator label per action and one user label per type")
        for lab in self.moderator_label:
            self.table.space.index(0, lab)
        for lab in self.user_label:
            self.table.space.index(1, lab)

    def offsets(self, player: int) -> np.ndarray:
        """Offset for ``player`` as a ``[user_type, action]`` array."""
        return np.array(
            [
                [self.table.offset(player, (self.moderator_label[a], self.user_label[t])) for a in Action]
                for t in UserType
            ]
        )


@dataclass(frozen=True)
class ModerationScenario:
    payoff_table: PayoffTable = field(default_factory=PayoffTable)
    arrival_p: float = 0.15
    prior_beta: float = 0.2
    signal_model: SignalModel = field(default_factory=SignalModel)
    labels: ModerationLabels = field(default_factory=ModerationLabels)
    rounds: int = 10_000
    signals_per_user: int = 3
    explore: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("arrival_p", "prior_beta", "explore"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ConfigError(f"{name}={val} outside [0, 1]", path=name)
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ConfigError(f"rounds={self.rounds} must be a positive integer", path="rounds")
        if int(self.signals_per_user) != self.signals_per_user or self.signals_per_user < 1:
            raise ConfigError("signals_per_user must be a positive integer", path="signals_per_user")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", path="seed")

    def effective_payoffs(self) -> PayoffTable:
        """Stage payoffs with the label offsets already added in."""
        return PayoffTable(
            self.payoff_table.moderator + self.labels.offsets(0),
            self.payoff_table.user + self.labels.offsets(1),
        )


@dataclass(frozen=True)
class SimulationTrace:
    round: np.ndarray
    user_type: np.ndarray
    signal_count: np.ndarray
    belief_prior: np.ndarray
    belief_post: np.ndarray
    action: np.ndarray
    explored: np.ndarray
    m_payoff: np.ndarray
    u_payoff: np.ndarray

    def __len__(self):
        return len(self.round)

    def records(self):
        """Rows for the trace CSV."""
        for k in range(len(self)):
            yield (
                int(self.round[k]),
                UserType(self.user_type[k]).name.lower(),
                int(self.signal_count[k]),
                float(self.belief_post[k]),
                Action(self.action[k]).name.lower(),
                float(self.m_payoff[k]),
                float(self.u_payoff[k]),
            )


def clamp_belief(beta: float) -> float:
    return min(BELIEF_CEIL, max(BELIEF_FLOOR, beta))


def bayes_update(beta: float, suspicious: bool, model: SignalModel) -> float:
    """Posterior probability of Adversarial after one signal."""
    if not 0.0 <= beta <= 1.0:
        raise InvalidInputError(f"belief {beta} outside [0, 1]")
    if suspicious:
        l_adv, l_leg = model.q_adv, model.q_leg
    else:
        l_adv, l_leg = 1.0 - model.q_adv, 1.0 - model.q_leg
    if l_adv == 0.0 and l_leg == 0.0:
        raise DegenerateLikelihoodError(
            f"signal suspicious={suspicious} is impossible for both user types"
        )
    num = beta * l_adv
    den = num + (1.0 - beta) * l_leg
    if den == 0.0:
        # belief sits on a type that cannot emit this signal
        raise DegenerateLikelihoodError("posterior undefined: zero evidence for the observed signal")
    return clamp_belief(num / den)


def expected_action_values(beta: float, table: PayoffTable | None = None) -> np.ndarray:
    """Moderator's expected payoff of (Refuse, Filter, Allow) under belief beta."""
    table = table or PayoffTable()
    if not 0.0 <= beta <= 1.0:
        raise InvalidInputError(f"belief {beta} outside [0, 1]")
    return beta * table.moderator[UserType.ADVERSARIAL] + (1.0 - beta) * table.moderator[UserType.LEGITIMATE]


def belief_best_response(beta: float, table: PayoffTable | None = None) -> Action:
    """Greedy action under belief; near-ties (1e-12) go to the earliest action."""
    values = expected_action_values(beta, table)
    best = values.max()
    return Action(int(np.flatnonzero(values >= best - TIE_TOL)[0]))


def simulate_moderation(scenario: ModerationScenario) -> SimulationTrace:
    """Run the per-round observe / update / decide / act loop.

    All random draws come from one generator seeded by ``scenario.seed``
    and are taken in a fixed order, so a scenario maps to exactly one trace.
    """
    T = int(scenario.rounds)
    k = int(scenario.signals_per_user)
    model = scenario.signal_model
    table = scenario.effective_payoffs()
    rng = np.random.default_rng(scenario.seed)

    is_adv = rng.random(T) < scenario.arrival_p
    signal_u = rng.random((T, k))
    explore_u = rng.random(T)
    explore_a = rng.integers(0, len(Action), size=T)

    prior = clamp_belief(scenario.prior_beta)
    user_type = is_adv.astype(np.int64)
    rates = np.where(is_adv, model.q_adv, model.q_leg)
    signals = signal_u < rates[:, None]
    post = np.empty(T)
    action = np.empty(T, dtype=np.int64)
    explored = explore_u < scenario.explore

    # the posterior is a function of the ordered signal sequence alone
    decided: dict[bytes, tuple[float, int]] = {}
    for t in range(T):
        key = signals[t].tobytes()
        if key not in decided:
            beta = prior
            for s in signals[t]:
                beta = bayes_update(beta, bool(s), model)
            decided[key] = (beta, int(belief_best_response(beta, table)))
        post[t], greedy = decided[key]
        action[t] = explore_a[t] if explored[t] else greedy

    return SimulationTrace(
        round=np.arange(1, T + 1),
        user_type=user_type,
        signal_count=signals.sum(axis=1),
        belief_prior=np.full(T, prior),
        belief_post=post,
        action=action,
        explored=explored,
        m_payoff=table.moderator[user_type, action],
        u_payoff=table.user[user_type, action],
    )


def action_frequencies(actions, window: int) -> np.ndarray:
    """Bucketed action frequencies over disjoint windows.

    Accepts a SimulationTrace or a plain action sequence.  Returns rows of
    ``(last round in bucket, freq_refuse, freq_filter, freq_allow)``; a
    trailing partial bucket is normalized by its own length.
    """
    if isinstance(actions, SimulationTrace):
        actions = actions.action
    actions = np.asarray(actions, dtype=np.int64)
    if window < 1:
        raise InvalidInputError("window must be a positive integer")
    if window > len(actions):
        raise InvalidInputError(f"window {window} exceeds trace length {len(actions)}")
    rows = []
    for start in range(0, len(actions), window):
        chunk = actions[start : start + window]
        counts = np.bincount(chunk, minlength=len(Action))
        rows.append((start + len(chunk), *(counts / len(chunk))))
    return np.array(rows)
