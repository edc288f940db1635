"""Normal-form games: expected utilities, best responses, Nash checks,
zero-sum fictitious play and Stackelberg commitment.

Player and action indices are 0-based.  A strategy profile is a sequence
with one probability vector per player.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    InfeasibleResolutionError,
    InvalidInputError,
    SizeError,
)

MAX_PROFILES = 10**7
PROB_TOL = 1e-9


@dataclass(frozen=True)
class NormalFormGame:
    """Finite N-player game with a dense payoff tensor.

    ``payoffs[i][a_1, ..., a_N]`` is player i's payoff at the joint pure
    profile; the array has shape ``(N, |A_1|, ..., |A_N|)``.
    """

    payoffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.payoffs, dtype=float)
        if arr.ndim < 2:
            raise InvalidInputError("payoff tensor needs a player axis and at least one action axis")
        if arr.shape[0] != arr.ndim - 1:
            raise InvalidInputError(
                f"payoff tensor has {arr.shape[0]} player slices but {arr.ndim - 1} action axes"
            )
        if any(n < 1 for n in arr.shape[1:]):
            raise InvalidInputError("every player needs at least one action")
        if int(np.prod(arr.shape[1:])) > MAX_PROFILES:
            raise SizeError(
                f"{int(np.prod(arr.shape[1:]))} joint profiles exceeds the cap of {MAX_PROFILES}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("payoffs must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "payoffs", arr)

    @classmethod
    def from_player_tensors(cls, tensors: Sequence) -> "NormalFormGame":
        return cls(np.stack([np.asarray(t, dtype=float) for t in tensors]))

    @property
    def num_players(self) -> int:
        return self.payoffs.shape[0]

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(self.payoffs.shape[1:])

    def payoff(self, player: int, actions: Sequence[int]) -> float:
        self._check_player(player)
        self._check_actions(actions)
        return float(self.payoffs[(player, *actions)])

    def pure_profiles(self):
        return itertools.product(*(range(n) for n in self.action_counts))

    def _check_player(self, player: int):
        if not 0 <= player < self.num_players:
            raise InvalidInputError(f"player {player} out of range for {self.num_players} players")

    def _check_actions(self, actions: Sequence[int]):
        if len(actions) != self.num_players:
            raise InvalidInputError(f"expected {self.num_players} actions, got {len(actions)}")
        for i, (a, n) in enumerate(zip(actions, self.action_counts)):
            if not 0 <= a < n:
                raise InvalidInputError(f"action {a} out of range for player {i} ({n} actions)")


@dataclass(frozen=True)
class ZeroSumGame:
    """Two-player zero-sum game; ``matrix[r, c]`` is the row player's payoff."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.array(self.matrix, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise InvalidInputError("zero-sum payoff must be a non-empty matrix")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("payoffs must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "matrix", arr)

    def to_normal_form(self) -> NormalFormGame:
        return NormalFormGame(np.stack([self.matrix, -self.matrix]))


@dataclass(frozen=True)
class ZeroSumSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    lower: float
    upper: float
    iterations: int
    converged: bool = True


@dataclass(frozen=True)
class StackelbergSolution:
    leader_strategy: np.ndarray
    follower_action: int
    leader_value: float
    follower_value: float
    leader: int = 0


def pure(action: int, n: int) -> np.ndarray:
    """Degenerate mixed strategy on ``action``."""
    s = np.zeros(n)
    s[action] = 1.0
    return s


def check_mixed(probs, n: int | None = None) -> np.ndarray:
    s = np.asarray(probs, dtype=float)
    if s.ndim != 1:
        raise InvalidInputError("mixed strategy must be a vector")
    if n is not None and s.shape[0] != n:
        raise InvalidInputError(f"mixed strategy has {s.shape[0]} entries, expected {n}")
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise InvalidInputError("mixed strategy entries must be finite and non-negative")
    if abs(s.sum() - 1.0) > PROB_TOL:
        raise InvalidInputError(f"mixed strategy sums to {s.sum()!r}, not 1")
    return s


def check_profile(game: NormalFormGame, profile) -> list[np.ndarray]:
    if len(profile) != game.num_players:
        raise InvalidInputError(
            f"profile has {len(profile)} strategies for a {game.num_players}-player game"
        )
    return [check_mixed(s, n) for s, n in zip(profile, game.action_counts)]


def _action_values(game: NormalFormGame, profile: list[np.ndarray], player: int) -> np.ndarray:
    # contract every opponent axis, leaving the player's own action axis
    t = np.moveaxis(game.payoffs[player], player, -1)
    for j, s in enumerate(profile):
        if j != player:
            t = np.tensordot(s, t, axes=(0, 0))
    return t


def expected_utility(game: NormalFormGame, profile, player: int) -> float:
    game._check_player(player)
    profile = check_profile(game, profile)
    t = game.payoffs[player]
    for s in reversed(profile):
        t = t @ s
    return float(t)


def best_response(game: NormalFormGame, profile, player: int) -> tuple[int, float]:
    """Pure best reply to the opponents' mixtures, lowest index on ties.

    The player's own entry in ``profile`` is validated but otherwise ignored.
    """
    game._check_player(player)
    profile = check_profile(game, profile)
    values = _action_values(game, profile, player)
    a = int(np.argmax(values))
    return a, float(values[a])


def deviation_gains(game: NormalFormGame, profile) -> np.ndarray:
    """Per-player gain from the best unilateral pure deviation."""
    profile = check_profile(game, profile)
    return np.array(
        [
            best_response(game, profile, i)[1] - expected_utility(game, profile, i)
            for i in range(game.num_players)
        ]
    )


def is_epsilon_nash(game: NormalFormGame, profile, epsilon: float = 0.0) -> bool:
    if epsilon < 0:
        raise InvalidInputError("epsilon must be non-negative")
    profile = check_profile(game, profile)
    for i in range(game.num_players):
        _, br = best_response(game, profile, i)
        if br > expected_utility(game, profile, i) + epsilon:
            return False
    return True


def pure_nash_equilibria(game: NormalFormGame, epsilon: float = 0.0) -> list[tuple[int, ...]]:
    """All pure profiles that are epsilon-Nash, in lexicographic order."""
    out = []
    for prof in game.pure_profiles():
        strategies = [pure(a, n) for a, n in zip(prof, game.action_counts)]
        if is_epsilon_nash(game, strategies, epsilon):
            out.append(prof)
    return out


def solve_zero_sum(
    game: ZeroSumGame, tol: float = 1e-3, max_iter: int = 10**9
) -> ZeroSumSolution:
    """Fictitious play on a zero-sum matrix game.

    Both players best-respond simultaneously to the opponent's empirical
    action frequencies.  After ``t`` plays, ``lower = min_c (x A)_c`` and
    ``upper = max_r (A y)_r`` bracket the game value.  Stops once
    ``upper - lower < tol`` and returns the midpoint.

    Raises ConvergenceError (with the partial solution attached) if the
    gap is still open after ``max_iter`` iterations.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    if max_iter < 1:
        raise InvalidInputError("max_iter must be at least 1")
    A = game.matrix
    m, n = A.shape
    row_counts = np.zeros(m)
    col_counts = np.zeros(n)

    # first play: best reply to the uniform mixture
    r = int(np.argmax(A.mean(axis=1)))
    c = int(np.argmin(A.mean(axis=0)))
    row_counts[r] += 1
    col_counts[c] += 1
    row_cum = A[:, c].copy()  # payoff of each row against the column history
    col_cum = A[r, :].copy()  # payoff conceded by each column against the row history

    t = 1
    while True:
        upper = row_cum.max() / t
        lower = col_cum.min() / t
        if upper - lower < tol:
            break
        if t >= max_iter:
            partial = ZeroSumSolution(
                (upper + lower) / 2, row_counts / t, col_counts / t, lower, upper, t, False
            )
            raise ConvergenceError(
                f"fictitious play gap {upper - lower:.3g} >= tol {tol:.3g} after {t} iterations "
                f"(lower={lower:.6g}, upper={upper:.6g})",
                partial,
            )
        r = int(np.argmax(row_cum))
        c = int(np.argmin(col_cum))
        # (r, c) repeats until a reply switches or the gap closes; take the run at once
        k = min(
            _run_length(row_cum, A[:, c], r, tol, t, row_cum[r] - col_cum[c]),
            _run_length(-col_cum, -A[r, :], c, tol, t, row_cum[r] - col_cum[c]),
            max_iter - t,
        )
        row_counts[r] += k
        col_counts[c] += k
        row_cum += k * A[:, c]
        col_cum += k * A[r, :]
        t += k

    return ZeroSumSolution((upper + lower) / 2, row_counts / t, col_counts / t, lower, upper, t)


def _run_length(cum, inc, best, tol, t, gap_num) -> int:
    """Plays until ``best`` stops being the (lowest-index) argmax of
    ``cum + k * inc``, capped by the plays needed to push the gap below tol.

    During a run both bounds grow by the same stage payoff, so the gap
    numerator ``gap_num`` is fixed and only the play count ``t`` moves.
    """
    k = max(1, int(np.floor(gap_num / tol - t)) + 1)
    lead = cum[best] - cum
    closing = inc - inc[best]
    for j in np.flatnonzero(closing > 0):
        ratio = lead[j] / closing[j]
        # lower indices win ties, so they take over one step earlier
        k_j = int(np.ceil(ratio)) if j < best else int(np.floor(ratio)) + 1
        k = min(k, max(1, k_j))
    return k


def simplex_grid(n_actions: int, resolution: float) -> np.ndarray:
    """All mixtures whose entries are multiples of ``1/ceil(1/resolution)``.

    Rows are in lexicographic order of the stars-and-bars bar positions.
    """
    steps = int(np.ceil(1.0 / resolution - 1e-12))
    n_points = comb(steps + n_actions - 1, n_actions - 1)
    if n_points > MAX_PROFILES:
        raise SizeError(f"simplex grid would have {n_points} points")
    pts = np.empty((n_points, n_actions))
    for k, bars in enumerate(itertools.combinations(range(steps + n_actions - 1), n_actions - 1)):
        prev = -1
        for j, b in enumerate(bars):
            pts[k, j] = b - prev - 1
            prev = b
        pts[k, -1] = steps + n_actions - 2 - prev
    return pts / steps


def solve_stackelberg(
    game: NormalFormGame, grid_resolution: float = 0.01, leader: int = 0, tol: float = 1e-9
) -> StackelbergSolution:
    """Leader commitment by follower-action enumeration over a simplex grid.

    For each follower pure action, keep the grid mixtures under which that
    action is a follower best response (within ``tol``) and take the one
    maximizing the leader's payoff.  Follower ties are resolved in the
    leader's favor.  The first maximizer in grid order wins overall.
    """
    if game.num_players != 2:
        raise InvalidInputError("Stackelberg commitment needs exactly 2 players")
    if not 0 < grid_resolution <= 0.5:
        raise InvalidInputError("grid_resolution must lie in (0, 0.5]")
    if leader not in (0, 1):
        raise InvalidInputError("leader must be 0 or 1")
    follower = 1 - leader
    # (leader action, follower action) matrices
    L = game.payoffs[leader] if leader == 0 else game.payoffs[leader].T
    F = game.payoffs[follower] if leader == 0 else game.payoffs[follower].T

    grid = simplex_grid(L.shape[0], grid_resolution)
    lead_vals = grid @ L
    foll_vals = grid @ F
    feasible = foll_vals >= foll_vals.max(axis=1, keepdims=True) - tol
    scored = np.where(feasible, lead_vals, -np.inf)
    if not np.isfinite(scored).any():
        raise InfeasibleResolutionError("no grid mixture supports any follower best response")
    best_per_point = scored.max(axis=1)
    k = int(np.argmax(best_per_point))
    f = int(np.argmax(scored[k]))
    return StackelbergSolution(
        leader_strategy=grid[k],
        follower_action=f,
        leader_value=float(lead_vals[k, f]),
        follower_value=float(foll_vals[k, f]),
        leader=leader,
    )


def discounted_sum(stage_payoffs: Sequence[float], delta: float = 1.0) -> float:
    """Sum of ``delta**(t-1) * payoff_t`` over a finite horizon."""
    if not 0 < delta <= 1:
        raise InvalidInputError("delta must lie in (0, 1]")
    total = 0.0
    weight = 1.0
    for x in stage_payoffs:
        total += weight * x
        weight *= delta
    return total
