"""Language-label payoff offsets.

Each player picks a label alongside its action.  A player's total payoff
is its base game payoff plus an offset looked up from the full label
profile; unlisted profiles contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, SizeError
from .games import MAX_PROFILES, NormalFormGame

NO_LABEL = "none"


@dataclass(frozen=True)
class LabelSpace:
    labels_per_player: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        labels = tuple(tuple(str(x) for x in ls) for ls in self.labels_per_player)
        for i, ls in enumerate(labels):
            if not ls:
                raise InvalidInputError(f"player {i} has no labels")
            if len(set(ls)) != len(ls):
                raise InvalidInputError(f"player {i} has duplicate labels")
        object.__setattr__(self, "labels_per_player", labels)

    @property
    def num_players(self) -> int:
        return len(self.labels_per_player)

    def index(self, player: int, label: str) -> int:
        try:
            return self.labels_per_player[player].index(label)
        except ValueError:
            raise InvalidInputError(f"unknown label {label!r} for player {player}") from None

    def check(self, labels: Sequence[str]) -> tuple[str, ...]:
        labels = tuple(labels)
        if len(labels) != self.num_players:
            raise InvalidInputError(f"expected {self.num_players} labels, got {len(labels)}")
        for i, lab in enumerate(labels):
            self.index(i, lab)
        return labels


@dataclass(frozen=True)
class LabelOffsetTable:
    """Sparse map ``(player, label profile) -> offset`` with zero default."""

    space: LabelSpace
    offsets: Mapping[tuple[int, tuple[str, ...]], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (player, labels), val in dict(self.offsets).items():
            if not 0 <= player < self.space.num_players:
                raise InvalidInputError(f"offset for unknown player {player}")
            val = float(val)
            if not np.isfinite(val):
                raise InvalidInputError("offsets must be finite")
            clean[(player, self.space.check(labels))] = val
        object.__setattr__(self, "offsets", clean)

    def offset(self, player: int, labels: Sequence[str]) -> float:
        return self.offsets.get((player, self.space.check(labels)), 0.0)

    def dense(self, player: int) -> np.ndarray:
        """Offsets for one player as a tensor over label indices."""
        shape = tuple(len(ls) for ls in self.space.labels_per_player)
        out = np.zeros(shape)
        for (p, labels), val in self.offsets.items():
            if p == player:
                out[tuple(self.space.index(i, lab) for i, lab in enumerate(labels))] = val
        return out


def total_payoff(
    game: NormalFormGame,
    table: LabelOffsetTable,
    actions: Sequence[int],
    labels: Sequence[str],
    player: int,
) -> float:
    if table.space.num_players != game.num_players:
        raise InvalidInputError("label space and game disagree on the number of players")
    return game.payoff(player, actions) + table.offset(player, labels)


def augment_game(game: NormalFormGame, table: LabelOffsetTable) -> NormalFormGame:
    """Fold label choice into the action set.

    Player i's augmented action ``a * n_labels_i + l`` stands for the pair
    (action a, label l).  The input game is left untouched.
    """
    space = table.space
    n = game.num_players
    if space.num_players != n:
        raise InvalidInputError("label space and game disagree on the number of players")
    n_labels = [len(ls) for ls in space.labels_per_player]
    sizes = [a * l for a, l in zip(game.action_counts, n_labels)]
    if int(np.prod(sizes, dtype=object)) > MAX_PROFILES:
        raise SizeError(f"augmented game would have {int(np.prod(sizes, dtype=object))} profiles")

    # interleave axes as (a_1, l_1, a_2, l_2, ...) then merge each pair
    base_shape = []
    label_shape = []
    for a, l in zip(game.action_counts, n_labels):
        base_shape += [a, 1]
        label_shape += [1, l]
    tensors = []
    for i in range(n):
        t = game.payoffs[i].reshape(base_shape) + table.dense(i).reshape(label_shape)
        tensors.append(t.reshape(sizes))
    return NormalFormGame(np.stack(tensors))


def split_action(augmented_action: int, n_labels: int) -> tuple[int, int]:
    """Inverse of the augmented action encoding: ``(action, label index)``."""
    return divmod(augmented_action, n_labels)
