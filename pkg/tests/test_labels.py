import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamekit.belief import Action, PayoffTable, UserType
from gamekit.errors import InvalidInputError, SizeError
from gamekit.games import NormalFormGame, is_epsilon_nash, pure, pure_nash_equilibria
from gamekit.labels import LabelOffsetTable, LabelSpace, augment_game, split_action, total_payoff

SPACE2 = LabelSpace((("calm", "urgent"), ("fair", "unfair")))


def test_apology_offsets_refusal_of_legitimate_user():
    game = PayoffTable().stage_game(UserType.LEGITIMATE)
    space = LabelSpace((("none", "apology"), ("none", "benign_request")))
    table = LabelOffsetTable(space, {(1, ("apology", "none")): 1.0})
    assert game.payoff(1, (Action.REFUSE, 0)) == 0.0
    assert total_payoff(game, table, (Action.REFUSE, 0), ("apology", "none"), 1) == 1.0


def test_empty_table_returns_base_payoff():
    game = NormalFormGame(np.arange(8, dtype=float).reshape(2, 2, 2))
    table = LabelOffsetTable(SPACE2)
    for prof in game.pure_profiles():
        for labs in itertools.product(*SPACE2.labels_per_player):
            assert total_payoff(game, table, prof, labs, 0) == game.payoff(0, prof)


def test_two_sided_offset_lookup():
    game = NormalFormGame(np.stack([np.full((2, 2), 3.0), np.zeros((2, 2))]))
    table = LabelOffsetTable(SPACE2, {(0, ("urgent", "fair")): 2.0})
    assert total_payoff(game, table, (1, 0), ("urgent", "fair"), 0) == 5.0
    assert table.offset(0, ("calm", "fair")) == 0.0


def test_unknown_label_rejected():
    game = NormalFormGame(np.zeros((2, 2, 2)))
    table = LabelOffsetTable(SPACE2)
    with pytest.raises(InvalidInputError):
        total_payoff(game, table, (0, 0), ("calm", "angry"), 0)
    with pytest.raises(InvalidInputError):
        LabelOffsetTable(SPACE2, {(0, ("shouting", "fair")): 1.0})


def test_augment_shapes_and_immutability():
    game = NormalFormGame(np.arange(8, dtype=float).reshape(2, 2, 2))
    before = game.payoffs.copy()
    aug = augment_game(game, LabelOffsetTable(SPACE2))
    assert aug.action_counts == (4, 4)
    assert aug.payoffs.size == 2 * 16
    np.testing.assert_array_equal(game.payoffs, before)
    # zero offsets: constant across label choices at fixed actions
    for i in range(2):
        for a in itertools.product(range(2), range(2)):
            block = [aug.payoffs[i, a[0] * 2 + l0, a[1] * 2 + l1] for l0 in range(2) for l1 in range(2)]
            assert len(set(block)) == 1


def test_augment_size_cap():
    game = NormalFormGame(np.zeros((2, 1000, 1000)))
    many = LabelSpace((tuple(f"l{k}" for k in range(20)), ("x",)))
    with pytest.raises(SizeError):
        augment_game(game, LabelOffsetTable(many))


def test_dominant_label_is_always_played():
    game = NormalFormGame(np.array([[[1, 0], [0, 1]], [[0, 2], [3, 0]]], dtype=float))
    space = LabelSpace((("plain", "polite"), ("plain",)))
    # player 0 strictly gains +1 from "polite" whatever happens
    table = LabelOffsetTable(space, {(0, ("polite", "plain")): 1.0})
    aug = augment_game(game, table)
    for prof in aug.pure_profiles():
        strategies = [pure(a, n) for a, n in zip(prof, aug.action_counts)]
        if is_epsilon_nash(aug, strategies, 0.0):
            assert split_action(prof[0], 2)[1] == 1


@st.composite
def labeled_games(draw):
    counts = (draw(st.integers(1, 2)), draw(st.integers(1, 2)))
    nl = (draw(st.integers(1, 2)), draw(st.integers(1, 2)))
    vals = draw(st.lists(st.integers(-3, 3), min_size=2 * counts[0] * counts[1], max_size=2 * counts[0] * counts[1]))
    game = NormalFormGame(np.array(vals, dtype=float).reshape(2, *counts))
    space = LabelSpace(tuple(tuple(f"p{i}l{k}" for k in range(n)) for i, n in enumerate(nl)))
    offsets = {}
    for i in range(2):
        for labs in itertools.product(*space.labels_per_player):
            offsets[(i, labs)] = draw(st.floats(-2, 2, allow_nan=False))
    return game, LabelOffsetTable(space, offsets)


@given(labeled_games())
@settings(max_examples=100, deadline=None)
def test_augmented_payoffs_match_total_payoff_exactly(gt):
    game, table = gt
    aug = augment_game(game, table)
    labels = table.space.labels_per_player
    for acts in game.pure_profiles():
        for li in itertools.product(*(range(len(ls)) for ls in labels)):
            labs = tuple(labels[i][k] for i, k in enumerate(li))
            idx = tuple(a * len(labels[i]) + k for i, (a, k) in enumerate(zip(acts, li)))
            for p in range(2):
                assert aug.payoffs[(p, *idx)] == total_payoff(game, table, acts, labs, p)


@given(labeled_games())
@settings(max_examples=100, deadline=None)
def test_label_offsets_are_additively_separable(gt):
    game, table = gt
    profiles = list(itertools.product(*table.space.labels_per_player))
    for p in range(2):
        for l1, l2 in itertools.product(profiles, repeat=2):
            diffs = {
                total_payoff(game, table, acts, l1, p) - total_payoff(game, table, acts, l2, p)
                for acts in game.pure_profiles()
            }
            assert max(diffs) - min(diffs) <= 1e-12


@given(labeled_games())
@settings(max_examples=100, deadline=None)
def test_zero_offsets_project_to_base_equilibria(gt):
    game, table = gt
    aug = augment_game(game, LabelOffsetTable(table.space))
    base = set(pure_nash_equilibria(game))
    nl = [len(ls) for ls in table.space.labels_per_player]
    for prof in aug.pure_profiles():
        acts = tuple(split_action(a, n)[0] for a, n in zip(prof, nl))
        strategies = [pure(a, n) for a, n in zip(prof, aug.action_counts)]
        assert is_epsilon_nash(aug, strategies, 0.0) == (acts in base)
