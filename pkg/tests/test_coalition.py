import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamekit.coalition import (
    CharacteristicFunction,
    SabotageModel,
    TrustSchedule,
    agents_of,
    apply_trust,
    best_coalition,
    coalition_table,
    core_contains,
    mask_of,
    shapley,
    value,
)
from gamekit.errors import InvalidInputError, SizeError

# the five-agent game with agent 3 (index 2) malicious
S1245 = mask_of([0, 1, 3, 4])
PAIRWISE5 = CharacteristicFunction.pairwise(5, 5)


def sabotage(alpha):
    return SabotageModel.fractional([2], alpha)


def permutation_shapley(cf, sab):
    """Average marginal contribution over all n! join orders."""
    vt = coalition_table(cf, sab).v_tilde
    n = cf.n_agents
    phi = np.zeros(n)
    orders = list(itertools.permutations(range(n)))
    for order in orders:
        m = 0
        for i in order:
            phi[i] += vt[m | 1 << i] - vt[m]
            m |= 1 << i
    return phi / len(orders)


def naive_core(cf, sab, x, tol=1e-9):
    vt = coalition_table(cf, sab).v_tilde
    n = cf.n_agents
    best = None
    for size in range(1, n + 1):
        for members in itertools.combinations(range(n), size):
            m = mask_of(members)
            d = vt[m] - sum(x[i] for i in members)
            if d > tol and (best is None or d > best[0] + tol or (abs(d - best[0]) <= tol and (size, m) < best[1:])):
                best = (d, size, m)
    if best is not None:
        return False, best[2]
    return abs(sum(x) - vt[-1]) <= tol, None


random_games = st.integers(1, 6).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.floats(-10, 10), min_size=2**n - 1, max_size=2**n - 1),
    )
)


def explicit_game(n, vals):
    return CharacteristicFunction.explicit(n, {m + 1: v for m, v in enumerate(vals)})


# ---- masks -----------------------------------------------------------------------


def test_mask_round_trip():
    assert mask_of([0, 2]) == 0b101
    assert agents_of(0b11011) == (0, 1, 3, 4)
    with pytest.raises(InvalidInputError):
        mask_of([-1])


# ---- values ----------------------------------------------------------------------


def test_reference_game_values():
    assert value(PAIRWISE5, None, [0, 1, 3, 4]) == 30
    assert value(PAIRWISE5, None, PAIRWISE5.grand) == 50
    assert value(PAIRWISE5, sabotage(0.4), PAIRWISE5.grand) == 30
    assert coalition_table(PAIRWISE5, sabotage(0.4)).c[PAIRWISE5.grand] == 20
    explicit = CharacteristicFunction.explicit(5, {(0, 1, 2, 3, 4): 40})
    assert value(explicit, sabotage(0.5), explicit.grand) == 20


def test_singletons_and_clean_coalitions():
    for i in range(5):
        assert value(PAIRWISE5, sabotage(0.4), [i]) == 0
    t = coalition_table(PAIRWISE5, sabotage(0.4))
    for m in range(32):
        if not m & 0b100:
            assert t.c[m] == 0 and t.v_tilde[m] == t.v[m]


def test_value_rejects_outside_agent():
    with pytest.raises(InvalidInputError):
        value(PAIRWISE5, None, [5])
    with pytest.raises(InvalidInputError):
        coalition_table(PAIRWISE5, SabotageModel.fractional([7], 0.1))


def test_size_cap():
    with pytest.raises(SizeError):
        CharacteristicFunction.pairwise(21, 1.0)


def test_explicit_game_rejects_nonzero_empty_set():
    with pytest.raises(InvalidInputError):
        CharacteristicFunction.explicit(2, {0: 1.0})


@given(st.floats(0, 1), st.floats(0, 1))
def test_sabotage_monotone_in_alpha(a, b):
    lo, hi = sorted((a, b))
    assert np.all(coalition_table(PAIRWISE5, sabotage(hi)).v_tilde <= coalition_table(PAIRWISE5, sabotage(lo)).v_tilde)


# ---- trust -----------------------------------------------------------------------


def test_trust_examples():
    assert apply_trust(TrustSchedule(0.4, 0.9), 0) == 0.4
    assert apply_trust(TrustSchedule(0.4), 50) == 0.4
    assert apply_trust(TrustSchedule(0.5, 0.8, 0.0), 3) == pytest.approx(0.256, abs=1e-12)
    assert apply_trust(TrustSchedule(0.5, 0.5, 0.1), 10) == 0.1
    with pytest.raises(InvalidInputError):
        apply_trust(TrustSchedule(0.5), -1)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5), st.integers(0, 200))
def test_trust_non_increasing(a0, rho, amin, k):
    s = TrustSchedule(a0, rho, amin)
    assert apply_trust(s, k + 1) <= apply_trust(s, k)


# ---- shapley ---------------------------------------------------------------------


def test_shapley_symmetric_pairwise():
    np.testing.assert_allclose(shapley(CharacteristicFunction.pairwise(4, 5)), [7.5] * 4, atol=1e-12)


def test_shapley_dummy():
    # agent 2 adds nothing anywhere
    cf = CharacteristicFunction.explicit(3, {(0,): 1, (1,): 2, (0, 1): 6, (0, 2): 1, (1, 2): 2, (0, 1, 2): 6})
    phi = shapley(cf)
    assert abs(phi[2]) <= 1e-12
    np.testing.assert_allclose(phi[:2], [2.5, 3.5], atol=1e-12)


def test_shapley_sabotaged_game_matches_permutations():
    sab = sabotage(0.4)
    phi = shapley(PAIRWISE5, sab)
    np.testing.assert_allclose(phi, permutation_shapley(PAIRWISE5, sab), atol=1e-9)
    assert phi.sum() == pytest.approx(30, abs=1e-9)
    assert phi[2] < phi[0]


@given(random_games)
@settings(max_examples=100, deadline=None)
def test_shapley_matches_permutation_oracle(game):
    cf = explicit_game(*game)
    phi = shapley(cf)
    np.testing.assert_allclose(phi, permutation_shapley(cf, None), atol=1e-9)
    assert abs(phi.sum() - coalition_table(cf).v_tilde[-1]) <= 1e-9


@given(random_games)
@settings(max_examples=100, deadline=None)
def test_shapley_symmetry(game):
    n, vals = game
    if n < 2:
        return
    # make agents 0 and 1 interchangeable by symmetrizing the table
    table = np.concatenate([[0.0], vals])
    swapped = [m ^ 0b11 if (m & 1) != (m >> 1 & 1) else m for m in range(2**n)]
    table = (table + table[swapped]) / 2
    phi = shapley(CharacteristicFunction.explicit(n, dict(enumerate(table))))
    assert abs(phi[0] - phi[1]) <= 1e-9


# ---- core ------------------------------------------------------------------------


def test_core_blocking_witness():
    ok, witness = core_contains(PAIRWISE5, sabotage(0.4), [7.5, 7.5, 1, 7.5, 6.5])
    assert not ok and witness == S1245 == 0b11011


@given(st.floats(1e-8, 30))
def test_core_rejects_any_share_to_saboteur(eps):
    x = [7.5, 7.5, eps, 7.5, 7.5 - eps]
    ok, witness = core_contains(PAIRWISE5, sabotage(0.4), x)
    assert not ok and witness == S1245


def test_core_two_agent_split():
    cf = CharacteristicFunction.explicit(2, {(0, 1): 10})
    assert core_contains(cf, None, [5, 5]) == (True, None)
    assert core_contains(cf, None, [5, 4]) == (False, 0b11)
    assert core_contains(cf, None, [6, 5]) == (False, None)


def test_core_allocation_length():
    with pytest.raises(InvalidInputError):
        core_contains(PAIRWISE5, None, [1, 2, 3])


@given(random_games, st.data())
@settings(max_examples=100, deadline=None)
def test_core_matches_naive_enumeration(game, data):
    cf = explicit_game(*game)
    n = cf.n_agents
    x = data.draw(st.lists(st.integers(-5, 10), min_size=n, max_size=n))
    assert core_contains(cf, None, x) == naive_core(cf, None, x)


# ---- best coalition ---------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.4, 0.5])
def test_best_coalition_excludes_saboteur(alpha):
    assert best_coalition(PAIRWISE5, sabotage(alpha)) == (S1245, 30.0)


def test_best_coalition_no_sabotage_is_grand():
    for n in range(2, 8):
        cf = CharacteristicFunction.pairwise(n, 1.5)
        assert best_coalition(cf) == (cf.grand, 1.5 * math.comb(n, 2))


def test_best_coalition_tie_break():
    cf = CharacteristicFunction.explicit(3, {(2,): 4, (0, 1): 4, (0, 2): 3})
    assert best_coalition(cf) == (0b100, 4.0)
