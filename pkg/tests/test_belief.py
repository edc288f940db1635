from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamekit.belief import (
    BELIEF_CEIL,
    BELIEF_FLOOR,
    Action,
    ModerationScenario,
    PayoffTable,
    SignalModel,
    UserType,
    action_frequencies,
    bayes_update,
    belief_best_response,
    expected_action_values,
    simulate_moderation,
)
from gamekit.errors import ConfigError, DegenerateLikelihoodError, InvalidInputError

DEFAULT_M = [[2, 1, 3], [3, -1, -6]]
DEFAULT_U = [[0, 2, 5], [-2, 1, 6]]


def exact_action_probs(p, prior, q_adv, q_leg, n, table=DEFAULT_M):
    """Stationary (Refuse, Filter, Allow) probabilities by enumerating the
    number of suspicious signals, in exact rational arithmetic."""
    p, prior, q_adv, q_leg = (Fraction(str(x)) for x in (p, prior, q_adv, q_leg))
    probs = [Fraction(0)] * 3
    for k in range(n + 1):
        odds = prior / (1 - prior) * (q_adv / q_leg) ** k * ((1 - q_adv) / (1 - q_leg)) ** (n - k)
        beta = odds / (1 + odds)
        values = [beta * table[1][a] + (1 - beta) * table[0][a] for a in range(3)]
        act = values.index(max(values))
        pk = (1 - p) * comb(n, k) * q_leg**k * (1 - q_leg) ** (n - k) + p * comb(n, k) * q_adv**k * (1 - q_adv) ** (n - k)
        probs[act] += pk
    return probs


def test_default_payoff_table():
    t = PayoffTable()
    np.testing.assert_array_equal(t.moderator, DEFAULT_M)
    np.testing.assert_array_equal(t.user, DEFAULT_U)
    assert ModerationScenario().payoff_table == PayoffTable()


# ---- bayes_update --------------------------------------------------------------


def test_bayes_examples():
    m = SignalModel(0.7, 0.2)
    assert bayes_update(0.2, True, m) == pytest.approx(0.14 / 0.30, abs=1e-9)
    assert bayes_update(0.5, False, m) == pytest.approx(0.3 / 1.1, abs=1e-9)
    same = SignalModel(0.4, 0.4)
    assert bayes_update(0.37, True, same) == pytest.approx(0.37, abs=1e-15)
    assert bayes_update(0.37, False, same) == pytest.approx(0.37, abs=1e-15)


def test_bayes_clamps():
    m = SignalModel(1.0, 0.0)
    assert bayes_update(0.2, True, m) == BELIEF_CEIL
    assert bayes_update(0.2, False, m) == BELIEF_FLOOR


def test_bayes_degenerate_likelihood():
    with pytest.raises(DegenerateLikelihoodError):
        bayes_update(0.3, True, SignalModel(0.0, 0.0))
    with pytest.raises(DegenerateLikelihoodError):
        bayes_update(0.3, False, SignalModel(1.0, 1.0))


def test_signal_model_range():
    with pytest.raises(InvalidInputError):
        SignalModel(1.2, 0.1)


interior = st.floats(0.1, 0.9)
rates = st.floats(0.25, 0.75)


@given(interior, rates, rates, st.lists(st.booleans(), min_size=1, max_size=10), st.randoms())
@settings(max_examples=200)
def test_order_invariance_and_batch(beta, qa, ql, signals, rnd):
    m = SignalModel(qa, ql)
    shuffled = list(signals)
    rnd.shuffle(shuffled)
    seq = [beta, beta]
    for order, idx in ((signals, 0), (shuffled, 1)):
        for s in order:
            seq[idx] = bayes_update(seq[idx], s, m)
    la = np.prod([qa if s else 1 - qa for s in signals])
    ll = np.prod([ql if s else 1 - ql for s in signals])
    batch = beta * la / (beta * la + (1 - beta) * ll)
    assert abs(seq[0] - seq[1]) <= 1e-12
    assert abs(seq[0] - batch) <= 1e-12


@given(st.floats(0, 1), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_monotone_in_signal(beta, qa, ql):
    m = SignalModel(max(qa, ql), min(qa, ql))
    assert bayes_update(beta, True, m) >= min(max(beta, BELIEF_FLOOR), BELIEF_CEIL) - 1e-15
    assert bayes_update(beta, False, m) <= max(min(beta, BELIEF_CEIL), BELIEF_FLOOR) + 1e-15


# ---- expected values and best response ------------------------------------------


def test_expected_action_values_examples():
    np.testing.assert_array_equal(expected_action_values(0.0), [2, 1, 3])
    np.testing.assert_array_equal(expected_action_values(1.0), [3, -1, -6])
    np.testing.assert_allclose(expected_action_values(0.15), [2.15, 0.70, 1.65], atol=1e-12)


@given(st.floats(0, 1))
def test_expected_values_are_linear_in_belief(beta):
    np.testing.assert_allclose(expected_action_values(beta), [2 + beta, 1 - 2 * beta, 3 - 9 * beta], atol=1e-12)


def test_best_response_examples():
    assert belief_best_response(0.05) == Action.ALLOW
    assert belief_best_response(0.15) == Action.REFUSE
    assert belief_best_response(0.1) == Action.REFUSE


def test_filter_never_chosen_and_threshold():
    for k in range(1001):
        beta = Fraction(k, 1000)
        refuse = 2 + beta
        filt = 1 - 2 * beta
        assert refuse > filt
        b = k / 1000
        assert belief_best_response(b) != Action.FILTER
        assert (belief_best_response(b) == Action.ALLOW) == (beta < Fraction(1, 10))


# ---- simulation -----------------------------------------------------------------


def test_all_legitimate_uninformative_allows():
    sc = ModerationScenario(arrival_p=0.0, prior_beta=0.0, signal_model=SignalModel(0.0, 0.0), rounds=200, seed=5)
    tr = simulate_moderation(sc)
    assert np.all(tr.action == Action.ALLOW)
    assert np.all(tr.m_payoff == 3) and np.all(tr.u_payoff == 5)
    assert np.all(tr.belief_post == BELIEF_FLOOR)


def test_all_adversarial_informative_refuses():
    sc = ModerationScenario(arrival_p=1.0, signal_model=SignalModel(1.0, 0.0), signals_per_user=1, rounds=200, seed=5)
    tr = simulate_moderation(sc)
    assert np.all(tr.action == Action.REFUSE)
    assert np.all(tr.m_payoff == 3)
    assert np.all(tr.belief_post == BELIEF_CEIL)
    assert np.all(tr.user_type == UserType.ADVERSARIAL)


def test_apology_label_reaches_refused_legitimate_users():
    # force refusals of legitimate users with a high prior
    sc = ModerationScenario(arrival_p=0.0, prior_beta=0.9, signal_model=SignalModel(0.5, 0.5), rounds=50, seed=1)
    tr = simulate_moderation(sc)
    assert np.all(tr.action == Action.REFUSE)
    assert np.all(tr.u_payoff == 1.0)


@pytest.mark.parametrize("p", [0.05, 0.15, 0.5])
def test_simulated_frequencies_match_exact_oracle(p):
    # 10 seeds x 10,000 rounds; binomial sd of a pooled frequency is < 0.002
    expected = [float(x) for x in exact_action_probs(p, 0.2, 0.7, 0.2, 3)]
    actions = np.concatenate([simulate_moderation(ModerationScenario(arrival_p=p, seed=s)).action for s in range(10)])
    freq = np.bincount(actions, minlength=3) / len(actions)
    np.testing.assert_allclose(freq, expected, atol=0.01)


def test_default_scenario_oracle_values():
    refuse, filt, allow = exact_action_probs(0.15, 0.2, 0.7, 0.2, 3)
    assert allow == Fraction(85, 100) * Fraction(512, 1000) + Fraction(15, 100) * Fraction(27, 1000)
    assert filt == 0
    assert refuse + allow == 1


def test_determinism_and_seed_sensitivity():
    a = simulate_moderation(ModerationScenario(seed=123, rounds=2000))
    b = simulate_moderation(ModerationScenario(seed=123, rounds=2000))
    c = simulate_moderation(ModerationScenario(seed=124, rounds=2000))
    for name in ("user_type", "signal_count", "belief_post", "action", "m_payoff", "u_payoff"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert a.user_type.tobytes() != c.user_type.tobytes()


def test_exploration_spreads_actions():
    tr = simulate_moderation(ModerationScenario(explore=1.0, rounds=3000, seed=3))
    freq = np.bincount(tr.action, minlength=3) / len(tr)
    np.testing.assert_allclose(freq, [1 / 3] * 3, atol=0.04)


@pytest.mark.parametrize(
    "kwargs", [{"arrival_p": 1.5}, {"prior_beta": -0.1}, {"rounds": 0}, {"signals_per_user": 0}, {"explore": 2.0}]
)
def test_invalid_scenario_is_config_error(kwargs):
    with pytest.raises(ConfigError):
        ModerationScenario(**kwargs)


# ---- frequencies ------------------------------------------------------------------


def test_frequency_examples():
    rows = action_frequencies([Action.ALLOW] * 100, 10)
    assert rows.shape == (10, 4)
    np.testing.assert_array_equal(rows[:, 0], np.arange(10, 101, 10))
    np.testing.assert_array_equal(rows[:, 1:], np.tile([0, 0, 1], (10, 1)))
    alt = [Action.REFUSE, Action.FILTER] * 20
    np.testing.assert_array_equal(action_frequencies(alt, 2)[:, 1:], np.tile([0.5, 0.5, 0], (20, 1)))


def test_frequency_errors():
    with pytest.raises(InvalidInputError):
        action_frequencies([0, 1, 2], 0)
    with pytest.raises(InvalidInputError):
        action_frequencies([0, 1, 2], 4)


@given(st.lists(st.integers(0, 2), min_size=1, max_size=300), st.integers(1, 300))
def test_frequency_rows_sum_to_one(actions, window):
    window = min(window, len(actions))
    rows = action_frequencies(actions, window)
    assert np.all(np.abs(rows[:, 1:].sum(axis=1) - 1) <= 1e-12)
    assert rows[-1, 0] == len(actions)


def test_default_trace_buckets():
    tr = simulate_moderation(ModerationScenario(seed=9))
    rows = action_frequencies(tr, 1000)
    np.testing.assert_array_equal(rows[:, 0], np.arange(1000, 10001, 1000))
    expected = [float(x) for x in exact_action_probs(0.15, 0.2, 0.7, 0.2, 3)]
    # a 1,000-round bucket has sd ~0.016
    np.testing.assert_allclose(rows[-1, 1:], expected, atol=0.065)
