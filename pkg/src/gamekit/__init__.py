"""Game-theoretic toolkit: normal-form equilibria, Bayesian moderation,
sabotage-aware coalitions and tabular multi-agent Q-learning."""

__version__ = "0.1.0"

from .belief import (
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
from .coalition import (
    CharacteristicFunction,
    SabotageModel,
    TrustSchedule,
    apply_trust,
    best_coalition,
    core_contains,
    shapley,
    value,
)
from .games import (
    NormalFormGame,
    ZeroSumGame,
    best_response,
    discounted_sum,
    expected_utility,
    is_epsilon_nash,
    solve_stackelberg,
    solve_zero_sum,
)
from .labels import LabelOffsetTable, LabelSpace, augment_game, total_payoff
from .marl import LearningConfig, moderation_env, q_update, select_action, train
