"""Scenario files: strict YAML loading, defaults, and domain-object builders.

A scenario file holds ``kind``, ``seed``, an optional ``output`` directory
and exactly one payload section named after the kind.  Players and agents
are numbered from 1 in scenario files.  See ``configs/`` for one sample per
kind and README.md for the full schema.
"""

from __future__ import annotations

import copy
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any

import numpy as np
import yaml

from .belief import Action, ModerationLabels, ModerationScenario, PayoffTable, SignalModel, UserType
from .coalition import CharacteristicFunction, SabotageModel, TrustSchedule, apply_trust, mask_of
from .errors import ConfigError, GameKitError
from .games import NormalFormGame, ZeroSumGame, check_profile
from .labels import LabelOffsetTable, LabelSpace
from .marl import LearningConfig

KINDS = ("normal_form", "zero_sum", "stackelberg", "moderation", "coalition", "qlearning")
SWEEPABLE = ("arrival_p", "prior_beta", "rounds", "signals_per_user", "explore")


@dataclass
class ScenarioConfig:
    kind: str
    seed: int
    payload: dict[str, Any]
    output: str = ""

    def __post_init__(self):
        if not self.output:
            self.output = self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "output": self.output, self.kind: copy.deepcopy(self.payload)}

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


class _Fields:
    """Pops keys from one mapping, tracking the dotted path for errors."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ConfigError("expected a mapping", path=path or None)
        self.data = dict(data)
        self.path = path

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, default=...):
        if key in self.data:
            return self.data.pop(key)
        if default is ...:
            raise ConfigError(f"{key} required", path=self.sub(key))
        return copy.deepcopy(default)

    def real(self, key, default=..., lo=None, hi=None, sweep=False):
        raw = self.take(key, default)
        if sweep and isinstance(raw, list):
            if not raw:
                raise ConfigError("sweep list is empty", path=self.sub(key))
            return [_real(x, f"{self.sub(key)}[{i}]", lo, hi) for i, x in enumerate(raw)]
        return _real(raw, self.sub(key), lo, hi)

    def integer(self, key, default=..., lo=None, hi=None, sweep=False):
        raw = self.take(key, default)
        if sweep and isinstance(raw, list):
            if not raw:
                raise ConfigError("sweep list is empty", path=self.sub(key))
            return [_int(x, f"{self.sub(key)}[{i}]", lo, hi) for i, x in enumerate(raw)]
        return _int(raw, self.sub(key), lo, hi)

    def finish(self):
        if self.data:
            key = sorted(map(str, self.data))[0]
            raise ConfigError(f"unknown field '{key}'", path=self.sub(key))


def _real(x, path, lo=None, hi=None) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"expected a number, got {x!r}", path=path)
    x = float(x)
    if not np.isfinite(x):
        raise ConfigError("must be finite", path=path)
    if lo is not None and x < lo or hi is not None and x > hi:
        raise ConfigError(f"{x} outside [{lo}, {hi}]", path=path)
    return x


def _int(x, path, lo=None, hi=None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"expected an integer, got {x!r}", path=path)
    if lo is not None and x < lo or hi is not None and x > hi:
        raise ConfigError(f"{x} outside [{lo}, {hi}]", path=path)
    return x


def _real_array(x, path) -> list:
    """Nested list of numbers, normalized to floats."""
    if isinstance(x, list):
        return [_real_array(v, f"{path}[{i}]") for i, v in enumerate(x)]
    return _real(x, path)


def _agents(x, path, n=None) -> list[int]:
    if not isinstance(x, list):
        raise ConfigError("expected a list of agent numbers", path=path)
    out = [_int(a, f"{path}[{i}]", 1, n) for i, a in enumerate(x)]
    if len(set(out)) != len(out):
        raise ConfigError("duplicate agent", path=path)
    return sorted(out)


@contextmanager
def _guard(path):
    """Re-raise domain validation errors as config errors at ``path``."""
    try:
        yield
    except ConfigError:
        raise
    except GameKitError as exc:
        raise ConfigError(str(exc), path=path) from exc


# ---- per-kind normalization -------------------------------------------------


def _norm_game(f: _Fields, n_players=None) -> dict:
    payoffs = _real_array(f.take("payoffs"), f.sub("payoffs"))
    if not isinstance(payoffs, list) or not payoffs:
        raise ConfigError("payoffs must be a non-empty list of per-player tensors", path=f.sub("payoffs"))
    with _guard(f.sub("payoffs")):
        game = NormalFormGame(np.array(payoffs, dtype=float))
    if n_players is not None and game.num_players != n_players:
        raise ConfigError(f"expected {n_players} players, got {game.num_players}", path=f.sub("payoffs"))
    return {"payoffs": payoffs}


def _norm_normal_form(f: _Fields) -> dict:
    out = _norm_game(f)
    game = build_game(out)
    profile = f.take("profile", None)
    if profile is not None:
        profile = _real_array(profile, f.sub("profile"))
        with _guard(f.sub("profile")):
            check_profile(game, profile)
    out["profile"] = profile
    out["epsilon"] = f.real("epsilon", 0.0, lo=0.0)
    return out


def _norm_zero_sum(f: _Fields) -> dict:
    matrix = _real_array(f.take("matrix"), f.sub("matrix"))
    with _guard(f.sub("matrix")):
        ZeroSumGame(np.array(matrix, dtype=float))
    tol = f.real("tol", 1e-3)
    if tol <= 0:
        raise ConfigError("tol must be positive", path=f.sub("tol"))
    return {"matrix": matrix, "tol": tol, "max_iter": f.integer("max_iter", 10**9, lo=1)}


def _norm_stackelberg(f: _Fields) -> dict:
    out = _norm_game(f, n_players=2)
    res = f.real("grid_resolution", 0.01)
    if not 0 < res <= 0.5:
        raise ConfigError("grid_resolution must lie in (0, 0.5]", path=f.sub("grid_resolution"))
    out["grid_resolution"] = res
    out["leader"] = f.integer("leader", 1, lo=1, hi=2)
    return out


def _norm_labels(f: _Fields) -> dict:
    out = {
        "moderator": [str(x) for x in f.take("moderator", ["none", "apology"])],
        "user": [str(x) for x in f.take("user", ["none", "benign_request"])],
    }
    ml = _Fields(f.take("moderator_label", {"refuse": "apology", "filter": "none", "allow": "none"}), f.sub("moderator_label"))
    out["moderator_label"] = {a.name.lower(): str(ml.take(a.name.lower())) for a in Action}
    ml.finish()
    ul = _Fields(f.take("user_label", {"legitimate": "none", "adversarial": "benign_request"}), f.sub("user_label"))
    out["user_label"] = {t.name.lower(): str(ul.take(t.name.lower())) for t in UserType}
    ul.finish()
    offsets = f.take("offsets", [{"player": "user", "labels": ["apology", "none"], "value": 1.0}])
    if not isinstance(offsets, list):
        raise ConfigError("expected a list", path=f.sub("offsets"))
    norm = []
    for i, entry in enumerate(offsets):
        e = _Fields(entry, f"{f.sub('offsets')}[{i}]")
        player = e.take("player")
        if player not in ("moderator", "user"):
            raise ConfigError("player must be 'moderator' or 'user'", path=e.sub("player"))
        labels = e.take("labels")
        if not isinstance(labels, list) or len(labels) != 2:
            raise ConfigError("labels must be [moderator_label, user_label]", path=e.sub("labels"))
        norm.append({"player": player, "labels": [str(x) for x in labels], "value": e.real("value")})
        e.finish()
    out["offsets"] = norm
    f.finish()
    with _guard(f.path):
        build_labels(out)
    return out


def _norm_moderation(f: _Fields, allow_sweep=True) -> dict:
    out = {
        "arrival_p": f.real("arrival_p", 0.15, 0.0, 1.0, sweep=allow_sweep),
        "prior_beta": f.real("prior_beta", 0.2, 0.0, 1.0, sweep=allow_sweep),
        "rounds": f.integer("rounds", 10_000, lo=1, sweep=allow_sweep),
        "signals_per_user": f.integer("signals_per_user", 3, lo=1, sweep=allow_sweep),
        "explore": f.real("explore", 0.0, 0.0, 1.0, sweep=allow_sweep),
    }
    sm = _Fields(f.take("signal_model", {}), f.sub("signal_model"))
    out["signal_model"] = {"q_adv": sm.real("q_adv", 0.7, 0.0, 1.0), "q_leg": sm.real("q_leg", 0.2, 0.0, 1.0)}
    sm.finish()
    pt = _Fields(f.take("payoff_table", {}), f.sub("payoff_table"))
    default = PayoffTable()
    out["payoff_table"] = {
        "moderator": _real_array(pt.take("moderator", default.moderator.tolist()), pt.sub("moderator")),
        "user": _real_array(pt.take("user", default.user.tolist()), pt.sub("user")),
    }
    pt.finish()
    with _guard(f.sub("payoff_table")):
        build_payoff_table(out["payoff_table"])
    out["labels"] = _norm_labels(_Fields(f.take("labels", {}), f.sub("labels")))
    if allow_sweep:
        out["window"] = f.integer("window", 1000, lo=1)
        swept = [k for k in SWEEPABLE if isinstance(out[k], list)]
        if len(swept) > 1:
            raise ConfigError(f"only one field may be swept, got {swept}", path=f.path)
        for entry in expand_sweep(out):
            if entry["window"] > entry["rounds"]:
                raise ConfigError("window exceeds rounds", path=f.sub("window"))
    f.finish()
    return out


def _norm_coalition(f: _Fields) -> dict:
    n = f.integer("n_agents", lo=1, hi=20)
    out: dict[str, Any] = {"n_agents": n}
    has_w, has_v = "pairwise_weight" in f.data, "values" in f.data
    if has_w == has_v:
        raise ConfigError("give exactly one of pairwise_weight or values", path=f.path)
    if has_w:
        out["pairwise_weight"] = f.real("pairwise_weight")
    else:
        vals = f.take("values")
        if not isinstance(vals, list):
            raise ConfigError("expected a list of {agents, value}", path=f.sub("values"))
        norm = []
        for i, entry in enumerate(vals):
            e = _Fields(entry, f"{f.sub('values')}[{i}]")
            norm.append({"agents": _agents(e.take("agents"), e.sub("agents"), n), "value": e.real("value")})
            e.finish()
        out["values"] = norm
    out["malicious"] = _agents(f.take("malicious", []), f.sub("malicious"), n)
    modes = [k for k in ("alpha", "costs", "trust") if k in f.data]
    if len(modes) > 1:
        raise ConfigError(f"give at most one of alpha, costs, trust; got {modes}", path=f.path)
    if modes and not out["malicious"] and modes[0] != "costs":
        raise ConfigError("fractional sabotage needs a malicious set", path=f.sub("malicious"))
    if "alpha" in f.data:
        out["alpha"] = f.real("alpha", lo=0.0, hi=1.0)
    elif "costs" in f.data:
        costs = f.take("costs")
        if not isinstance(costs, list):
            raise ConfigError("expected a list of {agents, cost}", path=f.sub("costs"))
        norm = []
        for i, entry in enumerate(costs):
            e = _Fields(entry, f"{f.sub('costs')}[{i}]")
            norm.append({"agents": _agents(e.take("agents"), e.sub("agents"), n), "cost": e.real("cost", lo=0.0)})
            e.finish()
        out["costs"] = norm
    elif "trust" in f.data:
        t = _Fields(f.take("trust"), f.sub("trust"))
        out["trust"] = {
            "alpha0": t.real("alpha0", lo=0.0, hi=1.0),
            "rho": t.real("rho", 1.0, 0.0, 1.0),
            "alpha_min": t.real("alpha_min", 0.0, lo=0.0),
            "verified_rounds": t.integer("verified_rounds", 0, lo=0),
        }
        t.finish()
    alloc = f.take("allocation", None)
    if alloc is not None:
        alloc = _real_array(alloc, f.sub("allocation"))
        if not isinstance(alloc, list) or len(alloc) != n:
            raise ConfigError(f"allocation needs {n} entries", path=f.sub("allocation"))
    out["allocation"] = alloc
    with _guard(f.path):
        build_coalition(out)
    return out


def _norm_qlearning(f: _Fields) -> dict:
    env = f.take("env", "moderation")
    out: dict[str, Any] = {"env": env}
    if env == "moderation":
        out["belief_buckets"] = f.integer("belief_buckets", 20, lo=2)
        out["moderation"] = _norm_moderation(_Fields(f.take("moderation", {}), f.sub("moderation")), allow_sweep=False)
    elif env == "matrix_game":
        out.update(_norm_game(f))
    else:
        raise ConfigError("env must be 'moderation' or 'matrix_game'", path=f.sub("env"))
    d = LearningConfig()
    out["episodes"] = f.integer("episodes", d.episodes, lo=1)
    out["learning_rate"] = f.real("learning_rate", d.learning_rate)
    out["discount"] = f.real("discount", d.discount)
    out["epsilon"] = f.real("epsilon", d.epsilon)
    out["epsilon_decay"] = f.real("epsilon_decay", d.epsilon_decay)
    out["epsilon_min"] = f.real("epsilon_min", d.epsilon_min)
    out["max_steps"] = f.integer("max_steps", d.max_steps, lo=1)
    with _guard(f.path):
        build_learning_config(out, 0)
    return out


_NORMALIZERS = {
    "normal_form": _norm_normal_form,
    "zero_sum": _norm_zero_sum,
    "stackelberg": _norm_stackelberg,
    "moderation": _norm_moderation,
    "coalition": _norm_coalition,
    "qlearning": _norm_qlearning,
}


def config_from_dict(data) -> ScenarioConfig:
    top = _Fields(data, "")
    kind = top.take("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}", path="kind")
    if "seed" not in top.data:
        raise ConfigError("seed required", path="seed")
    seed = top.integer("seed", lo=0, hi=2**64 - 1)
    output = top.take("output", kind)
    if not isinstance(output, str) or not output:
        raise ConfigError("output must be a non-empty path", path="output")
    others = [k for k in KINDS if k in top.data and k != kind]
    if others:
        raise ConfigError(f"payload for '{others[0]}' present in a '{kind}' scenario", path=others[0])
    pf = _Fields(top.take(kind, {}), kind)
    payload = _NORMALIZERS[kind](pf)
    pf.finish()
    top.finish()
    return ScenarioConfig(kind, seed, payload, output)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return loads_config(text)


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML parse error: {exc.problem or exc}", line=line) from exc
    if data is None:
        raise ConfigError("empty scenario file")
    return config_from_dict(data)


# ---- builders ---------------------------------------------------------------


def build_game(payload: dict) -> NormalFormGame:
    return NormalFormGame(np.array(payload["payoffs"], dtype=float))


def build_payoff_table(pt: dict) -> PayoffTable:
    return PayoffTable(np.array(pt["moderator"], dtype=float), np.array(pt["user"], dtype=float))


def build_labels(lab: dict) -> ModerationLabels:
    space = LabelSpace((tuple(lab["moderator"]), tuple(lab["user"])))
    offsets: dict = {}
    for e in lab["offsets"]:
        key = (0 if e["player"] == "moderator" else 1, tuple(e["labels"]))
        offsets[key] = offsets.get(key, 0.0) + e["value"]
    return ModerationLabels(
        LabelOffsetTable(space, offsets),
        tuple(lab["moderator_label"][a.name.lower()] for a in Action),
        tuple(lab["user_label"][t.name.lower()] for t in UserType),
    )


def expand_sweep(payload: dict) -> list[dict]:
    """One moderation payload per value of the (at most one) swept field."""
    for key in SWEEPABLE:
        if isinstance(payload.get(key), list):
            return [{**payload, key: v} for v in payload[key]]
    return [payload]


def build_scenario(payload: dict, seed: int) -> ModerationScenario:
    return ModerationScenario(
        payoff_table=build_payoff_table(payload["payoff_table"]),
        arrival_p=payload["arrival_p"],
        prior_beta=payload["prior_beta"],
        signal_model=SignalModel(**payload["signal_model"]),
        labels=build_labels(payload["labels"]),
        rounds=payload["rounds"],
        signals_per_user=payload["signals_per_user"],
        explore=payload["explore"],
        seed=seed,
    )


def build_coalition(payload: dict) -> tuple[CharacteristicFunction, SabotageModel | None, float | None]:
    """Characteristic function, sabotage model and the effective alpha (if fractional)."""
    n = payload["n_agents"]
    zero_based = lambda agents: [a - 1 for a in agents]  # noqa: E731
    if "pairwise_weight" in payload:
        cf = CharacteristicFunction.pairwise(n, payload["pairwise_weight"])
    else:
        cf = CharacteristicFunction.explicit(
            n, {mask_of(zero_based(e["agents"])): e["value"] for e in payload["values"]}
        )
    malicious = mask_of(zero_based(payload["malicious"]))
    alpha = None
    sab = None
    if "alpha" in payload:
        alpha = payload["alpha"]
    elif "trust" in payload:
        t = payload["trust"]
        alpha = apply_trust(TrustSchedule(t["alpha0"], t["rho"], t["alpha_min"]), t["verified_rounds"])
    if alpha is not None:
        sab = SabotageModel(malicious, alpha=alpha)
    elif "costs" in payload:
        sab = SabotageModel(malicious, costs={mask_of(zero_based(e["agents"])): e["cost"] for e in payload["costs"]})
    return cf, sab, alpha


def build_learning_config(payload: dict, seed: int) -> LearningConfig:
    return LearningConfig(
        episodes=payload["episodes"],
        learning_rate=payload["learning_rate"],
        discount=payload["discount"],
        epsilon=payload["epsilon"],
        epsilon_decay=payload["epsilon_decay"],
        epsilon_min=payload["epsilon_min"],
        max_steps=payload["max_steps"],
        seed=seed,
    )
