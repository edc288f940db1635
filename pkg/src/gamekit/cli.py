"""Command-line entry point: ``gamekit run|validate|version``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .belief import Action, action_frequencies, simulate_moderation
from .coalition import agents_of, best_coalition, coalition_table, core_contains, shapley
from .config import (
    ScenarioConfig,
    build_coalition,
    build_game,
    build_learning_config,
    build_scenario,
    expand_sweep,
    load_config,
)
from .errors import ConfigError, ConvergenceError
from .games import (
    ZeroSumGame,
    deviation_gains,
    expected_utility,
    pure,
    solve_stackelberg,
    solve_zero_sum,
)
from .io import emit_csv
from .marl import MatrixGameEnv, moderation_env, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

TRACE_COLUMNS = ("round", "user_type", "signal_count", "belief_post", "action", "m_payoff", "u_payoff")
FREQ_COLUMNS = ("round", "freq_refuse", "freq_filter", "freq_allow")
COALITION_COLUMNS = ("subset_mask", "size", "v", "c", "v_tilde")
ALLOCATION_COLUMNS = ("agent", "shapley")
CURVE_COLUMNS = ("episode", "reward_sum", "epsilon")
POLICY_COLUMNS = ("agent", "state", "action", "q_value", "greedy")
STRATEGY_COLUMNS = ("player", "action", "prob")


@dataclass
class RunReport:
    config: ScenarioConfig
    summary: dict
    lines: list[str]
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "config": self.config.to_dict(),
                "summary": self.summary,
                "outputs": self.outputs,
                "duration_s": self.duration_s,
            },
            indent=2,
            default=_jsonable,
        )


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x)}")


def _subset_label(mask: int) -> str:
    return "{" + ",".join(str(a + 1) for a in agents_of(mask)) + "}"


def _strategy_records(strategies):
    for p, s in enumerate(strategies):
        for a, prob in enumerate(s):
            yield p + 1, a + 1, float(prob)


# ---- per-kind runners: each returns (summary, lines, outputs) ----------------


def _run_normal_form(cfg: ScenarioConfig, out: str):
    p = cfg.payload
    game = build_game(p)
    n = game.num_players
    rows = []
    nash = []
    for prof in game.pure_profiles():
        strategies = [pure(a, k) for a, k in zip(prof, game.action_counts)]
        gains = deviation_gains(game, strategies)
        ok = bool(np.all(gains <= p["epsilon"]))
        if ok:
            nash.append([a + 1 for a in prof])
        rows.append(("-".join(str(a + 1) for a in prof), *game.payoffs[(slice(None), *prof)], float(gains.max()), ok))
    cols = ("profile", *(f"payoff_{i + 1}" for i in range(n)), "max_gain", "nash")
    outputs = [emit_csv(rows, cols, os.path.join(out, "profiles.csv"))]
    summary = {"pure_nash": nash}
    lines = [f"pure {p['epsilon']:g}-Nash profiles: " + (", ".join("-".join(map(str, x)) for x in nash) or "none")]
    if p["profile"] is not None:
        gains = deviation_gains(game, p["profile"])
        utils = [expected_utility(game, p["profile"], i) for i in range(n)]
        summary.update(expected_utility=utils, deviation_gain=gains.tolist(), is_nash=bool(np.all(gains <= p["epsilon"])))
        lines.append("profile expected utilities: " + ", ".join(f"{u:.4f}" for u in utils))
        lines.append(f"profile is {p['epsilon']:g}-Nash: {summary['is_nash']}")
    return summary, lines, outputs


def _run_zero_sum(cfg: ScenarioConfig, out: str):
    p = cfg.payload
    game = ZeroSumGame(np.array(p["matrix"]))
    try:
        sol = solve_zero_sum(game, p["tol"], p["max_iter"])
    except ConvergenceError as exc:
        sol = exc.result
        emit_csv(_strategy_records([sol.row_strategy, sol.col_strategy]), STRATEGY_COLUMNS, os.path.join(out, "strategies.csv"))
        raise
    outputs = [emit_csv(_strategy_records([sol.row_strategy, sol.col_strategy]), STRATEGY_COLUMNS, os.path.join(out, "strategies.csv"))]
    summary = {
        "value": sol.value,
        "lower": sol.lower,
        "upper": sol.upper,
        "iterations": sol.iterations,
        "row_strategy": sol.row_strategy,
        "col_strategy": sol.col_strategy,
    }
    lines = [
        f"value {round(sol.value, 4) + 0.0:.4f} ± {p['tol']:g} (bounds [{sol.lower:.6f}, {sol.upper:.6f}], {sol.iterations} iterations)",
        "row strategy: " + ", ".join(f"{x:.4f}" for x in sol.row_strategy),
        "col strategy: " + ", ".join(f"{x:.4f}" for x in sol.col_strategy),
    ]
    return summary, lines, outputs


def _run_stackelberg(cfg: ScenarioConfig, out: str):
    p = cfg.payload
    sol = solve_stackelberg(build_game(p), p["grid_resolution"], leader=p["leader"] - 1)
    outputs = [
        emit_csv(
            ((p["leader"], a + 1, float(x)) for a, x in enumerate(sol.leader_strategy)),
            STRATEGY_COLUMNS,
            os.path.join(out, "leader_strategy.csv"),
        )
    ]
    summary = {
        "leader_strategy": sol.leader_strategy,
        "follower_action": sol.follower_action + 1,
        "leader_value": sol.leader_value,
        "follower_value": sol.follower_value,
    }
    lines = [
        "leader commits to: " + ", ".join(f"{x:.4f}" for x in sol.leader_strategy),
        f"follower replies with action {sol.follower_action + 1}",
        f"leader value {sol.leader_value:.4f}, follower value {sol.follower_value:.4f}",
    ]
    return summary, lines, outputs


def _run_moderation(cfg: ScenarioConfig, out: str):
    entries = expand_sweep(cfg.payload)
    indexed = len(entries) > 1
    outputs, results, lines = [], [], []
    header = f"{'entry':>5} {'arrival_p':>9} {'refuse':>8} {'filter':>8} {'allow':>8} {'mean m_payoff':>14}"
    lines.append(header)
    for k, payload in enumerate(entries):
        suffix = f"_{k:03d}" if indexed else ""
        trace = simulate_moderation(build_scenario(payload, cfg.seed))
        freqs = action_frequencies(trace, payload["window"])
        outputs.append(emit_csv(trace.records(), TRACE_COLUMNS, os.path.join(out, f"trace{suffix}.csv")))
        outputs.append(
            emit_csv(
                ((int(r[0]), *map(float, r[1:])) for r in freqs),
                FREQ_COLUMNS,
                os.path.join(out, f"frequencies{suffix}.csv"),
            )
        )
        overall = np.bincount(trace.action, minlength=len(Action)) / len(trace)
        res = {
            "entry": k,
            "arrival_p": payload["arrival_p"],
            "overall_frequencies": dict(zip(("refuse", "filter", "allow"), overall.tolist())),
            "final_bucket_frequencies": dict(zip(("refuse", "filter", "allow"), freqs[-1, 1:].tolist())),
            "mean_moderator_payoff": float(trace.m_payoff.mean()),
            "mean_user_payoff": float(trace.u_payoff.mean()),
        }
        results.append(res)
        fb = freqs[-1, 1:]
        lines.append(
            f"{k:>5} {payload['arrival_p']:>9.3f} {fb[0]:>8.3f} {fb[1]:>8.3f} {fb[2]:>8.3f} {res['mean_moderator_payoff']:>14.4f}"
        )
    lines.append("(frequencies are for the final bucket)")
    return {"entries": results}, lines, outputs


def _run_coalition(cfg: ScenarioConfig, out: str):
    p = cfg.payload
    cf, sab, alpha = build_coalition(p)
    table = coalition_table(cf, sab)
    phi = shapley(cf, sab)
    best, best_val = best_coalition(cf, sab)
    in_core, witness = core_contains(cf, sab, phi)
    outputs = [
        emit_csv(table.records(), COALITION_COLUMNS, os.path.join(out, "coalitions.csv")),
        emit_csv(((i + 1, float(x)) for i, x in enumerate(phi)), ALLOCATION_COLUMNS, os.path.join(out, "allocation.csv")),
    ]
    summary = {
        "best_coalition": [a + 1 for a in agents_of(best)],
        "best_value": best_val,
        "grand_value": float(table.v_tilde[cf.grand]),
        "alpha": alpha,
        "shapley": phi,
        "shapley_in_core": in_core,
        "shapley_blocked_by": None if witness is None else [a + 1 for a in agents_of(witness)],
    }
    lines = [
        f"best coalition {_subset_label(best)} with value {best_val:g}",
        f"grand coalition value {summary['grand_value']:g}" + (f" (alpha={alpha:g})" if alpha is not None else ""),
        "Shapley: " + ", ".join(f"{x:.4f}" for x in phi),
        f"Shapley allocation in core: {in_core}" + ("" if witness is None else f" (blocked by {_subset_label(witness)})"),
    ]
    if p["allocation"] is not None:
        ok, w = core_contains(cf, sab, p["allocation"])
        summary["allocation_in_core"] = ok
        summary["allocation_blocked_by"] = None if w is None else [a + 1 for a in agents_of(w)]
        lines.append(f"given allocation in core: {ok}" + ("" if w is None else f" (blocked by {_subset_label(w)})"))
    return summary, lines, outputs


def _run_qlearning(cfg: ScenarioConfig, out: str):
    p = cfg.payload
    if p["env"] == "moderation":
        env = moderation_env(build_scenario(p["moderation"], cfg.seed), p["belief_buckets"])
    else:
        env = MatrixGameEnv(build_game(p))
    result = train(env, build_learning_config(p, cfg.seed))
    policy_rows = []
    for i, q in enumerate(result.q_tables):
        greedy = result.greedy_policy(i)
        for s in range(q.shape[0]):
            for a in range(q.shape[1]):
                policy_rows.append((i + 1, s, a + 1, float(q[s, a]), bool(greedy[s] == a)))
    outputs = [
        emit_csv(result.curve_records(), CURVE_COLUMNS, os.path.join(out, "curve.csv")),
        emit_csv(policy_rows, POLICY_COLUMNS, os.path.join(out, "policy.csv")),
    ]
    tail = result.rewards[-min(1000, len(result.rewards)) :].sum(axis=1)
    summary = {
        "greedy_policy": [(result.greedy_policy(i) + 1).tolist() for i in range(len(result.q_tables))],
        "mean_reward_last_1000": float(tail.mean()),
        "truncated_episodes": int(result.truncated.sum()),
    }
    if p["env"] == "moderation":
        lines = [
            "greedy action by belief bucket: "
            + " ".join(Action(a).name.lower() for a in result.greedy_policy(0))
        ]
    else:
        lines = [f"agent {i + 1} greedy action (1-based): {pol[0]}" for i, pol in enumerate(summary["greedy_policy"])]
    lines.append(f"mean episode reward over the last {len(tail)} episodes: {summary['mean_reward_last_1000']:.4f}")
    if summary["truncated_episodes"]:
        lines.append(f"{summary['truncated_episodes']} episodes truncated at max_steps")
    return summary, lines, outputs


_RUNNERS = {
    "normal_form": _run_normal_form,
    "zero_sum": _run_zero_sum,
    "stackelberg": _run_stackelberg,
    "moderation": _run_moderation,
    "coalition": _run_coalition,
    "qlearning": _run_qlearning,
}


def resolve_output(cfg: ScenarioConfig, out_dir: str | None) -> str:
    if out_dir is None or os.path.isabs(cfg.output):
        return cfg.output
    return os.path.join(out_dir, cfg.output)


def run(cfg: ScenarioConfig, out_dir: str | None = None) -> RunReport:
    """Dispatch a validated scenario, write its CSVs, the resolved config
    and a JSON report into the output directory."""
    out = resolve_output(cfg, out_dir)
    start = time.perf_counter()
    summary, lines, outputs = _RUNNERS[cfg.kind](cfg, out)
    report = RunReport(cfg, summary, lines, outputs, time.perf_counter() - start)
    resolved = os.path.join(out, "resolved_config.yaml")
    with open(resolved, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.dump())
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json() + "\n")
    report.outputs.append(resolved)
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gamekit", description="Game-theoretic scenario runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("config")
    p_run.add_argument("--out-dir", default=None, help="base directory for relative output paths")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--quiet", action="store_true")
    p_val = sub.add_parser("validate", help="check a scenario file without running it")
    p_val.add_argument("config")
    sub.add_parser("version", help="print the tool version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(f"gamekit {__version__}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.kind})")
            return EXIT_OK
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be a 64-bit unsigned integer", path="seed")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        report = run(cfg, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    if not args.quiet:
        print(f"{cfg.kind} (seed {cfg.seed}) finished in {report.duration_s:.3f}s")
        for line in report.lines:
            print("  " + line)
        for path in report.outputs:
            print(f"  wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
