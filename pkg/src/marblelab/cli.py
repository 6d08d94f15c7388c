"""Command-line entry point binding the solvers, the opponent
generator, the session service, the simulator and the analytics.

All commands are non-interactive except ``serve``; outputs are
deterministic for fixed inputs and seeds.  Exit code 0 means every
requested check passed; any validation or verification failure is
nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .games import (
    GameError,
    Player,
    canonical_games,
    has_relevant_ties,
    load_game_file,
)
from .opponent import (
    OpponentConfig,
    generate_schedule,
    schedule_to_json,
    verify_schedule,
)
from .solver import backward_induction, check_theorems, efr, random_game

DEFAULT_SEED = 1729


def _plan_set(plans) -> list[str]:
    return sorted(p.label_string() for p in plans)


def solve_report(game) -> dict:
    bi = backward_induction(game)
    ef = efr(game)
    theorems = check_theorems(game)
    return {
        "game": game.name,
        "relevant_ties": has_relevant_ties(game),
        "bi": {
            "choices": {nid: sorted(v) for nid, v in sorted(bi.bi_choices.items())},
            "strategies": {
                p.value: _plan_set(bi.bi_strategies[p]) for p in Player
            },
            "outcomes": [
                {"path": list(o.actions), "payoff": list(o.payoffs)}
                for o in sorted(bi.bi_outcomes, key=lambda o: o.actions)
            ],
            "spe_profiles": sorted(
                [c.label_string(), p.label_string()] for c, p in bi.spe_profiles
            ),
        },
        "efr": {
            "strategies": {
                p.value: _plan_set(ef.efr_strategies[p]) for p in Player
            },
            "outcomes": [
                {"path": list(o.actions), "payoff": list(o.payoffs)}
                for o in sorted(ef.efr_outcomes, key=lambda o: o.actions)
            ],
            "levels": [
                {p.value: _plan_set(level[p]) for p in Player}
                for level in ef.levels
            ],
            "eliminations": [
                {
                    "plan": e.plan.label_string(),
                    "owner": e.plan.owner.value,
                    "level": e.level,
                    "node": e.node_id,
                }
                for e in ef.trace
            ],
        },
        "theorems": {
            "ties": theorems.ties,
            "efr_subset_of_bi": theorems.efr_subset_of_bi,
            "unique_outcome_match": theorems.unique_outcome_match,
        },
    }


def format_solve_table(reports: list[dict]) -> str:
    """Human-readable two-column strategy table, one block per game."""
    lines = [
        f"{'Game':<12} {'BI strategies':<28} EFR strategies",
        "-" * 68,
    ]
    for rep in reports:
        bi_c = ", ".join(rep["bi"]["strategies"]["C"])
        bi_p = ", ".join(rep["bi"]["strategies"]["P"])
        ef_c = ", ".join(rep["efr"]["strategies"]["C"])
        ef_p = ", ".join(rep["efr"]["strategies"]["P"])
        lines.append(f"{rep['game']:<12} {'C: ' + bi_c:<28} C: {ef_c}")
        lines.append(f"{'':<12} {'P: ' + bi_p:<28} P: {ef_p}")
        lines.append("-" * 68)
    return "\n".join(lines)


def cmd_solve(args) -> int:
    try:
        if args.game:
            games = [load_game_file(args.game)]
        else:
            games = list(canonical_games().values())
    except (OSError, GameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    reports = [solve_report(g) for g in games]
    if args.json:
        print(json.dumps(reports, indent=2))
    else:
        print(format_solve_table(reports))
        for rep in reports:
            outcomes = ", ".join(
                "".join(o["path"]) + f"->{tuple(o['payoff'])}"
                for o in rep["efr"]["outcomes"]
            )
            print(f"{rep['game']}: ties={rep['relevant_ties']} efr_outcomes=[{outcomes}]")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(reports, indent=2) + "\n")
        if not args.json:
            print(f"wrote {args.out}")
    return 0


def cmd_theorems(args) -> int:
    ok_unique = 0
    ok_subset = 0
    failures = []
    for i in range(args.n):
        seed = args.seed + i
        depth = 1 + (seed % args.depth)
        game = random_game(
            seed,
            depth,
            args.branching,
            (0, 15),
            forbid_relevant_ties=args.no_ties,
        )
        rep = check_theorems(game)
        if rep.efr_subset_of_bi and rep.efr_outcomes:
            ok_subset += 1
        else:
            failures.append((seed, "subset/nonempty"))
        if args.no_ties:
            if rep.unique_outcome_match is True:
                ok_unique += 1
            else:
                failures.append((seed, "unique-outcome"))
    if args.no_ties:
        print(f"{ok_unique}/{args.n} unique-outcome matches")
    print(f"{ok_subset}/{args.n} subset-and-nonempty checks")
    for seed, what in failures[:10]:
        print(f"FAIL seed={seed}: {what}", file=sys.stderr)
    return 0 if not failures else 1


def cmd_schedule(args) -> int:
    config = OpponentConfig(deviation_rate=args.deviation_rate)
    schedule = generate_schedule(config, args.seed)
    verification = verify_schedule(schedule)
    payload = schedule_to_json(schedule)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        print(f"wrote {args.out}")
    else:
        print(payload, end="")
    print(
        f"verification: {len(verification.violations)} violations; "
        f"deviation rates: "
        + ", ".join(
            f"{gid}={rate:.3f}" for gid, rate in sorted(verification.deviation_rates.items())
        )
    )
    for violation in verification.violations:
        print(f"VIOLATION: {violation}", file=sys.stderr)
    return 0 if verification.ok else 1


def _parse_agents(text: str):
    from .agents import AgentKind, AgentSpec

    specs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind_text, _, count_text = chunk.partition(":")
        spec = AgentSpec(AgentKind(kind_text.strip().lower()))
        specs.append((spec, int(count_text or "1")))
    return specs


def cmd_simulate(args) -> int:
    from .analysis import save_rows, simulate_population

    specs = _parse_agents(args.agents)
    result = simulate_population(
        specs,
        OpponentConfig(deviation_rate=args.deviation_rate),
        seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    logs_path = os.path.join(args.out, "logs.csv")
    save_rows(result.rows, logs_path)
    roster_path = os.path.join(args.out, "participants.csv")
    with open(roster_path, "w", encoding="utf-8") as fh:
        fh.write("participant,kind\n")
        for pid, spec in sorted(result.participants.items()):
            fh.write(f"{pid},{spec.kind.value}\n")
    print(f"wrote {logs_path} ({len(result.rows)} rows) and {roster_path}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    print(f"serving on http://127.0.0.1:{args.port}")
    serve(args.port, args.out)
    return 0


def cmd_analyze(args) -> int:
    from .analysis import (
        NON_REPRODUCIBILITY_NOTE,
        choice_grids,
        compare_pair,
        format_pair_sentences,
        group_comparison,
        load_rows,
        render_choice_grids,
    )

    try:
        rows = load_rows(args.logs)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    print(NON_REPRODUCIBILITY_NOTE)
    written = render_choice_grids(choice_grids(rows, rounds=args.rounds), args.out)
    for path in written:
        print(f"wrote {path}")
    pair_args = args.pair or ["game1:game1prime", "game3:game3prime",
                              "game3:game4", "game1:game2"]
    summaries = []
    for pair in pair_args:
        game_x, _, game_y = pair.partition(":")
        _, summary = compare_pair(rows, game_x, game_y)
        summaries.append(summary)
        print(f"\n{game_x} vs {game_y}:")
        for sentence in format_pair_sentences(summary):
            print(f"  {sentence}")
    groups = group_comparison(rows)
    print(
        f"\ngroup comparison (all games): A {groups['A']['d_choices']}/"
        f"{groups['A']['reached']} vs B {groups['B']['d_choices']}/"
        f"{groups['B']['reached']}; p = {groups['p_value']:.4f} "
        f"(z = {groups['statistic']:.4f})"
    )
    summary_path = os.path.join(args.out, "analysis.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(
            {"note": NON_REPRODUCIBILITY_NOTE, "pairs": summaries, "groups": groups},
            fh,
            indent=2,
        )
    print(f"wrote {summary_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marblelab",
        description="Solve, schedule, serve and analyze marble-drop games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="BI/EFR report for one or all games")
    p_solve.add_argument("--game", help="game file; defaults to all shipped games")
    p_solve.add_argument("--json", action="store_true", help="print JSON report")
    p_solve.add_argument("--out", help="write the JSON report to a file")
    p_solve.set_defaults(func=cmd_solve)

    p_theo = sub.add_parser("theorems", help="random-game outcome-theorem checks")
    p_theo.add_argument("--n", type=int, default=100)
    p_theo.add_argument("--depth", type=int, default=6, help="maximum depth")
    p_theo.add_argument("--branching", type=int, default=2)
    p_theo.add_argument("--no-ties", action="store_true")
    p_theo.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_theo.set_defaults(func=cmd_theorems)

    p_sched = sub.add_parser("schedule", help="generate and verify a computer schedule")
    p_sched.add_argument("--deviation-rate", type=float, default=0.75)
    p_sched.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sched.add_argument("--out", help="write schedule JSON here")
    p_sched.set_defaults(func=cmd_schedule)

    p_sim = sub.add_parser("simulate", help="run synthetic participants")
    p_sim.add_argument(
        "--agents",
        default="efr:10,bi:10,expected_value_5050:10,risk_averse:10,random:10",
        help="comma-separated kind:count pairs",
    )
    p_sim.add_argument("--deviation-rate", type=float, default=0.75)
    p_sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sim.add_argument("--out", default="simlogs", help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_serve = sub.add_parser("serve", help="run the session HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--out", help="directory for session event logs")
    p_serve.set_defaults(func=cmd_serve)

    p_ana = sub.add_parser("analyze", help="choice grids and pair comparisons")
    p_ana.add_argument("--logs", required=True, help="session export CSV")
    p_ana.add_argument("--out", default="analysis", help="output directory")
    p_ana.add_argument("--rounds", type=int, default=8)
    p_ana.add_argument(
        "--pair",
        action="append",
        help="gameX:gameY comparison (repeatable); defaults to the four canonical pairs",
    )
    p_ana.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
