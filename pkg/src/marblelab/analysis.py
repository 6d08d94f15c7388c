"""Population simulation and the first-choice analytics.

The human dataset behind the original study is not published, so
nothing here reproduces its percentages; the pipeline is exercised on
synthetic populations from :mod:`marblelab.agents` and on any CSV in
the session export schema.  Outputs are delimited tables plus the
choice-grid figures rendered to files.
"""

from __future__ import annotations

import csv
import math
import os
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .agents import AgentSpec, agent_decide, predict_next_computer_move
from .games import Player
from .opponent import OpponentConfig
from .session import (
    Group,
    Phase,
    SessionConfig,
    SessionState,
    export_records,
    rows_to_csv,
    validate_export_rows,
)

NON_REPRODUCIBILITY_NOTE = (
    "The original 50-participant dataset is unpublished; empirical "
    "percentages quoted from it are not reproducible here and are never "
    "used as expected values.  All analytics below run on synthetic "
    "agent populations or user-supplied logs."
)


# -- simulation --------------------------------------------------------


@dataclass(frozen=True)
class PopulationResult:
    rows: tuple[dict, ...]
    participants: Mapping[str, AgentSpec]

    def by_kind(self, kind) -> list[str]:
        return [pid for pid, spec in self.participants.items() if spec.kind is kind]


def simulate_population(
    specs: Sequence[tuple[AgentSpec, int]],
    opponent: OpponentConfig | None = None,
    seed: int = 0,
    rounds: int = 8,
    practice_count: int = 14,
) -> PopulationResult:
    """Run every synthetic participant through a full session.

    Groups alternate A, B, A, B... across the population; timestamps are
    synthetic but deterministic in the seed.
    """
    if opponent is None:
        opponent = OpponentConfig(rounds=rounds)
    rows: list[dict] = []
    participants: dict[str, AgentSpec] = {}
    counter = 0
    for spec, count in specs:
        if count < 0:
            raise ValueError("agent counts must be >= 0")
        for _ in range(count):
            counter += 1
            pid = f"{spec.kind.value}-{counter:03d}"
            group = Group.A if counter % 2 == 1 else Group.B
            config = SessionConfig(
                participant_id=pid,
                group=group,
                seed=seed * 100_003 + counter,
                opponent=opponent,
                rounds=rounds,
                practice_count=practice_count,
            )
            state = run_agent_session(spec, config, rng_seed=f"{seed}:{pid}")
            rows.extend(export_records(state))
            participants[pid] = spec
    validate_export_rows(rows)
    return PopulationResult(tuple(rows), participants)


def run_agent_session(
    spec: AgentSpec, config: SessionConfig, rng_seed: str
) -> SessionState:
    """Drive one session to completion with the given agent."""
    state = SessionState(config, record_events=False)
    rng = random.Random(rng_seed)
    t = config.created_at_ms
    while state.phase is not Phase.FINISHED:
        index = state.trial_index
        history: list[str] = []
        t += 200 + rng.randrange(400)
        state.start_trial(t)
        t += 100
        history.extend(state.advance_computer(t))
        while state.phase is not Phase.FINISHED and state.trial_index == index:
            if state.pending_question:
                t += 300 + rng.randrange(900)
                state.answer_question(
                    _question_choice(spec, state, tuple(history), rng), t
                )
                history.extend(state.advance_computer(t))
            elif state.turn is Player.P:
                game = state.all_games[state.current_trial().game_id]
                t += 400 + rng.randrange(1200)
                action = agent_decide(
                    spec, game, state.marble_at, tuple(history), rng
                )
                state.apply_move(Player.P, action, t)
                history.append(action)
                history.extend(state.advance_computer(t))
            else:  # pragma: no cover - state machine guarantees progress
                raise AssertionError("simulation stalled")
    return state


def _question_choice(
    spec: AgentSpec, state: SessionState, history: tuple[str, ...], rng
) -> str:
    trial = state.current_trial()
    game = state.all_games[trial.game_id]
    target = state.next_computer_node(game)
    if target is None:
        return "undecided"
    move = predict_next_computer_move(spec, game, target, history, rng)
    if move is None:
        return "undecided"
    labels = sorted(game.decision(target).action_labels())
    left, right = labels[0], labels[-1]
    if trial.variant.mirrored(target):
        left, right = right, left
    return "left" if move == left else "right"


# -- log loading -------------------------------------------------------


def load_rows(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        raw = list(reader)
    rows = []
    for line in raw:
        row = dict(line)
        row["round"] = int(row["round"])
        row["marbles_won"] = int(row["marbles_won"])
        for col in ("t_start_ms", "t_first_ms", "t_second_ms", "t_question_ms"):
            row[col] = int(row[col]) if row[col] not in ("", None) else None
        for col in ("first_choice", "second_choice", "question_answer"):
            row[col] = row[col] or None
        rows.append(row)
    validate_export_rows(rows)
    return rows


def save_rows(rows: Iterable[Mapping], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))


# -- choice grids ------------------------------------------------------


@dataclass(frozen=True)
class ChoiceGrid:
    participant: str
    game_id: str
    slots: tuple[str | None, ...]  # first choice per round, None = not reached


def choice_grids(rows: Sequence[Mapping], rounds: int = 8) -> list[ChoiceGrid]:
    """One grid row per participant per game, ordered by round."""
    validate_export_rows(rows)
    table: dict[tuple[str, str], dict[int, str | None]] = {}
    for row in rows:
        key = (row["participant"], row["game"])
        table.setdefault(key, {})[row["round"]] = row["first_choice"] or None
    grids = []
    for (pid, gid), per_round in sorted(table.items()):
        slots = tuple(per_round.get(r) for r in range(1, rounds + 1))
        grids.append(ChoiceGrid(pid, gid, slots))
    return grids


def grids_to_csv(grids: Sequence[ChoiceGrid]) -> str:
    rounds = len(grids[0].slots) if grids else 0
    header = ["participant", "game"] + [f"round{r}" for r in range(1, rounds + 1)]
    lines = [",".join(header)]
    for grid in grids:
        cells = [s if s is not None else "not-reached" for s in grid.slots]
        lines.append(",".join([grid.participant, grid.game_id] + cells))
    return "\n".join(lines) + "\n"


def render_choice_grids(
    grids: Sequence[ChoiceGrid], out_dir: str | os.PathLike
) -> list[str]:
    """Write the per-game grid figures plus grids.csv; returns paths.

    Dark grey marks the first-node fold move (``c``), light grey the
    continuation move (``d``), white an unreached first node.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import ListedColormap
    import numpy as np

    os.makedirs(out_dir, exist_ok=True)
    written = []
    csv_path = os.path.join(out_dir, "choice_grids.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(grids_to_csv(grids))
    written.append(csv_path)

    by_game: dict[str, list[ChoiceGrid]] = {}
    for grid in grids:
        by_game.setdefault(grid.game_id, []).append(grid)
    cmap = ListedColormap(["white", "0.35", "0.75"])
    for gid, game_grids in sorted(by_game.items()):
        game_grids.sort(key=lambda g: g.participant)
        rounds = len(game_grids[0].slots)
        data = np.zeros((len(game_grids), rounds))
        for i, grid in enumerate(game_grids):
            for j, slot in enumerate(grid.slots):
                if slot is None:
                    data[i, j] = 0
                else:
                    labels = sorted(
                        {s for g in game_grids for s in g.slots if s is not None}
                    )
                    data[i, j] = 1 if slot == labels[0] else 2
        fig, ax = plt.subplots(
            figsize=(max(3.0, rounds * 0.5), max(2.5, len(game_grids) * 0.18))
        )
        ax.imshow(data, aspect="auto", cmap=cmap, vmin=0, vmax=2)
        ax.set_xticks(range(rounds), [str(r) for r in range(1, rounds + 1)])
        ax.set_yticks(
            range(len(game_grids)), [g.participant for g in game_grids], fontsize=5
        )
        ax.set_xlabel("round")
        ax.set_title(f"{gid}: first-node choices")
        path = os.path.join(out_dir, f"choices_{gid}.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


# -- game-pair comparisons ---------------------------------------------


DIFF_CLASSES = ("much_more", "slightly_more", "equal", "slightly_less", "much_less")


@dataclass(frozen=True)
class PairComparison:
    participant: str
    d_count_x: int
    reached_x: int
    d_count_y: int
    reached_y: int
    diff_class: str

    @property
    def freq_x(self) -> float:
        return self.d_count_x / self.reached_x

    @property
    def freq_y(self) -> float:
        return self.d_count_y / self.reached_y


def _continuation_label(rows: Sequence[Mapping], game_id: str) -> str:
    """The non-fold move at the first node: the lexicographically larger
    of the observed first choices (``d`` in the shipped games)."""
    seen = sorted(
        {r["first_choice"] for r in rows if r["game"] == game_id and r["first_choice"]}
    )
    if not seen:
        raise ValueError(f"no reached first nodes recorded for {game_id}")
    return seen[-1] if len(seen) > 1 else "d"


def compare_pair(
    rows: Sequence[Mapping],
    game_x: str,
    game_y: str,
    much_threshold: int = 3,
    count_unreached_rounds: bool = False,
) -> tuple[list[PairComparison], dict]:
    """Per-participant continuation-rate comparison between two games.

    Classes come from the difference in rounds with a ``d`` first choice
    (>= ``much_threshold`` is "much", 1 to threshold-1 "slightly").  By
    default only reached rounds enter the counts.
    """
    games_present = {r["game"] for r in rows}
    for gid in (game_x, game_y):
        if gid not in games_present:
            raise ValueError(f"game {gid!r} absent from the logs")
    d_label = _continuation_label(rows, game_x)
    per_participant: dict[str, dict[str, list]] = {}
    for row in rows:
        if row["game"] not in (game_x, game_y):
            continue
        slot = per_participant.setdefault(
            row["participant"], {game_x: [], game_y: []}
        )
        slot[row["game"]].append(row["first_choice"])
    comparisons: list[PairComparison] = []
    unclassified = 0
    for pid, per_game in sorted(per_participant.items()):
        if count_unreached_rounds:
            reached_x, reached_y = len(per_game[game_x]), len(per_game[game_y])
        else:
            reached_x = sum(1 for c in per_game[game_x] if c)
            reached_y = sum(1 for c in per_game[game_y] if c)
        if reached_x == 0 or reached_y == 0:
            unclassified += 1
            continue
        d_x = sum(1 for c in per_game[game_x] if c == d_label)
        d_y = sum(1 for c in per_game[game_y] if c == d_label)
        diff = d_x - d_y
        if diff >= much_threshold:
            klass = "much_more"
        elif diff >= 1:
            klass = "slightly_more"
        elif diff == 0:
            klass = "equal"
        elif diff > -much_threshold:
            klass = "slightly_less"
        else:
            klass = "much_less"
        comparisons.append(
            PairComparison(pid, d_x, reached_x, d_y, reached_y, klass)
        )
    counts = {klass: 0 for klass in DIFF_CLASSES}
    for comp in comparisons:
        counts[comp.diff_class] += 1
    total = len(comparisons)
    summary = {
        "game_x": game_x,
        "game_y": game_y,
        "classified": total,
        "unclassified": unclassified,
        "counts": counts,
        "at_least_as_often": counts["much_more"]
        + counts["slightly_more"]
        + counts["equal"],
    }
    return comparisons, summary


def _pct(count: int, total: int) -> int:
    return round(100 * count / total) if total else 0


def format_pair_sentences(summary: Mapping) -> list[str]:
    """Aggregate counts phrased the way the first-choice comparisons are
    reported, with nearest-integer percentages."""
    x, y = summary["game_x"], summary["game_y"]
    total = summary["classified"]
    counts = summary["counts"]
    wording = {
        "much_more": f"played d much more often in {x} than in {y}",
        "slightly_more": f"played d in {x} only slightly more often than in {y}",
        "much_less": f"played d much more often in {y} than in {x}",
        "slightly_less": f"played d in {y} only slightly more often than in {x}",
        "equal": f"played d equally often in {x} and {y}",
    }
    def noun(count: int) -> str:
        return "participant" if count == 1 else "participants"

    sentences = [
        f"{counts[klass]} {noun(counts[klass])} "
        f"({_pct(counts[klass], total)}%) {wording[klass]}."
        for klass in DIFF_CLASSES
    ]
    at_least = summary["at_least_as_often"]
    sentences.append(
        f"{at_least} {noun(at_least)} ({_pct(at_least, total)}%) played d at "
        f"least as often in {x} as in {y}."
    )
    return sentences


# -- proportion testing ------------------------------------------------


@dataclass(frozen=True)
class ProportionTest:
    p_value: float
    statistic: float
    pooled: float


def two_proportion_test(
    successes1: int, n1: int, successes2: int, n2: int
) -> ProportionTest:
    """Two-sided pooled two-proportion z-test."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both sample sizes must be positive")
    if not (0 <= successes1 <= n1 and 0 <= successes2 <= n2):
        raise ValueError("successes must lie within their sample sizes")
    p1, p2 = successes1 / n1, successes2 / n2
    pooled = (successes1 + successes2) / (n1 + n2)
    if p1 == p2:
        return ProportionTest(1.0, 0.0, pooled)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    z = (p1 - p2) / se
    p_value = math.erfc(abs(z) / math.sqrt(2))
    return ProportionTest(p_value, z, pooled)


def group_comparison(
    rows: Sequence[Mapping], game_id: str | None = None
) -> dict:
    """Continuation rates of group A vs group B at reached first nodes,
    with the pooled z-test between them."""
    d_label = _continuation_label(
        rows, game_id or sorted({r["game"] for r in rows})[0]
    )
    stats = {g: [0, 0] for g in ("A", "B")}  # successes, reached
    for row in rows:
        if game_id is not None and row["game"] != game_id:
            continue
        if not row["first_choice"]:
            continue
        stats[row["group"]][1] += 1
        if row["first_choice"] == d_label:
            stats[row["group"]][0] += 1
    test = two_proportion_test(
        stats["A"][0], max(stats["A"][1], 1), stats["B"][0], max(stats["B"][1], 1)
    )
    return {
        "game": game_id or "all",
        "A": {"d_choices": stats["A"][0], "reached": stats["A"][1]},
        "B": {"d_choices": stats["B"][0], "reached": stats["B"][1]},
        "p_value": test.p_value,
        "statistic": test.statistic,
    }
