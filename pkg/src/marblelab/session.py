"""One participant's run through the experiment protocol.

A session is 14 practice trials in four difficulty levels followed by
``rounds`` x 6 experimental trials (same game order every round), with a
break state after experimental trial 24, question prompts in the
group's question rounds, per-trial visual variants, millisecond timing
capture and an append-only event log from which the state is
replayable.  Timestamps always come from the caller, never from a
clock, so the machine is fully deterministic and simulators can inject
synthetic response times.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Literal, Mapping, Sequence

from .games import (
    CANONICAL_GAME_IDS,
    Decision,
    GameTree,
    Leaf,
    Player,
    StrategyPlan,
    canonical_games,
    practice_games,
)
from .opponent import (
    OpponentConfig,
    OpponentSchedule,
    ScheduleEntry,
    generate_schedule,
)
from .solver import Conjecture, backward_induction


class SessionError(Exception):
    """An operation was applied in a state that does not allow it."""


class Group(str, Enum):
    A = "A"
    B = "B"

    @property
    def question_rounds(self) -> frozenset[int]:
        return frozenset({3, 4, 7, 8}) if self is Group.A else frozenset({7, 8})


class Phase(str, Enum):
    PRACTICE = "practice"
    EXPERIMENTAL = "experimental"
    BREAK = "break"
    FINISHED = "finished"


BREAK_AFTER_EXPERIMENTAL_TRIAL = 24


@dataclass(frozen=True)
class SessionConfig:
    participant_id: str
    group: Group
    seed: int
    opponent: OpponentConfig = field(default_factory=OpponentConfig)
    practice_count: int = 14
    rounds: int = 8
    game_order: tuple[str, ...] = CANONICAL_GAME_IDS
    created_at_ms: int = 0
    # intake sheet metadata; kept out of the trial table
    name: str = ""
    age: int | None = None
    gender: str = ""
    field_of_study: str = ""

    def __post_init__(self) -> None:
        if self.practice_count < 0 or self.rounds < 1:
            raise ValueError("practice_count must be >= 0 and rounds >= 1")
        if self.rounds != self.opponent.rounds:
            object.__setattr__(
                self, "opponent", replace(self.opponent, rounds=self.rounds)
            )

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "group": self.group.value,
            "seed": self.seed,
            "deviation_rate": self.opponent.deviation_rate,
            "belief_family": self.opponent.belief_family.value,
            "practice_count": self.practice_count,
            "rounds": self.rounds,
            "game_order": list(self.game_order),
            "created_at_ms": self.created_at_ms,
            "name": self.name,
            "age": self.age,
            "gender": self.gender,
            "field_of_study": self.field_of_study,
        }

    @staticmethod
    def from_dict(doc: Mapping) -> "SessionConfig":
        from .opponent import BeliefFamily

        return SessionConfig(
            participant_id=doc["participant_id"],
            group=Group(doc["group"]),
            seed=doc["seed"],
            opponent=OpponentConfig(
                deviation_rate=doc.get("deviation_rate", 0.75),
                belief_family=BeliefFamily(doc.get("belief_family", "lottery_5050")),
                rounds=doc.get("rounds", 8),
            ),
            practice_count=doc.get("practice_count", 14),
            rounds=doc.get("rounds", 8),
            game_order=tuple(doc.get("game_order", CANONICAL_GAME_IDS)),
            created_at_ms=doc.get("created_at_ms", 0),
            name=doc.get("name", ""),
            age=doc.get("age"),
            gender=doc.get("gender", ""),
            field_of_study=doc.get("field_of_study", ""),
        )


@dataclass(frozen=True)
class VisualVariant:
    """Presentation-only left/right flips; never touches the game tree."""

    orientation: Mapping[str, str]  # decision node id -> "normal" | "mirrored"

    def mirrored(self, node_id: str) -> bool:
        return self.orientation.get(node_id, "normal") == "mirrored"

    def key(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.orientation.items()))


@dataclass(frozen=True)
class TrialSpec:
    index: int
    phase: Phase
    game_id: str
    round_no: int  # 0 for practice trials
    variant: VisualVariant
    plan_c: StrategyPlan
    conjecture: Conjecture | None
    ask_question: bool


@dataclass
class TrialRecord:
    game_id: str
    round_no: int
    first_choice: str | None = None
    second_choice: str | None = None
    t_start_ms: int | None = None
    t_first_ms: int | None = None
    t_second_ms: int | None = None
    question_answer: str | None = None
    t_question_ms: int | None = None
    marbles_won: int = 0


EXPORT_COLUMNS = (
    "participant",
    "group",
    "game",
    "round",
    "first_choice",
    "second_choice",
    "t_start_ms",
    "t_first_ms",
    "t_second_ms",
    "question_answer",
    "t_question_ms",
    "marbles_won",
)

QuestionChoice = Literal["left", "right", "undecided"]


# -- trial plan construction ------------------------------------------


def _variants_for_game(
    game: GameTree, count: int, rng: random.Random
) -> list[VisualVariant]:
    """``count`` pairwise distinct orientation maps for one game."""
    k = len(game.decision_ids)
    if count > 2 ** k:
        raise ValueError(
            f"{game.name}: cannot draw {count} distinct variants from "
            f"{k} decision nodes"
        )
    masks = rng.sample(range(2 ** k), count)
    variants = []
    for mask in masks:
        orientation = {
            nid: "mirrored" if mask >> i & 1 else "normal"
            for i, nid in enumerate(game.decision_ids)
        }
        variants.append(VisualVariant(orientation))
    return variants


def _practice_plan(game: GameTree) -> StrategyPlan:
    """In practice the computer just folds rationally: the
    lexicographically first fold choice at each of its nodes."""
    report = backward_induction(game, include_spe=False)
    return StrategyPlan(
        Player.C,
        tuple(min(report.bi_choices[nid]) for nid in game.owned_by(Player.C)),
    )


def build_trial_plan(
    config: SessionConfig,
    games: Mapping[str, GameTree],
    practice: Mapping[str, GameTree],
    schedule: OpponentSchedule,
) -> list[TrialSpec]:
    rng = random.Random(f"{config.seed}:variants")
    specs: list[TrialSpec] = []
    practice_ids = list(practice)[: config.practice_count]
    for gid in practice_ids:
        game = practice[gid]
        variant = _variants_for_game(game, 1, rng)[0]
        specs.append(
            TrialSpec(
                index=len(specs),
                phase=Phase.PRACTICE,
                game_id=gid,
                round_no=0,
                variant=variant,
                plan_c=_practice_plan(game),
                conjecture=None,
                ask_question=False,
            )
        )
    per_game_variants = {
        gid: _variants_for_game(games[gid], config.rounds, rng)
        for gid in config.game_order
    }
    question_rounds = config.group.question_rounds
    for round_no in range(1, config.rounds + 1):
        for gid in config.game_order:
            entry: ScheduleEntry = schedule.entry(gid, round_no)
            specs.append(
                TrialSpec(
                    index=len(specs),
                    phase=Phase.EXPERIMENTAL,
                    game_id=gid,
                    round_no=round_no,
                    variant=per_game_variants[gid][round_no - 1],
                    plan_c=entry.plan,
                    conjecture=entry.justification,
                    ask_question=round_no in question_rounds,
                )
            )
    return specs


# -- the state machine -------------------------------------------------


class SessionState:
    """Single-writer state machine for one participant session."""

    def __init__(
        self,
        config: SessionConfig,
        games: Mapping[str, GameTree] | None = None,
        practice: Mapping[str, GameTree] | None = None,
        record_events: bool = True,
    ):
        self.config = config
        self.games = dict(games) if games is not None else canonical_games()
        practice_pool = (
            dict(practice) if practice is not None else practice_games()
        )
        missing = [g for g in config.game_order if g not in self.games]
        if missing:
            raise ValueError(f"unknown games in game_order: {missing}")
        if config.practice_count > len(practice_pool):
            raise ValueError("not enough practice games shipped")
        self.schedule = generate_schedule(
            config.opponent, config.seed, {g: self.games[g] for g in config.game_order}
        )
        self.trials = build_trial_plan(
            config, self.games, practice_pool, self.schedule
        )
        self.all_games = {**self.games, **practice_pool}

        self.trial_index = 0
        self.phase = Phase.PRACTICE if self._has_practice() else Phase.EXPERIMENTAL
        if not self.trials:
            self.phase = Phase.FINISHED
        self.records: list[TrialRecord] = []
        self.practice_records: list[TrialRecord] = []
        self.marbles = 0
        self.computer_marbles = 0
        self.practice_marbles = 0
        self.last_gain: int | None = None
        self.events: list[dict] = []
        self._record_events = record_events

        self.shown_at_ms = config.created_at_ms
        self._reset_trial_runtime()
        # the schedule rides along in the save so a session file is
        # auditable without regenerating anything
        from .opponent import schedule_to_json

        self._log(
            "session_created",
            {
                "config": config.to_dict(),
                "schedule": json.loads(schedule_to_json(self.schedule)),
            },
            config.created_at_ms,
        )

    # -- helpers -------------------------------------------------------

    def _has_practice(self) -> bool:
        return any(t.phase is Phase.PRACTICE for t in self.trials)

    def _reset_trial_runtime(self) -> None:
        self.started = False
        self.marble_at: str | None = None
        self.turn: Player | None = None
        self.turn_anchor_ms: int | None = None
        self.pending_question = False
        self.question_shown_ms: int | None = None
        self.trial_done = False
        self.current_record: TrialRecord | None = None

    def _log(self, etype: str, payload: dict, t_ms: int) -> None:
        if self._record_events:
            self.events.append({"type": etype, "payload": payload, "t_ms": t_ms})

    def current_trial(self) -> TrialSpec:
        if self.phase is Phase.FINISHED or self.trial_index >= len(self.trials):
            raise SessionError("session is finished")
        return self.trials[self.trial_index]

    def current_game(self) -> GameTree:
        return self.all_games[self.current_trial().game_id]

    def _p_nodes(self, game: GameTree) -> tuple[str, ...]:
        return game.owned_by(Player.P)

    def next_computer_node(self, game: GameTree) -> str | None:
        """The computer node the question refers to: the first one below
        the participant's first decision node."""
        p_nodes = self._p_nodes(game)
        if not p_nodes:
            return None
        first = p_nodes[0]
        for nid in game.preorder:
            if (
                isinstance(game.nodes[nid], Decision)
                and game.nodes[nid].owner is Player.C
                and any(step[0] == first for step in game.path_to(nid))
            ):
                return nid
        return None

    # -- operations ------------------------------------------------------

    def start_trial(self, t_ms: int) -> None:
        if self.phase is Phase.FINISHED:
            raise SessionError("session is finished")
        if self.started:
            raise SessionError("trial already started")
        if self.phase is Phase.BREAK:
            self.phase = Phase.EXPERIMENTAL
        trial = self.current_trial()
        game = self.all_games[trial.game_id]
        self.current_record = TrialRecord(
            game_id=trial.game_id,
            round_no=trial.round_no,
            t_start_ms=t_ms - self.shown_at_ms,
        )
        self.started = True
        self.marble_at = game.root
        node = game.nodes[game.root]
        if isinstance(node, Leaf):
            raise SessionError("degenerate single-leaf trial cannot be played")
        self.turn = node.owner
        if self.turn is Player.P:
            self.turn_anchor_ms = t_ms
        self._log("trial_started", {"trial": trial.index}, t_ms)

    def apply_move(self, actor: Player, action: str, t_ms: int) -> None:
        if self.phase is Phase.FINISHED:
            raise SessionError("session is finished")
        if not self.started:
            raise SessionError("trial has not been started")
        if self.pending_question:
            raise SessionError("a question is pending; answer it first")
        if self.trial_done:
            raise SessionError("trial is over; waiting to arm the next one")
        trial = self.current_trial()
        game = self.all_games[trial.game_id]
        node = game.nodes[self.marble_at]
        if not isinstance(node, Decision) or node.owner is not actor:
            raise SessionError(f"it is not {actor.value}'s turn")
        if action not in node.action_labels():
            raise SessionError(f"illegal action {action!r} at {self.marble_at}")
        if actor is Player.C:
            prescribed = trial.plan_c.action_at(game, self.marble_at)
            if action != prescribed:
                raise SessionError(
                    f"computer must follow its plan ({prescribed!r}, got {action!r})"
                )
        p_nodes = self._p_nodes(game)
        if actor is Player.P:
            if self.marble_at == p_nodes[0]:
                self.current_record.first_choice = action
                self.current_record.t_first_ms = t_ms - self.turn_anchor_ms
                if trial.ask_question:
                    self.pending_question = True
                    self.question_shown_ms = t_ms
            elif len(p_nodes) > 1 and self.marble_at == p_nodes[1]:
                self.current_record.second_choice = action
                self.current_record.t_second_ms = t_ms - self.turn_anchor_ms

        self.marble_at = node.child_of(action)
        landed = game.nodes[self.marble_at]
        self._log(
            "move", {"trial": trial.index, "actor": actor.value, "action": action}, t_ms
        )
        if isinstance(landed, Leaf):
            self._credit(landed, trial)
            self.turn = None
            self.trial_done = True
            if not self.pending_question:
                self._finalize(t_ms)
        else:
            self.turn = landed.owner
            if actor is Player.C and landed.owner is Player.P:
                self.turn_anchor_ms = t_ms

    def answer_question(self, choice: QuestionChoice, t_ms: int) -> None:
        if not self.pending_question:
            raise SessionError("no question is pending")
        if choice not in ("left", "right", "undecided"):
            raise SessionError(f"invalid answer {choice!r}")
        trial = self.current_trial()
        game = self.all_games[trial.game_id]
        if choice == "undecided":
            answer = "undecided"
        else:
            target = self.next_computer_node(game)
            labels = sorted(game.decision(target).action_labels())
            left_label, right_label = labels[0], labels[-1]
            if trial.variant.mirrored(target):
                left_label, right_label = right_label, left_label
            answer = left_label if choice == "left" else right_label
        self.current_record.question_answer = answer
        self.current_record.t_question_ms = t_ms - self.question_shown_ms
        self.pending_question = False
        self.question_shown_ms = None
        self._log("question_answered", {"trial": trial.index, "choice": choice}, t_ms)
        if self.trial_done:
            self._finalize(t_ms)

    def advance_computer(self, t_ms: int) -> list[str]:
        """Apply the scheduled computer moves until it is the
        participant's turn, a question blocks play, or the trial ends."""
        played: list[str] = []
        while (
            self.phase is not Phase.FINISHED
            and self.started
            and not self.trial_done
            and not self.pending_question
            and self.turn is Player.C
        ):
            trial = self.current_trial()
            game = self.all_games[trial.game_id]
            action = trial.plan_c.action_at(game, self.marble_at)
            self.apply_move(Player.C, action, t_ms)
            played.append(action)
        return played

    # -- bookkeeping ----------------------------------------------------

    def _credit(self, leaf: Leaf, trial: TrialSpec) -> None:
        gain = leaf.payoffs.for_p
        self.current_record.marbles_won = gain
        self.last_gain = gain
        if trial.phase is Phase.PRACTICE:
            self.practice_marbles += gain
        else:
            self.marbles += gain
            self.computer_marbles += leaf.payoffs.for_c

    def _finalize(self, t_ms: int) -> None:
        trial = self.current_trial()
        if trial.phase is Phase.PRACTICE:
            self.practice_records.append(self.current_record)
        else:
            self.records.append(self.current_record)
        self.trial_index += 1
        self.shown_at_ms = t_ms
        self._reset_trial_runtime()
        if self.trial_index >= len(self.trials):
            self.phase = Phase.FINISHED
        else:
            next_phase = self.trials[self.trial_index].phase
            if self.phase is Phase.PRACTICE and next_phase is Phase.EXPERIMENTAL:
                self.phase = Phase.EXPERIMENTAL
            elif (
                next_phase is Phase.EXPERIMENTAL
                and len(self.records) == BREAK_AFTER_EXPERIMENTAL_TRIAL
                and self.phase is not Phase.BREAK
            ):
                self.phase = Phase.BREAK

    # -- views and export -------------------------------------------------

    def trial_view(self) -> dict:
        view: dict = {
            "participant": self.config.participant_id,
            "group": self.config.group.value,
            "phase": self.phase.value,
            "trial_count": len(self.trials),
            "session_finished": self.phase is Phase.FINISHED,
            "totals": {
                "participant": self.marbles,
                "computer": self.computer_marbles,
                "practice_participant": self.practice_marbles,
            },
            "last_gain": self.last_gain,
        }
        if self.phase is Phase.FINISHED:
            view.update(
                {
                    "trial_index": len(self.trials),
                    "game_id": None,
                    "round": None,
                    "practice": False,
                    "started": False,
                    "done": True,
                    "turn": None,
                    "marble_at": None,
                    "pending_question": False,
                    "tree": None,
                    "legal_actions": [],
                }
            )
            return view
        trial = self.current_trial()
        game = self.all_games[trial.game_id]
        nodes: dict[str, dict] = {}
        for nid in game.preorder:
            node = game.nodes[nid]
            if isinstance(node, Leaf):
                nodes[nid] = {
                    "kind": "leaf",
                    "orange": node.payoffs.for_p,
                    "blue": node.payoffs.for_c,
                }
            else:
                actions = [
                    {"label": a.label, "child": a.child} for a in node.actions
                ]
                if trial.variant.mirrored(nid):
                    actions = actions[::-1]
                nodes[nid] = {
                    "kind": "decision",
                    "owner": node.owner.value,
                    "mirrored": trial.variant.mirrored(nid),
                    "left": actions[0],
                    "right": actions[-1],
                }
        legal: list[str] = []
        if (
            self.started
            and not self.trial_done
            and not self.pending_question
            and self.turn is Player.P
        ):
            legal = list(game.decision(self.marble_at).action_labels())
        view.update(
            {
                "trial_index": trial.index,
                "game_id": trial.game_id,
                "round": trial.round_no,
                "practice": trial.phase is Phase.PRACTICE,
                "started": self.started,
                "done": self.trial_done,
                "turn": self.turn.value if self.turn else None,
                "marble_at": self.marble_at,
                "pending_question": self.pending_question,
                "tree": {"root": game.root, "nodes": nodes},
                "legal_actions": legal,
            }
        )
        if self.pending_question:
            view["question"] = {"options": ["left", "right", "undecided"]}
        return view


# -- building, payment, export, replay ---------------------------------


def build_session(
    config: SessionConfig,
    games: Mapping[str, GameTree] | None = None,
    practice: Mapping[str, GameTree] | None = None,
) -> SessionState:
    """Initial state plus the full deterministic trial plan."""
    return SessionState(config, games, practice)


def compute_payment(total_marbles: int) -> int:
    """Payment in exact euro cents: 10 euro show-up fee plus 4 cents per
    marble, rounded to the nearest 5-cent mark, halves away from zero."""
    if total_marbles < 0:
        raise ValueError("marble count cannot be negative")
    cents = 1000 + 4 * total_marbles
    quotient, remainder = divmod(cents, 5)
    return 5 * quotient + (5 if remainder * 2 >= 5 else 0)


def format_euros(cents: int) -> str:
    return f"€{cents // 100}.{cents % 100:02d}"


def export_records(state: SessionState, allow_partial: bool = False) -> list[dict]:
    """One row per experimental trial in the fixed column layout."""
    if state.phase is not Phase.FINISHED and not allow_partial:
        raise SessionError("session not finished; pass allow_partial to flush")
    rows = []
    for rec in state.records:
        rows.append(
            {
                "participant": state.config.participant_id,
                "group": state.config.group.value,
                "game": rec.game_id,
                "round": rec.round_no,
                "first_choice": rec.first_choice,
                "second_choice": rec.second_choice,
                "t_start_ms": rec.t_start_ms,
                "t_first_ms": rec.t_first_ms,
                "t_second_ms": rec.t_second_ms,
                "question_answer": rec.question_answer,
                "t_question_ms": rec.t_question_ms,
                "marbles_won": rec.marbles_won,
            }
        )
    return rows


def rows_to_csv(rows: Iterable[Mapping]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=EXPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row[k]) for k in EXPORT_COLUMNS})
    return buf.getvalue()


def _csv_cell(value) -> str:
    return "" if value is None else str(value)


def validate_export_rows(rows: Sequence[Mapping]) -> None:
    """Schema check used by the analysis loaders."""
    for i, row in enumerate(rows):
        missing = set(EXPORT_COLUMNS) - set(row)
        if missing:
            raise ValueError(f"row {i}: missing columns {sorted(missing)}")
        if row["group"] not in ("A", "B"):
            raise ValueError(f"row {i}: bad group {row['group']!r}")
        for col in ("t_start_ms", "t_first_ms", "t_second_ms", "t_question_ms"):
            v = row[col]
            if v not in (None, "") and int(v) < 0:
                raise ValueError(f"row {i}: negative timing {col}")
        if int(row["marbles_won"]) < 0:
            raise ValueError(f"row {i}: negative marbles")


def events_to_jsonl(events: Iterable[Mapping]) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)


def replay_events(
    lines: Iterable[str],
    games: Mapping[str, GameTree] | None = None,
    practice: Mapping[str, GameTree] | None = None,
) -> SessionState:
    """Rebuild a session purely from its event log."""
    events = [json.loads(line) for line in lines if line.strip()]
    if not events or events[0]["type"] != "session_created":
        raise ValueError("event log must begin with session_created")
    config = SessionConfig.from_dict(events[0]["payload"]["config"])
    state = SessionState(config, games, practice)
    for event in events[1:]:
        etype, payload, t_ms = event["type"], event["payload"], event["t_ms"]
        if etype == "trial_started":
            state.start_trial(t_ms)
        elif etype == "move":
            state.apply_move(Player(payload["actor"]), payload["action"], t_ms)
        elif etype == "question_answered":
            state.answer_question(payload["choice"], t_ms)
        else:
            raise ValueError(f"unknown event type {etype!r}")
    return state
