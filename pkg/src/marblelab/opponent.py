"""The computer player: belief-driven plans fixed before play.

Each trial's plan is a best response to a conjecture about the
participant's full plan, decided in advance per (game, round) and never
updated from observed play.  The generator deliberately makes the
computer forgo its safe opening in a configurable fraction of rounds of
the games where such a move is justifiable, since the whole point of the
design is that the participant sees non-folding openings and has to
rationalize them.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .games import (
    GameTree,
    Player,
    StrategyPlan,
    canonical_games,
    enumerate_strategies,
    reaches,
    walk_from,
)
from .solver import Conjecture, backward_induction, justifiable


class BeliefFamily(str, Enum):
    POINT_MASS = "point_mass"
    LOTTERY_5050 = "lottery_5050"
    CUSTOM = "custom"


@dataclass(frozen=True)
class OpponentConfig:
    """Knobs for the schedule generator.

    ``deviation_rate`` is the per-game fraction of rounds in which the
    computer's first move differs from its fold move, applied only where
    a justifiable deviation exists.  ``LOTTERY_5050`` extends the point
    masses with half-half mixes over plans that differ only at the
    participant's last node.
    """

    deviation_rate: float = 0.75
    belief_family: BeliefFamily = BeliefFamily.LOTTERY_5050
    rounds: int = 8
    custom_conjectures: tuple = ()

    def __post_init__(self) -> None:
        if not 0 <= self.deviation_rate <= 1:
            raise ValueError("deviation_rate must lie in [0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class ScheduleEntry:
    plan: StrategyPlan
    justification: Conjecture


@dataclass(frozen=True)
class OpponentSchedule:
    entries: Mapping[tuple[str, int], ScheduleEntry]
    seed: int
    config: OpponentConfig

    def entry(self, game_id: str, round_no: int) -> ScheduleEntry:
        return self.entries[(game_id, round_no)]


# -- best response ----------------------------------------------------


def first_computer_node(game: GameTree) -> str | None:
    nodes = game.owned_by(Player.C)
    return nodes[0] if nodes else None


def _conditioned(
    game: GameTree, conjecture: Conjecture, node_id: str
) -> list[tuple[StrategyPlan, Fraction]]:
    """Conjecture weights conditioned on the participant reaching a node.

    Support plans that fail to reach are dropped and the rest
    renormalized; when no support plan reaches, falls back to a uniform
    belief over all participant plans that do.
    """
    reaching = [
        (p, w) for p, w in conjecture.items() if reaches(game, p, node_id)
    ]
    if reaching:
        total = sum(w for _, w in reaching)
        return [(p, w / total) for p, w in reaching]
    fallback = [
        p for p in enumerate_strategies(game, Player.P) if reaches(game, p, node_id)
    ]
    share = Fraction(1, len(fallback))
    return [(p, share) for p in fallback]


def best_response_plan(game: GameTree, conjecture: Conjecture) -> StrategyPlan:
    """The computer plan maximizing expected marbles under the conjecture.

    Each computer node is solved under the conjecture conditioned on the
    node being reached; ties break toward the lexicographically first
    action label, so the result is deterministic.
    """
    chosen: dict[str, str] = {}
    for nid in reversed(game.owned_by(Player.C)):
        belief = _conditioned(game, conjecture, nid)
        node = game.decision(nid)
        best_label, best_value = None, None
        for action in sorted(node.actions, key=lambda a: a.label):
            value = Fraction(0)
            for rival, weight in belief:
                partial = StrategyPlan(
                    Player.C,
                    tuple(
                        chosen.get(own, game.decision(own).action_labels()[0])
                        for own in game.owned_by(Player.C)
                    ),
                )
                # override the action currently under evaluation
                idx = game.owned_by(Player.C).index(nid)
                probe = StrategyPlan(
                    Player.C,
                    partial.choices[:idx] + (action.label,) + partial.choices[idx + 1:],
                )
                leaf = walk_from(game, action.child, probe, rival)
                value += weight * leaf.payoffs.for_c
            if best_value is None or value > best_value:
                best_label, best_value = action.label, value
        chosen[nid] = best_label
    return StrategyPlan(
        Player.C, tuple(chosen[nid] for nid in game.owned_by(Player.C))
    )


# -- schedule generation ----------------------------------------------


def reference_move(game: GameTree) -> str | None:
    """The computer's fold move: lexicographically first fold choice at
    its first decision node."""
    node = first_computer_node(game)
    if node is None:
        return None
    report = backward_induction(game, include_spe=False)
    return min(report.bi_choices[node])


def family_conjectures(game: GameTree, config: OpponentConfig) -> list[Conjecture]:
    """The candidate beliefs the generator draws from, in a stable order."""
    if config.belief_family is BeliefFamily.CUSTOM:
        if not config.custom_conjectures:
            raise ValueError("custom belief family needs custom_conjectures")
        return list(config.custom_conjectures)
    plans = enumerate_strategies(game, Player.P)
    out = [Conjecture((p,), (Fraction(1),)) for p in plans]
    if config.belief_family is BeliefFamily.LOTTERY_5050 and plans:
        last_node = game.owned_by(Player.P)[-1:]
        if last_node:
            last = last_node[0]
            idx = game.owned_by(Player.P).index(last)
            by_prefix: dict[tuple, list[StrategyPlan]] = {}
            for p in plans:
                key = p.choices[:idx] + p.choices[idx + 1:]
                by_prefix.setdefault(key, []).append(p)
            for group in by_prefix.values():
                if len(group) == 2:
                    out.append(
                        Conjecture(tuple(group), (Fraction(1, 2), Fraction(1, 2)))
                    )
    return out


def _deviation_capable(game: GameTree, config: OpponentConfig) -> bool:
    node = first_computer_node(game)
    if node != game.root:
        return False
    ref = reference_move(game)
    return any(
        best_response_plan(game, cj).action_at(game, node) != ref
        for cj in family_conjectures(game, config)
    )


def generate_schedule(
    config: OpponentConfig,
    seed: int,
    games: Mapping[str, GameTree] | None = None,
) -> OpponentSchedule:
    """Draw a full per-(game, round) schedule, deterministic in inputs.

    Deviation counts round toward more deviations (``ceil``), so a rate
    of 0.75 over 8 rounds yields exactly 6 deviating rounds.
    """
    if games is None:
        games = canonical_games()
    rng = random.Random(seed)
    entries: dict[tuple[str, int], ScheduleEntry] = {}
    for gid, game in games.items():
        node = first_computer_node(game)
        if node is None:
            continue
        conjectures = family_conjectures(game, config)
        responses = [(cj, best_response_plan(game, cj)) for cj in conjectures]
        capable = _deviation_capable(game, config)
        ref = reference_move(game)
        if capable:
            n_dev = min(config.rounds, math.ceil(config.deviation_rate * config.rounds - 1e-12))
            deviating_rounds = set(rng.sample(range(1, config.rounds + 1), n_dev))
            dev_pool = [
                (cj, plan) for cj, plan in responses
                if plan.action_at(game, node) != ref
            ]
            ref_pool = [
                (cj, plan) for cj, plan in responses
                if plan.action_at(game, node) == ref
            ]
        else:
            deviating_rounds = set()
            dev_pool, ref_pool = [], responses
        for round_no in range(1, config.rounds + 1):
            pool = dev_pool if round_no in deviating_rounds else ref_pool
            if not pool:
                raise ValueError(
                    f"belief family cannot realize the required move in {gid}"
                )
            conjecture, plan = pool[rng.randrange(len(pool))]
            entries[(gid, round_no)] = ScheduleEntry(plan, conjecture)
    return OpponentSchedule(entries, seed, config)


# -- verification ------------------------------------------------------


@dataclass(frozen=True)
class ScheduleVerification:
    violations: tuple[str, ...]
    deviation_rates: Mapping[str, float]
    capable_games: frozenset[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_schedule(
    schedule: OpponentSchedule,
    games: Mapping[str, GameTree] | None = None,
) -> ScheduleVerification:
    """Re-check every entry against the solver and report realized
    deviation rates.  Violations are report content, not exceptions."""
    if games is None:
        games = canonical_games()
    violations: list[str] = []
    per_game_dev: dict[str, int] = {}
    per_game_total: dict[str, int] = {}
    capable = frozenset(
        gid for gid, g in games.items() if _deviation_capable(g, schedule.config)
    )
    for (gid, round_no), entry in sorted(schedule.entries.items()):
        game = games[gid]
        tag = f"{gid} round {round_no}"
        for nid in game.owned_by(Player.C):
            belief = _conditioned(game, entry.justification, nid)
            chosen = entry.plan.action_at(game, nid)
            achieved = _continuation_value(game, entry.plan, nid, belief)
            optimum = max(
                _continuation_value(game, alt, nid, belief)
                for alt in enumerate_strategies(game, Player.C)
            )
            if achieved < optimum:
                violations.append(
                    f"{tag}: action {chosen!r} at {nid} is not a best response "
                    f"({achieved} < {optimum})"
                )
        node = first_computer_node(game)
        rivals = [
            p for p, _ in entry.justification.items() if reaches(game, p, node)
        ] or [
            p for p in enumerate_strategies(game, Player.P) if reaches(game, p, node)
        ]
        if reaches(game, entry.plan, node):
            if justifiable(game, entry.plan, node, rivals) is None:
                violations.append(f"{tag}: no justifying belief exists at {node}")
        ref = reference_move(game)
        per_game_total[gid] = per_game_total.get(gid, 0) + 1
        if gid in capable and entry.plan.action_at(game, node) != ref:
            per_game_dev[gid] = per_game_dev.get(gid, 0) + 1
    rates = {
        gid: per_game_dev.get(gid, 0) / total
        for gid, total in per_game_total.items()
    }
    return ScheduleVerification(tuple(violations), rates, capable)


def _continuation_value(
    game: GameTree,
    plan: StrategyPlan,
    node_id: str,
    belief: Sequence[tuple[StrategyPlan, Fraction]],
) -> Fraction:
    value = Fraction(0)
    for rival, weight in belief:
        leaf = walk_from(game, node_id, plan, rival)
        value += weight * leaf.payoffs.for_c
    return value


# -- serialization ------------------------------------------------------


def schedule_to_json(schedule: OpponentSchedule) -> str:
    doc = {
        "seed": schedule.seed,
        "config": {
            "deviation_rate": schedule.config.deviation_rate,
            "belief_family": schedule.config.belief_family.value,
            "rounds": schedule.config.rounds,
        },
        "entries": {},
    }
    for (gid, round_no), entry in sorted(schedule.entries.items()):
        doc["entries"].setdefault(gid, {})[str(round_no)] = {
            "plan": entry.plan.label_string(),
            "conjecture": [
                {"plan": p.label_string(), "weight": str(w)}
                for p, w in entry.justification.items()
            ],
        }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def schedule_from_json(
    text: str, games: Mapping[str, GameTree] | None = None
) -> OpponentSchedule:
    if games is None:
        games = canonical_games()
    doc = json.loads(text)
    config = OpponentConfig(
        deviation_rate=doc["config"]["deviation_rate"],
        belief_family=BeliefFamily(doc["config"]["belief_family"]),
        rounds=doc["config"]["rounds"],
    )
    entries: dict[tuple[str, int], ScheduleEntry] = {}
    for gid, rounds in doc["entries"].items():
        game = games[gid]
        for round_str, body in rounds.items():
            plan = StrategyPlan.from_labels(game, Player.C, body["plan"])
            support, weights = [], []
            for item in body["conjecture"]:
                support.append(
                    StrategyPlan.from_labels(game, Player.P, item["plan"])
                )
                weights.append(Fraction(item["weight"]))
            entries[(gid, int(round_str))] = ScheduleEntry(
                plan, Conjecture(tuple(support), tuple(weights))
            )
    return OpponentSchedule(entries, doc["seed"], config)
