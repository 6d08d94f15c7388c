"""Synthetic participants standing in for the unavailable human data.

Each agent kind formalizes one reasoning style reported in the
end-of-experiment free-text answers: fold-everywhere play, full
rationalizing play, naive own-maximum chasing, attributing to the
computer expected-value maximization over a half-half lottery, and
attributing risk aversion.  Decisions are deterministic per (agent,
game, node) apart from an optional error rate.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

from .games import Decision, GameTree, Leaf, Player, StrategyPlan
from .solver import backward_induction, efr


class AgentKind(str, Enum):
    BI = "bi"
    EFR = "efr"
    OWN_MAX_MYOPIC = "own_max_myopic"
    EXPECTED_VALUE_5050 = "expected_value_5050"
    RISK_AVERSE = "risk_averse"
    RANDOM = "random"


@dataclass(frozen=True)
class AgentSpec:
    kind: AgentKind
    error_rate: float = 0.0
    risk_threshold: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.error_rate <= 1:
            raise ValueError("error_rate must lie in [0, 1]")


@lru_cache(maxsize=256)
def _bi_choices(game: GameTree) -> dict:
    return dict(backward_induction(game, include_spe=False).bi_choices)


@lru_cache(maxsize=256)
def _efr_plan(game: GameTree, player: Player) -> StrategyPlan:
    return min(efr(game).efr_strategies[player])


@lru_cache(maxsize=256)
def _efr_levels(game: GameTree):
    return efr(game).levels


def _value_5050(game: GameTree, node_id: str) -> Fraction:
    """The computer's valuation when it treats every future participant
    node as a fair coin and itself as an optimizer."""
    node = game.nodes[node_id]
    if isinstance(node, Leaf):
        return Fraction(node.payoffs.for_c)
    values = [_value_5050(game, a.child) for a in node.actions]
    if node.owner is Player.C:
        return max(values)
    return sum(values, Fraction(0)) / len(values)


def _predict_c_action_5050(game: GameTree, node_id: str) -> str:
    node = game.decision(node_id)
    best_label, best_value = None, None
    for action in sorted(node.actions, key=lambda a: a.label):
        value = _value_5050(game, action.child)
        if best_value is None or value > best_value:
            best_label, best_value = action.label, value
    return best_label


def _predict_c_action_risk_averse(
    game: GameTree, node_id: str, threshold: float
) -> str:
    """The attributed rule: take a sure bin when it weakly clears the
    midpoint of the continuation lottery's support (plus threshold)."""
    node = game.decision(node_id)
    leaf_actions = [
        a for a in node.actions if isinstance(game.nodes[a.child], Leaf)
    ]
    cont_actions = [
        a for a in node.actions if not isinstance(game.nodes[a.child], Leaf)
    ]
    if not cont_actions:
        return max(
            sorted(leaf_actions, key=lambda a: a.label),
            key=lambda a: game.nodes[a.child].payoffs.for_c,
        ).label
    if not leaf_actions:
        return min(cont_actions, key=lambda a: a.label).label
    sure = max(game.nodes[a.child].payoffs.for_c for a in leaf_actions)
    sure_label = min(
        a.label for a in leaf_actions if game.nodes[a.child].payoffs.for_c == sure
    )
    lottery = [
        leaf.payoffs.for_c
        for a in cont_actions
        for leaf in game.leaves_below(a.child)
    ]
    midpoint = (min(lottery) + max(lottery)) / 2
    if sure >= midpoint + threshold:
        return sure_label
    return min(cont_actions, key=lambda a: a.label).label


def _predicted_c_behavior(game: GameTree, spec: AgentSpec) -> dict[str, str]:
    """The full computer behavior the agent's model implies."""
    out: dict[str, str] = {}
    for nid in game.owned_by(Player.C):
        if spec.kind is AgentKind.EXPECTED_VALUE_5050:
            out[nid] = _predict_c_action_5050(game, nid)
        elif spec.kind is AgentKind.RISK_AVERSE:
            out[nid] = _predict_c_action_risk_averse(game, nid, spec.risk_threshold)
        else:
            out[nid] = min(_bi_choices(game)[nid])
    return out


def _best_reply_value(
    game: GameTree, node_id: str, c_behavior: dict[str, str], player: Player
) -> Fraction:
    node = game.nodes[node_id]
    if isinstance(node, Leaf):
        return Fraction(node.payoffs.for_player(player))
    if node.owner is Player.C:
        child = node.child_of(c_behavior[node.node_id])
        return _best_reply_value(game, child, c_behavior, player)
    return max(
        _best_reply_value(game, a.child, c_behavior, player) for a in node.actions
    )


def agent_decide(
    spec: AgentSpec,
    game: GameTree,
    node_id: str,
    history: tuple[str, ...] = (),
    rng: random.Random | None = None,
) -> str:
    """The participant's move at one of their decision nodes."""
    node = game.decision(node_id)
    if node.owner is not Player.P:
        raise ValueError("agents only move at participant nodes")
    labels = sorted(node.action_labels())

    if spec.kind is AgentKind.RANDOM:
        if rng is None:
            raise ValueError("the random agent needs an rng")
        return rng.choice(labels)

    if spec.kind is AgentKind.BI:
        choice = min(_bi_choices(game)[node_id])
    elif spec.kind is AgentKind.EFR:
        choice = _efr_plan(game, Player.P).action_at(game, node_id)
    elif spec.kind is AgentKind.OWN_MAX_MYOPIC:
        choice = max(
            labels,
            key=lambda lab: max(
                leaf.payoffs.for_p
                for leaf in game.leaves_below(node.child_of(lab))
            ),
        )
    else:  # model-based: best reply to the attributed computer behavior
        c_behavior = _predicted_c_behavior(game, spec)
        best_label, best_value = None, None
        for lab in labels:
            value = _best_reply_value(
                game, node.child_of(lab), c_behavior, Player.P
            )
            if best_value is None or value > best_value:
                best_label, best_value = lab, value
        choice = best_label

    if spec.error_rate > 0 and rng is not None and rng.random() < spec.error_rate:
        others = [lab for lab in labels if lab != choice]
        if others:
            choice = rng.choice(others)
    return choice


def predict_next_computer_move(
    spec: AgentSpec,
    game: GameTree,
    target_node: str,
    history: tuple[str, ...] = (),
    rng: random.Random | None = None,
) -> str | None:
    """What the agent believes the computer is about to play at
    ``target_node``; None means undecided."""
    if spec.kind is AgentKind.RANDOM:
        if rng is None:
            raise ValueError("the random agent needs an rng")
        labels = sorted(game.decision(target_node).action_labels())
        return rng.choice(labels + [None])
    if spec.kind is AgentKind.OWN_MAX_MYOPIC:
        return None
    if spec.kind is AgentKind.BI:
        return min(_bi_choices(game)[target_node])
    if spec.kind is AgentKind.EXPECTED_VALUE_5050:
        return _predict_c_action_5050(game, target_node)
    if spec.kind is AgentKind.RISK_AVERSE:
        return _predict_c_action_risk_averse(game, target_node, spec.risk_threshold)
    # EFR: rationalize the observed moves by the highest surviving level
    # still consistent with them, then read off that plan's action.
    levels = _efr_levels(game)
    for level in range(len(levels) - 1, -1, -1):
        consistent = [
            plan
            for plan in levels[level][Player.C]
            if _consistent_with_history(game, plan, history)
        ]
        if consistent:
            return min(consistent).action_at(game, target_node)
    return None


def _consistent_with_history(
    game: GameTree, plan: StrategyPlan, history: tuple[str, ...]
) -> bool:
    cur = game.root
    for label in history:
        node = game.nodes[cur]
        if isinstance(node, Leaf):
            return True
        if node.owner is plan.owner and plan.action_at(game, cur) != label:
            return False
        cur = node.child_of(label)
    return True
