"""Finite perfect-information two-player game trees.

The trees modelled here are the marble-drop games: two players, the
computer ``C`` and the participant ``P``, move one after the other by
opening trapdoors until the marble lands in a payoff bin.  Payoffs are
marble counts, i.e. non-negative integers, one per player per leaf.

Action labels are single lowercase letters and are unique across the
whole tree (``a`` ... ``h`` in the six canonical games), so a strategy
plan can be written compactly as ``"a;e"``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, NamedTuple


class GameError(Exception):
    """Base class for game-file problems."""


class GameParseError(GameError):
    """Raised when a game file is not syntactically well formed."""


class GameValidationError(GameError):
    """Raised when a parsed game violates a structural invariant."""


class Player(str, Enum):
    """The two players: C is the computer, P the participant."""

    C = "C"
    P = "P"

    @property
    def other(self) -> "Player":
        return Player.P if self is Player.C else Player.C


class PayoffPair(NamedTuple):
    """Marble counts awarded at a leaf, one component per player."""

    for_c: int
    for_p: int

    def for_player(self, player: Player) -> int:
        return self.for_c if player is Player.C else self.for_p


class Action(NamedTuple):
    label: str
    child: str


@dataclass(frozen=True)
class Decision:
    node_id: str
    owner: Player
    actions: tuple[Action, ...]

    def action_labels(self) -> tuple[str, ...]:
        return tuple(a.label for a in self.actions)

    def child_of(self, label: str) -> str:
        for a in self.actions:
            if a.label == label:
                return a.child
        raise KeyError(f"no action {label!r} at node {self.node_id}")


@dataclass(frozen=True)
class Leaf:
    node_id: str
    payoffs: PayoffPair


Node = Decision | Leaf


class GameTree:
    """Validated, immutable game tree with precomputed structure.

    Construction validates connectivity, acyclicity, action-label
    uniqueness and the two-actions-minimum rule.  Alternation of owners
    is a property of the shipped data, not of the type; use
    :func:`is_alternating` to check it.
    """

    def __init__(self, name: str, root: str, nodes: Mapping[str, Node]):
        self.name = name
        self.root = root
        self.nodes: dict[str, Node] = dict(nodes)
        self._validate()
        self._index()

    # -- validation -------------------------------------------------

    def _validate(self) -> None:
        if self.root not in self.nodes:
            raise GameValidationError(f"root node {self.root!r} is not declared")
        seen_labels: set[str] = set()
        referenced: set[str] = set()
        for node in self.nodes.values():
            if isinstance(node, Decision):
                if len(node.actions) < 2:
                    raise GameValidationError(
                        f"decision node {node.node_id!r} has fewer than 2 actions"
                    )
                for action in node.actions:
                    if action.label in seen_labels:
                        raise GameValidationError(
                            f"duplicate action label {action.label!r}"
                        )
                    seen_labels.add(action.label)
                    if action.child not in self.nodes:
                        raise GameValidationError(
                            f"node {node.node_id!r} references undeclared child "
                            f"{action.child!r}"
                        )
                    if action.child in referenced or action.child == self.root:
                        raise GameValidationError(
                            f"node {action.child!r} has more than one parent"
                        )
                    referenced.add(action.child)
            else:
                if node.payoffs.for_c < 0 or node.payoffs.for_p < 0:
                    raise GameValidationError(
                        f"leaf {node.node_id!r} has a negative payoff"
                    )
        unreachable = set(self.nodes) - referenced - {self.root}
        if unreachable:
            raise GameValidationError(
                f"nodes not connected to the root: {sorted(unreachable)}"
            )

    def _index(self) -> None:
        # Preorder walk fixes the canonical node order used everywhere
        # (strategy notation, tie-breaking, reports).
        self.preorder: list[str] = []
        self.parent: dict[str, tuple[str, str]] = {}  # child -> (parent, label)
        stack = [self.root]
        while stack:
            nid = stack.pop()
            self.preorder.append(nid)
            node = self.nodes[nid]
            if isinstance(node, Decision):
                for action in reversed(node.actions):
                    self.parent[action.child] = (nid, action.label)
                    stack.append(action.child)
        self.decision_ids: list[str] = [
            nid for nid in self.preorder if isinstance(self.nodes[nid], Decision)
        ]
        self.leaf_ids: list[str] = [
            nid for nid in self.preorder if isinstance(self.nodes[nid], Leaf)
        ]
        self._owned: dict[Player, tuple[str, ...]] = {
            p: tuple(
                nid for nid in self.decision_ids if self.nodes[nid].owner is p
            )
            for p in Player
        }
        self._path_from_root: dict[str, tuple[tuple[str, str], ...]] = {}
        for nid in self.preorder:
            steps: list[tuple[str, str]] = []
            cur = nid
            while cur != self.root:
                par, label = self.parent[cur]
                steps.append((par, label))
                cur = par
            self._path_from_root[nid] = tuple(reversed(steps))

    # -- structure queries -------------------------------------------

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def decision(self, node_id: str) -> Decision:
        node = self.nodes[node_id]
        if not isinstance(node, Decision):
            raise KeyError(f"{node_id!r} is not a decision node")
        return node

    def owned_by(self, player: Player) -> tuple[str, ...]:
        """Decision nodes of one player, in preorder."""
        return self._owned[player]

    def path_to(self, node_id: str) -> tuple[tuple[str, str], ...]:
        """(node, action-label) steps from the root down to ``node_id``."""
        return self._path_from_root[node_id]

    def subtree_ids(self, node_id: str) -> list[str]:
        """All node ids in the subtree rooted at ``node_id``, preorder."""
        out: list[str] = []
        stack = [node_id]
        while stack:
            nid = stack.pop()
            out.append(nid)
            node = self.nodes[nid]
            if isinstance(node, Decision):
                for action in reversed(node.actions):
                    stack.append(action.child)
        return out

    def leaves_below(self, node_id: str) -> list[Leaf]:
        return [
            self.nodes[nid]
            for nid in self.subtree_ids(node_id)
            if isinstance(self.nodes[nid], Leaf)
        ]

    def max_depth(self) -> int:
        """Largest number of decision nodes on any root-to-leaf path."""
        best = 0
        for leaf_id in self.leaf_ids:
            best = max(best, len(self._path_from_root[leaf_id]))
        return best


@dataclass(frozen=True, order=True)
class StrategyPlan:
    """A full plan: one action for every decision node of the owner.

    The stored form is total (it prescribes an action even at nodes the
    plan's own earlier choices preclude); ``choices`` is ordered by the
    owner's nodes in preorder, so plans print as e.g. ``a;e``.
    """

    owner: Player
    choices: tuple[str, ...]

    def label_string(self) -> str:
        return ";".join(self.choices) if self.choices else "-"

    def action_at(self, game: GameTree, node_id: str) -> str:
        nodes = game.owned_by(self.owner)
        return self.choices[nodes.index(node_id)]

    @staticmethod
    def from_labels(game: GameTree, owner: Player, text: str) -> "StrategyPlan":
        labels = tuple(text.split(";")) if text and text != "-" else ()
        nodes = game.owned_by(owner)
        if len(labels) != len(nodes):
            raise ValueError(
                f"plan {text!r} has {len(labels)} choices, "
                f"{owner.value} owns {len(nodes)} nodes"
            )
        for nid, label in zip(nodes, labels):
            if label not in game.decision(nid).action_labels():
                raise ValueError(f"no action {label!r} at node {nid!r}")
        return StrategyPlan(owner, labels)


@dataclass(frozen=True)
class PathOutcome:
    """A root-to-leaf path and the payoff pair at its end."""

    actions: tuple[str, ...]
    leaf_id: str
    payoffs: PayoffPair


# -- operations ------------------------------------------------------


def enumerate_strategies(game: GameTree, player: Player) -> list[StrategyPlan]:
    """All total plans of ``player``, lexicographic by action labels."""
    nodes = game.owned_by(player)
    plans = [()]
    for nid in nodes:
        labels = game.decision(nid).action_labels()
        plans = [choice + (lab,) for choice in plans for lab in labels]
    return sorted(StrategyPlan(player, tuple(c)) for c in plans)


def play_profile(
    game: GameTree, plan_c: StrategyPlan, plan_p: StrategyPlan
) -> PathOutcome:
    """Walk the unique path induced by a full strategy profile."""
    byplayer = {Player.C: plan_c, Player.P: plan_p}
    actions: list[str] = []
    cur = game.root
    while True:
        node = game.nodes[cur]
        if isinstance(node, Leaf):
            return PathOutcome(tuple(actions), cur, node.payoffs)
        label = byplayer[node.owner].action_at(game, cur)
        actions.append(label)
        cur = node.child_of(label)


def walk_from(
    game: GameTree, node_id: str, plan_c: StrategyPlan, plan_p: StrategyPlan
) -> Leaf:
    """Follow a profile from an interior node down to a leaf."""
    byplayer = {Player.C: plan_c, Player.P: plan_p}
    cur = node_id
    while True:
        node = game.nodes[cur]
        if isinstance(node, Leaf):
            return node
        cur = node.child_of(byplayer[node.owner].action_at(game, cur))


def reaches(game: GameTree, plan: StrategyPlan, node_id: str) -> bool:
    """True iff the plan's own actions above ``node_id`` all lie on its path.

    Opponent actions above the node are unconstrained; a plan trivially
    reaches the root and every node with no own actions above it.
    """
    for step_node, step_label in game.path_to(node_id):
        if game.decision(step_node).owner is plan.owner:
            if plan.action_at(game, step_node) != step_label:
                return False
    return True


def has_relevant_ties(game: GameTree) -> bool:
    """Whether some player sees equal own-payoffs at two leaves under one
    of their decision nodes.  Without such ties every folding of the tree
    is unique."""
    for nid in game.decision_ids:
        owner = game.decision(nid).owner
        values = [leaf.payoffs.for_player(owner) for leaf in game.leaves_below(nid)]
        if len(values) != len(set(values)):
            return True
    return False


def is_alternating(game: GameTree) -> bool:
    """True iff owners alternate along every path (the shipped games do)."""
    for nid in game.decision_ids:
        node = game.decision(nid)
        for action in node.actions:
            child = game.nodes[action.child]
            if isinstance(child, Decision) and child.owner is node.owner:
                return False
    return True


# -- serialization ---------------------------------------------------


def load_game(text: str) -> GameTree:
    """Parse a UTF-8 JSON game file into a validated :class:`GameTree`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise GameParseError("top level must be a JSON object")
    for key in ("name", "players", "root", "nodes"):
        if key not in raw:
            raise GameParseError(f"missing field {key!r}")
    if raw["players"] != ["C", "P"]:
        raise GameParseError('players must be ["C", "P"]')
    nodes: dict[str, Node] = {}
    for nid, body in raw["nodes"].items():
        if not isinstance(body, dict):
            raise GameParseError(f"node {nid!r} must be an object")
        if "payoff" in body:
            payoff = body["payoff"]
            if (
                not isinstance(payoff, list)
                or len(payoff) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in payoff)
            ):
                raise GameParseError(f"leaf {nid!r} payoff must be [int, int]")
            nodes[nid] = Leaf(nid, PayoffPair(payoff[0], payoff[1]))
        elif "owner" in body and "actions" in body:
            if body["owner"] not in ("C", "P"):
                raise GameParseError(f"node {nid!r} owner must be C or P")
            actions: list[Action] = []
            for entry in body["actions"]:
                label = entry.get("label")
                child = entry.get("child")
                if not isinstance(label, str) or not isinstance(child, str):
                    raise GameParseError(f"bad action entry at node {nid!r}")
                if len(label) != 1 or not label.islower() or not label.isalpha():
                    raise GameParseError(
                        f"action label {label!r} must be a single lowercase letter"
                    )
                actions.append(Action(label, child))
            nodes[nid] = Decision(nid, Player(body["owner"]), tuple(actions))
        else:
            raise GameParseError(f"node {nid!r} is neither a leaf nor a decision")
    return GameTree(str(raw["name"]), str(raw["root"]), nodes)


def serialize_game(game: GameTree) -> str:
    """Inverse of :func:`load_game` up to key order."""
    nodes: dict[str, dict] = {}
    for nid in game.preorder:
        node = game.nodes[nid]
        if isinstance(node, Leaf):
            nodes[nid] = {"payoff": [node.payoffs.for_c, node.payoffs.for_p]}
        else:
            nodes[nid] = {
                "owner": node.owner.value,
                "actions": [{"label": a.label, "child": a.child} for a in node.actions],
            }
    doc = {"name": game.name, "players": ["C", "P"], "root": game.root, "nodes": nodes}
    return json.dumps(doc, indent=2) + "\n"


def load_game_file(path: str | os.PathLike) -> GameTree:
    with open(path, encoding="utf-8") as fh:
        return load_game(fh.read())


# -- shipped data ----------------------------------------------------

CANONICAL_GAME_IDS = ("game1", "game2", "game3", "game4", "game1prime", "game3prime")
PRACTICE_GAME_IDS = tuple(f"practice{i:02d}" for i in range(1, 15))

DATA_ENV_VAR = "EFRLAB_DATA"


def data_dir() -> str:
    """Directory holding the shipped game files; EFRLAB_DATA overrides."""
    override = os.environ.get(DATA_ENV_VAR)
    if override:
        return override
    return os.path.join(os.path.dirname(__file__), "data", "games")


def load_shipped_game(game_id: str) -> GameTree:
    return load_game_file(os.path.join(data_dir(), f"{game_id}.json"))


def canonical_games() -> dict[str, GameTree]:
    """The six experimental games, keyed by id, in protocol order."""
    return {gid: load_shipped_game(gid) for gid in CANONICAL_GAME_IDS}


def practice_games() -> dict[str, GameTree]:
    return {gid: load_shipped_game(gid) for gid in PRACTICE_GAME_IDS}


def iter_plans_pairs(game: GameTree) -> Iterator[tuple[StrategyPlan, StrategyPlan]]:
    """All (C plan, P plan) profiles."""
    for pc in enumerate_strategies(game, Player.C):
        for pp in enumerate_strategies(game, Player.P):
            yield pc, pp
