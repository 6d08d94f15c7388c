"""Solution concepts for perfect-information games with payoff ties.

Two solvers live here.  ``backward_induction`` folds the tree with
set-valued continuation values, so with payoff ties an action counts as
a fold choice whenever *some* resolution of the ties below makes it
optimal; subgame-perfect profiles are computed independently by brute
force as a cross-check.  ``efr`` runs iterated best-rationalization
elimination: a plan survives a level when, at every one of its owner's
decision nodes, its continuation is a best response to some conjecture
over the highest-level surviving opponent plans that reach the node.
All comparisons use exact rational arithmetic; there is no tolerance.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .games import (
    Action,
    Decision,
    GameTree,
    Leaf,
    PathOutcome,
    PayoffPair,
    Player,
    StrategyPlan,
    enumerate_strategies,
    has_relevant_ties,
    play_profile,
    reaches,
    walk_from,
)
from .rational_lp import solve_zero_sum


# -- backward induction ----------------------------------------------


@dataclass(frozen=True)
class BIReport:
    bi_choices: Mapping[str, frozenset[str]]
    bi_strategies: Mapping[Player, frozenset[StrategyPlan]]
    bi_outcomes: frozenset[PathOutcome]
    spe_profiles: frozenset[tuple[StrategyPlan, StrategyPlan]] | None


def backward_induction(game: GameTree, include_spe: bool = True) -> BIReport:
    """Fold choices, fold-consistent strategy sets, fold outcomes and
    (optionally) the brute-forced subgame-perfect profiles."""
    values: dict[str, list[PayoffPair]] = {}
    choices: dict[str, frozenset[str]] = {}

    for nid in reversed(game.preorder):
        node = game.nodes[nid]
        if isinstance(node, Leaf):
            values[nid] = [node.payoffs]
            continue
        child_vals = [values[a.child] for a in node.actions]
        comp = lambda pair: pair.for_player(node.owner)  # noqa: E731
        mins = [min(comp(v) for v in vals) for vals in child_vals]
        keep: list[PayoffPair] = []
        labels: set[str] = set()
        for idx, action in enumerate(node.actions):
            # An action is a fold choice iff its best tie-resolution beats
            # every sibling's worst one.
            rival_floor = max((mins[j] for j in range(len(mins)) if j != idx), default=None)
            for val in child_vals[idx]:
                if rival_floor is None or comp(val) >= rival_floor:
                    labels.add(action.label)
                    if val not in keep:
                        keep.append(val)
        values[nid] = keep
        choices[nid] = frozenset(labels)

    strategies: dict[Player, frozenset[StrategyPlan]] = {}
    for player in Player:
        plans = [()]
        for nid in game.owned_by(player):
            plans = [c + (lab,) for c in plans for lab in sorted(choices[nid])]
        strategies[player] = frozenset(StrategyPlan(player, tuple(c)) for c in plans)

    outcomes: set[PathOutcome] = set()
    stack: list[tuple[str, tuple[str, ...]]] = [(game.root, ())]
    while stack:
        nid, path = stack.pop()
        node = game.nodes[nid]
        if isinstance(node, Leaf):
            outcomes.add(PathOutcome(path, nid, node.payoffs))
            continue
        for action in node.actions:
            if action.label in choices[nid]:
                stack.append((action.child, path + (action.label,)))

    spe = frozenset(_spe_profiles(game)) if include_spe else None
    return BIReport(choices, strategies, frozenset(outcomes), spe)


def _spe_profiles(game: GameTree) -> Iterable[tuple[StrategyPlan, StrategyPlan]]:
    """Profiles that pass the one-shot-deviation check in every subgame."""
    plans_c = enumerate_strategies(game, Player.C)
    plans_p = enumerate_strategies(game, Player.P)
    for pc, pp in itertools.product(plans_c, plans_p):
        byplayer = {Player.C: pc, Player.P: pp}
        ok = True
        for nid in game.decision_ids:
            node = game.decision(nid)
            plan = byplayer[node.owner]
            chosen = plan.action_at(game, nid)
            here = walk_from(game, node.child_of(chosen), pc, pp).payoffs
            for action in node.actions:
                if action.label == chosen:
                    continue
                dev = walk_from(game, action.child, pc, pp).payoffs
                if dev.for_player(node.owner) > here.for_player(node.owner):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            yield pc, pp


def spe_profiles(game: GameTree) -> frozenset[tuple[StrategyPlan, StrategyPlan]]:
    return frozenset(_spe_profiles(game))


# -- conjectures and justifiability ----------------------------------


@dataclass(frozen=True)
class Conjecture:
    """A belief over opponent plans: positive rational weights summing to 1."""

    support: tuple[StrategyPlan, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.weights) or not self.support:
            raise ValueError("support and weights must align and be non-empty")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if sum(self.weights) != 1:
            raise ValueError("weights must sum to 1")

    def weight_of(self, plan: StrategyPlan) -> Fraction:
        for p, w in zip(self.support, self.weights):
            if p == plan:
                return w
        return Fraction(0)

    def items(self) -> tuple[tuple[StrategyPlan, Fraction], ...]:
        return tuple(zip(self.support, self.weights))


class JustifiabilityError(ValueError):
    """A supplied plan does not satisfy the preconditions at the node."""


def node_payoff(
    game: GameTree, node_id: str, own: StrategyPlan, rival: StrategyPlan
) -> int:
    """The node owner's payoff when both plans are followed from the node."""
    plans = {own.owner: own, rival.owner: rival}
    leaf = walk_from(game, node_id, plans[Player.C], plans[Player.P])
    return leaf.payoffs.for_player(own.owner)


def justifiable(
    game: GameTree,
    candidate: StrategyPlan,
    node_id: str,
    rivals: Sequence[StrategyPlan],
    alternatives: Sequence[StrategyPlan] | None = None,
) -> Conjecture | None:
    """A conjecture over ``rivals`` making ``candidate`` weakly optimal at
    the node among ``alternatives``, or None when every conjecture is
    beaten by some mixture of alternatives.

    ``alternatives`` defaults to all of the candidate owner's plans that
    reach the node.  All supplied plans must reach the node.
    """
    owner = game.decision(node_id).owner
    if candidate.owner is not owner:
        raise JustifiabilityError("candidate must be owned by the node's player")
    if not rivals:
        raise JustifiabilityError("rivals must be non-empty")
    if not reaches(game, candidate, node_id):
        raise JustifiabilityError("candidate does not reach the node")
    for rival in rivals:
        if rival.owner is owner or not reaches(game, rival, node_id):
            raise JustifiabilityError("every rival must be an opponent plan reaching the node")
    if alternatives is None:
        alternatives = [
            p for p in enumerate_strategies(game, owner) if reaches(game, p, node_id)
        ]
    else:
        for alt in alternatives:
            if alt.owner is not owner or not reaches(game, alt, node_id):
                raise JustifiabilityError("every alternative must reach the node")

    cand_vec = [node_payoff(game, node_id, candidate, r) for r in rivals]
    alt_vecs: list[list[int]] = []
    seen: set[tuple[int, ...]] = set()
    for alt in alternatives:
        vec = tuple(node_payoff(game, node_id, alt, r) for r in rivals)
        if vec not in seen:
            seen.add(vec)
            alt_vecs.append(list(vec))

    # Pure-belief fast path: optimal against some single rival.
    best_per_rival = [max(vec[j] for vec in alt_vecs) if alt_vecs else cand_vec[j]
                      for j in range(len(rivals))]
    for j in range(len(rivals)):
        if cand_vec[j] >= best_per_rival[j]:
            return Conjecture((rivals[j],), (Fraction(1),))

    delta = [[vec[j] - cand_vec[j] for j in range(len(rivals))] for vec in alt_vecs]
    value, _, col_mix = solve_zero_sum(delta)
    if value > 0:
        return None
    support = tuple(r for r, w in zip(rivals, col_mix) if w > 0)
    weights = tuple(w for w in col_mix if w > 0)
    return Conjecture(support, weights)


# -- extensive-form rationalizability --------------------------------


@dataclass(frozen=True)
class Elimination:
    plan: StrategyPlan
    level: int
    node_id: str


@dataclass(frozen=True)
class EFRReport:
    levels: tuple[Mapping[Player, tuple[StrategyPlan, ...]], ...]
    efr_strategies: Mapping[Player, frozenset[StrategyPlan]]
    efr_outcomes: frozenset[PathOutcome]
    trace: tuple[Elimination, ...]


def _projection(game: GameTree, plan: StrategyPlan, node_id: str) -> dict[str, str]:
    """The plan's reduced behavior from ``node_id`` down: actions at the
    owner's nodes reachable from the node given the plan's own choices."""
    out: dict[str, str] = {}
    stack = [node_id]
    while stack:
        nid = stack.pop()
        node = game.nodes[nid]
        if isinstance(node, Leaf):
            continue
        if node.owner is plan.owner:
            label = plan.action_at(game, nid)
            out[nid] = label
            stack.append(node.child_of(label))
        else:
            stack.extend(a.child for a in node.actions)
    return out


def _behavior_key(behavior: Mapping[str, str]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(behavior.items()))


def _top_own_nodes(game: GameTree, player: Player, node_id: str) -> list[str]:
    """Maximal decision nodes of ``player`` inside the subtree."""
    out: list[str] = []
    stack = [node_id]
    while stack:
        nid = stack.pop()
        node = game.nodes[nid]
        if isinstance(node, Leaf):
            continue
        if node.owner is player:
            out.append(nid)
        else:
            stack.extend(a.child for a in reversed(node.actions))
    return out


def _reduced_continuations(
    game: GameTree, player: Player, node_id: str
) -> list[dict[str, str]]:
    """All reduced behaviors of ``player`` within the subtree at the node."""
    node = game.nodes[node_id]
    if isinstance(node, Leaf):
        return [{}]
    if isinstance(node, Decision) and node.owner is player:
        out: list[dict[str, str]] = []
        for action in node.actions:
            for sub in _reduced_continuations(game, player, action.child):
                behavior = {node_id: action.label}
                behavior.update(sub)
                out.append(behavior)
        return out
    tops = _top_own_nodes(game, player, node_id)
    per_top = [_reduced_continuations(game, player, t) for t in tops]
    out = []
    for combo in itertools.product(*per_top):
        behavior: dict[str, str] = {}
        for part in combo:
            behavior.update(part)
        out.append(behavior)
    return out


def _walk_behaviors(
    game: GameTree,
    node_id: str,
    own: Mapping[str, str],
    rival: Mapping[str, str],
    owner: Player,
) -> int:
    cur = node_id
    while True:
        node = game.nodes[cur]
        if isinstance(node, Leaf):
            return node.payoffs.for_player(owner)
        label = own[cur] if node.owner is owner else rival[cur]
        cur = node.child_of(label)


class _EfrState:
    """Per-level bookkeeping shared by the elimination loop."""

    def __init__(self, game: GameTree):
        self.game = game
        self.levels: list[dict[Player, tuple[StrategyPlan, ...]]] = []
        # per level, per player, per decision node: plans reaching the node
        self.reaching: list[dict[Player, dict[str, tuple[StrategyPlan, ...]]]] = []
        self.alternatives: dict[str, list[dict[str, str]]] = {}
        self._just_cache: dict[tuple, bool] = {}

    def push_level(self, sets: dict[Player, tuple[StrategyPlan, ...]]) -> None:
        reach: dict[Player, dict[str, tuple[StrategyPlan, ...]]] = {}
        for player in Player:
            reach[player] = {}
            for nid in self.game.decision_ids:
                reach[player][nid] = tuple(
                    p for p in sets[player] if reaches(self.game, p, nid)
                )
        self.levels.append(sets)
        self.reaching.append(reach)

    def rationalization_level(self, opponent: Player, node_id: str) -> int:
        for level in range(len(self.levels) - 1, -1, -1):
            if self.reaching[level][opponent][node_id]:
                return level
        raise AssertionError("level 0 always contains a reaching plan")

    def alt_behaviors(self, node_id: str) -> list[dict[str, str]]:
        if node_id not in self.alternatives:
            owner = self.game.decision(node_id).owner
            self.alternatives[node_id] = _reduced_continuations(
                self.game, owner, node_id
            )
        return self.alternatives[node_id]

    def justifiable_at(self, plan: StrategyPlan, node_id: str) -> bool:
        owner = plan.owner
        opponent = owner.other
        m = self.rationalization_level(opponent, node_id)
        cont = _projection(self.game, plan, node_id)
        key = (node_id, _behavior_key(cont), m)
        cached = self._just_cache.get(key)
        if cached is None:
            rival_behaviors: list[dict[str, str]] = []
            seen: set[tuple] = set()
            for rival in self.reaching[m][opponent][node_id]:
                proj = _projection(self.game, rival, node_id)
                rkey = _behavior_key(proj)
                if rkey not in seen:
                    seen.add(rkey)
                    rival_behaviors.append(proj)
            cached = self._check(node_id, owner, cont, rival_behaviors)
            self._just_cache[key] = cached
        return cached

    def _check(
        self,
        node_id: str,
        owner: Player,
        cont: Mapping[str, str],
        rivals: list[dict[str, str]],
    ) -> bool:
        game = self.game
        cand_vec = [
            _walk_behaviors(game, node_id, cont, r, owner) for r in rivals
        ]
        vecs: list[tuple[int, ...]] = []
        seen: set[tuple[int, ...]] = set()
        for alt in self.alt_behaviors(node_id):
            vec = tuple(_walk_behaviors(game, node_id, alt, r, owner) for r in rivals)
            if vec not in seen:
                seen.add(vec)
                vecs.append(vec)
        best = [max(v[j] for v in vecs) for j in range(len(rivals))]
        if any(cand_vec[j] >= best[j] for j in range(len(rivals))):
            return True  # optimal against a point belief
        if any(all(v[j] > cand_vec[j] for j in range(len(rivals))) for v in vecs):
            return False  # strictly dominated by a pure alternative
        delta = [[v[j] - cand_vec[j] for j in range(len(rivals))] for v in vecs]
        value, _, _ = solve_zero_sum(delta)
        return value <= 0


def efr(game: GameTree) -> EFRReport:
    """Iterated best-rationalization elimination to a fixpoint.

    A plan survives a level iff at every decision node of its owner
    (both on and off its own path) its reduced continuation there is a
    best response to some conjecture over the opponent plans that reach
    the node at the highest level still reaching it.  The last two
    recorded levels are equal.
    """
    state = _EfrState(game)
    state.push_level({p: tuple(enumerate_strategies(game, p)) for p in Player})
    trace: list[Elimination] = []

    while True:
        current = state.levels[-1]
        level_no = len(state.levels)
        new: dict[Player, tuple[StrategyPlan, ...]] = {}
        for player in Player:
            survivors: list[StrategyPlan] = []
            for plan in current[player]:
                failed_at = None
                for nid in game.owned_by(player):
                    if not state.justifiable_at(plan, nid):
                        failed_at = nid
                        break
                if failed_at is None:
                    survivors.append(plan)
                else:
                    trace.append(Elimination(plan, level_no, failed_at))
            new[player] = tuple(survivors)
        state.push_level(new)
        if new == current:
            break

    fixpoint = {p: frozenset(state.levels[-1][p]) for p in Player}
    outcomes: set[PathOutcome] = set()
    for pc in fixpoint[Player.C]:
        for pp in fixpoint[Player.P]:
            outcomes.add(play_profile(game, pc, pp))
    return EFRReport(
        levels=tuple({p: lv[p] for p in Player} for lv in state.levels),
        efr_strategies=fixpoint,
        efr_outcomes=frozenset(outcomes),
        trace=tuple(trace),
    )


# -- theorem checking -------------------------------------------------


@dataclass(frozen=True)
class TheoremReport:
    ties: bool
    efr_subset_of_bi: bool
    unique_outcome_match: bool | None
    bi_outcomes: frozenset[PathOutcome] = field(repr=False, default=frozenset())
    efr_outcomes: frozenset[PathOutcome] = field(repr=False, default=frozenset())


def check_theorems(game: GameTree) -> TheoremReport:
    """Outcome-level relations between the two solvers on one game."""
    bi = backward_induction(game, include_spe=False)
    ef = efr(game)
    ties = has_relevant_ties(game)
    subset = ef.efr_outcomes <= bi.bi_outcomes
    unique = None
    if not ties:
        unique = (
            len(bi.bi_outcomes) == 1
            and len(ef.efr_outcomes) == 1
            and bi.bi_outcomes == ef.efr_outcomes
        )
    return TheoremReport(ties, subset, unique, bi.bi_outcomes, ef.efr_outcomes)


# -- random game generation -------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class GenerationBudgetError(RuntimeError):
    """Raised when parameters make a conforming game impossible to draw."""


def random_game(
    seed: int,
    depth: int,
    branching: int,
    payoff_range: tuple[int, int] = (0, 9),
    forbid_relevant_ties: bool = False,
    max_plans_per_player: int = 64,
    continue_prob: float = 0.6,
) -> GameTree:
    """Seeded random alternating game tree.

    ``depth`` bounds the number of decision nodes on any path; every
    decision node has exactly ``branching`` actions.  Tree growth is
    capped so each player's total plan count stays at or below
    ``max_plans_per_player`` and action labels stay within the alphabet,
    which keeps the property suites fast.  With
    ``forbid_relevant_ties`` the leaf payoffs are drawn per player
    without replacement, which rules ties out by construction; the draw
    is retried and then aborted when the payoff range is too small.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if branching < 2:
        raise ValueError("branching must be >= 2")
    lo, hi = payoff_range
    if hi < lo:
        raise ValueError("empty payoff range")
    rng = random.Random(seed)
    for _ in range(64):
        tree = _grow_tree(rng, depth, branching, max_plans_per_player,
                          range_size=hi - lo + 1 if forbid_relevant_ties else None,
                          continue_prob=continue_prob)
        game = _assign_payoffs(tree, rng, lo, hi, forbid_relevant_ties,
                               seed, depth, branching)
        if game is not None:
            return game
    raise GenerationBudgetError(
        "could not draw a conforming game; widen the payoff range"
    )


def _grow_tree(
    rng: random.Random,
    depth: int,
    branching: int,
    max_plans: int,
    range_size: int | None,
    continue_prob: float,
) -> list[tuple[str, Player | None, list[int]]]:
    """Grow node records ``(id, owner-or-None, child indices)``; leaves
    have owner None.  Growth respects the plan-count, label and leaf
    budgets."""
    root_owner = rng.choice([Player.C, Player.P])
    plan_count = {Player.C: 1, Player.P: 1}
    nodes: list[tuple[str, Player | None, list[int]]] = []
    labels_used = 0
    leaves = 1  # the root counts until it becomes a decision node

    def can_split(owner: Player) -> bool:
        if plan_count[owner] * branching > max_plans:
            return False
        if labels_used + branching > len(_LETTERS):
            return False
        if range_size is not None and leaves + (branching - 1) > range_size:
            return False
        return True

    def build(owner: Player, level: int) -> int:
        nonlocal labels_used, leaves
        idx = len(nodes)
        nodes.append((f"n{idx}", owner, []))
        plan_count[owner] *= branching
        labels_used += branching
        leaves += branching - 1
        children: list[int] = []
        for _ in range(branching):
            child_owner = owner.other
            if level < depth and can_split(child_owner) and rng.random() < continue_prob:
                children.append(build(child_owner, level + 1))
            else:
                cidx = len(nodes)
                nodes.append((f"t{cidx}", None, []))
                children.append(cidx)
        nodes[idx] = (nodes[idx][0], owner, children)
        return idx

    build(root_owner, 1)
    return nodes


def _assign_payoffs(
    records: list[tuple[str, Player | None, list[int]]],
    rng: random.Random,
    lo: int,
    hi: int,
    forbid_ties: bool,
    seed: int,
    depth: int,
    branching: int,
) -> GameTree | None:
    leaf_ids = [rec[0] for rec in records if rec[1] is None]
    span = hi - lo + 1
    if forbid_ties:
        if len(leaf_ids) > span:
            return None
        vals_c = rng.sample(range(lo, hi + 1), len(leaf_ids))
        vals_p = rng.sample(range(lo, hi + 1), len(leaf_ids))
        payoffs = {lid: PayoffPair(c, p) for lid, c, p in zip(leaf_ids, vals_c, vals_p)}
    else:
        payoffs = {
            lid: PayoffPair(rng.randint(lo, hi), rng.randint(lo, hi))
            for lid in leaf_ids
        }
    label_iter = iter(_LETTERS)
    nodes: dict[str, Decision | Leaf] = {}
    for rec in records:
        nid, owner, children = rec
        if owner is None:
            nodes[nid] = Leaf(nid, payoffs[nid])
        else:
            actions = tuple(
                Action(next(label_iter), records[ci][0]) for ci in children
            )
            nodes[nid] = Decision(nid, owner, actions)
    name = f"random-s{seed}-d{depth}-b{branching}"
    game = GameTree(name, records[0][0], nodes)
    if forbid_ties and has_relevant_ties(game):
        return None
    return game
