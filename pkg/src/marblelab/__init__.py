"""marblelab: solve marble-drop games and simulate the trapdoor experiment.

The package splits into a solving core (``games``, ``solver``), the
experiment machinery (``opponent``, ``session``, ``service``) and the
synthetic-participant analytics (``agents``, ``analysis``), all bound by
the ``marblelab`` command line tool.
"""

from .games import (
    GameTree,
    PathOutcome,
    PayoffPair,
    Player,
    StrategyPlan,
    canonical_games,
    enumerate_strategies,
    has_relevant_ties,
    load_game,
    load_game_file,
    play_profile,
    practice_games,
    reaches,
    serialize_game,
)
from .solver import (
    BIReport,
    Conjecture,
    EFRReport,
    TheoremReport,
    backward_induction,
    check_theorems,
    efr,
    justifiable,
    random_game,
)

__all__ = [
    "GameTree",
    "PathOutcome",
    "PayoffPair",
    "Player",
    "StrategyPlan",
    "canonical_games",
    "enumerate_strategies",
    "has_relevant_ties",
    "load_game",
    "load_game_file",
    "play_profile",
    "practice_games",
    "reaches",
    "serialize_game",
    "BIReport",
    "Conjecture",
    "EFRReport",
    "TheoremReport",
    "backward_induction",
    "check_theorems",
    "efr",
    "justifiable",
    "random_game",
]

__version__ = "0.1.0"
