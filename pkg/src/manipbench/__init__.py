"""manipbench: measuring voting-method resistance to single-voter manipulation.

A library and CLI for computing exact optimal manipulations of preferential
voting methods with a brute-force oracle, and for training small feed-forward
networks to manipulate under limited polling information.
"""

__version__ = "0.1.0"

from .elections import (
    MarginMatrix,
    Profile,
    Ranking,
    UtilityProfile,
    WinnerSet,
    condorcet_winner,
    induced_profile,
    margin,
    margin_matrix,
    remove_candidate,
    replace_ballot,
)
from .voting_methods import MethodId, apply_method, lottery_eu

__all__ = [
    "MarginMatrix",
    "MethodId",
    "Profile",
    "Ranking",
    "UtilityProfile",
    "WinnerSet",
    "apply_method",
    "condorcet_winner",
    "induced_profile",
    "lottery_eu",
    "margin",
    "margin_matrix",
    "remove_candidate",
    "replace_ballot",
    "__version__",
]
