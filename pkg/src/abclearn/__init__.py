"""Exact tools for approval-based committee scoring and sequential Thiele rules."""

from abclearn.core import (
    Alternative,
    ApprovalVote,
    BivariateScoring,
    Committee,
    DomainError,
    PairDomain,
    Profile,
    UnivariateScoring,
    abcs_score,
    abcs_winners,
    pair_domain,
    seq_order,
    seq_winners,
    thiele_score,
    verify_abcs_winner,
    verify_seq_winner,
)
from abclearn.lp import (
    FeasibilityResult,
    LinearConstraintSystem,
    Relation,
    Status,
    feasible,
)

__all__ = [
    "Alternative",
    "ApprovalVote",
    "BivariateScoring",
    "Committee",
    "DomainError",
    "FeasibilityResult",
    "LinearConstraintSystem",
    "PairDomain",
    "Profile",
    "Relation",
    "Status",
    "UnivariateScoring",
    "abcs_score",
    "abcs_winners",
    "feasible",
    "pair_domain",
    "seq_order",
    "seq_winners",
    "thiele_score",
    "verify_abcs_winner",
    "verify_seq_winner",
]
