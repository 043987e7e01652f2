"""Monte-Carlo harness for realizable learning of committee rules.

Profiles are drawn i.i.d. from a vote-size law followed by a subset of that
size, labelled with a target rule's full winner set, and handed to the
matching consistent learner.  Error is the fraction of fresh test profiles
on which the learned winner set differs from the target's.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from abclearn.core import (
    BivariateScoring,
    DomainError,
    LabeledSample,
    Profile,
    UnivariateScoring,
    abcs_winners,
    seq_winners,
)
from abclearn.solvers import erm_abcs, erm_seq

log = logging.getLogger(__name__)

__all__ = [
    "LearnerFailure",
    "PacConfig",
    "PacReport",
    "PacRow",
    "label",
    "pac_experiment",
    "sample_profile",
]

CSV_HEADER = ("budget", "seed", "empirical_error", "train_consistent")


class LearnerFailure(RuntimeError):
    """The ABCS learner found no rule for labels produced by an ABCS rule."""


@dataclass(frozen=True)
class PacConfig:
    """Experiment parameters.

    Parameters
    ----------
    m, k, n : int
        Alternatives, committee size and voters per profile.
    sample_count : int
        Training profiles drawn per seed; budgets use prefixes of this draw.
    test_count : int
        Fresh profiles used to estimate the error.
    target : BivariateScoring or UnivariateScoring
        Labelling rule.  A univariate target is a Thiele rule unless
        ``sequential`` is set.
    size_law : sequence of float, optional
        Weights for vote sizes ``1 .. m-1`` (normalised internally).  The
        default is uniform.
    uniform_subset : bool
        Draw the approved set uniformly among sets of the drawn size.  When
        false the lowest-indexed alternatives are approved.
    budgets : sequence of int, optional
        Training-set sizes to report; defaults to ``(sample_count,)``.
    """

    m: int
    k: int
    n: int
    sample_count: int
    test_count: int
    target: BivariateScoring | UnivariateScoring
    seed: int = 0
    size_law: Sequence[float] | None = None
    uniform_subset: bool = True
    sequential: bool = False
    budgets: Sequence[int] | None = None
    seq_bound: int = 3

    def __post_init__(self) -> None:
        if not 1 < self.k < self.m:
            raise DomainError(f"need 1 < k < m, got k={self.k}, m={self.m}")
        if self.n < 1 or self.sample_count < 1 or self.test_count < 1:
            raise DomainError("n, sample_count and test_count must be at least 1")
        if self.size_law is not None:
            law = [float(w) for w in self.size_law]
            if len(law) != self.m - 1 or min(law) < 0 or sum(law) <= 0:
                raise DomainError(f"size law needs {self.m - 1} nonnegative weights with positive sum")
            object.__setattr__(self, "size_law", tuple(law))
        budgets = (self.sample_count,) if self.budgets is None else tuple(int(b) for b in self.budgets)
        if not budgets or min(budgets) < 0 or max(budgets) > self.sample_count:
            raise DomainError(f"budgets must lie in [0, {self.sample_count}]")
        object.__setattr__(self, "budgets", budgets)
        if isinstance(self.target, UnivariateScoring):
            if self.target.k != self.k:
                raise DomainError("target committee size differs from k")
        elif isinstance(self.target, BivariateScoring):
            if self.sequential:
                raise DomainError("sequential targets must be univariate")
            if (self.target.domain.m, self.target.domain.k) != (self.m, self.k):
                raise DomainError("target domain differs from (m, k)")
        else:
            raise DomainError(f"unsupported target {type(self.target).__name__}")

    @property
    def size_probabilities(self) -> np.ndarray:
        if self.size_law is None:
            return np.full(self.m - 1, 1.0 / (self.m - 1))
        law = np.array(self.size_law)
        return law / law.sum()


@dataclass(frozen=True)
class PacRow:
    budget: int
    seed: int
    empirical_error: Fraction
    train_consistent: bool


@dataclass
class PacReport:
    config: PacConfig
    rows: list[PacRow] = field(default_factory=list)

    def mean_error(self, budget: int) -> Fraction:
        errs = [r.empirical_error for r in self.rows if r.budget == budget]
        if not errs:
            raise KeyError(budget)
        return sum(errs, Fraction(0)) / len(errs)

    @property
    def all_consistent(self) -> bool:
        return all(r.train_consistent for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for r in self.rows:
            out.writerow([r.budget, r.seed, f"{float(r.empirical_error):.6f}", str(r.train_consistent).lower()])
        return buf.getvalue()


def sample_profile(cfg: PacConfig, rng: np.random.Generator | int) -> Profile:
    """Draw ``cfg.n`` votes independently under the configured law."""
    rng = np.random.default_rng(rng)
    sizes = rng.choice(np.arange(1, cfg.m), size=cfg.n, p=cfg.size_probabilities)
    votes = []
    for y in sizes:
        if cfg.uniform_subset:
            votes.append(frozenset(int(a) for a in rng.choice(cfg.m, size=int(y), replace=False)))
        else:
            votes.append(frozenset(range(int(y))))
    return Profile(cfg.m, votes)


def _winners(rule, cfg: PacConfig, P: Profile):
    if cfg.sequential:
        return frozenset(seq_winners(rule, P))
    return frozenset(abcs_winners(rule, P, cfg.k))


def label(cfg: PacConfig, P: Profile) -> LabeledSample:
    return LabeledSample(P, cfg.k, _winners(_as_rule(cfg.target, cfg), cfg, P))


def _as_rule(rule, cfg: PacConfig):
    if isinstance(rule, UnivariateScoring) and not cfg.sequential:
        return BivariateScoring.from_univariate(rule, cfg.m)
    return rule


def _learn(cfg: PacConfig, train: Sequence[LabeledSample]):
    if cfg.sequential:
        return erm_seq(train, bound=cfg.seq_bound, k=cfg.k)
    return erm_abcs(train, m=cfg.m, k=cfg.k)


def pac_experiment(cfg: PacConfig, seeds: Sequence[int] | None = None) -> PacReport:
    """One row per (seed, budget).

    For each seed the training and test profiles are drawn once from
    independent streams; each budget trains on a prefix of the training
    draw, so budgets are directly comparable.

    Raises
    ------
    LearnerFailure
        If the ABCS learner rejects realizable labels.
    """
    report = PacReport(cfg)
    for seed in (cfg.seed,) if seeds is None else seeds:
        train_ss, test_ss = np.random.SeedSequence(int(seed)).spawn(2)
        train_rng = np.random.default_rng(train_ss)
        test_rng = np.random.default_rng(test_ss)
        train = [label(cfg, sample_profile(cfg, train_rng)) for _ in range(cfg.sample_count)]
        test = [label(cfg, sample_profile(cfg, test_rng)) for _ in range(cfg.test_count)]
        for budget in cfg.budgets:
            used = train[:budget]
            rule = _learn(cfg, used)
            if rule is None:
                if not cfg.sequential:
                    raise LearnerFailure(f"no consistent ABCS rule at budget {budget}, seed {seed}")
                log.warning("sequential learner failed at budget %d, seed %d (target off the grid?)", budget, seed)
                report.rows.append(PacRow(budget, int(seed), Fraction(1), False))
                continue
            rule = _as_rule(rule, cfg)
            consistent = all(_winners(rule, cfg, s.profile) == s.winners for s in used)
            wrong = sum(_winners(rule, cfg, s.profile) != s.winners for s in test)
            report.rows.append(PacRow(budget, int(seed), Fraction(wrong, cfg.test_count), consistent))
    return report
