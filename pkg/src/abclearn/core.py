"""Profiles, committees, scoring functions and exact rule evaluation.

ABCS rules score a committee ``C`` by ``sum_i f(|C & v_i|, |v_i|)`` and
elect every committee of maximum score.  Sequential Thiele rules grow a
committee greedily; a committee wins if some greedy run, breaking each tie
in any way, ends on it.

All scores are exact.  Rational scoring values are scaled to a common
denominator and compared as integers.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from abclearn import _kernel


class DomainError(ValueError):
    """Input outside the domain on which a rule is defined."""


@dataclass(frozen=True)
class Alternative:
    index: int
    name: str | None = None


@dataclass(frozen=True)
class ApprovalVote:
    alternatives: frozenset[int]
    multiplicity: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "alternatives", frozenset(self.alternatives))
        if not self.alternatives:
            raise DomainError("approval vote must be nonempty")
        if self.multiplicity < 1:
            raise DomainError("vote multiplicity must be positive")

    @property
    def size(self) -> int:
        return len(self.alternatives)


@functools.total_ordering
class Committee:
    """A set of alternative indices kept in ascending order."""

    __slots__ = ("members", "_hash")

    def __init__(self, members: Iterable[int]) -> None:
        mem = tuple(sorted(int(i) for i in members))
        if len(set(mem)) != len(mem):
            raise DomainError(f"repeated committee member in {mem}")
        self.members = mem
        self._hash = hash(mem)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Committee):
            return self.members == other.members
        return NotImplemented

    def __lt__(self, other: "Committee") -> bool:
        return self.members < other.members

    def __repr__(self) -> str:
        return f"Committee({list(self.members)})"

    @property
    def set(self) -> frozenset[int]:
        return frozenset(self.members)


class Profile:
    """A multiset of approval votes over ``m`` indexed alternatives.

    Parameters
    ----------
    m : int
        Number of alternatives.
    votes : iterable
        Each entry is an :class:`ApprovalVote`, a ``(set, multiplicity)``
        pair, or a bare set.  Set members may be indices or names.
    names : sequence of str, optional
        Display names; defaults to ``a0 .. a{m-1}``.
    """

    def __init__(self, m: int, votes: Iterable, names: Sequence[str] | None = None) -> None:
        if m < 2:
            raise DomainError("need at least two alternatives")
        self.m = int(m)
        if names is None:
            names = [f"a{i}" for i in range(m)]
        names = [str(x) for x in names]
        if len(names) != m:
            raise DomainError(f"{len(names)} names given for {m} alternatives")
        if len(set(names)) != m:
            raise DomainError("alternative names must be unique")
        self.names = tuple(names)
        self._index = {nm: i for i, nm in enumerate(self.names)}
        parsed = []
        for v in votes:
            if isinstance(v, ApprovalVote):
                vote = v
            elif isinstance(v, tuple) and len(v) == 2 and isinstance(v[1], int) and not isinstance(v[0], int):
                vote = ApprovalVote(frozenset(self._resolve(a) for a in v[0]), v[1])
            else:
                vote = ApprovalVote(frozenset(self._resolve(a) for a in v))
            for a in vote.alternatives:
                if not 0 <= a < m:
                    raise DomainError(f"alternative index {a} out of range for m={m}")
            if vote.size >= m:
                raise DomainError("votes approving every alternative are not scored")
            parsed.append(vote)
        if not parsed:
            raise DomainError("profile must contain at least one vote")
        self.votes = tuple(parsed)

    def _resolve(self, a) -> int:
        if isinstance(a, (int, np.integer)):
            return int(a)
        try:
            return self._index[a]
        except KeyError:
            raise DomainError(f"unknown alternative {a!r}") from None

    @property
    def n(self) -> int:
        return sum(v.multiplicity for v in self.votes)

    @property
    def alternatives(self) -> list[Alternative]:
        return [Alternative(i, nm) for i, nm in enumerate(self.names)]

    def index(self, name: str) -> int:
        return self._resolve(name)

    def committee(self, members: Iterable) -> Committee:
        return Committee(self._resolve(a) for a in members)

    def committee_names(self, committee: Committee) -> list[str]:
        return [self.names[i] for i in committee]

    def expanded(self) -> list[frozenset[int]]:
        """One entry per voter (multiplicities unrolled)."""
        out = []
        for v in self.votes:
            out.extend([v.alternatives] * v.multiplicity)
        return out

    def __repr__(self) -> str:
        return f"Profile(m={self.m}, votes={len(self.votes)}, n={self.n})"

    @functools.cached_property
    def arrays(self) -> "_kernel.ProfileArrays":
        return _kernel.ProfileArrays.build(self)


# --------------------------------------------------------------------------
# scoring functions


def _lowest(m: int, k: int, y: int) -> int:
    return max(0, y - m + k)


def _highest(k: int, y: int) -> int:
    return min(k, y)


@dataclass(frozen=True)
class PairDomain:
    """The (intersection size, vote size) pairs a committee can realise."""

    m: int
    k: int
    pairs: tuple[tuple[int, int], ...]

    def lowest(self, y: int) -> int:
        return _lowest(self.m, self.k, y)

    def highest(self, y: int) -> int:
        return _highest(self.k, y)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair) -> bool:
        x, y = pair
        return 1 <= y <= self.m - 1 and self.lowest(y) <= x <= self.highest(y)

    def step_pairs(self) -> tuple[tuple[int, int], ...]:
        """Pairs above the lowest entry of their row (increment positions)."""
        return tuple((x, y) for x, y in self.pairs if x > self.lowest(y))


def _check_mk(m: int, k: int) -> None:
    if not 1 < k < m:
        raise DomainError(f"need 1 < k < m, got m={m}, k={k}")


@functools.lru_cache(maxsize=None)
def pair_domain(m: int, k: int) -> PairDomain:
    _check_mk(m, k)
    pairs = tuple(
        (x, y)
        for y in range(1, m)
        for x in range(_lowest(m, k, y), _highest(k, y) + 1)
    )
    return PairDomain(m, k, pairs)


def _frac(v) -> Fraction:
    q = Fraction(v)
    return q


class BivariateScoring:
    """A scoring function ``f(x, y)`` over the pair domain of ``(m, k)``.

    Values must be nonnegative and nondecreasing in ``x``.  Normalisation
    (zero at the lowest ``x`` of every row) is available through
    :meth:`normalized` but not required, so that lifted Thiele functions
    such as CC can be represented directly.
    """

    def __init__(self, domain: PairDomain, values: Mapping[tuple[int, int], object] | None = None) -> None:
        self.domain = domain
        vals = {p: Fraction(0) for p in domain.pairs}
        for p, v in (values or {}).items():
            p = (int(p[0]), int(p[1]))
            if p not in vals:
                raise DomainError(f"pair {p} not in X_(m={domain.m},k={domain.k})")
            vals[p] = _frac(v)
        for p, v in vals.items():
            if v < 0:
                raise DomainError(f"negative score at {p}")
        for x, y in domain.pairs:
            if x > domain.lowest(y) and vals[(x, y)] < vals[(x - 1, y)]:
                raise DomainError(f"score not monotone at {(x, y)}")
        self.values = vals

    @property
    def m(self) -> int:
        return self.domain.m

    @property
    def k(self) -> int:
        return self.domain.k

    def __call__(self, x: int, y: int) -> Fraction:
        try:
            return self.values[(x, y)]
        except KeyError:
            raise DomainError(f"pair {(x, y)} not in domain") from None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BivariateScoring)
            and self.domain == other.domain
            and self.values == other.values
        )

    def __repr__(self) -> str:
        nz = {p: str(v) for p, v in self.values.items() if v}
        return f"BivariateScoring(m={self.m}, k={self.k}, nonzero={nz})"

    @property
    def is_trivial(self) -> bool:
        return not any(self.values.values())

    @property
    def is_normalized(self) -> bool:
        return all(self.values[(self.domain.lowest(y), y)] == 0 for y in range(1, self.m))

    def normalized(self) -> "BivariateScoring":
        base = {y: self.values[(self.domain.lowest(y), y)] for y in range(1, self.m)}
        return BivariateScoring(self.domain, {(x, y): v - base[y] for (x, y), v in self.values.items()})

    def affine(self, scale, shift: Mapping[int, object]) -> "BivariateScoring":
        """``g(x, y) = scale * f(x, y) + shift[y]`` (same winners for ``scale > 0``)."""
        scale = Fraction(scale)
        return BivariateScoring(
            self.domain,
            {(x, y): scale * v + Fraction(shift.get(y, 0)) for (x, y), v in self.values.items()},
        )

    @classmethod
    def from_univariate(cls, s: "UnivariateScoring", m: int) -> "BivariateScoring":
        dom = pair_domain(m, s.k)
        return cls(dom, {(x, y): s(x) for x, y in dom.pairs})

    @classmethod
    def trivial(cls, m: int, k: int) -> "BivariateScoring":
        return cls(pair_domain(m, k))

    @classmethod
    def cc(cls, m: int, k: int) -> "BivariateScoring":
        return cls.from_univariate(UnivariateScoring.cc(k), m)

    @classmethod
    def av(cls, m: int, k: int) -> "BivariateScoring":
        return cls.from_univariate(UnivariateScoring.av(k), m)


class UnivariateScoring:
    """A Thiele scoring function ``s(0..k)`` with ``s(0) = 0``, nondecreasing."""

    def __init__(self, values: Sequence) -> None:
        vals = tuple(_frac(v) for v in values)
        if len(vals) < 2:
            raise DomainError("need values for 0..k with k >= 1")
        if vals[0] != 0:
            raise DomainError("s(0) must be 0")
        for j in range(1, len(vals)):
            if vals[j] < vals[j - 1]:
                raise DomainError(f"score not monotone at {j}")
        self.values = vals

    @property
    def k(self) -> int:
        return len(self.values) - 1

    def __call__(self, x: int) -> Fraction:
        return self.values[x]

    def __eq__(self, other) -> bool:
        return isinstance(other, UnivariateScoring) and self.values == other.values

    def __hash__(self) -> int:
        return hash(self.values)

    def __repr__(self) -> str:
        return f"UnivariateScoring({[str(v) for v in self.values]})"

    @property
    def is_trivial(self) -> bool:
        return self.values[-1] == 0

    def increments(self) -> tuple[Fraction, ...]:
        return tuple(self.values[j] - self.values[j - 1] for j in range(1, len(self.values)))

    @classmethod
    def from_increments(cls, inc: Sequence) -> "UnivariateScoring":
        vals = [Fraction(0)]
        for d in inc:
            vals.append(vals[-1] + Fraction(d))
        return cls(vals)

    @classmethod
    def cc(cls, k: int) -> "UnivariateScoring":
        return cls([0] + [1] * k)

    @classmethod
    def av(cls, k: int) -> "UnivariateScoring":
        return cls(range(k + 1))

    @classmethod
    def trivial(cls, k: int) -> "UnivariateScoring":
        return cls([0] * (k + 1))


# --------------------------------------------------------------------------
# ABCS evaluation


def _check_committee(C: Committee, m: int, k: int | None = None) -> None:
    if any(not 0 <= c < m for c in C):
        raise DomainError(f"committee {C} has members outside 0..{m - 1}")
    if k is not None and len(C) != k:
        raise DomainError(f"committee {C} does not have size {k}")


def _check_consistent(f: BivariateScoring, P: Profile) -> None:
    if f.m != P.m:
        raise DomainError(f"rule built for m={f.m}, profile has m={P.m}")


def abcs_score(f: BivariateScoring, C: Committee, P: Profile) -> Fraction:
    _check_consistent(f, P)
    _check_committee(C, P.m, f.k)
    cset = C.set
    total = Fraction(0)
    for v in P.votes:
        total += v.multiplicity * f(len(cset & v.alternatives), v.size)
    return total


def all_committees(m: int, k: int) -> list[Committee]:
    return [Committee(c) for c in itertools.combinations(range(m), k)]


def abcs_score_table(f: BivariateScoring, P: Profile) -> tuple[np.ndarray, np.ndarray, int]:
    """Integer scores of every committee (lexicographic order).

    Returns ``(combos, scores, denom)`` where ``scores / denom`` are the
    exact scores of the rows of ``combos``.
    """
    _check_consistent(f, P)
    return _kernel.abcs_scores(P.arrays, f)


def abcs_winners(f: BivariateScoring, P: Profile, k: int | None = None) -> list[Committee]:
    """Every committee of maximum score, sorted lexicographically."""
    if k is not None and k != f.k:
        raise DomainError(f"rule is for k={f.k}, asked for k={k}")
    combos, scores, _ = abcs_score_table(f, P)
    best = scores.max()
    return [Committee(row) for row in combos[scores == best]]


def verify_abcs_winner(f: BivariateScoring, P: Profile, C: Committee) -> bool:
    _check_consistent(f, P)
    _check_committee(C, P.m, f.k)
    combos, scores, denom = abcs_score_table(f, P)
    mine = abcs_score(f, C, P) * denom
    if mine.denominator != 1:
        raise AssertionError("score scaling is not integral")
    return int(mine) == int(scores.max())


# --------------------------------------------------------------------------
# sequential Thiele evaluation


def thiele_score(s: UnivariateScoring, A: Iterable[int], P: Profile) -> Fraction:
    aset = frozenset(A)
    if len(aset) > s.k:
        raise DomainError(f"set of size {len(aset)} exceeds k={s.k}")
    total = Fraction(0)
    for v in P.votes:
        total += v.multiplicity * s(len(aset & v.alternatives))
    return total


def _check_k(s: UnivariateScoring, P: Profile, k: int | None) -> int:
    if k is None:
        k = s.k
    if k != s.k:
        raise DomainError(f"rule is for k={s.k}, asked for k={k}")
    if not 0 < k < P.m:
        raise DomainError(f"need 0 < k < m, got k={k}, m={P.m}")
    return k


def seq_winners(s: UnivariateScoring, P: Profile, k: int | None = None) -> list[Committee]:
    """All committees some tie-breaking of the greedy rule can produce."""
    _check_k(s, P, k)
    final = _kernel.greedy_all(P.arrays, _kernel.int_scores(s.values))
    return sorted(Committee(np.flatnonzero(row)) for row in final)


def verify_seq_winner(s: UnivariateScoring, P: Profile, C: Committee) -> bool:
    """True iff some greedy order of ``C`` stays in the argmax at every step."""
    return seq_order(s, P, C) is not None


def seq_order(s: UnivariateScoring, P: Profile, C: Committee) -> tuple[int, ...] | None:
    """A greedy inclusion order producing ``C``, or ``None`` if ``C`` cannot win."""
    _check_k(s, P, len(C))
    _check_committee(C, P.m, s.k)
    reach = _kernel.greedy_within(P.arrays, _kernel.int_scores(s.values), C.members)
    return reach.order


def is_greedy_order(s: UnivariateScoring, P: Profile, order: Sequence[int]) -> bool:
    """Check the block inequalities of one inclusion order directly."""
    chosen: set[int] = set()
    for c in order:
        base = thiele_score(s, chosen, P)
        gain_c = thiele_score(s, chosen | {c}, P) - base
        for a in range(P.m):
            if a in chosen or a == c:
                continue
            if thiele_score(s, chosen | {a}, P) - base > gain_c:
                return False
        chosen.add(c)
    return True


def lcm_denominator(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, Fraction(v).denominator)
    return d


@dataclass(frozen=True)
class LabeledSample:
    """A profile together with its full winner set under some target rule."""

    profile: Profile
    k: int
    winners: frozenset[Committee]

    def __post_init__(self) -> None:
        object.__setattr__(self, "winners", frozenset(self.winners))
        if not self.winners:
            raise DomainError("winner set must be nonempty")
        for w in self.winners:
            _check_committee(w, self.profile.m, self.k)
