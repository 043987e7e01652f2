"""Shattering families for committee scoring and sequential Thiele rules.

Two families are generated:

* ABCS: one profile ``P_xy`` per pair of :func:`t_set`, with votes
  ``{a}``, ``A``, ``C`` and ``{b1..b(x-1), c, d1..d(y-x)}``.  The rule
  ``h_S`` has row increments 0 on ``S`` and 2 elsewhere, ``h(1,1) = 1``
  and ``h(k,k) = 4k - 1``.  Under ``h_S`` the unique winner of ``P_xy`` is
  ``A = {a, b1..b(k-1)}`` if ``(x, y)`` is in ``S`` and
  ``C = {b1..b(k-1), c}`` otherwise.
* Sequential: ``m = k + 1``, profiles ``P_x`` for ``x = 2..k`` with three
  copies of every ``{b_i}``, one ``{a}`` and one ``{b1..b(x-1), c}``.

The checkers test the shattering definitions exhaustively over all index
subsets and refuse families with more than ``cap`` profiles.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Sequence

import numpy as np

from abclearn import _kernel
from abclearn.core import (
    BivariateScoring,
    Committee,
    DomainError,
    Profile,
    UnivariateScoring,
    abcs_winners,
    pair_domain,
    seq_winners,
)
from abclearn.textio import format_profile, parse_profile

DEFAULT_CAP = 16


class CapExceeded(RuntimeError):
    """An exhaustive check was refused because the instance is too large."""


def _cap(cap: int | None) -> int:
    if cap is not None:
        return cap
    return int(os.environ.get("ABCLEARN_SHATTER_CAP", DEFAULT_CAP))


@dataclass
class ShatterFamily:
    """Profiles indexed by ``labels`` with a rule for every label subset.

    ``rule_builder`` maps a frozenset of labels to a scoring object;
    ``evaluate(rule, profile)`` returns the winner list.
    """

    kind: str
    m: int
    k: int
    labels: list[Hashable]
    profiles: list[Profile]
    rule_builder: Callable[[frozenset], object]
    g1: object
    g2: object
    evaluate: Callable[[object, Profile], list[Committee]]
    committees: dict[str, Committee] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.profiles)


def t_set(m: int, k: int) -> list[tuple[int, int]]:
    """Pairs above the row minimum for ``y >= 2``, without ``(k, k)``."""
    if m < 3 or not 2 <= k <= m - 1:
        raise DomainError(f"need m >= 3 and 2 <= k <= m-1, got m={m}, k={k}")
    dom = pair_domain(m, k)
    return [(x, y) for x, y in dom.pairs if y >= 2 and x > dom.lowest(y) and (x, y) != (k, k)]


def abcs_names(m: int, k: int) -> list[str]:
    return ["a"] + [f"b{i}" for i in range(1, k)] + ["c"] + [f"d{i}" for i in range(1, m - k)]


def abcs_family_profile(m: int, k: int, x: int, y: int) -> Profile:
    names = abcs_names(m, k)
    bs = [f"b{i}" for i in range(1, k)]
    fourth = [f"b{i}" for i in range(1, x)] + ["c"] + [f"d{i}" for i in range(1, y - x + 1)]
    votes = [{"a"}, {"a", *bs}, {*bs, "c"}, set(fourth)]
    return Profile(m, votes, names)


def abcs_family_rule(m: int, k: int, S) -> BivariateScoring:
    """``h_S``: increments 0 on ``S`` and 2 on the rest of the t-set."""
    dom = pair_domain(m, k)
    S = set(S)
    tset = set(t_set(m, k))
    if not S <= tset:
        raise DomainError("S must be a subset of the t-set")
    vals = {}
    for y in range(1, m):
        lo, hi = dom.lowest(y), dom.highest(y)
        vals[(lo, y)] = 0
        for x in range(lo + 1, hi + 1):
            step = 0 if (x, y) in S else 2
            vals[(x, y)] = vals[(x - 1, y)] + step
    vals[(1, 1)] = 1
    vals[(k, k)] = 4 * k - 1
    return BivariateScoring(dom, vals)


def abcs_shatter_family(m: int, k: int) -> ShatterFamily:
    labels = t_set(m, k)
    profiles = [abcs_family_profile(m, k, x, y) for x, y in labels]
    names = abcs_names(m, k)
    idx = {nm: i for i, nm in enumerate(names)}
    A = Committee([idx["a"]] + [idx[f"b{i}"] for i in range(1, k)])
    C = Committee([idx[f"b{i}"] for i in range(1, k)] + [idx["c"]])
    return ShatterFamily(
        kind="abcs",
        m=m,
        k=k,
        labels=list(labels),
        profiles=profiles,
        rule_builder=lambda S: abcs_family_rule(m, k, S),
        g1=abcs_family_rule(m, k, labels),
        g2=abcs_family_rule(m, k, ()),
        evaluate=abcs_winners,
        committees={"A": A, "C": C},
    )


def seq_names(k: int) -> list[str]:
    return [f"b{i}" for i in range(1, k)] + ["a", "c"]


def seq_family_profile(k: int, x: int) -> Profile:
    votes: list = [({f"b{i}"}, 3) for i in range(1, k)]
    votes.append({"a"})
    votes.append({*(f"b{i}" for i in range(1, x)), "c"})
    return Profile(k + 1, votes, seq_names(k))


def seq_family_rule(k: int, S) -> UnivariateScoring:
    S = set(S)
    if not S <= set(range(2, k + 1)):
        raise DomainError("S must be a subset of 2..k")
    return UnivariateScoring.from_increments([1] + [0 if x in S else 2 for x in range(2, k + 1)])


def seq_shatter_family(k: int) -> ShatterFamily:
    if k < 2:
        raise DomainError("need k >= 2")
    labels = list(range(2, k + 1))
    names = seq_names(k)
    idx = {nm: i for i, nm in enumerate(names)}
    bs = [idx[f"b{i}"] for i in range(1, k)]
    return ShatterFamily(
        kind="seq",
        m=k + 1,
        k=k,
        labels=labels,
        profiles=[seq_family_profile(k, x) for x in labels],
        rule_builder=lambda S: seq_family_rule(k, S),
        g1=seq_family_rule(k, labels),
        g2=seq_family_rule(k, ()),
        evaluate=seq_winners,
        committees={"A": Committee(bs + [idx["a"]]), "C": Committee(bs + [idx["c"]])},
    )


# --------------------------------------------------------------------------
# shattering checkers


def _subsets(labels: Sequence[Hashable]):
    n = len(labels)
    for mask in range(1 << n):
        yield mask, frozenset(labels[i] for i in range(n) if mask >> i & 1)


def verify_n_shattering(
    fam: ShatterFamily,
    evaluate: Callable[[object, Profile], list[Committee]] | None = None,
    *,
    cap: int | None = None,
) -> bool:
    """Exhaustive check that the family N-shatters its profiles.

    ``g1`` and ``g2`` must disagree on every profile, and for every label
    subset ``S`` the rule ``rule_builder(S)`` must agree with ``g1`` on the
    profiles in ``S`` and with ``g2`` on the others.
    """
    limit = _cap(cap)
    if len(fam) > limit:
        raise CapExceeded(f"{len(fam)} profiles exceed the exhaustive cap {limit}")
    ev = evaluate or fam.evaluate
    first = [frozenset(ev(fam.g1, P)) for P in fam.profiles]
    second = [frozenset(ev(fam.g2, P)) for P in fam.profiles]
    if any(a == b for a, b in zip(first, second)):
        return False
    for mask, S in _subsets(fam.labels):
        rule = fam.rule_builder(S)
        for i, P in enumerate(fam.profiles):
            want = first[i] if mask >> i & 1 else second[i]
            if frozenset(ev(rule, P)) != want:
                return False
    return True


def verify_g_shattering(
    profiles: Sequence[Profile],
    rule_builder: Callable[[frozenset], object],
    g: object,
    evaluate: Callable[[object, Profile], list[Committee]],
    *,
    labels: Sequence[Hashable] | None = None,
    cap: int | None = None,
) -> bool:
    """Exhaustive check that ``rule_builder(S)`` matches ``g`` exactly on ``S``."""
    limit = _cap(cap)
    if len(profiles) > limit:
        raise CapExceeded(f"{len(profiles)} profiles exceed the exhaustive cap {limit}")
    labels = list(labels) if labels is not None else list(range(len(profiles)))
    ref = [frozenset(evaluate(g, P)) for P in profiles]
    for mask, S in _subsets(labels):
        rule = rule_builder(S)
        for i, P in enumerate(profiles):
            same = frozenset(evaluate(rule, P)) == ref[i]
            if same != bool(mask >> i & 1):
                return False
    return True


# --------------------------------------------------------------------------
# margin checks for the ABCS family


@dataclass(frozen=True)
class MarginReport:
    rival_margin_ok: bool  # sc(A) - sc(X) >= 1 for every X other than A, C
    signed_margin_ok: bool  # sc(A) - sc(C) = +1 on S, -1 off S
    min_rival_margin: int | None  # None for an empty family
    subsets: int


def _pair_count_matrix(P: Profile, k: int, pairs) -> tuple[np.ndarray, np.ndarray]:
    """Per committee, how many votes realise each domain pair."""
    index = {p: i for i, p in enumerate(pairs)}
    combos = _kernel._combos(P.m, k)
    counts = _kernel.committee_counts(P.arrays, combos)
    out = np.zeros((combos.shape[0], len(pairs)), dtype=np.int64)
    for v in range(counts.shape[1]):
        y = int(P.arrays.sizes[v])
        cols = np.array([index[(int(x), y)] for x in counts[:, v]])
        np.add.at(out, (np.arange(combos.shape[0]), cols), int(P.arrays.mult[v]))
    return combos, out


def abcs_family_margins(m: int, k: int, *, cap: int | None = None) -> MarginReport:
    """Rival and signed margins of ``A`` for every subset rule and profile.

    All subset rules are stacked into one integer matrix and scored against
    every committee at once.
    """
    return family_margins(abcs_shatter_family(m, k), cap=cap)


def family_margins(fam: ShatterFamily, *, cap: int | None = None) -> MarginReport:
    """As :func:`abcs_family_margins`, for an already built or loaded family."""
    if fam.kind != "abcs":
        raise ValueError("margins are defined for the ABCS family only")
    m, k = fam.m, fam.k
    limit = _cap(cap)
    if len(fam) > limit:
        raise CapExceeded(f"{len(fam)} profiles exceed the exhaustive cap {limit}")
    pairs = list(pair_domain(m, k).pairs)
    H = np.array(
        [[int(fam.rule_builder(S)(x, y)) for x, y in pairs] for _, S in _subsets(fam.labels)],
        dtype=np.int64,
    )
    A, C = fam.committees["A"], fam.committees["C"]
    rival_ok = True
    signed_ok = True
    min_margin = None
    masks = np.arange(1 << len(fam.labels))
    for i, P in enumerate(fam.profiles):
        combos, N = _pair_count_matrix(P, k, pairs)
        scores = H @ N.T
        rows = {tuple(r): j for j, r in enumerate(combos.tolist())}
        ia, ic = rows[A.members], rows[C.members]
        diff = scores[:, ia][:, None] - scores
        rivals = np.ones(combos.shape[0], dtype=bool)
        rivals[[ia, ic]] = False
        worst = int(diff[:, rivals].min())
        min_margin = worst if min_margin is None else min(min_margin, worst)
        rival_ok &= worst >= 1
        expect = np.where((masks >> i) & 1, 1, -1)
        signed_ok &= bool(np.array_equal(diff[:, ic], expect))
    return MarginReport(bool(rival_ok), bool(signed_ok), min_margin, int(len(masks)))


# --------------------------------------------------------------------------
# export


def export_family(fam: ShatterFamily, directory: str | os.PathLike) -> Path:
    """Write one profile file per label plus ``manifest.txt``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"family {fam.kind}", f"m {fam.m}", f"k {fam.k}"]
    for label, P in zip(fam.labels, fam.profiles):
        if fam.kind == "abcs":
            x, y = label
            fname = f"P_{x}_{y}.txt"
            lines.append(f"profile {fname} {x} {y}")
        else:
            fname = f"P_{label}.txt"
            lines.append(f"profile {fname} {label}")
        (out / fname).write_text(format_profile(P, fam.k))
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    return out


def load_family(directory: str | os.PathLike) -> ShatterFamily:
    """Rebuild a family from an exported directory.

    The rules are regenerated from the manifest; the profiles are read from
    disk so that edits to the files are caught by the checkers.
    """
    base = Path(directory)
    meta: dict[str, str] = {}
    entries = []
    for raw in (base / "manifest.txt").read_text().splitlines():
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "profile":
            entries.append(tok[1:])
        else:
            meta[tok[0]] = tok[1]
    kind, m, k = meta["family"], int(meta["m"]), int(meta["k"])
    fam = abcs_shatter_family(m, k) if kind == "abcs" else seq_shatter_family(k)
    labels = []
    profiles = []
    for entry in entries:
        label = (int(entry[1]), int(entry[2])) if kind == "abcs" else int(entry[1])
        P, _ = parse_profile((base / entry[0]).read_text())
        labels.append(label)
        profiles.append(P)
    fam.labels = labels
    fam.profiles = profiles
    return fam
