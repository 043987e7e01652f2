"""Vectorised exact evaluation on integer-scaled scores.

Scores are scaled to integers before they reach this module.  Matrix
products run in float64 only when every partial sum is provably below
2**53, otherwise in Python-int object arrays, so results are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

_FLOAT_EXACT = 2**53


@dataclass(frozen=True)
class ProfileArrays:
    m: int
    incidence: np.ndarray  # votes x m, float64 0/1
    sizes: np.ndarray  # int64 per distinct vote
    mult: np.ndarray  # int64 per distinct vote
    total: int  # sum of multiplicities

    @classmethod
    def build(cls, profile) -> "ProfileArrays":
        nv = len(profile.votes)
        inc = np.zeros((nv, profile.m), dtype=np.float64)
        for i, v in enumerate(profile.votes):
            inc[i, sorted(v.alternatives)] = 1.0
        sizes = inc.sum(axis=1).astype(np.int64)
        mult = np.array([v.multiplicity for v in profile.votes], dtype=np.int64)
        for arr in (inc, sizes, mult):
            arr.setflags(write=False)
        return cls(profile.m, inc, sizes, mult, int(mult.sum()))


def int_scores(values: Sequence[Fraction]) -> list[int]:
    """Scale rationals by the lcm of their denominators."""
    den = 1
    for v in values:
        den = math.lcm(den, Fraction(v).denominator)
    return [int(Fraction(v) * den) for v in values]


def _combos(m: int, k: int) -> np.ndarray:
    n = math.comb(m, k)
    out = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(m), k)),
        dtype=np.int64,
        count=n * k,
    )
    return out.reshape(n, k)


def committee_counts(arr: ProfileArrays, combos: np.ndarray) -> np.ndarray:
    """``|C & v|`` for every committee row and vote (int64)."""
    counts = np.zeros((combos.shape[0], arr.incidence.shape[0]), dtype=np.int64)
    inc = arr.incidence.astype(np.int64)
    for col in range(combos.shape[1]):
        counts += inc[:, combos[:, col]].T
    return counts


def abcs_scores(arr: ProfileArrays, f) -> tuple[np.ndarray, np.ndarray, int]:
    dom = f.domain
    pairs = list(dom.pairs)
    vals = [f.values[p] for p in pairs]
    den = 1
    for v in vals:
        den = math.lcm(den, v.denominator)
    table = {p: int(v * den) for p, v in zip(pairs, vals)}
    combos = _combos(dom.m, dom.k)
    counts = committee_counts(arr, combos)
    nv = counts.shape[1]
    # lookup[x, vote] = scaled f(x, |vote|) * multiplicity
    per_vote = []
    for j in range(nv):
        y = int(arr.sizes[j])
        per_vote.append([table.get((x, y), 0) * int(arr.mult[j]) for x in range(dom.k + 1)])
    bound = sum(max(row) for row in per_vote)
    dtype = np.int64 if bound < 2**62 else object
    lookup = np.array(per_vote, dtype=dtype).T  # (k+1) x nv
    scores = lookup[counts, np.arange(nv)].sum(axis=1)
    return combos, scores, den


def _matmul_exact(left: np.ndarray, right: np.ndarray, bound: int) -> np.ndarray:
    """Exact product of nonnegative integer matrices given an entry bound on the result."""
    if bound < _FLOAT_EXACT:
        out = left.astype(np.float64) @ right.astype(np.float64)
        return out.astype(np.int64)
    return left.astype(object) @ right.astype(object)


def vote_counts(arr: ProfileArrays, states: np.ndarray) -> np.ndarray:
    """``|S & v|`` for every state row (bool over m) and vote."""
    return (states.astype(np.float64) @ arr.incidence.T).astype(np.int64)


def increases(arr: ProfileArrays, states: np.ndarray, inc: Sequence[int]) -> np.ndarray:
    """Marginal Thiele gain of every alternative for every chosen-set row.

    ``inc[j]`` is the increment ``s(j+1) - s(j)``; gains are exact integers.
    """
    counts = vote_counts(arr, states)
    inc_arr = np.array(list(inc) + [0], dtype=object)
    big = max((abs(int(d)) for d in inc), default=0)
    bound = big * arr.total
    if bound < 2**62:
        per_vote = np.array([int(d) for d in inc] + [0], dtype=np.int64)[counts] * arr.mult
    else:
        per_vote = inc_arr[counts] * arr.mult.astype(object)
    return _matmul_exact(per_vote, arr.incidence, bound)


def count_histograms(arr: ProfileArrays, states: np.ndarray, levels: int, first: int = 0) -> np.ndarray:
    """``H[r, x, j]``: weighted votes containing ``x`` meeting state ``r`` in ``j`` places.

    Entries for ``j < first`` are left at zero.
    """
    counts = vote_counts(arr, states)
    out = np.zeros((states.shape[0], arr.m, levels), dtype=np.int64)
    for j in range(first, levels):
        w = (counts == j) * arr.mult
        out[:, :, j] = _matmul_exact(w, arr.incidence, arr.total)
    return out


def _unique_rows(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    packed = np.packbits(states, axis=1)
    view = np.ascontiguousarray(packed).view(np.dtype((np.void, packed.shape[1])))
    _, idx = np.unique(view.ravel(), return_index=True)
    idx.sort()
    return states[idx], idx


def greedy_all(arr: ProfileArrays, sv: Sequence[int]) -> np.ndarray:
    """Every chosen set reachable by greedy runs of length ``len(sv) - 1``."""
    k = len(sv) - 1
    inc = [sv[j + 1] - sv[j] for j in range(k)]
    states = np.zeros((1, arr.m), dtype=bool)
    for level in range(k):
        if all(d == 0 for d in inc[: level + 1]):
            ok = ~states
        else:
            gain = increases(arr, states, inc)
            gain = np.where(states, -1, gain)
            best = gain.max(axis=1)
            ok = (gain == best[:, None]) & ~states
        rows, cols = np.nonzero(ok)
        nxt = states[rows].copy()
        nxt[np.arange(len(rows)), cols] = True
        states, _ = _unique_rows(nxt)
    return states


@dataclass
class Reach:
    """Greedy reachability inside one committee."""

    members: tuple[int, ...]
    levels: list[np.ndarray]  # bitmask states over positions in members
    parents: list[tuple[np.ndarray, np.ndarray]]  # per level: parent index, added position
    order: tuple[int, ...] | None

    def state_matrix(self, level: int, m: int) -> np.ndarray:
        return masks_to_states(self.levels[level], self.members, m)


def masks_to_states(masks: np.ndarray, members: Sequence[int], m: int) -> np.ndarray:
    k = len(members)
    bits = ((masks[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(bool)
    out = np.zeros((len(masks), m), dtype=bool)
    out[:, list(members)] = bits
    return out


def greedy_within(arr: ProfileArrays, sv: Sequence[int], members: Sequence[int]) -> Reach:
    """Subset DP over ``members``: which chosen sets inside the committee are reachable."""
    members = tuple(members)
    k = len(members)
    if k > 62:
        raise ValueError("committee too large for bitmask states")
    inc = [sv[j + 1] - sv[j] for j in range(k)]
    in_c = np.zeros(arr.m, dtype=bool)
    in_c[list(members)] = True
    pos_of = np.full(arr.m, -1, dtype=np.int64)
    pos_of[list(members)] = np.arange(k)
    masks = np.zeros(1, dtype=np.int64)
    levels = [masks]
    parents: list[tuple[np.ndarray, np.ndarray]] = []
    for level in range(k):
        states = masks_to_states(masks, members, arr.m)
        if all(d == 0 for d in inc[: level + 1]):
            ok = in_c[None, :] & ~states
        else:
            gain = increases(arr, states, inc)
            gain = np.where(states, -1, gain)
            best = gain.max(axis=1)
            ok = (gain == best[:, None]) & in_c[None, :] & ~states
        rows, cols = np.nonzero(ok)
        if len(rows) == 0:
            return Reach(members, levels, parents, None)
        pos = pos_of[cols]
        nxt = masks[rows] | (np.int64(1) << pos)
        uniq, idx = np.unique(nxt, return_index=True)
        parents.append((rows[idx], pos[idx]))
        masks = uniq
        levels.append(masks)
    # reconstruct one order for the full mask
    order = []
    at = 0
    for level in range(k - 1, -1, -1):
        par, pos = parents[level]
        order.append(members[int(pos[at])])
        at = int(par[at])
    return Reach(members, levels, parents, tuple(reversed(order)))
