"""Decision procedures for target rules and consistent-rule learners.

``target_abcs`` asks whether some non-trivial committee scoring rule makes a
given committee win; ``target_seq_thiele`` asks the same for sequential
Thiele rules.  Both reduce to exact LP feasibility.

ABCS rules are parametrised by their row increments
``g(x, y) = f(x, y) - f(x - 1, y) >= 0`` for ``x`` above the lowest entry of
row ``y``.  Monotonicity and normalisation then hold by construction and
``sum_y f(min(k, y), y) = sum(g)``.  Committee-comparison rows are added
lazily: the LP is solved on a subset, the witness is scored against every
committee and the most violated rows are appended until none remain.

Notes
-----
All winner constraints are homogeneous in the scoring values, so strict
inequalities are encoded as ``>= 1``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence

import numpy as np

from abclearn import _kernel
from abclearn.core import (
    BivariateScoring,
    Committee,
    DomainError,
    LabeledSample,
    Profile,
    UnivariateScoring,
    pair_domain,
    seq_winners,
    verify_abcs_winner,
    verify_seq_winner,
    abcs_winners,
)
from abclearn.lp import LinearConstraintSystem, feasible

log = logging.getLogger(__name__)

__all__ = [
    "LabeledSample",
    "abcs_system",
    "erm_abcs",
    "erm_seq",
    "seq_permutation_system",
    "target_abcs",
    "target_seq_thiele",
]


def _check_instance(P: Profile, C: Committee, k: int) -> None:
    if not 1 < k < P.m:
        raise DomainError(f"need 1 < k < m, got k={k}, m={P.m}")
    if len(C) != k:
        raise DomainError(f"committee has {len(C)} members, expected {k}")
    if any(not 0 <= c < P.m for c in C):
        raise DomainError("committee member out of range")


# --------------------------------------------------------------------------
# ABCS: increment features


@dataclass(frozen=True)
class _Features:
    """Committee score as a linear form in the increment variables."""

    steps: tuple[tuple[int, int], ...]
    combos: np.ndarray
    phi: np.ndarray  # committees x steps, int64

    def row_of(self, C: Committee) -> int:
        target = np.array(C.members, dtype=np.int64)
        hit = np.flatnonzero((self.combos == target).all(axis=1))
        return int(hit[0])


def _features(P: Profile, k: int) -> _Features:
    dom = pair_domain(P.m, k)
    steps = dom.step_pairs()
    arr = P.arrays
    combos = _kernel._combos(P.m, k)
    counts = _kernel.committee_counts(arr, combos)
    phi = np.zeros((combos.shape[0], len(steps)), dtype=np.int64)
    by_size: dict[int, np.ndarray] = {}
    for y in set(int(s) for s in arr.sizes):
        by_size[y] = np.flatnonzero(arr.sizes == y)
    for j, (x, y) in enumerate(steps):
        vs = by_size.get(y)
        if vs is None:
            continue
        phi[:, j] = (counts[:, vs] >= x).astype(np.int64) @ arr.mult[vs]
    return _Features(steps, combos, phi)


def _rule_from_increments(m: int, k: int, steps, g: Sequence[Fraction]) -> BivariateScoring:
    dom = pair_domain(m, k)
    inc = dict(zip(steps, g))
    vals = {}
    for x, y in dom.pairs:
        base = dom.lowest(y)
        vals[(x, y)] = sum((inc[(t, y)] for t in range(base + 1, x + 1)), Fraction(0))
    return BivariateScoring(dom, vals)


def _scaled(values: Sequence[Fraction]) -> tuple[list[int], int]:
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return [int(v * den) for v in values], den


def _exact_dot(mat: np.ndarray, vec: Sequence[int]) -> np.ndarray:
    vmax = max((abs(v) for v in vec), default=0)
    amax = int(np.abs(mat).max()) if mat.size else 0
    if amax * vmax * max(mat.shape[1], 1) < 2**53:
        return (mat.astype(np.float64) @ np.array(vec, dtype=np.float64)).astype(np.int64)
    return mat.astype(object) @ np.array(vec, dtype=object)


def _lazy_rows(
    names: list[str],
    fixed: list[tuple[np.ndarray, str, int]],
    pool: np.ndarray,
    pool_bound: np.ndarray,
    batch: int,
) -> tuple[Fraction, ...] | None:
    """Find ``w >= 0`` satisfying ``fixed`` and ``pool @ w >= pool_bound``.

    Pool rows enter the LP only once a witness violates them.
    """
    system = LinearConstraintSystem(list(names), nonnegative=True)
    for coeffs, rel, b in fixed:
        system.add([int(c) for c in coeffs], rel, b)
    if pool.shape[0]:
        pool, first = np.unique(pool, axis=0, return_index=True)
        pool_bound = pool_bound[first]
    seen: set[bytes] = set()
    while True:
        res = feasible(system)
        if not res.feasible:
            return None
        w_int, den = _scaled(res.witness)
        if not pool.shape[0]:
            return res.witness
        lhs = _exact_dot(pool, w_int)
        slack = lhs - pool_bound.astype(lhs.dtype) * den
        bad = np.flatnonzero(slack < 0)
        if bad.size == 0:
            return res.witness
        bad = bad[np.argsort(slack[bad], kind="stable")]
        added = 0
        for i in bad:
            key = pool[i].tobytes() + int(pool_bound[i]).to_bytes(8, "little", signed=True)
            if key in seen:
                continue
            seen.add(key)
            system.add_ge([int(c) for c in pool[i]], int(pool_bound[i]))
            added += 1
            if added >= batch:
                break
        if not added:
            raise AssertionError("violated row already present in the LP")


def abcs_system(P: Profile, C: Committee, k: int) -> LinearConstraintSystem:
    """Full target-rule LP over the values ``f(x, y)`` (every committee row).

    Intended for small instances and cross-checks; :func:`target_abcs`
    solves the same problem with lazily added rows.
    """
    _check_instance(P, C, k)
    dom = pair_domain(P.m, k)
    pairs = list(dom.pairs)
    index = {p: i for i, p in enumerate(pairs)}
    names = [f"f({x},{y})" for x, y in pairs]
    system = LinearConstraintSystem(names)
    combos, _, _ = _kernel.abcs_scores(P.arrays, BivariateScoring.trivial(P.m, k))
    counts = _kernel.committee_counts(P.arrays, combos)
    sizes = P.arrays.sizes
    mult = P.arrays.mult

    def score_row(r: int) -> list[int]:
        row = [0] * len(pairs)
        for v in range(counts.shape[1]):
            row[index[(int(counts[r, v]), int(sizes[v]))]] += int(mult[v])
        return row

    target = np.flatnonzero((combos == np.array(C.members)).all(axis=1))[0]
    mine = score_row(target)
    for r in range(combos.shape[0]):
        if r == target:
            continue
        other = score_row(r)
        system.add_ge([a - b for a, b in zip(mine, other)], 0)
    for x, y in pairs:
        if x > dom.lowest(y):
            row = [0] * len(pairs)
            row[index[(x, y)]] = 1
            row[index[(x - 1, y)]] = -1
            system.add_ge(row, 0)
    for y in range(1, P.m):
        row = [0] * len(pairs)
        row[index[(dom.lowest(y), y)]] = 1
        system.add_eq(row, 0)
    row = [0] * len(pairs)
    for y in range(1, P.m):
        row[index[(dom.highest(y), y)]] = 1
    system.add_ge(row, 1)
    return system


def target_abcs(
    P: Profile,
    C: Committee,
    k: int,
    *,
    method: Literal["lazy", "full"] = "lazy",
    batch: int = 32,
) -> BivariateScoring | None:
    """A non-trivial ABCS rule under which ``C`` wins on ``P``, or ``None``.

    Parameters
    ----------
    method : {"lazy", "full"}
        ``"lazy"`` adds committee rows on demand over increment variables;
        ``"full"`` solves :func:`abcs_system` with every row at once.

    Returns
    -------
    BivariateScoring or None
        A normalised, monotone, non-trivial rule re-verified by
        :func:`verify_abcs_winner`, or ``None`` if none exists.
    """
    _check_instance(P, C, k)
    if method == "full":
        res = feasible(abcs_system(P, C, k))
        if not res.feasible:
            return None
        dom = pair_domain(P.m, k)
        rule = BivariateScoring(dom, dict(zip(dom.pairs, res.witness)))
    elif method == "lazy":
        feat = _features(P, k)
        me = feat.phi[feat.row_of(C)]
        diff = me[None, :] - feat.phi
        keep = np.any(diff != 0, axis=1)
        diff = diff[keep]
        names = [f"g({x},{y})" for x, y in feat.steps]
        nontrivial = (np.ones(len(names), dtype=np.int64), ">=", 1)
        g = _lazy_rows(names, [nontrivial], diff, np.zeros(diff.shape[0], dtype=np.int64), batch)
        if g is None:
            return None
        rule = _rule_from_increments(P.m, k, feat.steps, g)
    else:
        raise ValueError(f"unknown method {method!r}")
    if rule.is_trivial or not rule.is_normalized or not verify_abcs_winner(rule, P, C):
        raise AssertionError("target rule failed re-verification")
    return rule


# --------------------------------------------------------------------------
# sequential Thiele

SeqConstraint = tuple[Sequence, Literal["ge0", "eq0", "gt0"]]


def _s_to_increment_row(coeffs: Sequence) -> list[Fraction]:
    """Rewrite ``sum_j c_j s(j)`` as a form in the increments ``s(j) - s(j-1)``."""
    out = []
    acc = Fraction(0)
    for c in reversed(list(coeffs)):
        acc += Fraction(c)
        out.append(acc)
    return list(reversed(out))


def _increment_to_s_row(form: Sequence) -> list[int]:
    form = list(form)
    return [int(form[j]) - (int(form[j + 1]) if j + 1 < len(form) else 0) for j in range(len(form))]


def _block_forms(arr, chosen: np.ndarray, pick: int, k: int, level: int) -> np.ndarray:
    """Increment forms ``gain(pick) - gain(a)`` for every other unchosen ``a``."""
    hist = _kernel.count_histograms(arr, chosen[None, :], level + 1)[0]  # m x (level+1)
    forms = np.zeros((arr.m, k), dtype=np.int64)
    forms[:, : level + 1] = hist[pick][None, :] - hist
    mask = ~chosen.copy()
    mask[pick] = False
    return forms[mask]


def _add_extra(system: LinearConstraintSystem, coeffs: Sequence, kind: str) -> None:
    if kind == "ge0":
        system.add_ge(coeffs, 0)
    elif kind == "eq0":
        system.add_eq(coeffs, 0)
    elif kind == "gt0":
        system.add_ge(coeffs, 1)
    else:
        raise ValueError(f"unknown constraint kind {kind!r}")


def seq_permutation_system(
    P: Profile,
    order: Sequence[int],
    k: int,
    constraints: Iterable[SeqConstraint] = (),
) -> LinearConstraintSystem:
    """LP over ``s(1..k)`` making ``order`` a valid greedy run.

    Rows: every block inequality ``sc(S + c) - sc(S + a) >= 0`` along the
    order, ``0 <= s(1) <= ... <= s(k)`` and ``s(k) >= 1``.
    """
    arr = P.arrays
    names = [f"s({j})" for j in range(1, k + 1)]
    system = LinearConstraintSystem(names)
    seen: set[tuple] = set()
    chosen = np.zeros(P.m, dtype=bool)
    for level, c in enumerate(order):
        forms = _block_forms(arr, chosen, c, k, level)
        for row in np.unique(forms, axis=0):
            s_row = tuple(_increment_to_s_row(row))
            if any(s_row) and s_row not in seen:
                seen.add(s_row)
                system.add_ge(s_row, 0)
        chosen[c] = True
    unit = [1] + [0] * (k - 1)
    system.add_ge(unit, 0)
    for j in range(1, k):
        row = [0] * k
        row[j] = 1
        row[j - 1] = -1
        system.add_ge(row, 0)
    system.add_ge([0] * (k - 1) + [1], 1)
    for coeffs, kind in constraints:
        _add_extra(system, list(coeffs), kind)
    return system


def _seq_by_permutations(P, C, k, constraints):
    """Depth-first over orders; an infeasible prefix prunes its completions."""
    arr = P.arrays
    constraints = list(constraints)
    names = [f"s({j})" for j in range(1, k + 1)]

    def base_system():
        system = LinearConstraintSystem(names)
        system.add_ge([1] + [0] * (k - 1), 0)
        for j in range(1, k):
            row = [0] * k
            row[j], row[j - 1] = 1, -1
            system.add_ge(row, 0)
        system.add_ge([0] * (k - 1) + [1], 1)
        for coeffs, kind in constraints:
            _add_extra(system, list(coeffs), kind)
        return system

    def rows_for(chosen, c, level):
        forms = _block_forms(arr, chosen, c, k, level)
        out = []
        for row in np.unique(forms, axis=0):
            s_row = _increment_to_s_row(row)
            if any(s_row):
                out.append(s_row)
        return out

    def dfs(prefix, chosen, rows):
        if len(prefix) == k:
            system = base_system()
            for r in rows:
                system.add_ge(r, 0)
            res = feasible(system)
            return (res.witness, tuple(prefix)) if res.feasible else None
        for c in C.members:
            if chosen[c]:
                continue
            new_rows = rows + rows_for(chosen, c, len(prefix))
            system = base_system()
            for r in new_rows:
                system.add_ge(r, 0)
            if not feasible(system).feasible:
                continue
            chosen[c] = True
            got = dfs(prefix + [c], chosen, new_rows)
            chosen[c] = False
            if got is not None:
                return got
        return None

    got = dfs([], np.zeros(P.m, dtype=bool), [])
    if got is None:
        return None
    s_vals, order = got
    return UnivariateScoring([Fraction(0)] + list(s_vals)), order


def _excluded_forms(
    arr,
    reach: _kernel.Reach,
    inc: Sequence[int],
    k: int,
    lead: int,
    skip: set,
    limit: int,
) -> tuple[list[tuple[int, ...]], bool]:
    """Increment forms separating excluded in-committee moves from the argmax.

    Increments below ``lead`` are zero in the current branch and are dropped
    from every form.  Forms that are negative on the whole branch (no
    positive entry, negative at ``lead``) need no branching and are skipped,
    as are forms in ``skip``.  Levels are scanned in order until ``limit``
    forms are found; the flag is ``True`` if every level was scanned.
    """
    members = reach.members
    in_c = np.zeros(arr.m, dtype=bool)
    in_c[list(members)] = True
    out: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set(skip)
    for level, masks in enumerate(reach.levels):
        if level >= k or all(d == 0 for d in inc[: level + 1]):
            continue
        states = _kernel.masks_to_states(masks, members, arr.m)
        gain = _kernel.increases(arr, states, inc)
        gain = np.where(states, -1, gain)
        best_col = gain.argmax(axis=1)
        best = gain[np.arange(len(masks)), best_col]
        cand = in_c[None, :] & ~states & (gain < best[:, None])
        rows, cols = np.nonzero(cand)
        if rows.size == 0:
            continue
        need, local = np.unique(rows, return_inverse=True)
        hist = _kernel.count_histograms(arr, states[need], level + 1, first=lead - 1)
        forms = np.zeros((rows.size, k), dtype=np.int64)
        forms[:, : level + 1] = hist[local, cols] - hist[local, best_col[rows]]
        certain = (forms <= 0).all(axis=1) & (forms[:, lead - 1] < 0)
        forms = forms[~certain]
        if not forms.shape[0]:
            continue
        g = np.gcd.reduce(np.abs(forms), axis=1)
        g[g == 0] = 1
        forms //= g[:, None]
        forms, first = np.unique(forms, axis=0, return_index=True)
        for row in forms[np.argsort(first, kind="stable")]:
            key = tuple(int(v) for v in row)
            if key not in seen:
                seen.add(key)
                out.append(key)
                if len(out) >= limit:
                    return out, False
    return out, True


def _seq_by_cells(P, C, k, constraints, batch: int = 64):
    """Branch on sign conditions in increment space until the committee is reachable.

    The outer split fixes the first nonzero increment ``lead`` (earlier
    increments are 0, ``inc[lead] >= 1``).  Inside, a node fixes the signs of
    finitely many increment forms and is solved as an LP.  If the witness
    reaches ``C`` the search ends.  Otherwise every move of the DP that the
    witness rejects yields a form ``F`` with ``F . inc < 0``; children split
    the node on unseen forms (``F1 >= 0``; ``F1 < 0, F2 >= 0``; ...).  Once
    every rejected move is covered, the child with all forms negative
    reaches no more than the witness does and is dropped; otherwise it is
    kept and refined later.
    """
    arr = P.arrays
    names = [f"d({j})" for j in range(1, k + 1)]
    extra = [(_s_to_increment_row(c), kind) for c, kind in constraints]
    nodes = 0

    def solve(lead, path):
        system = LinearConstraintSystem(names, nonnegative=True)
        for j in range(lead - 1):
            unit = [0] * k
            unit[j] = 1
            system.add_eq(unit, 0)
        unit = [0] * k
        unit[lead - 1] = 1
        system.add_ge(unit, 1)
        for coeffs, kind in extra:
            _add_extra(system, coeffs, kind)
        for form, sign in path:
            if sign > 0:
                system.add_ge(form, 0)
            else:
                system.add_ge([-v for v in form], 1)
        return feasible(system)

    for lead in range(1, k + 1):
        stack: list[tuple] = [()]
        while stack:
            path = stack.pop()
            nodes += 1
            res = solve(lead, path)
            if not res.feasible:
                continue
            inc, _ = _scaled(res.witness)
            sv = [0]
            for d in inc:
                sv.append(sv[-1] + d)
            reach = _kernel.greedy_within(arr, sv, C.members)
            if reach.order is not None:
                log.debug("cell search finished after %d nodes", nodes)
                return UnivariateScoring(sv), reach.order
            on_path = {form for form, _ in path}
            fresh, complete = _excluded_forms(arr, reach, inc, k, lead, on_path, batch)
            children = []
            for i, form in enumerate(fresh):
                children.append(path + tuple((f, -1) for f in fresh[:i]) + ((form, 1),))
            if not complete:
                children.append(path + tuple((f, -1) for f in fresh))
            stack.extend(reversed(children))
    log.debug("cell search exhausted after %d nodes", nodes)
    return None


def target_seq_thiele(
    P: Profile,
    C: Committee,
    k: int,
    *,
    method: Literal["auto", "permutations", "cells"] = "auto",
    constraints: Iterable[SeqConstraint] = (),
    return_order: bool = False,
):
    """A non-trivial sequential Thiele rule under which ``C`` can win, or ``None``.

    Parameters
    ----------
    P, C, k
        Profile, committee and committee size (``1 < k < m``).
    method : {"auto", "permutations", "cells"}
        ``"permutations"`` solves one LP per greedy order of ``C`` (depth
        first, pruning infeasible prefixes).  ``"cells"`` searches increment
        space by sign branching and scales to large ``k``.  ``"auto"`` picks
        permutations for ``k <= 4``.
    constraints : iterable of (coeffs, kind)
        Extra homogeneous rows on ``s(1..k)``; ``kind`` is ``"ge0"``,
        ``"eq0"`` or ``"gt0"``.
    return_order : bool
        Also return the greedy order that realises ``C``.

    Returns
    -------
    UnivariateScoring or None
        The rule (with ``s(k) >= 1``), re-verified by the subset DP.
    """
    _check_instance(P, C, k)
    constraints = [(tuple(c), kind) for c, kind in constraints]
    for coeffs, _ in constraints:
        if len(coeffs) != k:
            raise DomainError(f"constraint row needs {k} coefficients")
    if method == "auto":
        method = "permutations" if k <= 4 else "cells"
    if method == "permutations":
        got = _seq_by_permutations(P, C, k, constraints)
    elif method == "cells":
        got = _seq_by_cells(P, C, k, constraints)
    else:
        raise ValueError(f"unknown method {method!r}")
    if got is None:
        return None
    s, order = got
    if s.is_trivial or not verify_seq_winner(s, P, C):
        raise AssertionError("target rule failed re-verification")
    for coeffs, kind in constraints:
        val = sum(Fraction(c) * s(j + 1) for j, c in enumerate(coeffs))
        if (kind == "ge0" and val < 0) or (kind == "eq0" and val != 0) or (kind == "gt0" and val <= 0):
            raise AssertionError("target rule violates a side constraint")
    return (s, order) if return_order else s


# --------------------------------------------------------------------------
# learners


def _sample_dims(samples: Sequence[LabeledSample], m: int | None, k: int | None) -> tuple[int, int]:
    dims = {(s.profile.m, s.k) for s in samples}
    if m is not None and k is not None:
        dims.add((m, k))
    if len(dims) != 1:
        raise DomainError(f"samples disagree on (m, k): {sorted(dims)}" if dims else "no samples and no (m, k)")
    return dims.pop()


def erm_abcs(
    samples: Sequence[LabeledSample],
    *,
    m: int | None = None,
    k: int | None = None,
    allow_trivial: bool = False,
    batch: int = 32,
) -> BivariateScoring | None:
    """A non-trivial ABCS rule reproducing every labelled winner set.

    Winners of a sample score equally; every other committee scores at
    least one less.  ``m`` and ``k`` are only needed for an empty sample
    list, in which case any non-trivial rule is returned.
    """
    m, k = _sample_dims(samples, m, k)
    steps = pair_domain(m, k).step_pairs()
    names = [f"g({x},{y})" for x, y in steps]
    fixed = []
    if not allow_trivial:
        fixed.append((np.ones(len(steps), dtype=np.int64), ">=", 1))
    pool_rows = []
    pool_bounds = []
    for smp in samples:
        feat = _features(smp.profile, k)
        win_rows = sorted(feat.row_of(w) for w in smp.winners)
        ref = feat.phi[win_rows[0]]
        for r in win_rows[1:]:
            fixed.append((ref - feat.phi[r], "=", 0))
        lose = np.ones(feat.phi.shape[0], dtype=bool)
        lose[win_rows] = False
        if lose.any():
            pool_rows.append(ref[None, :] - feat.phi[lose])
            pool_bounds.append(np.ones(int(lose.sum()), dtype=np.int64))
    pool = np.vstack(pool_rows) if pool_rows else np.zeros((0, len(steps)), dtype=np.int64)
    bounds = np.concatenate(pool_bounds) if pool_bounds else np.zeros(0, dtype=np.int64)
    g = _lazy_rows(names, fixed, pool, bounds, batch)
    if g is None:
        return None
    rule = _rule_from_increments(m, k, steps, g)
    for smp in samples:
        if set(abcs_winners(rule, smp.profile)) != set(smp.winners):
            raise AssertionError("learned rule disagrees with a training label")
    return rule


def erm_seq(
    samples: Sequence[LabeledSample],
    *,
    bound: int = 3,
    k: int | None = None,
    allow_trivial: bool = False,
) -> UnivariateScoring | None:
    """First grid rule (integer ``s`` in ``[0, bound]``, nondecreasing) matching every label.

    Sound but incomplete: rules needing values outside the grid are missed.
    """
    if samples:
        k = _sample_dims(samples, None, None)[1]
    elif k is None:
        raise DomainError("no samples and no k")
    for tail in itertools.combinations_with_replacement(range(bound + 1), k):
        if tail[-1] == 0 and not allow_trivial:
            continue
        s = UnivariateScoring((0,) + tail)
        if all(set(seq_winners(s, smp.profile)) == set(smp.winners) for smp in samples):
            return s
    log.info("no grid rule with values <= %d reproduces the %d labels", bound, len(samples))
    return None
