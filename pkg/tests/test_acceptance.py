"""Acceptance checks, one test per criterion.

Every check is exact (tolerance 0) and prints ``criterion N: PASS`` or
``FAIL`` with its elapsed time.  Runtime limits are pinned below.
"""

import itertools
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

import oracles
from abclearn import _kernel
from abclearn.constructions import (
    abcs_family_margins,
    abcs_shatter_family,
    seq_shatter_family,
    t_set,
    verify_n_shattering,
)
from abclearn.core import (
    BivariateScoring,
    Committee,
    Profile,
    UnivariateScoring,
    abcs_score,
    abcs_winners,
    all_committees,
    pair_domain,
    seq_winners,
    verify_seq_winner,
)
from abclearn.lp import LinearConstraintSystem, check_certificate, feasible
from abclearn.pac import PacConfig, pac_experiment
from abclearn.reductions import (
    Graph,
    brute_independent_set,
    brute_sat,
    enumerate_2p2n,
    reduce_is_to_cc_verification,
    reduce_is_to_target_abcs,
    reduce_sat_to_seqcc_verification,
    reduce_sat_to_target_seq,
)
from abclearn.solvers import target_abcs, target_seq_thiele

pytestmark = pytest.mark.acceptance

TOLERANCE = 0  # every comparison below is exact

LIMIT_SECONDS = {
    1: 1.0,
    2: 60.0,
    3: 60.0,
    4: 300.0,
    5: 1800.0,
    7: 1800.0,
    9: 10.0,
    10: 600.0,
}


@contextmanager
def criterion(number, capsys):
    """Time the block and print one status line for it."""
    state = {"ok": False}
    start = time.perf_counter()
    try:
        yield state
    finally:
        elapsed = time.perf_counter() - start
        limit = LIMIT_SECONDS.get(number)
        in_time = limit is None or elapsed < limit
        status = "PASS" if state["ok"] and in_time else "FAIL"
        note = f"{elapsed:.2f}s" + (f" (limit {limit:.0f}s)" if limit else "")
        with capsys.disabled():
            print(f"\ncriterion {number}: {status} {note} {state.get('detail', '')}".rstrip())
    assert in_time, f"criterion {number} took {elapsed:.1f}s, limit {limit}s"


def finish(state, failures, detail=""):
    state["ok"] = not failures
    state["detail"] = detail if not failures else f"{detail} failures={failures[:5]}"
    assert not failures, failures


# --------------------------------------------------------------------------


def test_criterion_1_t_set_size(capsys):
    with criterion(1, capsys) as state:
        identity, ratio = [], []
        for m in range(4, 31):
            for k in range(2, m):
                T, X = len(t_set(m, k)), len(pair_domain(m, k))
                if abs(T - (X - m - 1)) > TOLERANCE:
                    identity.append((m, k))
                if 7 * T < 2 * X:
                    ratio.append((m, k, T, X))
        finish(state, identity + ratio, "identity and ratio over 4<=m<=30")


def test_criterion_2_margins(capsys):
    with criterion(2, capsys) as state:
        failures = []
        for m in range(3, 8):
            for k in (2, 3):
                if k >= m:
                    continue
                rep = abcs_family_margins(m, k)
                if not (rep.rival_margin_ok and rep.signed_margin_ok):
                    failures.append((m, k))
                if rep.min_rival_margin is not None and rep.min_rival_margin < 1:
                    failures.append((m, k, rep.min_rival_margin))
        finish(state, failures, "all subsets, m<=7, k<=3")


def test_criterion_3_n_shattering(capsys):
    with criterion(3, capsys) as state:
        failures = [("abcs", m) for m in range(3, 7) if not verify_n_shattering(abcs_shatter_family(m, 2))]
        failures += [("seq", k) for k in range(2, 7) if not verify_n_shattering(seq_shatter_family(k))]
        finish(state, failures)


def random_profile(rng, m):
    votes = []
    for _ in range(rng.randint(1, 6)):
        votes.append((frozenset(rng.sample(range(m), rng.randint(1, m - 1))), rng.randint(1, 3)))
    return votes


def test_criterion_4_random_agreement(capsys):
    with criterion(4, capsys) as state:
        rng = random.Random(4)
        failures = []
        for trial in range(100):
            m = rng.randint(3, 6)
            k = rng.randint(2, min(3, m - 1))
            votes = random_profile(rng, m)
            P = Profile(m, votes)
            C = Committee(rng.sample(range(m), k))
            s = target_seq_thiele(P, C, k)
            grid = oracles.grid_target_seq(m, k, votes, C.members, bound=3)
            if (s is None) != (grid is None):
                failures.append(trial)
            if s is not None and not verify_seq_winner(s, P, C):
                failures.append(("witness", trial))
        finish(state, failures, "100 random instances vs grid (values <= 3)")


def test_criterion_4_hand_built_instance(capsys):
    # {a,b},{a} with C={b,c} is expected to have no witness
    with criterion(4, capsys) as state:
        P = Profile(3, [{"a", "b"}, {"a"}], names="abc")
        C = P.committee("bc")
        s = target_seq_thiele(P, C, 2)
        failures = [] if s is None else [("witness found", s.values)]
        finish(state, failures, "hand-built instance expects none")


GRAPHS = [Graph.from_edges(r, edges) for r, edges in oracles.atlas_graphs(6)]


def test_criterion_5_is_reduction(capsys):
    with criterion(5, capsys) as state:
        failures = []
        for G in GRAPHS:
            for K in (2, 3):
                inst = reduce_is_to_target_abcs(G, K)
                none = target_abcs(inst.profile, inst.committee, K) is None
                if brute_independent_set(G, K) != none:
                    failures.append((G.r, G.sorted_edges(), K))
        finish(state, failures, f"{2 * len(GRAPHS)} graph instances")


def test_criterion_6_score_formulas(capsys):
    with criterion(6, capsys) as state:
        failures = []
        for G in GRAPHS:
            for K in (2, 3):
                inst = reduce_is_to_target_abcs(G, K)
                k, delta, r = inst.k, inst.meta["delta"], inst.meta["r"]
                forced = BivariateScoring(pair_domain(inst.profile.m, k), {(1, 2): 1, (2, 2): 1})
                if abs(abcs_score(forced, inst.committee, inst.profile) - (k * delta - 1) * (k * r + k + 1)) > TOLERANCE:
                    failures.append(("target", G.sorted_edges(), K))
                cc = reduce_is_to_cc_verification(G, K)
                f_cc = BivariateScoring.cc(cc.profile.m, k)
                if abs(abcs_score(f_cc, cc.committee, cc.profile) - (k * delta - 1) * (k * r + 1)) > TOLERANCE:
                    failures.append(("cc", G.sorted_edges(), K))
        finish(state, failures)


FORMULAS = enumerate_2p2n(3)


def test_criterion_7_sat_reductions(capsys):
    with criterion(7, capsys) as state:
        failures = []
        satisfiable = 0
        for i, phi in enumerate(FORMULAS):
            sat = brute_sat(phi) is not None
            satisfiable += sat
            inst = reduce_sat_to_target_seq(phi)
            some = target_seq_thiele(inst.profile, inst.committee, inst.k) is not None
            ver = reduce_sat_to_seqcc_verification(phi)
            wins = verify_seq_winner(UnivariateScoring.cc(ver.k), ver.profile, ver.committee)
            if not (sat == some == wins):
                failures.append(i)
        finish(state, failures, f"{len(FORMULAS)} formulas, {satisfiable} satisfiable")


def _row(k, *entries):
    out = [0] * k
    for j, c in entries:
        out[j] = c
    return tuple(out)


@pytest.mark.slow
def test_criterion_8_part_three_and_forcing(capsys):
    with criterion(8, capsys) as state:
        failures = []
        rng = np.random.default_rng(8)
        for n, phi in enumerate(FORMULAS):
            inst = reduce_sat_to_target_seq(phi)
            P, C, k, t = inst.profile, inst.committee, inst.k, inst.meta["t"]
            S = [P.names.index(nm) for nm in inst.meta["S"]]
            z = P.names.index("z")
            A = list(C.members)
            P3 = inst.parts[3]
            for inc in ([1] * k, rng.integers(0, 4, size=k).tolist()):
                d = [0] + inc
                for i in range(k):
                    chosen = rng.choice(A, size=i, replace=False)
                    state_row = np.zeros((1, P.m), dtype=bool)
                    state_row[0, chosen] = True
                    gains = _kernel.increases(P3.arrays, state_row, inc)[0]
                    base = (k + t - 1 - i) * d[i + 1] + i * d[i]
                    if any(gains[a] != base for a in S if not state_row[0, a]):
                        failures.append(("equal gains", n, i))
                    if gains[z] != base + d[i + 1]:
                        failures.append(("z gain", n, i))
            violating = [
                [(_row(k, (0, 1)), "eq0"), (_row(k, (1, 1)), "eq0")],
                [(_row(k, (0, 1)), "eq0"), (_row(k, (1, 1)), "gt0")],
                [(_row(k, (0, -1), (1, 1)), "gt0"), (_row(k, (0, 1)), "gt0")],
            ]
            for case, constraints in enumerate(violating):
                if target_seq_thiele(P, C, k, constraints=constraints) is not None:
                    failures.append(("forcing", n, case))
        finish(state, failures, f"{len(FORMULAS)} instances")


def random_system(rng):
    nvar = rng.randint(1, 4)
    s = LinearConstraintSystem([f"x{i}" for i in range(nvar)], nonnegative=[rng.random() < 0.5 for _ in range(nvar)])
    for _ in range(rng.randint(0, 8)):
        coeffs = [Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(nvar)]
        s.add(coeffs, rng.choice([">=", ">=", "="]), rng.randint(-3, 3))
    return s


def test_criterion_9_lp_engine(capsys):
    with criterion(9, capsys) as state:
        rng = random.Random(9)
        failures = []
        feasible_count = 0
        for i in range(200):
            s = random_system(rng)
            res = feasible(s)
            if res.feasible != oracles.fm_system_feasible(s):
                failures.append(("verdict", i))
            elif res.feasible:
                feasible_count += 1
                if not s.satisfied_by(res.witness):
                    failures.append(("witness", i))
            elif not check_certificate(s, res.certificate):
                failures.append(("certificate", i))
        finish(state, failures, f"200 systems, {feasible_count} feasible")


def test_criterion_10_pac(capsys):
    with criterion(10, capsys) as state:
        cfg = PacConfig(
            m=5, k=2, n=6, sample_count=40, test_count=200, target=UnivariateScoring.cc(2), budgets=(5, 40)
        )
        rep = pac_experiment(cfg, seeds=range(20))
        early, late = rep.mean_error(5), rep.mean_error(40)
        failures = []
        if late > early:
            failures.append(("mean error rose", float(early), float(late)))
        if not rep.all_consistent:
            failures.append("inconsistent ERM run")
        finish(state, failures, f"mean error {float(early):.4f} -> {float(late):.4f}")


def _all_votes(m):
    return [frozenset(c) for y in range(1, m) for c in itertools.combinations(range(m), y)]


def test_criterion_11_semantics(capsys):
    with criterion(11, capsys) as state:
        rng = random.Random(11)
        failures = []
        checked = 0
        for m in range(3, 7):
            singles = [[(v, 1)] for v in _all_votes(m)]
            mixed = [random_profile(rng, m) for _ in range(10)]
            for k in range(2, min(3, m - 1) + 1):
                committees = all_committees(m, k)
                rules = [UnivariateScoring(s) for s in oracles.seq_grid(k, bound=2)]
                for votes in singles + mixed:
                    P = Profile(m, votes)
                    for s in rules:
                        won = set(seq_winners(s, P))
                        for C in committees:
                            checked += 1
                            if (C in won) != verify_seq_winner(s, P, C):
                                failures.append((m, k, s.values, C.members))
        for i in range(100):
            m = rng.randint(3, 6)
            k = rng.randint(2, m - 1)
            dom = pair_domain(m, k)
            values = {}
            for y in range(1, m):
                acc = Fraction(0)
                for x in range(dom.lowest(y), dom.highest(y) + 1):
                    values[(x, y)] = acc
                    acc += Fraction(rng.randint(0, 3), rng.randint(1, 3))
            f = BivariateScoring(dom, values)
            g = f.affine(Fraction(rng.randint(1, 9), rng.randint(1, 4)), {y: Fraction(rng.randint(0, 5), 2) for y in range(1, m)})
            P = Profile(m, random_profile(rng, m))
            if set(abcs_winners(f, P, k)) != set(abcs_winners(g, P, k)):
                failures.append(("affine", i))
        finish(state, failures, f"{checked} verify checks, 100 affine pairs")
