import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from abclearn.constructions import abcs_family_profile, abcs_family_rule, seq_family_profile, seq_family_rule
from abclearn.core import (
    ApprovalVote,
    BivariateScoring,
    Committee,
    DomainError,
    LabeledSample,
    Profile,
    UnivariateScoring,
    abcs_score,
    abcs_winners,
    all_committees,
    is_greedy_order,
    pair_domain,
    seq_order,
    seq_winners,
    thiele_score,
    verify_abcs_winner,
    verify_seq_winner,
)
from abclearn.reductions import Graph, reduce_is_to_cc_verification
from strategies import bivariate_rules, instances, univariate_rules


def abc_profile(*votes, m=3):
    return Profile(m, [set(v) for v in votes], names="abcdefgh"[:m])


# --------------------------------------------------------------------------
# types


class TestProfile:
    def test_names_and_indices_mix(self):
        P = Profile(3, [{"a", "b"}, ({"c"}, 2), ApprovalVote(frozenset({0}))], names="abc")
        assert P.n == 4
        assert [v.size for v in P.votes] == [2, 1, 1]
        assert P.committee(["c", "a"]).members == (0, 2)

    def test_default_names(self):
        assert Profile(3, [{0}]).names == ("a0", "a1", "a2")

    @pytest.mark.parametrize(
        "m, votes, names",
        [
            (3, [{0, 1, 2}], None),
            (3, [set()], None),
            (3, [{5}], None),
            (3, [], None),
            (1, [{0}], None),
            (3, [{0}], ["a", "a", "b"]),
            (3, [{"z"}], "abc"),
        ],
    )
    def test_rejects(self, m, votes, names):
        with pytest.raises(DomainError):
            Profile(m, votes, names)

    def test_bad_multiplicity(self):
        with pytest.raises(DomainError):
            ApprovalVote(frozenset({0}), 0)

    def test_expanded(self):
        P = Profile(3, [({0}, 2), {1}])
        assert P.expanded() == [frozenset({0}), frozenset({0}), frozenset({1})]


def test_committee_is_canonical():
    assert Committee([3, 1, 2]).members == (1, 2, 3)
    assert Committee([1, 2]) < Committee([1, 3])
    assert Committee([2, 1]) == Committee([1, 2])


# --------------------------------------------------------------------------
# pair domain


@pytest.mark.parametrize(
    "m, k, expected",
    [
        (4, 2, [(0, 1), (1, 1), (0, 2), (1, 2), (2, 2), (1, 3), (2, 3)]),
        (3, 2, [(0, 1), (1, 1), (1, 2), (2, 2)]),
    ],
)
def test_pair_domain_examples(m, k, expected):
    assert list(pair_domain(m, k).pairs) == expected


def test_pair_domain_boundary_rows():
    dom = pair_domain(5, 4)
    assert [x for x, y in dom if y == 1] == [0, 1]
    assert [x for x, y in dom if y == 4] == [3, 4]


@pytest.mark.parametrize("m, k", [(3, 1), (3, 3), (4, 0), (4, 5)])
def test_pair_domain_rejects(m, k):
    with pytest.raises(DomainError):
        pair_domain(m, k)


@given(st.integers(3, 30).flatmap(lambda m: st.tuples(st.just(m), st.integers(2, m - 1))))
def test_pair_domain_size_formula(mk):
    m, k = mk
    brute = sum(1 for y in range(1, m) for x in range(0, k + 1) if max(0, y - m + k) <= x <= min(k, y))
    assert len(pair_domain(m, k)) == brute == k * (m - k) + m - 1


# --------------------------------------------------------------------------
# scoring objects


def test_bivariate_validation():
    dom = pair_domain(3, 2)
    with pytest.raises(DomainError):
        BivariateScoring(dom, {(1, 1): -1})
    with pytest.raises(DomainError):
        BivariateScoring(dom, {(1, 2): 2, (2, 2): 1})
    with pytest.raises(DomainError):
        BivariateScoring(dom, {(0, 2): 1})


def test_bivariate_normalized():
    f = BivariateScoring.cc(4, 2)
    assert not f.is_normalized
    g = f.normalized()
    assert g.is_normalized
    assert g(1, 3) == 0 and g(2, 3) == 0 and g(1, 1) == 1


def test_univariate_validation():
    with pytest.raises(DomainError):
        UnivariateScoring([1, 1])
    with pytest.raises(DomainError):
        UnivariateScoring([0, 2, 1])
    s = UnivariateScoring.from_increments([1, Fraction(1, 2)])
    assert s.values == (0, 1, Fraction(3, 2))
    assert s.increments() == (1, Fraction(1, 2))
    assert UnivariateScoring.trivial(3).is_trivial
    assert not UnivariateScoring.cc(3).is_trivial


# --------------------------------------------------------------------------
# ABCS semantics


def test_abcs_score_examples():
    P = abc_profile("a", "ab", "c")
    assert abcs_score(BivariateScoring.cc(3, 2), P.committee("ab"), P) == 2
    assert abcs_score(BivariateScoring.trivial(3, 2), P.committee("ab"), P) == 0


def test_abcs_score_family_rule():
    P = abcs_family_profile(4, 2, 1, 2)
    h = abcs_family_rule(4, 2, ())
    assert h(1, 1) == 1 and h(2, 2) == 7
    A = P.committee(["a", "b1"])
    # votes {a}, {a,b1}, {b1,c}, {c,d1}
    assert abcs_score(h, A, P) == h(1, 1) + h(2, 2) + h(1, 2) + h(0, 2)


def test_abcs_winners_examples():
    P = abc_profile("a", "b")
    assert abcs_winners(BivariateScoring.av(3, 2), P) == [P.committee("ab")]
    assert abcs_winners(BivariateScoring.trivial(3, 2), P) == all_committees(3, 2)
    assert verify_abcs_winner(BivariateScoring.cc(3, 2), P, P.committee("ab"))
    assert not verify_abcs_winner(BivariateScoring.cc(3, 2), P, P.committee("ac"))


@pytest.mark.parametrize("x, y", [(1, 2), (2, 3)])
def test_family_rule_unique_winner(x, y):
    P = abcs_family_profile(4, 2, x, y)
    assert abcs_winners(abcs_family_rule(4, 2, [(x, y)]), P) == [P.committee(["a", "b1"])]


def test_cc_verification_on_triangle():
    G = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    inst = reduce_is_to_cc_verification(G, 2)
    f = BivariateScoring.cc(inst.profile.m, 2)
    assert verify_abcs_winner(f, inst.profile, inst.committee)
    assert inst.committee in {Committee(c) for c in oracles.brute_abcs_winners(f.values, inst.profile.m, 2, raw(inst.profile))}


def raw(P):
    return [(v.alternatives, v.multiplicity) for v in P.votes]


@given(instances(), st.data())
def test_abcs_winners_match_brute_force(inst, data):
    m, k, votes, P = inst
    f = data.draw(bivariate_rules(m, k))
    got = {c.members for c in abcs_winners(f, P, k)}
    assert got == oracles.brute_abcs_winners(f.values, m, k, votes)
    scores = {abcs_score(f, Committee(c), P) for c in got}
    assert len(scores) == 1


@given(instances(), st.data())
def test_affine_invariance(inst, data):
    m, k, votes, P = inst
    f = data.draw(bivariate_rules(m, k))
    scale = data.draw(st.fractions(min_value=Fraction(1, 5), max_value=5))
    shift = {y: data.draw(st.fractions(min_value=0, max_value=4)) for y in range(1, m)}
    g = f.affine(scale, shift)
    assert set(abcs_winners(g, P, k)) == set(abcs_winners(f, P, k))
    assert set(abcs_winners(g.normalized(), P, k)) == set(abcs_winners(f, P, k))


@given(instances(), st.data())
def test_thiele_embedding(inst, data):
    m, k, votes, P = inst
    s = data.draw(univariate_rules(k))
    f = BivariateScoring.from_univariate(s, m)
    scores = {c: thiele_score(s, c.members, P) for c in all_committees(m, k)}
    best = max(scores.values())
    assert set(abcs_winners(f, P, k)) == {c for c, v in scores.items() if v == best}


# --------------------------------------------------------------------------
# Thiele and sequential semantics


def test_thiele_score_examples():
    P = abc_profile("a", "ab", "c")
    assert thiele_score(UnivariateScoring.cc(2), [0], P) == 2
    Q = abc_profile("ab")
    assert thiele_score(UnivariateScoring([0, 1, 3]), [0, 1], Q) == 3
    assert thiele_score(UnivariateScoring([0, 1, 3]), [], Q) == 0
    with pytest.raises(DomainError):
        thiele_score(UnivariateScoring([0, 1, 3]), [0, 1, 2], Q)


def test_seq_winners_examples():
    P = abc_profile("ab", "a", "c")
    cc = UnivariateScoring.cc(2)
    assert seq_winners(cc, P) == [P.committee("ac")]
    assert verify_seq_winner(cc, P, P.committee("ac"))
    assert not verify_seq_winner(cc, P, P.committee("ab"))
    assert seq_winners(UnivariateScoring.trivial(2), P) == all_committees(3, 2)
    assert verify_seq_winner(UnivariateScoring.trivial(2), P, P.committee("bc"))


def test_seq_winner_on_family_profile():
    P = seq_family_profile(2, 2)
    assert seq_winners(seq_family_rule(2, {2}), P) == [P.committee(["b1", "a"])]


def test_seq_order_is_greedy():
    P = abc_profile("ab", "a", "c")
    cc = UnivariateScoring.cc(2)
    order = seq_order(cc, P, P.committee("ac"))
    assert order == (0, 2)
    assert is_greedy_order(cc, P, order)
    assert not is_greedy_order(cc, P, (2, 0))
    assert seq_order(cc, P, P.committee("ab")) is None


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_seq_winners_match_verify_exhaustive_votes(m):
    # every single-vote-type profile with a multiplicity pattern, every rule on a small grid
    rules = [UnivariateScoring((0,) + t) for t in itertools.combinations_with_replacement(range(3), 2)]
    subsets = [frozenset(c) for y in range(1, m) for c in itertools.combinations(range(m), y)]
    for i, u in enumerate(subsets[:8]):
        for v in subsets[i::5][:6]:
            P = Profile(m, [(u, 2), v])
            for s in rules:
                won = set(seq_winners(s, P))
                for C in all_committees(m, 2):
                    assert (C in won) == verify_seq_winner(s, P, C)


@given(instances(), st.data())
def test_seq_winners_match_brute_force(inst, data):
    m, k, votes, P = inst
    s = data.draw(univariate_rules(k))
    got = {c.members for c in seq_winners(s, P)}
    assert got == oracles.brute_seq_winners(s.values, m, k, votes)
    for C in all_committees(m, k):
        assert (C.members in got) == verify_seq_winner(s, P, C)
        order = seq_order(s, P, C)
        assert (order is not None) == (C.members in got)
        if order is not None:
            assert is_greedy_order(s, P, order)


def test_labeled_sample_validation():
    P = abc_profile("a")
    with pytest.raises(DomainError):
        LabeledSample(P, 2, frozenset())
    with pytest.raises(DomainError):
        LabeledSample(P, 2, {Committee([0, 1, 2])})
