"""Instance generators for the hardness reductions, with brute-force oracles.

* :func:`reduce_is_to_target_abcs`: independent set to the complement of
  the target-ABCS problem.
* :func:`reduce_is_to_cc_verification`: independent set to CC winner
  verification (complemented).
* :func:`reduce_sat_to_target_seq`: 2P2N-3SAT to the target sequential
  Thiele problem.
* :func:`reduce_sat_to_seqcc_verification`: 2P2N-3SAT to sequential CC
  winner verification.

Graphs use 0-based vertices internally and DIMACS 1-based vertices on
disk.  Literals are signed 1-based variable indices.
"""

from __future__ import annotations

import itertools
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from abclearn.core import Committee, DomainError, Profile
from abclearn.textio import FormatError, format_profile, parse_committee, parse_profile

DEFAULT_BRUTE_CAP = 20


class ParseError(ValueError):
    """Malformed DIMACS input; the message names the offending line."""


class CapExceeded(RuntimeError):
    """An exhaustive oracle was refused because the input is too large."""


def _brute_cap(cap: int | None) -> int:
    if cap is not None:
        return cap
    return int(os.environ.get("ABCLEARN_BRUTE_CAP", DEFAULT_BRUTE_CAP))


# --------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class Graph:
    r: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            if not (0 <= u < self.r and 0 <= v < self.r):
                raise DomainError(f"edge ({u}, {v}) out of range")
            e = (min(u, v), max(u, v))
            norm.add(e)
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, r: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        edges = list(edges)
        keys = [(min(u, v), max(u, v)) for u, v in edges]
        if len(set(keys)) != len(keys):
            raise DomainError("duplicate edge")
        return cls(r, frozenset(keys))

    def degree(self, v: int) -> int:
        return sum(v in e for e in self.edges)

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.r)), default=0)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def parse_graph(text: str) -> Graph:
    """DIMACS ``p edge r e`` followed by ``e u v`` lines (1-based)."""
    header = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for no, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            if header is not None:
                raise ParseError(f"line {no}: second header")
            if len(tok) != 4 or tok[1] != "edge":
                raise ParseError(f"line {no}: malformed header, expected 'p edge r e'")
            try:
                header = (int(tok[2]), int(tok[3]))
            except ValueError:
                raise ParseError(f"line {no}: malformed header counts") from None
            continue
        if header is None:
            raise ParseError(f"line {no}: data before header")
        if tok[0] != "e" or len(tok) != 3:
            raise ParseError(f"line {no}: expected 'e u v'")
        try:
            u, v = int(tok[1]), int(tok[2])
        except ValueError:
            raise ParseError(f"line {no}: non-integer vertex") from None
        if not (1 <= u <= header[0] and 1 <= v <= header[0]):
            raise ParseError(f"line {no}: vertex out of range 1..{header[0]}")
        if u == v:
            raise ParseError(f"line {no}: self-loop")
        key = (min(u, v) - 1, max(u, v) - 1)
        if key in seen:
            raise ParseError(f"line {no}: duplicate edge")
        seen.add(key)
        edges.append(key)
    if header is None:
        raise ParseError("missing 'p edge' header")
    if len(edges) != header[1]:
        raise ParseError(f"header declares {header[1]} edges, found {len(edges)}")
    return Graph(header[0], frozenset(edges))


def emit_graph(G: Graph) -> str:
    lines = [f"p edge {G.r} {len(G.edges)}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in G.sorted_edges()]
    return "\n".join(lines) + "\n"


def pad_graph(G: Graph) -> Graph:
    """Attach ``max_degree - deg(v)`` pendant vertices to every vertex.

    Original vertices keep their indices; pendants follow in vertex order.
    """
    delta = G.max_degree
    if delta < 2:
        raise DomainError(f"maximum degree {delta} < 2 is not supported")
    edges = set(G.edges)
    nxt = G.r
    for v in range(G.r):
        for _ in range(delta - G.degree(v)):
            edges.add((v, nxt))
            nxt += 1
    return Graph(nxt, frozenset(edges))


def brute_independent_set(G: Graph, K: int, *, cap: int | None = None) -> bool:
    """Whether ``G`` has an independent set of size ``K`` (exhaustive)."""
    limit = _brute_cap(cap)
    if G.r > limit:
        raise CapExceeded(f"{G.r} vertices exceed the brute-force cap {limit}")
    if K <= 0:
        return True
    adj = [0] * G.r
    for u, v in G.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    for combo in itertools.combinations(range(G.r), K):
        mask = 0
        for v in combo:
            mask |= 1 << v
        if all(not adj[v] & mask for v in combo):
            return True
    return False


# --------------------------------------------------------------------------
# CNF


@dataclass(frozen=True)
class Cnf2p2n:
    """3-CNF where every variable occurs twice positively and twice negatively."""

    r: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        problem = check_2p2n(self.r, self.clauses)
        if problem:
            raise DomainError(problem)

    @property
    def t(self) -> int:
        return len(self.clauses)

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any((lit > 0) == bool(assignment[abs(lit) - 1]) for lit in c) for c in self.clauses)


def check_2p2n(r: int, clauses) -> str | None:
    """Reason the clause list is not a valid 2P2N formula, else ``None``."""
    for i, c in enumerate(clauses):
        if len(c) != 3:
            return f"clause {i + 1} has {len(c)} literals, expected 3"
        if len(set(c)) != 3:
            return f"clause {i + 1} repeats a literal"
        for lit in c:
            if lit == 0 or abs(lit) > r:
                return f"clause {i + 1}: literal {lit} out of range"
    occ = Counter(lit for c in clauses for lit in c)
    for v in range(1, r + 1):
        if occ[v] != 2 or occ[-v] != 2:
            return f"2P2N violation: x{v} occurs {occ[v]} times positively and {occ[-v]} times negatively"
    return None


def parse_cnf(text: str) -> Cnf2p2n:
    """DIMACS ``p cnf r t`` followed by zero-terminated clauses."""
    header = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    occ: Counter = Counter()
    for no, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            if header is not None:
                raise ParseError(f"line {no}: second header")
            if len(tok) != 4 or tok[1] != "cnf":
                raise ParseError(f"line {no}: malformed header, expected 'p cnf r t'")
            try:
                header = (int(tok[2]), int(tok[3]))
            except ValueError:
                raise ParseError(f"line {no}: malformed header counts") from None
            continue
        if header is None:
            raise ParseError(f"line {no}: data before header")
        for t in tok:
            try:
                lit = int(t)
            except ValueError:
                raise ParseError(f"line {no}: non-integer literal {t!r}") from None
            if lit == 0:
                if len(pending) != 3:
                    raise ParseError(f"line {no}: clause has {len(pending)} literals, expected 3")
                if len(set(pending)) != 3:
                    raise ParseError(f"line {no}: clause repeats a literal")
                clauses.append(tuple(pending))
                pending = []
                continue
            if abs(lit) > header[0]:
                raise ParseError(f"line {no}: variable {abs(lit)} out of range 1..{header[0]}")
            occ[lit] += 1
            if occ[lit] > 2:
                sign = "positively" if lit > 0 else "negatively"
                raise ParseError(f"line {no}: 2P2N violation: x{abs(lit)} appears more than twice {sign}")
            pending.append(lit)
    if header is None:
        raise ParseError("missing 'p cnf' header")
    if pending:
        raise ParseError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise ParseError(f"header declares {header[1]} clauses, found {len(clauses)}")
    problem = check_2p2n(header[0], clauses)
    if problem:
        raise ParseError(problem)
    return Cnf2p2n(header[0], tuple(clauses))


def emit_cnf(phi: Cnf2p2n) -> str:
    lines = [f"p cnf {phi.r} {phi.t}"]
    lines += [" ".join(str(lit) for lit in c) + " 0" for c in phi.clauses]
    return "\n".join(lines) + "\n"


def brute_sat(phi: Cnf2p2n, *, cap: int | None = None) -> tuple[bool, ...] | None:
    """First satisfying assignment, trying ``True`` before ``False`` per variable."""
    limit = _brute_cap(cap)
    if phi.r > limit:
        raise CapExceeded(f"{phi.r} variables exceed the brute-force cap {limit}")
    for bits in itertools.product((True, False), repeat=phi.r):
        if phi.satisfied_by(bits):
            return bits
    return None


def enumerate_2p2n(r: int) -> list[Cnf2p2n]:
    """All 2P2N formulas on ``r`` variables, as multisets of clauses.

    Each clause is a set of three distinct literals; formulas differing only
    in clause order or literal order inside a clause are identified.
    """
    if r % 3:
        return []
    lits = [v for i in range(1, r + 1) for v in (i, -i)]
    out: list[Cnf2p2n] = []

    def rec(remaining: Counter, acc: list, last: tuple | None):
        if not +remaining:
            out.append(Cnf2p2n(r, tuple(acc)))
            return
        avail = sorted(l for l in lits if remaining[l] > 0)
        for clause in itertools.combinations(avail, 3):
            if last is not None and clause < last:
                continue
            for l in clause:
                remaining[l] -= 1
            if min(remaining[l] for l in clause) >= 0:
                rec(remaining, acc + [clause], clause)
            for l in clause:
                remaining[l] += 1

    rec(Counter({l: 2 for l in lits}), [], None)
    return out


# --------------------------------------------------------------------------
# reduction instances


@dataclass
class ReductionInstance:
    """A generated profile, target committee and committee size.

    ``parts`` holds the sub-profiles over the same alternatives, keyed by
    part number.
    """

    profile: Profile
    committee: Committee
    k: int
    parts: dict[int, Profile]
    meta: dict = field(default_factory=dict)

    def part_size(self, part: int) -> int:
        return self.parts[part].n if part in self.parts else 0


def emit(instance: ReductionInstance) -> str:
    """Profile text followed by ``committee`` and ``k`` manifest lines."""
    names = instance.profile.committee_names(instance.committee)
    return format_profile(instance.profile, instance.k) + f"committee {' '.join(names)}\nk {instance.k}\n"


def parse_instance(text: str) -> tuple[Profile, Committee | None, int]:
    """Read :func:`emit` output; the manifest lines are optional.

    A ``k`` manifest line overrides the header value.
    """
    body = []
    members = None
    k_line = None
    for no, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split("#", 1)[0].split()
        if tok and tok[0] == "committee":
            members = " ".join(tok[1:])
        elif tok and tok[0] == "k" and len(tok) == 2:
            try:
                k_line = int(tok[1])
            except ValueError:
                raise FormatError(f"line {no}: non-integer k") from None
        else:
            body.append(raw)
    profile, k = parse_profile("\n".join(body))
    committee = parse_committee(members, profile) if members is not None else None
    return profile, committee, k if k_line is None else k_line


def _build(names: list[str], parts: dict[int, list], committee: list[str], k: int, meta: dict) -> ReductionInstance:
    m = len(names)
    sub = {no: Profile(m, votes, names) for no, votes in parts.items() if votes}
    allvotes = [v for no in sorted(parts) for v in parts[no]]
    P = Profile(m, allvotes, names)
    C = P.committee(committee)
    if len(C) != k:
        raise AssertionError("committee size mismatch")
    return ReductionInstance(P, C, k, sub, meta)


def _is_alternatives(r: int, with_d: bool) -> list[str]:
    names = [f"a{i}" for i in range(1, r + 1)] + [f"b{i}" for i in range(1, r + 1)] + ["c"]
    if with_d:
        names.append("d")
    return names


def reduce_is_to_target_abcs(G: Graph, K: int) -> ReductionInstance:
    """Profile on which ``{a1..aK}`` wins for some non-trivial rule iff ``G`` has no ``K``-independent set.

    Part 1 has one vote per padded edge, part 2 has ``K*max_degree - 1``
    copies of the pair votes and part 3 has one vote per pair outside the
    row minima and ``(1,2), (2,2)``.  The extra alternatives of a part-3
    vote are the first ones in the list ``a(K+1)..a(r), b1..b(r), c``.
    """
    if K < 2:
        raise DomainError("need K >= 2")
    Gp = pad_graph(G)
    delta = G.max_degree
    r = Gp.r
    k = K
    if k >= 2 * r + 2:
        raise DomainError("K too large for the padded graph")
    names = _is_alternatives(r, with_d=True)
    m = len(names)
    copies = k * delta - 1
    part1 = [{f"b{u + 1}", f"b{v + 1}"} for u, v in Gp.sorted_edges()]
    part2 = []
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            part2.append(({f"a{i}", f"b{j}"}, copies))
    for i in range(1, r + 1):
        part2.append(({f"a{i}", "c"}, copies))
    for i in range(1, r + 1):
        part2.append(({f"b{i}", "d"}, copies))
    part2.append(({"a1", "d"}, copies))
    part2.append(({"c", "d"}, copies))
    pool = [f"a{i}" for i in range(k + 1, r + 1)] + [f"b{i}" for i in range(1, r + 1)] + ["c"]
    part3 = []
    for x, y in _x_hat(m, k):
        vote = {"d"} | {f"a{i}" for i in range(1, x)} | set(pool[: y - x])
        if len(vote) != y:
            raise AssertionError("part-3 vote has the wrong size")
        part3.append(vote)
    meta = {"delta": delta, "r": r, "padded": Gp, "graph": G, "copies": copies}
    return _build(names, {1: part1, 2: part2, 3: part3}, [f"a{i}" for i in range(1, k + 1)], k, meta)


def _x_hat(m: int, k: int) -> list[tuple[int, int]]:
    from abclearn.core import pair_domain

    dom = pair_domain(m, k)
    return [(x, y) for x, y in dom.pairs if x != dom.lowest(y) and (x, y) not in ((1, 2), (2, 2))]


def reduce_is_to_cc_verification(G: Graph, K: int) -> ReductionInstance:
    """Profile on which ``{a1..aK}`` is a CC winner iff ``G`` has no ``K``-independent set."""
    if K < 2:
        raise DomainError("need K >= 2")
    Gp = pad_graph(G)
    delta = G.max_degree
    r = Gp.r
    k = K
    names = _is_alternatives(r, with_d=False)
    copies = k * delta - 1
    part1 = [{f"b{u + 1}", f"b{v + 1}"} for u, v in Gp.sorted_edges()]
    part2 = [({f"a{i}", f"b{j}"}, copies) for i in range(1, r + 1) for j in range(1, r + 1)]
    part2.append(({"a1", "c"}, copies))
    meta = {"delta": delta, "r": r, "padded": Gp, "graph": G, "copies": copies}
    return _build(names, {1: part1, 2: part2}, [f"a{i}" for i in range(1, k + 1)], k, meta)


def _lit_name(lit: int) -> str:
    return f"x{lit}" if lit > 0 else f"nx{-lit}"


def _sat_part1(phi: Cnf2p2n) -> list:
    votes: list = []
    for i in range(1, phi.r + 1):
        votes.append(({f"x{i}", f"nx{i}"}, 3))
        votes.append({f"x{i}", f"d_x{i}"})
        votes.append({f"nx{i}", f"d_nx{i}"})
    for j, clause in enumerate(phi.clauses, start=1):
        for lit in clause:
            votes.append({f"c{j}", _lit_name(lit)})
        votes.append(({f"c{j}", f"s{j}"}, 2))
        votes.append({f"s{j}", f"d_s{j}"})
    return votes


def _literal_names(r: int) -> list[str]:
    return [nm for i in range(1, r + 1) for nm in (f"x{i}", f"nx{i}")]


def reduce_sat_to_target_seq(phi: Cnf2p2n) -> ReductionInstance:
    """Profile on which ``A`` can win some non-trivial sequential Thiele rule iff ``phi`` is satisfiable.

    ``A`` holds the padding ``p, w1..w7``, every literal and every clause
    alternative; ``k = 2r + t + 8``.  Part 3 replaces, one at a time, each
    member of ``A + {s1..st}`` by ``z`` (members in construction order).
    """
    r, t = phi.r, phi.t
    k = 2 * r + t + 8
    padding = ["p"] + [f"w{i}" for i in range(1, 8)]
    literals = _literal_names(r)
    clauses = [f"c{j}" for j in range(1, t + 1)]
    specials = [f"s{j}" for j in range(1, t + 1)]
    dummies = (
        [f"d_{nm}" for nm in literals]
        + [f"d_s{j}" for j in range(1, t + 1)]
        + [f"d_p{j}" for j in range(1, 10)]
        + [f"d_w{i}_{j}" for i in range(1, 8) for j in range(1, 7)]
    )
    names = padding + literals + clauses + specials + ["z"] + dummies
    A = padding + literals + clauses
    part2: list = [{"p", "z"}] + [{"p", f"d_p{j}"} for j in range(1, 10)]
    for i in range(1, 8):
        part2.append({f"w{i}", "z"})
        part2 += [{f"w{i}", f"d_w{i}_{j}"} for j in range(1, 7)]
    S = A + specials
    part3 = [set(S[:i] + ["z"] + S[i + 1 :]) for i in range(len(S))]
    meta = {"r": r, "t": t, "S": S, "phi": phi}
    return _build(names, {1: _sat_part1(phi), 2: part2, 3: part3}, A, k, meta)


def reduce_sat_to_seqcc_verification(phi: Cnf2p2n) -> ReductionInstance:
    """Profile on which literals plus clauses win sequential CC iff ``phi`` is satisfiable."""
    r, t = phi.r, phi.t
    literals = _literal_names(r)
    clauses = [f"c{j}" for j in range(1, t + 1)]
    specials = [f"s{j}" for j in range(1, t + 1)]
    dummies = [f"d_{nm}" for nm in literals] + [f"d_s{j}" for j in range(1, t + 1)]
    names = literals + clauses + specials + dummies
    A = literals + clauses
    meta = {"r": r, "t": t, "phi": phi}
    return _build(names, {1: _sat_part1(phi)}, A, len(A), meta)
