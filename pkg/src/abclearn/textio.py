"""Plain-text formats for profiles, rules and labelled samples.

Profile::

    # comment
    m 4 k 2
    alts a b c d          (optional; default names a0 .. a{m-1})
    2 a b                 (multiplicity, then approved names)

Rules are lines ``bxy <x> <y> <num>/<den>`` (bivariate) or
``u <x> <num>/<den>`` (univariate); missing entries are 0.  A sample file
is a profile followed by a ``winners`` line and one committee per line.
"""

from __future__ import annotations

from fractions import Fraction

from abclearn.core import (
    BivariateScoring,
    Committee,
    DomainError,
    LabeledSample,
    Profile,
    UnivariateScoring,
    pair_domain,
)


class FormatError(ValueError):
    """Malformed text input; the message carries the line number."""


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _header(tokens, no):
    if len(tokens) != 4 or tokens[0] != "m" or tokens[2] != "k":
        raise FormatError(f"line {no}: expected 'm <int> k <int>'")
    try:
        return int(tokens[1]), int(tokens[3])
    except ValueError:
        raise FormatError(f"line {no}: non-integer m or k") from None


def _parse_profile_lines(rows) -> tuple[Profile, int, list]:
    rows = list(rows)
    if not rows:
        raise FormatError("empty profile")
    no, tok = rows[0]
    m, k = _header(tok, no)
    names = None
    body = rows[1:]
    if body and body[0][1][0] == "alts":
        names = body[0][1][1:]
        body = body[1:]
    votes = []
    rest = []
    for i, (no, tok) in enumerate(body):
        if tok[0] == "winners":
            rest = body[i + 1 :]
            break
        try:
            mult = int(tok[0])
        except ValueError:
            raise FormatError(f"line {no}: vote must start with a multiplicity") from None
        if len(tok) < 2:
            raise FormatError(f"line {no}: empty vote")
        votes.append((no, mult, tok[1:]))
    try:
        names = names if names is not None else [f"a{i}" for i in range(m)]
        lookup = {nm: i for i, nm in enumerate(names)}
        parsed = []
        for no, mult, members in votes:
            try:
                parsed.append((frozenset(lookup[x] for x in members), mult))
            except KeyError as exc:
                raise FormatError(f"line {no}: unknown alternative {exc.args[0]!r}") from None
            if len(parsed[-1][0]) != len(members):
                raise FormatError(f"line {no}: repeated alternative in vote")
        profile = Profile(m, parsed, names)
    except DomainError as exc:
        raise FormatError(str(exc)) from None
    return profile, k, rest


def parse_profile(text: str) -> tuple[Profile, int]:
    profile, k, rest = _parse_profile_lines(_lines(text))
    if rest:
        raise FormatError("unexpected winners section in profile file")
    return profile, k


def format_profile(profile: Profile, k: int) -> str:
    out = [f"m {profile.m} k {k}", "alts " + " ".join(profile.names)]
    for v in profile.votes:
        out.append(" ".join([str(v.multiplicity)] + [profile.names[i] for i in sorted(v.alternatives)]))
    return "\n".join(out) + "\n"


def parse_committee(text: str, profile: Profile) -> Committee:
    try:
        return profile.committee(text.replace(",", " ").split())
    except DomainError as exc:
        raise FormatError(str(exc)) from None


def parse_sample(text: str) -> LabeledSample:
    profile, k, rest = _parse_profile_lines(_lines(text))
    winners = []
    for no, tok in rest:
        try:
            winners.append(profile.committee(tok))
        except DomainError as exc:
            raise FormatError(f"line {no}: {exc}") from None
    try:
        return LabeledSample(profile, k, frozenset(winners))
    except DomainError as exc:
        raise FormatError(str(exc)) from None


def format_sample(sample: LabeledSample) -> str:
    lines = [format_profile(sample.profile, sample.k).rstrip("\n"), "winners"]
    for w in sorted(sample.winners):
        lines.append(" ".join(sample.profile.committee_names(w)))
    return "\n".join(lines) + "\n"


def _rational(tok: str, no: int) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"line {no}: bad rational {tok!r}") from None


def parse_rule(text: str, m: int, k: int) -> BivariateScoring | UnivariateScoring:
    biv: dict = {}
    uni: dict = {}
    for no, tok in _lines(text):
        try:
            if tok[0] == "bxy" and len(tok) == 4:
                biv[(int(tok[1]), int(tok[2]))] = _rational(tok[3], no)
            elif tok[0] == "u" and len(tok) == 3:
                uni[int(tok[1])] = _rational(tok[2], no)
            else:
                raise FormatError(f"line {no}: expected 'bxy x y q' or 'u x q'")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {no}: non-integer index") from None
    if biv and uni:
        raise FormatError("rule mixes bivariate and univariate entries")
    try:
        if uni:
            if any(not 0 <= x <= k for x in uni):
                raise FormatError(f"univariate index outside 0..{k}")
            return UnivariateScoring([uni.get(x, 0) for x in range(k + 1)])
        return BivariateScoring(pair_domain(m, k), biv)
    except DomainError as exc:
        raise FormatError(str(exc)) from None


def format_rule(rule: BivariateScoring | UnivariateScoring) -> str:
    if isinstance(rule, UnivariateScoring):
        return "".join(f"u {x} {v.numerator}/{v.denominator}\n" for x, v in enumerate(rule.values))
    return "".join(
        f"bxy {x} {y} {v.numerator}/{v.denominator}\n" for (x, y), v in rule.values.items()
    )
