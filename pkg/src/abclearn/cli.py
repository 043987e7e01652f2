"""Command-line front end.

Every subcommand reads files, calls one library function and writes the
result.  Exit codes: 0 success, 1 a negative answer from ``verify`` or a
failed ``check-construction``, 2 usage or input errors, 3 a capacity cap
refusal.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from abclearn import constructions, pac, reductions, solvers, textio
from abclearn.core import (
    BivariateScoring,
    DomainError,
    Profile,
    UnivariateScoring,
    abcs_winners,
    seq_winners,
    verify_abcs_winner,
    verify_seq_winner,
)
from abclearn.lp import MalformedSystem

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

NAMED_RULES = ("cc", "av", "seq-cc", "trivial")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_profile(path: str):
    profile, committee, k = reductions.parse_instance(_read(path))
    return profile, committee, k


def _rule(name: str, m: int, k: int, sequential: bool):
    """Resolve a named rule or a rule file.

    Returns the rule and whether it is evaluated sequentially.
    """
    if name == "seq-cc":
        return UnivariateScoring.cc(k), True
    if name in ("cc", "av", "trivial"):
        uni = getattr(UnivariateScoring, name)(k)
        return (uni, True) if sequential else (BivariateScoring.from_univariate(uni, m), False)
    rule = textio.parse_rule(_read(name), m, k)
    if isinstance(rule, UnivariateScoring):
        if rule.k != k:
            raise UsageError(f"rule has {rule.k} entries beyond 0, profile wants k={k}")
        return (rule, True) if sequential else (BivariateScoring.from_univariate(rule, m), False)
    if sequential:
        raise UsageError("--sequential needs a univariate rule")
    return rule, False


def _committee(args, profile: Profile, fallback):
    if args.committee is not None:
        return textio.parse_committee(args.committee, profile)
    if fallback is None:
        raise UsageError("no committee given and none in the profile file")
    return fallback


def _names(profile: Profile, committee) -> str:
    return " ".join(profile.committee_names(committee))


# --------------------------------------------------------------------------
# subcommands


def cmd_winners(args) -> int:
    profile, _, k = _load_profile(args.profile)
    k = args.k or k
    rule, seq = _rule(args.rule, profile.m, k, args.sequential)
    won = seq_winners(rule, profile) if seq else abcs_winners(rule, profile, k)
    _write("".join(_names(profile, w) + "\n" for w in sorted(won)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    profile, stored, k = _load_profile(args.profile)
    C = _committee(args, profile, stored)
    rule, seq = _rule(args.rule, profile.m, len(C), args.sequential)
    ok = verify_seq_winner(rule, profile, C) if seq else verify_abcs_winner(rule, profile, C)
    print("yes" if ok else "no")
    return EXIT_OK if ok else EXIT_NO


def _target(args, solve) -> int:
    profile, stored, k = _load_profile(args.profile)
    C = _committee(args, profile, stored)
    rule = solve(profile, C, len(C))
    _write("none\n" if rule is None else textio.format_rule(rule), args.out)
    return EXIT_OK


def cmd_target_abcs(args) -> int:
    return _target(args, solvers.target_abcs)


def cmd_target_seq(args) -> int:
    return _target(args, lambda P, C, k: solvers.target_seq_thiele(P, C, k, method=args.method))


def cmd_learn(args) -> int:
    samples = [textio.parse_sample(_read(p)) for p in args.samples]
    if args.kind == "seq":
        rule = solvers.erm_seq(samples, bound=args.bound)
    else:
        rule = solvers.erm_abcs(samples)
    if rule is None:
        print("learn: no consistent rule", file=sys.stderr)
    _write("none\n" if rule is None else textio.format_rule(rule), args.out)
    return EXIT_OK


def _budgets(text: str) -> list[int]:
    try:
        return [int(b) for b in text.split(",") if b.strip()]
    except ValueError:
        raise UsageError(f"bad budget list {text!r}") from None


def cmd_pac(args) -> int:
    budgets = _budgets(args.budgets)
    if not budgets:
        raise UsageError("empty budget list")
    target, seq = _rule(args.target, args.m, args.k, args.sequential)
    size_law = None
    if args.size_law is not None:
        try:
            size_law = [float(w) for w in args.size_law.split(",")]
        except ValueError:
            raise UsageError(f"bad size law {args.size_law!r}") from None
    cfg = pac.PacConfig(
        m=args.m,
        k=args.k,
        n=args.n,
        sample_count=max(max(budgets), 1),
        test_count=args.test_count,
        target=target,
        seed=args.seed,
        size_law=size_law,
        sequential=seq,
        budgets=budgets,
        seq_bound=args.bound,
    )
    seeds = range(args.seed, args.seed + args.seeds)
    _write(pac.pac_experiment(cfg, seeds).to_csv(), args.out)
    return EXIT_OK


_REDUCTIONS = {
    "is-target-abcs": ("graph", reductions.reduce_is_to_target_abcs),
    "is-cc-verify": ("graph", reductions.reduce_is_to_cc_verification),
    "sat-target-seq": ("cnf", reductions.reduce_sat_to_target_seq),
    "sat-seqcc-verify": ("cnf", reductions.reduce_sat_to_seqcc_verification),
}


def cmd_gen_reduction(args) -> int:
    kind, build = _REDUCTIONS[args.reduction]
    text = _read(args.input)
    if kind == "graph":
        if args.K is None:
            raise UsageError(f"{args.reduction} needs --K")
        G = reductions.parse_graph(text)
        inst = build(G, args.K)
        if args.brute:
            has = reductions.brute_independent_set(G, args.K)
            print(f"independent set of size {args.K}: {'yes' if has else 'no'}", file=sys.stderr)
    else:
        phi = reductions.parse_cnf(text)
        inst = build(phi)
        if args.brute:
            sat = reductions.brute_sat(phi)
            print(f"satisfiable: {'yes' if sat is not None else 'no'}", file=sys.stderr)
    _write(reductions.emit(inst), args.out)
    return EXIT_OK


def cmd_gen_shatter(args) -> int:
    if args.kind == "abcs":
        if args.m is None:
            raise UsageError("the abcs family needs --m")
        fam = constructions.abcs_shatter_family(args.m, args.k)
    else:
        fam = constructions.seq_shatter_family(args.k)
    constructions.export_family(fam, args.out)
    print(f"wrote {len(fam)} profiles to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_check_construction(args) -> int:
    if not (Path(args.directory) / "manifest.txt").is_file():
        raise UsageError(f"{args.directory} has no manifest.txt")
    fam = constructions.load_family(args.directory)
    checks = [
        ("n-shattering", lambda: constructions.verify_n_shattering(fam)),
        (
            "g-shattering",
            lambda: constructions.verify_g_shattering(
                fam.profiles, fam.rule_builder, fam.g1, fam.evaluate, labels=fam.labels
            ),
        ),
    ]
    if fam.kind == "abcs":
        checks.append(("rival-margin", lambda: constructions.family_margins(fam).rival_margin_ok))
        checks.append(("signed-margin", lambda: constructions.family_margins(fam).signed_margin_ok))
    ok = True
    for name, check in checks:
        passed = bool(check())
        ok &= passed
        print(f"{name}: {'pass' if passed else 'fail'}")
    return EXIT_OK if ok else EXIT_NO


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="abclearn", description="Exact tools for approval-based committee rules.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def rule_args(sp, flag="--rule"):
        sp.add_argument(flag, required=True, help=f"one of {', '.join(NAMED_RULES)} or a rule file")
        sp.add_argument("--sequential", action="store_true", help="evaluate a univariate rule sequentially")

    sp = sub.add_parser("winners", help="list winning committees")
    rule_args(sp)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--k", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_winners)

    sp = sub.add_parser("verify", help="is the committee winning (exit 0) or not (exit 1)")
    rule_args(sp)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--committee", help="names separated by spaces; defaults to the file's committee line")
    sp.set_defaults(func=cmd_verify)

    for name, func in (("target-abcs", cmd_target_abcs), ("target-seq", cmd_target_seq)):
        sp = sub.add_parser(name, help="witness rule making the committee win, or 'none'")
        sp.add_argument("--profile", required=True)
        sp.add_argument("--committee")
        sp.add_argument("--out")
        if name == "target-seq":
            sp.add_argument("--method", choices=("auto", "permutations", "cells"), default="auto")
        sp.set_defaults(func=func)

    sp = sub.add_parser("learn", help="consistent rule for labelled sample files")
    sp.add_argument("samples", nargs="+")
    sp.add_argument("--kind", choices=("abcs", "seq"), default="abcs")
    sp.add_argument("--bound", type=int, default=3, help="grid bound for --kind seq")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("pac", help="error-versus-budget experiment as CSV")
    rule_args(sp, "--target")
    sp.add_argument("--m", type=int, default=5)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--budgets", default="5,10,20,40")
    sp.add_argument("--test-count", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    sp.add_argument("--size-law", help="comma-separated weights for vote sizes 1..m-1")
    sp.add_argument("--bound", type=int, default=3, help="grid bound for sequential learning")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_pac)

    sp = sub.add_parser("gen-reduction", help="hardness-reduction instance from a DIMACS file")
    sp.add_argument("reduction", choices=sorted(_REDUCTIONS))
    sp.add_argument("input")
    sp.add_argument("--K", type=int, help="independent-set size for graph reductions")
    sp.add_argument("--brute", action="store_true", help="also report the brute-force answer on stderr")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen_reduction)

    sp = sub.add_parser("gen-shatter", help="export a shattering family")
    sp.add_argument("--kind", choices=("abcs", "seq"), default="abcs")
    sp.add_argument("--m", type=int)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_shatter)

    sp = sub.add_parser("check-construction", help="re-verify an exported family")
    sp.add_argument("directory")
    sp.set_defaults(func=cmd_check_construction)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (constructions.CapExceeded, reductions.CapExceeded) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (textio.FormatError, reductions.ParseError, DomainError, MalformedSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
