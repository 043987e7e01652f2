"""Exact rational feasibility for small linear systems.

The solver is a dense-tableau phase-1 simplex over ``gmpy2.mpq`` (or
:class:`fractions.Fraction` when gmpy2 is absent) with Bland's pivoting
rule.  Inputs and outputs use :class:`fractions.Fraction`.

A system is a list of rows ``coeffs . x  (>= | =)  bound`` over named
variables.  Variables are free unless flagged nonnegative; free variables
are split internally into a difference of two nonnegative columns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

try:
    from gmpy2 import mpq
except ImportError:  # pragma: no cover
    mpq = Fraction


class Relation(enum.Enum):
    GE = ">="
    EQ = "="


class Status(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


class MalformedSystem(ValueError):
    """Raised when a constraint row does not match the variable list."""


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: Relation
    bound: Fraction

    def holds(self, point: Sequence[Fraction]) -> bool:
        lhs = sum((a * v for a, v in zip(self.coeffs, point)), Fraction(0))
        if self.relation is Relation.GE:
            return lhs >= self.bound
        return lhs == self.bound


@dataclass
class LinearConstraintSystem:
    """Constraints over an ordered list of variables.

    Parameters
    ----------
    variables : list of str
        Variable names; the order fixes the coefficient layout.
    nonnegative : bool or sequence of bool
        Sign restriction per variable (``True`` for all variables).
    """

    variables: list[str]
    constraints: list[Constraint] = field(default_factory=list)
    nonnegative: bool | Sequence[bool] = False

    def __post_init__(self) -> None:
        if isinstance(self.nonnegative, bool):
            self.nonnegative = [self.nonnegative] * len(self.variables)
        else:
            self.nonnegative = list(self.nonnegative)
        if len(self.nonnegative) != len(self.variables):
            raise MalformedSystem("sign flags do not match variable count")
        for con in self.constraints:
            self._check(con)

    def _check(self, con: Constraint) -> None:
        if len(con.coeffs) != len(self.variables):
            raise MalformedSystem(
                f"row has {len(con.coeffs)} coefficients, expected {len(self.variables)}"
            )

    def add(self, coeffs: Iterable, relation: Relation | str, bound=0) -> None:
        if isinstance(relation, str):
            relation = Relation(relation) if relation in (">=", "=") else Relation[relation]
        con = Constraint(tuple(Fraction(c) for c in coeffs), relation, Fraction(bound))
        self._check(con)
        self.constraints.append(con)

    def add_ge(self, coeffs: Iterable, bound=0) -> None:
        self.add(coeffs, Relation.GE, bound)

    def add_eq(self, coeffs: Iterable, bound=0) -> None:
        self.add(coeffs, Relation.EQ, bound)

    def satisfied_by(self, point: Sequence[Fraction]) -> bool:
        if len(point) != len(self.variables):
            return False
        for v, nn in zip(point, self.nonnegative):
            if nn and v < 0:
                return False
        return all(con.holds(point) for con in self.constraints)

    def dump(self) -> str:
        """One row per line: ``c1 c2 ... <rel> b`` with ``num/den`` rationals.

        Sign restrictions are written as explicit ``>= 0`` rows.
        """
        nvar = len(self.variables)
        lines = []
        for i, nn in enumerate(self.nonnegative):
            if nn:
                unit = ["1" if j == i else "0" for j in range(nvar)]
                lines.append(" ".join(unit + [">=", "0"]))
        for con in self.constraints:
            parts = [_fmt(c) for c in con.coeffs]
            parts += [con.relation.value, _fmt(con.bound)]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dump(cls, text: str, variables: Sequence[str] | None = None) -> "LinearConstraintSystem":
        rows = []
        for raw in text.splitlines():
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            tok = raw.split()
            if len(tok) < 3 or tok[-2] not in (">=", "="):
                raise MalformedSystem(f"bad dump line: {raw!r}")
            rows.append(([Fraction(t) for t in tok[:-2]], Relation(tok[-2]), Fraction(tok[-1])))
        nvar = len(rows[0][0]) if rows else len(variables or ())
        names = list(variables) if variables is not None else [f"x{i}" for i in range(nvar)]
        system = cls(names)
        for coeffs, rel, bound in rows:
            system.add(coeffs, rel, bound)
        return system


def _fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class FeasibilityResult:
    status: Status
    witness: tuple[Fraction, ...] | None = None
    certificate: tuple[Fraction, ...] | None = None

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    def __bool__(self) -> bool:
        return self.feasible


def feasible(system: LinearConstraintSystem) -> FeasibilityResult:
    """Decide feasibility of ``system`` exactly.

    A feasible answer carries a witness point that has been re-checked by
    substitution.  An infeasible answer carries a Farkas multiplier vector
    ``u`` (one entry per constraint, ``u_i >= 0`` on ``>=`` rows) with
    ``u^T A <= 0`` on nonnegative columns, ``u^T A = 0`` on free columns and
    ``u^T b > 0``.
    """
    if not system.variables:
        raise MalformedSystem("system has no variables")
    for con in system.constraints:
        system._check(con)
    tab = _Tableau(system)
    ok = tab.phase_one()
    if ok:
        point = tab.witness()
        if not system.satisfied_by(point):
            raise AssertionError("simplex witness fails substitution check")
        return FeasibilityResult(Status.FEASIBLE, witness=point)
    cert = tab.certificate()
    return FeasibilityResult(Status.INFEASIBLE, certificate=cert)


def check_certificate(system: LinearConstraintSystem, cert: Sequence[Fraction]) -> bool:
    """Verify a Farkas infeasibility certificate returned by :func:`feasible`."""
    if len(cert) != len(system.constraints):
        return False
    total = Fraction(0)
    combo = [Fraction(0)] * len(system.variables)
    for u, con in zip(cert, system.constraints):
        if con.relation is Relation.GE and u < 0:
            return False
        total += u * con.bound
        for j, a in enumerate(con.coeffs):
            combo[j] += u * a
    for c, nn in zip(combo, system.nonnegative):
        if (nn and c > 0) or (not nn and c != 0):
            return False
    return total > 0


class _Tableau:
    """Standard-form tableau ``A x = b, x >= 0, b >= 0`` with a phase-1 objective."""

    def __init__(self, system: LinearConstraintSystem) -> None:
        nvar = len(system.variables)
        # structural columns: one per variable, plus a negative copy for free ones
        self.col_of = []
        ncols = 0
        neg_cols = {}
        for j in range(nvar):
            self.col_of.append(ncols)
            ncols += 1
        for j, nn in enumerate(system.nonnegative):
            if not nn:
                neg_cols[j] = ncols
                ncols += 1
        self.neg_cols = neg_cols
        self.nvar = nvar
        rows: list[list] = []
        rhs: list = []
        self.negated: list[bool] = []
        self.unit_col: list[int] = []  # identity column of each row in the initial basis
        self.artificial: list[bool] = []
        pending = []
        for con in system.constraints:
            row = {}
            for j, a in enumerate(con.coeffs):
                if a:
                    row[self.col_of[j]] = mpq(a)
                    if j in neg_cols:
                        row[neg_cols[j]] = -mpq(a)
            b = mpq(con.bound)
            slack = None
            if con.relation is Relation.GE:
                slack = ncols
                ncols += 1
                row[slack] = mpq(-1)
            negate = b < 0 or (b == 0 and slack is not None)
            if negate:
                row = {c: -v for c, v in row.items()}
                b = -b
            pending.append((row, b, slack, negate))
        n_struct = ncols
        basis = []
        for row, b, slack, negate in pending:
            if slack is not None and negate:
                unit = slack
                art = False
            else:
                unit = ncols
                ncols += 1
                row[unit] = mpq(1)
                art = True
            self.unit_col.append(unit)
            self.artificial.append(art)
            self.negated.append(negate)
            basis.append(unit)
            rhs.append(b)
            rows.append(row)
        self.ncols = ncols
        self.n_struct = n_struct
        self.rows = [[row.get(c, mpq(0)) for c in range(ncols)] for row in rows]
        self.rhs = rhs
        self.basis = basis
        self.is_art = [False] * ncols
        for unit, art in zip(self.unit_col, self.artificial):
            if art:
                self.is_art[unit] = True
        # phase-1 objective: minimise the sum of artificials (reduced costs)
        cost = [mpq(0)] * ncols
        obj = mpq(0)
        for i, art in enumerate(self.artificial):
            if art:
                for c, v in enumerate(self.rows[i]):
                    if v:
                        cost[c] -= v
                obj -= self.rhs[i]
        for c in range(ncols):
            if self.is_art[c]:
                cost[c] = mpq(0)
        self.cost = cost
        self.obj = obj  # negative of the current phase-1 objective value

    def _pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            inv = 1 / piv
            prow = [v * inv for v in prow]
            self.rows[r] = prow
            self.rhs[r] = self.rhs[r] * inv
        nz = [j for j, v in enumerate(prow) if v]
        br = self.rhs[r]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[c]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
                self.rhs[i] -= f * br
        f = self.cost[c]
        if f:
            cost = self.cost
            for j in nz:
                cost[j] -= f * prow[j]
            self.obj -= f * br
        self.basis[r] = c

    def phase_one(self) -> bool:
        if not any(self.artificial):
            return True
        while True:
            if self.obj == 0:
                return True
            enter = -1
            for c, v in enumerate(self.cost):
                if v < 0:
                    enter = c
                    break
            if enter < 0:
                return False
            leave = -1
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if (
                        best is None
                        or ratio < best
                        or (ratio == best and self.basis[i] < self.basis[leave])
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                # unbounded direction cannot occur in phase 1 (objective bounded below by 0)
                raise AssertionError("phase-1 objective unbounded")
            self._pivot(leave, enter)

    def witness(self) -> tuple[Fraction, ...]:
        values = [mpq(0)] * self.ncols
        for i, c in enumerate(self.basis):
            values[c] = self.rhs[i]
        point = []
        for j in range(self.nvar):
            v = values[self.col_of[j]]
            if j in self.neg_cols:
                v -= values[self.neg_cols[j]]
            point.append(Fraction(int(v.numerator), int(v.denominator)))
        return tuple(point)

    def certificate(self) -> tuple[Fraction, ...]:
        # dual of phase 1: y_i = cost(unit_i) - reduced_cost(unit_i)
        cert = []
        for i, unit in enumerate(self.unit_col):
            c_unit = mpq(1) if self.artificial[i] else mpq(0)
            y = c_unit - self.cost[unit]
            if self.negated[i]:
                y = -y
            cert.append(Fraction(int(y.numerator), int(y.denominator)))
        return tuple(cert)
