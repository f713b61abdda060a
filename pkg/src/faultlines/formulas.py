"""Linear-integer constraint vocabulary shared by the solver and diagnoses.

Values here are immutable and hashable: versioned variable names
(:class:`SsaName`), canonical linear terms (:class:`LinTerm`), boolean
formulas over linear atoms (:class:`Formula`), and provenance-tagged
constraints (:class:`Constraint` / :class:`ConstraintSet`).

Rendering is stable and documented (used verbatim in reports and golden
files): a constraint prints as e.g. ``k_1 = k_0 + 2 @ line 10``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .frontend import (
    Add,
    BoolAnd,
    BoolExpr,
    BoolNot,
    BoolOr,
    Cmp,
    Expr,
    Implies,
    IntLit,
    Mul,
    Neg,
    ResultRef,
    SourceLoc,
    Sub,
    VarRef,
    mul_const_view,
)

CMP_FLIP = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
CMP_RENDER = {"==": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class UnboundVariableError(Exception):
    pass


class NonLinearError(Exception):
    pass


@dataclass(frozen=True, order=True)
class SsaName:
    """A versioned variable: version 0 is the input/initial value."""

    base: str
    version: int

    def __str__(self) -> str:
        return f"{self.base}_{self.version}"


# ---------------------------------------------------------------------------
# Linear terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinTerm:
    """Canonical linear term: sorted coefficient pairs plus a constant.

    Zero coefficients are never stored, so algebraically equal terms
    compare (and hash) equal.
    """

    coeffs: tuple  # tuple[(SsaName, int), ...] sorted by name, nonzero
    const: int = 0

    @staticmethod
    def of(coeffs: Mapping[SsaName, int] | Iterable = (), const: int = 0) -> "LinTerm":
        acc: dict[SsaName, int] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for name, c in items:
            acc[name] = acc.get(name, 0) + int(c)
        pairs = tuple(sorted((n, c) for n, c in acc.items() if c != 0))
        return LinTerm(pairs, int(const))

    @staticmethod
    def var(name: SsaName) -> "LinTerm":
        return LinTerm(((name, 1),), 0)

    @staticmethod
    def constant(v: int) -> "LinTerm":
        return LinTerm((), int(v))

    def __add__(self, other: "LinTerm") -> "LinTerm":
        return LinTerm.of(list(self.coeffs) + list(other.coeffs), self.const + other.const)

    def __sub__(self, other: "LinTerm") -> "LinTerm":
        return self + (-other)

    def __neg__(self) -> "LinTerm":
        return self.scale(-1)

    def scale(self, k: int) -> "LinTerm":
        if k == 0:
            return LinTerm((), 0)
        return LinTerm(tuple((n, c * k) for n, c in self.coeffs), self.const * k)

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.coeffs)

    def eval(self, model: Mapping[SsaName, int]) -> int:
        total = self.const
        for n, c in self.coeffs:
            try:
                total += c * model[n]
            except KeyError:
                raise UnboundVariableError(str(n)) from None
        return total

    def render(self) -> str:
        # positive terms first, then negative, constant last: "j_0 - i_0 + 2"
        pos = [(n, c) for n, c in self.coeffs if c > 0]
        neg = [(n, c) for n, c in self.coeffs if c < 0]
        parts: list[str] = []
        for n, c in pos + neg:
            mag = abs(c)
            txt = str(n) if mag == 1 else f"{mag}*{n}"
            if not parts:
                parts.append(txt if c > 0 else f"-{txt}")
            else:
                parts.append(f"+ {txt}" if c > 0 else f"- {txt}")
        if self.const != 0 or not parts:
            if not parts:
                parts.append(str(self.const))
            else:
                parts.append(f"+ {self.const}" if self.const > 0 else f"- {-self.const}")
        return " ".join(parts)

    def __str__(self) -> str:
        return self.render()


def linterm_from_expr(e: Expr) -> LinTerm:
    """Convert an SSA-named expression tree to a canonical LinTerm.

    Raises NonLinearError on a variable-by-variable product (unreachable
    for typechecked programs).
    """
    if isinstance(e, IntLit):
        return LinTerm.constant(e.value)
    if isinstance(e, VarRef):
        if not isinstance(e.name, SsaName):
            raise TypeError(f"expression is not in SSA form: {e.name!r}")
        return LinTerm.var(e.name)
    if isinstance(e, Neg):
        return -linterm_from_expr(e.operand)
    if isinstance(e, Add):
        return linterm_from_expr(e.lhs) + linterm_from_expr(e.rhs)
    if isinstance(e, Sub):
        return linterm_from_expr(e.lhs) - linterm_from_expr(e.rhs)
    if isinstance(e, Mul):
        view = mul_const_view(e)
        if view is None:
            raise NonLinearError("product of two variables")
        k, sub = view
        return linterm_from_expr(sub).scale(k)
    if isinstance(e, ResultRef):
        raise TypeError("\\result must be substituted before constraint conversion")
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    op: str  # '==', '!=', '<', '<=', '>', '>='
    lhs: LinTerm
    rhs: LinTerm

    def __str__(self) -> str:
        return f"{self.lhs.render()} {CMP_RENDER[self.op]} {self.rhs.render()}"


@dataclass(frozen=True)
class And(Formula):
    items: tuple

    def __str__(self) -> str:
        return " && ".join(_paren(i) for i in self.items)


@dataclass(frozen=True)
class Or(Formula):
    items: tuple

    def __str__(self) -> str:
        return " || ".join(_paren(i) for i in self.items)


@dataclass(frozen=True)
class Not(Formula):
    item: Formula

    def __str__(self) -> str:
        return f"!({self.item})"


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def _paren(f: Formula) -> str:
    if isinstance(f, (And, Or)):
        return f"({f})"
    return str(f)


def conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(items)


def disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(items)


def nnf(f: Formula) -> Formula:
    """Push negations to the atoms (Not nodes are eliminated)."""
    if isinstance(f, (Atom, BoolConst)):
        return f
    if isinstance(f, And):
        return And(tuple(nnf(i) for i in f.items))
    if isinstance(f, Or):
        return Or(tuple(nnf(i) for i in f.items))
    if isinstance(f, Not):
        return negate(f.item)
    raise TypeError(f"not a formula: {f!r}")


def negate(f: Formula) -> Formula:
    """Logical negation in negation normal form; atoms flip their operator."""
    if isinstance(f, Atom):
        return Atom(CMP_FLIP[f.op], f.lhs, f.rhs)
    if isinstance(f, BoolConst):
        return FALSE if f.value else TRUE
    if isinstance(f, And):
        return Or(tuple(negate(i) for i in f.items))
    if isinstance(f, Or):
        return And(tuple(negate(i) for i in f.items))
    if isinstance(f, Not):
        return nnf(f.item)
    raise TypeError(f"not a formula: {f!r}")


def formula_vars(f: Formula) -> set:
    if isinstance(f, Atom):
        return set(f.lhs.names) | set(f.rhs.names)
    if isinstance(f, (And, Or)):
        out: set = set()
        for i in f.items:
            out |= formula_vars(i)
        return out
    if isinstance(f, Not):
        return formula_vars(f.item)
    return set()


_OP_EVAL = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_formula(f: Formula, model: Mapping[SsaName, int]) -> bool:
    """Evaluate under a total assignment; raises UnboundVariableError."""
    if isinstance(f, Atom):
        return _OP_EVAL[f.op](f.lhs.eval(model), f.rhs.eval(model))
    if isinstance(f, And):
        return all(eval_formula(i, model) for i in f.items)
    if isinstance(f, Or):
        return any(eval_formula(i, model) for i in f.items)
    if isinstance(f, Not):
        return not eval_formula(f.item, model)
    if isinstance(f, BoolConst):
        return f.value
    raise TypeError(f"not a formula: {f!r}")


def eval_formula_grid(f: Formula, grids: Mapping[SsaName, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation over parallel arrays of variable values.

    Used by the exhaustive-enumeration test oracles; all arrays must share
    one shape and the result is a boolean array of that shape.
    """
    if isinstance(f, Atom):
        def term(t: LinTerm) -> np.ndarray:
            total = np.full(_grid_shape(grids), t.const, dtype=np.int64)
            for n, c in t.coeffs:
                if n not in grids:
                    raise UnboundVariableError(str(n))
                total = total + c * grids[n]
            return total

        return _OP_EVAL[f.op](term(f.lhs), term(f.rhs))
    if isinstance(f, And):
        out = np.ones(_grid_shape(grids), dtype=bool)
        for i in f.items:
            out &= eval_formula_grid(i, grids)
        return out
    if isinstance(f, Or):
        out = np.zeros(_grid_shape(grids), dtype=bool)
        for i in f.items:
            out |= eval_formula_grid(i, grids)
        return out
    if isinstance(f, Not):
        return ~eval_formula_grid(f.item, grids)
    if isinstance(f, BoolConst):
        return np.full(_grid_shape(grids), f.value, dtype=bool)
    raise TypeError(f"not a formula: {f!r}")


def _grid_shape(grids: Mapping[SsaName, np.ndarray]):
    for v in grids.values():
        return np.shape(v)
    return ()


def bool_expr_to_formula(b: BoolExpr) -> Formula:
    """Lower an SSA-named BoolExpr; `==>` is rewritten as Or(Not a, b)."""
    if isinstance(b, Cmp):
        return Atom(b.op, linterm_from_expr(b.lhs), linterm_from_expr(b.rhs))
    if isinstance(b, BoolAnd):
        return And((bool_expr_to_formula(b.lhs), bool_expr_to_formula(b.rhs)))
    if isinstance(b, BoolOr):
        return Or((bool_expr_to_formula(b.lhs), bool_expr_to_formula(b.rhs)))
    if isinstance(b, BoolNot):
        return Not(bool_expr_to_formula(b.operand))
    if isinstance(b, Implies):
        return Or(
            (
                Not(bool_expr_to_formula(b.antecedent)),
                bool_expr_to_formula(b.consequent),
            )
        )
    raise TypeError(f"not a boolean expression: {b!r}")


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------


class ConstraintKind(enum.Enum):
    INPUT = "input"
    ASSIGNMENT = "assignment"
    SYNTHETIC_COPY = "synthetic_copy"
    GUARD = "guard"
    POSTCONDITION = "postcondition"

    @property
    def is_soft(self) -> bool:
        return self in (ConstraintKind.ASSIGNMENT, ConstraintKind.SYNTHETIC_COPY)


@dataclass(frozen=True)
class Constraint:
    """A formula with provenance: stable id, kind, source line, path slot."""

    id: int
    formula: Formula
    kind: ConstraintKind
    loc: SourceLoc
    path_index: int = -1

    def at_path_index(self, i: int) -> "Constraint":
        return replace(self, path_index=i)

    def render(self) -> str:
        return f"{self.formula} @ line {self.loc.line}"

    def __str__(self) -> str:
        return self.render()


def assign_to_constraint(
    target: SsaName,
    rhs,
    loc: SourceLoc,
    synthetic: bool = False,
    cid: int = -1,
) -> Constraint:
    """Build the equality constraint for an assignment.

    `rhs` may be an SSA expression tree or an already-converted LinTerm.
    """
    rhs_term = rhs if isinstance(rhs, LinTerm) else linterm_from_expr(rhs)
    kind = ConstraintKind.SYNTHETIC_COPY if synthetic else ConstraintKind.ASSIGNMENT
    return Constraint(cid, Atom("==", LinTerm.var(target), rhs_term), kind, loc)


@dataclass(frozen=True)
class ConstraintSet:
    """Hard/soft split of a path's constraints.

    Input, postcondition and deviation-guard constraints are hard;
    assignments and synthetic copies are soft (removal candidates).
    """

    hard: tuple
    soft: tuple

    def __post_init__(self) -> None:
        for c in self.hard:
            if c.kind.is_soft:
                raise ValueError(f"{c.kind.value} constraint cannot be hard: {c}")
        for c in self.soft:
            if not c.kind.is_soft:
                raise ValueError(f"{c.kind.value} constraint cannot be soft: {c}")
        ids = [c.id for c in self.hard] + [c.id for c in self.soft]
        if len(ids) != len(set(ids)):
            raise ValueError("constraint ids must be unique")

    @staticmethod
    def of(hard: Iterable[Constraint], soft: Iterable[Constraint]) -> "ConstraintSet":
        return ConstraintSet(tuple(hard), tuple(soft))

    def soft_by_id(self) -> dict:
        return {c.id: c for c in self.soft}
