"""Shared test utilities: pipeline shortcuts, random generators, oracles.

The oracles here are deliberately independent of the solver: they decide
satisfiability by exhaustive valuation enumeration over the domain box
(vectorised with numpy).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from faultlines.cfg import build_cfg, to_dsa
from faultlines.explorer import Counterexample, ExplorerConfig
from faultlines.formulas import (
    Atom,
    Constraint,
    ConstraintKind,
    ConstraintSet,
    LinTerm,
    SsaName,
    eval_formula_grid,
    formula_vars,
)
from faultlines.frontend import Function, parse_program, typecheck
from faultlines.mcs import McsConfig
from faultlines.solver import DomainConfig

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
DOCS = ROOT / "docs"



def corpus_manifest() -> dict:
    return json.loads((CORPUS / "manifest.json").read_text())


def corpus_entry(name: str):
    entry = corpus_manifest()[name]
    text = (CORPUS / entry["source"]).read_text()
    ce_map = json.loads((CORPUS / entry["ce"]).read_text())
    return text, ce_map, entry


def config_from_args(args) -> ExplorerConfig:
    flags = dict(zip(args[::2], args[1::2]))
    return ExplorerConfig(
        b_cond=int(flags.get("--bcond", 2)),
        mcs=McsConfig(b_mcs=int(flags.get("--bmcs", 3)), k_max=int(flags.get("--kmax", 2))),
        dom=DomainConfig(),
    )


def compile_source(text: str) -> tuple:
    """Parse + typecheck + CFG + DSA; fails the test on diagnostics."""
    fn = parse_program(text)
    diags = typecheck(fn)
    assert not diags, [str(d) for d in diags]
    return fn, to_dsa(build_cfg(fn))


def ce_for(fn: Function, mapping) -> Counterexample:
    return Counterexample.of(mapping, fn.param_names)


# ---------------------------------------------------------------------------
# Exhaustive valuation oracle
# ---------------------------------------------------------------------------


def value_grids(names, dom: DomainConfig) -> dict:
    names = list(names)
    if not names:
        return {}
    axes = np.meshgrid(*([np.arange(dom.lo, dom.hi + 1)] * len(names)), indexing="ij")
    return {n: ax.ravel() for n, ax in zip(names, axes)}


def exhaustive_sat(formulas, dom: DomainConfig, names=None):
    """Return one satisfying assignment (dict) or None, by full enumeration."""
    formulas = list(formulas)
    if names is None:
        names = sorted(set().union(set(), *(formula_vars(f) for f in formulas)))
    else:
        names = sorted(names)
    if not names:
        from faultlines.formulas import eval_formula

        return {} if all(eval_formula(f, {}) for f in formulas) else None
    grids = value_grids(names, dom)
    ok = np.ones(next(iter(grids.values())).shape, dtype=bool)
    for f in formulas:
        ok &= eval_formula_grid(f, grids)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    i = int(hits[0])
    return {n: int(grids[n][i]) for n in names}


# ---------------------------------------------------------------------------
# Random constraint systems
# ---------------------------------------------------------------------------


def _loc(line=1):
    from faultlines.frontend import SourceLoc

    return SourceLoc(line, 1)


def random_linterm(rng, names, max_terms=3):
    k = rng.integers(1, min(max_terms, len(names)) + 1)
    picked = rng.choice(len(names), size=k, replace=False)
    coeffs = {}
    for idx in picked:
        c = 0
        while c == 0:
            c = int(rng.integers(-3, 4))
        coeffs[names[int(idx)]] = c
    return LinTerm.of(coeffs, int(rng.integers(-6, 7)))


def random_atom(rng, names) -> Atom:
    ops = ["==", "!=", "<", "<=", ">", ">="]
    return Atom(
        ops[int(rng.integers(0, len(ops)))],
        random_linterm(rng, names),
        random_linterm(rng, names),
    )


def random_formula(rng, names, depth=1):
    from faultlines.formulas import And, Not, Or

    roll = rng.integers(0, 10)
    if depth <= 0 or roll < 5:
        return random_atom(rng, names)
    if roll < 7:
        return And(tuple(random_formula(rng, names, depth - 1) for _ in range(2)))
    if roll < 9:
        return Or(tuple(random_formula(rng, names, depth - 1) for _ in range(2)))
    return Not(random_formula(rng, names, depth - 1))


def random_system(rng, max_vars=4, max_soft=8, max_hard=2) -> ConstraintSet:
    n_vars = int(rng.integers(1, max_vars + 1))
    names = [SsaName(f"v{i}", 0) for i in range(n_vars)]
    n_hard = int(rng.integers(0, max_hard + 1))
    n_soft = int(rng.integers(1, max_soft + 1))
    hard = [
        Constraint(100 + i, random_formula(rng, names), ConstraintKind.GUARD, _loc())
        for i in range(n_hard)
    ]
    soft = [
        Constraint(i, random_atom(rng, names), ConstraintKind.ASSIGNMENT, _loc(), path_index=i)
        for i in range(n_soft)
    ]
    return ConstraintSet.of(hard, soft)


# ---------------------------------------------------------------------------
# Random annotated programs (source text)
# ---------------------------------------------------------------------------


def random_program(rng, max_params=3, max_depth=2) -> str:
    """A random well-typed program: all variables initialised up front."""
    n_params = int(rng.integers(1, max_params + 1))
    params = [f"p{i}" for i in range(n_params)]
    locals_ = [f"v{i}" for i in range(int(rng.integers(1, 4)))]
    visible = list(params)
    lines = []

    def expr() -> str:
        terms = []
        for _ in range(int(rng.integers(1, 3))):
            v = visible[int(rng.integers(0, len(visible)))]
            c = int(rng.integers(-2, 3))
            if c == 0:
                c = 1
            terms.append(v if c == 1 else f"{c}*{v}" if c != -1 else f"-{v}")
        const = int(rng.integers(-3, 4))
        body = " + ".join(terms)
        return f"{body} + {const}" if const >= 0 else f"{body} - {-const}"

    def guard() -> str:
        op = ["==", "!=", "<", "<=", ">", ">="][int(rng.integers(0, 6))]
        g = f"{expr()} {op} {expr()}"
        if rng.integers(0, 4) == 0:
            op2 = ["&&", "||"][int(rng.integers(0, 2))]
            g = f"({g}) {op2} ({expr()} {['<', '>='][int(rng.integers(0, 2))]} {expr()})"
        return g

    def stmts(depth, indent) -> None:
        for _ in range(int(rng.integers(1, 4))):
            roll = int(rng.integers(0, 10))
            if roll < 6 or depth >= max_depth:
                target = visible[int(rng.integers(0, len(visible)))]
                lines.append(f"{indent}{target} = {expr()};")
            else:
                lines.append(f"{indent}if ({guard()}) {{")
                stmts(depth + 1, indent + "  ")
                if rng.integers(0, 2) == 0:
                    lines.append(f"{indent}}} else {{")
                    stmts(depth + 1, indent + "  ")
                lines.append(f"{indent}}}")

    header = ", ".join(f"int {p}" for p in params)
    lines.append("/*@ ensures \\result == 0; */")
    lines.append(f"int Rand ({header}) {{")
    for v in locals_:
        lines.append(f"  int {v} = {expr()};")
        visible.append(v)
    stmts(0, "  ")
    ret = visible[int(rng.integers(0, len(visible)))]
    lines.append(f"  return {ret};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# MCS ground-truth checks (solver-independent where it matters)
# ---------------------------------------------------------------------------


def is_correction_set(cs: ConstraintSet, ids: frozenset, dom: DomainConfig) -> bool:
    keep = [c.formula for c in cs.hard] + [c.formula for c in cs.soft if c.id not in ids]
    names = set().union(
        set(), *(formula_vars(c.formula) for c in list(cs.hard) + list(cs.soft))
    )
    return exhaustive_sat(keep, dom, names) is not None


def assert_mcs_properties(cs: ConstraintSet, result, dom: DomainConfig) -> None:
    """Correction + irreducibility for every emitted MCS (exhaustive oracle)."""
    for m in result.mcs_list:
        assert is_correction_set(cs, m.ids, dom), f"not a correction set: {m}"
        for c in m.members:
            rest = m.ids - {c.id}
            assert not is_correction_set(cs, rest, dom), f"reducible: {m} minus {c}"


def solver_sat_without(cs: ConstraintSet, removed: frozenset, dom: DomainConfig) -> bool:
    """Fresh-solver satisfiability of hard + (soft minus `removed`)."""
    from faultlines.solver import UNSAT, Solver

    s = Solver(dom)
    for c in cs.hard:
        s.assert_hard(c.formula)
    for c in cs.soft:
        if c.id not in removed:
            s.assert_hard(c.formula)
    return s.check() is not UNSAT


def assert_mcs_properties_solver(cs: ConstraintSet, result, dom: DomainConfig) -> None:
    """Correction + irreducibility via fresh solver checks (any domain size)."""
    for m in result.mcs_list:
        assert solver_sat_without(cs, m.ids, dom), f"not a correction set: {m}"
        for c in m.members:
            assert not solver_sat_without(cs, m.ids - {c.id}, dom), f"reducible: {m}"
