"""Bounded enumeration of Minimal Correction Sets over hard/soft constraints.

A correction set is a set of soft constraints whose removal makes the
hard constraints plus the remaining soft ones satisfiable; an MCS is an
irreducible one.  Enumeration attaches a selector to every soft
constraint, then for growing cardinality k asserts "at most k selectors
disabled" and repeatedly asks the solver for models: each model's
disabled set is a new MCS (smaller MCSs were exhausted at earlier k, and
a blocking clause per found MCS keeps at least one of its members
enabled, excluding duplicates and supersets).  Each cardinality level is
exhausted before results are ordered and the `b_mcs` cut is applied, so
the documented tie-break (latest constraint on the path first) is
independent of solver search order.

:func:`bruteforce_mcs` is the independent test oracle: exhaustive
valuation enumeration over the domain box and subset enumeration by
increasing size.  It shares nothing with the solver path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .formulas import (
    Atom,
    ConstraintSet,
    LinTerm,
    disj,
    eval_formula,
    eval_formula_grid,
    formula_vars,
)
from .solver import UNSAT, DomainConfig, Solver


class McsUsageError(Exception):
    pass


@dataclass(frozen=True)
class McsConfig:
    b_mcs: int = 3  # maximum number of MCSs returned
    k_max: int = 2  # maximum MCS cardinality

    def __post_init__(self) -> None:
        if self.b_mcs < 1 or self.k_max < 1:
            raise ValueError("b_mcs and k_max must be >= 1")


@dataclass(frozen=True)
class Mcs:
    """An irreducible correction set; members ordered latest-on-path first."""

    members: tuple  # Constraint, sorted by path_index descending

    @property
    def ids(self) -> frozenset:
        return frozenset(c.id for c in self.members)

    @property
    def cardinality(self) -> int:
        return len(self.members)

    def __str__(self) -> str:
        inner = ", ".join(c.render() for c in self.members)
        return f"{{{inner}}}"


# enumeration outcome flags
OK = "ok"
ALREADY_SAT = "already_sat"  # hard + soft satisfiable: nothing to correct
HARD_UNSAT = "hard_unsat"  # hard alone unsatisfiable: no removal helps


@dataclass(frozen=True)
class McsResult:
    mcs_list: tuple
    flag: str

    def __iter__(self):
        return iter(self.mcs_list)

    def __len__(self) -> int:
        return len(self.mcs_list)

    def id_sets(self) -> set:
        return {m.ids for m in self.mcs_list}


def _mcs_sort_key(m: Mcs):
    return tuple(sorted((c.path_index for c in m.members), reverse=True))


def enumerate_on(solver: Solver, pairs, config: McsConfig) -> McsResult:
    """Core enumeration over a solver whose hard/soft state is asserted.

    `pairs` is the list of (Selector, Constraint) for the soft constraints,
    in path order.  Frames pushed here are popped before returning, so the
    caller's assertion stack is preserved.
    """
    sels = [sel for sel, _ in pairs]
    by_id = {sel.id: c for sel, c in pairs}

    fid = solver.push()
    for sel in sels:
        solver.pin_selector(sel, True)
    all_on = solver.check()
    solver.pop(fid)
    if all_on is not UNSAT:
        return McsResult((), ALREADY_SAT)

    fid = solver.push()
    for sel in sels:
        solver.pin_selector(sel, False)
    hard_only = solver.check()
    solver.pop(fid)
    if hard_only is UNSAT:
        return McsResult((), HARD_UNSAT)

    found: list[Mcs] = []
    blocks: list = []
    for k in range(1, min(config.k_max, len(sels)) + 1):
        fid = solver.push()
        solver.assert_at_most_disabled(sels, k)
        for b in blocks:
            solver.assert_hard(b)
        level: list[frozenset] = []
        while True:
            r = solver.check()
            if r is UNSAT:
                break
            level.append(r.disabled)
            block = disj(
                Atom("==", LinTerm.var(sel.var), LinTerm.constant(1))
                for sel in sels
                if sel.id in r.disabled
            )
            solver.assert_hard(block)
            blocks.append(block)
        solver.pop(fid)
        level_mcs = [
            Mcs(tuple(sorted((by_id[i] for i in ids), key=lambda c: -c.path_index)))
            for ids in level
        ]
        level_mcs.sort(key=_mcs_sort_key, reverse=True)
        found.extend(level_mcs)
        if len(found) >= config.b_mcs:
            del found[config.b_mcs :]
            break
    return McsResult(tuple(found), OK)


def enumerate_mcs(
    cs: ConstraintSet, config: McsConfig = McsConfig(), dom: DomainConfig = DomainConfig()
) -> McsResult:
    """Enumerate up to `b_mcs` MCSs of size <= `k_max` for a constraint set.

    Output is ordered by (cardinality ascending, then latest-on-path
    first).  Instead of erroring on violated preconditions the result is
    flagged: `already_sat` when hard + soft is satisfiable, `hard_unsat`
    when the hard constraints alone are not.
    """
    solver = Solver(dom)
    for c in cs.hard:
        solver.assert_hard(c.formula)
    pairs = [(solver.assert_soft(c), c) for c in cs.soft]
    return enumerate_on(solver, pairs, config)


# ---------------------------------------------------------------------------
# Independent oracle
# ---------------------------------------------------------------------------

_MAX_ORACLE_SOFT = 12
_MAX_GRID_CELLS = 5_000_000


def bruteforce_mcs(cs: ConstraintSet, dom: DomainConfig = DomainConfig(-4, 4)) -> set:
    """Exhaustive MCS oracle; returns the set of MCSs as id-frozensets.

    Enumerates every valuation of the domain box to decide satisfiability
    and every soft subset by increasing size.  Guarded to oracle scale
    (<= 12 soft constraints, small boxes).
    """
    if len(cs.soft) > _MAX_ORACLE_SOFT:
        raise McsUsageError(f"oracle limited to {_MAX_ORACLE_SOFT} soft constraints")
    n = len(cs.soft)
    names = sorted(
        set().union(*(formula_vars(c.formula) for c in cs.hard + cs.soft), set())
    )
    width = dom.hi - dom.lo + 1
    if width ** max(len(names), 1) > _MAX_GRID_CELLS:
        raise McsUsageError("domain box too large for the exhaustive oracle")

    if names:
        axes = np.meshgrid(*([np.arange(dom.lo, dom.hi + 1)] * len(names)), indexing="ij")
        grids = {name: ax.ravel() for name, ax in zip(names, axes)}
        hard_ok = np.ones(width ** len(names), dtype=bool)
        for c in cs.hard:
            hard_ok &= eval_formula_grid(c.formula, grids)
        packed = np.zeros(width ** len(names), dtype=np.int64)
        for i, c in enumerate(cs.soft):
            packed |= eval_formula_grid(c.formula, grids).astype(np.int64) << i
        masks = set(int(m) for m in np.unique(packed[hard_ok]))
    else:
        hard_sat = all(eval_formula(c.formula, {}) for c in cs.hard)
        if not hard_sat:
            masks = set()
        else:
            bits = 0
            for i, c in enumerate(cs.soft):
                if eval_formula(c.formula, {}):
                    bits |= 1 << i
            masks = {bits}

    if not masks:
        return set()  # hard alone unsatisfiable: no removal can help
    full = (1 << n) - 1
    if full in masks:
        return set()  # nothing to correct
    found_bits: list[int] = []
    found: set = set()
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            bits = 0
            for i in subset:
                bits |= 1 << i
            if any(f & bits == f for f in found_bits):
                continue  # superset of an already-found MCS
            if any(mask | bits == full for mask in masks):
                found_bits.append(bits)
                found.add(frozenset(cs.soft[i].id for i in subset))
    return found
