"""Counterexample-driven path exploration and per-path diagnosis.

Given a DSA-form graph and a failing input, the runner

1. propagates the counterexample to the exit, collecting the assignment
   constraints of the induced path, and diagnoses that path by MCS
   enumeration (inputs and postcondition hard, assignments soft);
2. flips up to `b_cond` decisions, depth-first over the decision order.
   A candidate is dropped without solving when a requested decision is
   never reached, when its last flipped decision already corrected the
   program at an equal or lower deviation level (condition marking), or
   when its decision sequence up to its last flip extends a previously
   explored deviated prefix.  A surviving candidate whose path satisfies
   the postcondition yields a diagnosis: the flipped conditions
   themselves, plus the MCSs of the constraints collected before the
   last flip conjoined with the guard value that forces the flipped
   branch;
3. assembles a deterministic report (diagnoses ordered by deviation
   count, then discovery; statistics include solver counters).

MCS enumerations share one incremental solver: input equalities sit in
the base frame and each path segment between decisions lives in its own
frame, so a diagnosis re-asserts only the segments its path does not
share with the previous one.  Passing ``incremental=False`` gives every
enumeration a fresh solver instead; diagnoses are identical, only the
assertion counters differ.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .cfg import Block, Cfg, Decision, Entry, Exit, THEN, ELSE, guard_formula, post_formula
from .formulas import (
    Atom,
    Constraint,
    ConstraintKind,
    LinTerm,
    SsaName,
    eval_formula,
    negate,
)
from .mcs import McsConfig, McsResult, enumerate_on
from .solver import DomainConfig, Solver


class ExplorerError(Exception):
    pass


class NothingToLocalizeError(ExplorerError):
    """The counterexample does not violate the postcondition."""


class DeviationUnreachedError(ExplorerError):
    def __init__(self, missing):
        super().__init__(f"deviation target(s) not on path: {sorted(missing)}")
        self.missing = frozenset(missing)


class OverflowAbandonedError(ExplorerError):
    def __init__(self, name, value, dom):
        super().__init__(f"{name} = {value} escapes the domain box [{dom.lo}, {dom.hi}]")
        self.name = name
        self.value = value


@dataclass(frozen=True)
class Counterexample:
    """Concrete inputs, one per function parameter, in parameter order."""

    items: tuple

    @staticmethod
    def of(mapping: Mapping, params: Iterable[str]) -> "Counterexample":
        params = tuple(params)
        missing = [p for p in params if p not in mapping]
        if missing:
            raise ExplorerError(f"counterexample misses parameter(s): {', '.join(missing)}")
        extra = [k for k in mapping if k not in params]
        if extra:
            raise ExplorerError(f"counterexample has unknown key(s): {', '.join(extra)}")
        return Counterexample(tuple((p, int(mapping[p])) for p in params))

    def as_dict(self) -> dict:
        return dict(self.items)


@dataclass(frozen=True)
class ExplorerConfig:
    b_cond: int = 2
    mcs: McsConfig = McsConfig()
    dom: DomainConfig = DomainConfig()

    def __post_init__(self) -> None:
        if self.b_cond < 0:
            raise ValueError("b_cond must be >= 0")


@dataclass(frozen=True)
class DecisionStep:
    node: str
    taken: str  # THEN or ELSE (the branch actually followed)
    deviated: bool


@dataclass
class PathTrace:
    decisions: tuple
    collected: tuple  # soft constraints in path order, path_index set
    segments: tuple  # len(decisions)+1 groups; segments[i] precedes decision i
    final_model: dict


@dataclass(frozen=True)
class DeviatedCondition:
    node: str
    loc: object
    guard_text: str


INITIAL_PATH = "initial_path"
DEVIATION_CORRECTS = "deviation_corrects"


@dataclass
class Diagnosis:
    kind: str
    deviated: tuple  # DeviatedCondition, in path order (>=1 for deviations)
    mcs: McsResult
    path: tuple  # DecisionStep sequence of the diagnosed path
    constraints: object = None  # the ConstraintSet the MCSs were computed over


@dataclass
class Statistics:
    paths_explored: int = 0
    paths_ignored: int = 0
    rejected_marked: int = 0
    rejected_prefix: int = 0
    rejected_unreached: int = 0
    overflow_abandoned: int = 0
    mcs_enumerations: int = 0
    solver_checks: int = 0
    solver_propagations: int = 0
    solver_assertions: int = 0

    @property
    def rejected(self) -> int:
        return self.rejected_marked + self.rejected_prefix


@dataclass
class Report:
    program: str
    counterexample: Counterexample
    b_cond: int
    mcs_config: McsConfig
    dom: DomainConfig
    incremental: bool
    diagnoses: tuple
    stats: Statistics


# ---------------------------------------------------------------------------
# Constraint templates and concrete propagation
# ---------------------------------------------------------------------------


def _templates(cfg: Cfg) -> dict:
    """cid -> Constraint for every block assignment of a DSA graph."""
    cache = cfg._formula_cache
    if "templates" not in cache:
        if not cfg.is_dsa:
            raise ExplorerError("exploration requires a DSA-form graph")
        from .formulas import linterm_from_expr

        out = {}
        for nid, node in cfg.nodes.items():
            if isinstance(node, Block):
                for a in node.assignments:
                    kind = (
                        ConstraintKind.SYNTHETIC_COPY
                        if a.synthetic
                        else ConstraintKind.ASSIGNMENT
                    )
                    out[a.cid] = Constraint(
                        a.cid,
                        Atom("==", LinTerm.var(a.target), linterm_from_expr(a.rhs)),
                        kind,
                        a.loc,
                    )
        cache["templates"] = out
    return cache["templates"]


def _id_base(cfg: Cfg) -> int:
    t = _templates(cfg)
    return (max(t) + 1) if t else 0


def input_constraints(cfg: Cfg, ce: Counterexample) -> tuple:
    base = _id_base(cfg)
    out = []
    for i, (name, value) in enumerate(ce.items):
        out.append(
            Constraint(
                base + i,
                Atom("==", LinTerm.var(SsaName(name, 0)), LinTerm.constant(value)),
                ConstraintKind.INPUT,
                cfg.param_locs[name],
            )
        )
    return tuple(out)


def postcondition_constraint(cfg: Cfg, ce: Counterexample) -> Constraint:
    return Constraint(
        _id_base(cfg) + len(ce.items),
        post_formula(cfg),
        ConstraintKind.POSTCONDITION,
        cfg.ensures_loc,
    )


def propagate(
    cfg: Cfg,
    ce: Counterexample,
    deviations: Iterable[str] = (),
    dom: DomainConfig = DomainConfig(),
) -> PathTrace:
    """Concrete forward execution, flipping the decisions in `deviations`.

    Raises DeviationUnreachedError when a requested decision is not on
    the resulting path and OverflowAbandonedError when a computed value
    escapes the domain box.
    """
    deviations = frozenset(deviations)
    templates = _templates(cfg)
    model = {SsaName(name, 0): value for name, value in ce.items}
    for name, value in ce.items:
        if not dom.lo <= value <= dom.hi:
            raise OverflowAbandonedError(name, value, dom)
    decisions: list = []
    collected: list = []
    segments: list = [[]]
    visited: set = set()
    nid = cfg.entry
    while True:
        node = cfg.nodes[nid]
        if isinstance(node, Exit):
            break
        if isinstance(node, Entry):
            nid = cfg.successors(nid)[0][1]
            continue
        if isinstance(node, Block):
            for a in node.assignments:
                template = templates[a.cid]
                value = template.formula.rhs.eval(model)
                if not dom.lo <= value <= dom.hi:
                    raise OverflowAbandonedError(a.target, value, dom)
                model[a.target] = value
                inst = template.at_path_index(len(collected))
                collected.append(inst)
                segments[-1].append(inst)
            nid = cfg.successors(nid)[0][1]
            continue
        if isinstance(node, Decision):
            visited.add(nid)
            value = eval_formula(guard_formula(cfg, nid), model)
            taken = THEN if value else ELSE
            deviated = nid in deviations
            if deviated:
                taken = ELSE if taken == THEN else THEN
            decisions.append(DecisionStep(nid, taken, deviated))
            segments.append([])
            nid = cfg.succ(nid, taken)
            continue
        raise ExplorerError(f"unexpected node {node!r}")
    missing = deviations - visited
    if missing:
        raise DeviationUnreachedError(missing)
    return PathTrace(
        decisions=tuple(decisions),
        collected=tuple(collected),
        segments=tuple(tuple(seg) for seg in segments),
        final_model=model,
    )


def path_satisfies_post(trace: PathTrace, cfg: Cfg) -> bool:
    """Inputs fully determine the path, so concrete evaluation decides it."""
    return eval_formula(post_formula(cfg), trace.final_model)


# ---------------------------------------------------------------------------
# Diagnosis backend (incremental prefix sharing vs. fresh solvers)
# ---------------------------------------------------------------------------


class _Backend:
    def __init__(self, dom: DomainConfig, inputs: tuple, incremental: bool):
        self.dom = dom
        self.inputs = inputs
        self.incremental = incremental
        self.totals = {"checks": 0, "propagations": 0, "assertions": 0}
        if incremental:
            self.solver = Solver(dom)
            for c in inputs:
                self.solver.assert_hard(c.formula)
            self.base_pairs: Optional[list] = None  # segment before 1st decision
            self.stack: list = []  # (key, frame_id, [(Selector, Constraint)])

    def enumerate_for(self, keys, segments, extra_hard, config: McsConfig) -> McsResult:
        """Run one MCS enumeration for a path prefix.

        keys: ((node, taken), ...) decision steps delimiting the segments.
        segments: len(keys)+1 groups of soft constraints in path order.
        extra_hard: constraints (postcondition or deviation guard) that
        hold only for this diagnosis.
        """
        if self.incremental:
            return self._enumerate_shared(keys, segments, extra_hard, config)
        solver = Solver(self.dom)
        for c in self.inputs:
            solver.assert_hard(c.formula)
        pairs = []
        for seg in segments:
            for c in seg:
                pairs.append((solver.assert_soft(c), c))
        for c in extra_hard:
            solver.assert_hard(c.formula)
        result = enumerate_on(solver, pairs, config)
        for key in self.totals:
            self.totals[key] += solver.stats[key]
        return result

    def _enumerate_shared(self, keys, segments, extra_hard, config: McsConfig) -> McsResult:
        solver = self.solver
        if self.base_pairs is None:
            self.base_pairs = [(solver.assert_soft(c), c) for c in segments[0]]
        shared = 0
        while (
            shared < len(self.stack)
            and shared < len(keys)
            and self.stack[shared][0] == keys[shared]
        ):
            shared += 1
        if shared < len(self.stack):
            solver.pop(self.stack[shared][1])
            del self.stack[shared:]
        for i in range(shared, len(keys)):
            fid = solver.push()
            pairs = [(solver.assert_soft(c), c) for c in segments[i + 1]]
            self.stack.append((keys[i], fid, pairs))
        pairs = list(self.base_pairs)
        for _, _, seg_pairs in self.stack:
            pairs.extend(seg_pairs)
        fid = solver.push()
        for c in extra_hard:
            solver.assert_hard(c.formula)
        result = enumerate_on(solver, pairs, config)
        solver.pop(fid)
        return result

    def stats_totals(self) -> dict:
        if self.incremental:
            return dict(self.solver.stats)
        return dict(self.totals)


# ---------------------------------------------------------------------------
# Diagnoses
# ---------------------------------------------------------------------------


def _deviation_requirement(cfg: Cfg, step: DecisionStep, cid: int) -> Constraint:
    """The guard value that forces execution down the flipped branch."""
    gf = guard_formula(cfg, step.node)
    formula = gf if step.taken == THEN else negate(gf)
    return Constraint(cid, formula, ConstraintKind.GUARD, cfg.nodes[step.node].loc)


def _deviated_conditions(cfg: Cfg, trace: PathTrace) -> tuple:
    out = []
    for step in trace.decisions:
        if step.deviated:
            node = cfg.nodes[step.node]
            out.append(DeviatedCondition(step.node, node.loc, str(guard_formula(cfg, step.node))))
    return tuple(out)


def diagnose_initial(
    trace: PathTrace, cfg: Cfg, ce: Counterexample, config: ExplorerConfig
) -> Diagnosis:
    """Stand-alone diagnosis of the zero-deviation trace (fresh solver)."""
    backend = _Backend(config.dom, input_constraints(cfg, ce), incremental=False)
    return _diagnose_initial(trace, cfg, ce, config, backend)


def _diagnose_initial(trace, cfg, ce, config, backend) -> Diagnosis:
    from .formulas import ConstraintSet

    keys = tuple((s.node, s.taken) for s in trace.decisions)
    hard = input_constraints(cfg, ce) + (postcondition_constraint(cfg, ce),)
    result = backend.enumerate_for(keys, trace.segments, hard[len(ce.items) :], config.mcs)
    cs = ConstraintSet.of(hard, trace.collected)
    return Diagnosis(INITIAL_PATH, (), result, trace.decisions, cs)


def diagnose_deviation(
    trace: PathTrace, cfg: Cfg, ce: Counterexample, config: ExplorerConfig
) -> Diagnosis:
    """Stand-alone diagnosis of a corrected deviated trace (fresh solver)."""
    backend = _Backend(config.dom, input_constraints(cfg, ce), incremental=False)
    return _diagnose_deviation(trace, cfg, ce, config, backend)


def _diagnose_deviation(trace, cfg, ce, config, backend) -> Diagnosis:
    from .formulas import ConstraintSet

    dev_indices = [i for i, s in enumerate(trace.decisions) if s.deviated]
    if not dev_indices:
        raise ExplorerError("trace has no deviation to diagnose")
    last = dev_indices[-1]
    step = trace.decisions[last]
    required = _deviation_requirement(
        cfg, step, _id_base(cfg) + len(ce.items) + 1 + last
    )
    keys = tuple((s.node, s.taken) for s in trace.decisions[:last])
    segments = trace.segments[: last + 1]
    result = backend.enumerate_for(keys, segments, (required,), config.mcs)
    cs = ConstraintSet.of(
        input_constraints(cfg, ce) + (required,),
        [c for seg in segments for c in seg],
    )
    return Diagnosis(
        DEVIATION_CORRECTS, _deviated_conditions(cfg, trace), result, trace.decisions, cs
    )


# ---------------------------------------------------------------------------
# The driver
# ---------------------------------------------------------------------------


def run(
    cfg: Cfg,
    ce: Counterexample,
    config: ExplorerConfig = ExplorerConfig(),
    incremental: bool = True,
) -> Report:
    """Full localization run; see the module docstring for the algorithm."""
    trace0 = propagate(cfg, ce, (), config.dom)
    if path_satisfies_post(trace0, cfg):
        raise NothingToLocalizeError("counterexample does not violate the postcondition")

    stats = Statistics()
    backend = _Backend(config.dom, input_constraints(cfg, ce), incremental)
    diagnoses = [_diagnose_initial(trace0, cfg, ce, config, backend)]
    stats.paths_explored += 1
    stats.mcs_enumerations += 1

    marks: dict = {}
    explored_prefixes: list = []
    b = min(config.b_cond, len(cfg.decision_order))
    for d in range(1, b + 1):
        for candidate in itertools.combinations(cfg.decision_order, d):
            try:
                trace = propagate(cfg, ce, candidate, config.dom)
            except DeviationUnreachedError:
                stats.rejected_unreached += 1
                continue
            except OverflowAbandonedError:
                stats.overflow_abandoned += 1
                continue
            last = max(i for i, s in enumerate(trace.decisions) if s.deviated)
            last_node = trace.decisions[last].node
            if marks.get(last_node, b + 1) <= d:
                stats.rejected_marked += 1
                continue
            seq = tuple((s.node, s.taken) for s in trace.decisions[: last + 1])
            if any(seq[: len(p)] == p for p in explored_prefixes):
                stats.rejected_prefix += 1
                continue
            stats.paths_explored += 1
            explored_prefixes.append(seq)
            if path_satisfies_post(trace, cfg):
                diagnoses.append(_diagnose_deviation(trace, cfg, ce, config, backend))
                stats.mcs_enumerations += 1
                marks.setdefault(last_node, d)
            else:
                stats.paths_ignored += 1

    totals = backend.stats_totals()
    stats.solver_checks = totals["checks"]
    stats.solver_propagations = totals["propagations"]
    stats.solver_assertions = totals["assertions"]
    return Report(
        program=cfg.name,
        counterexample=ce,
        b_cond=config.b_cond,
        mcs_config=config.mcs,
        dom=config.dom,
        incremental=incremental,
        diagnoses=tuple(diagnoses),
        stats=stats,
    )
