"""Incremental finite-domain solver for conjunctions of linear formulas.

The engine decides conjunctions of :class:`~faultlines.formulas.Formula`
over bounded integer variables.  It combines bounds-consistency interval
propagation on linear atoms with depth-first search (first-fail variable
choice, smallest value first); disjunctions are handled by unit-style
propagation plus search-time case splitting, and `!=` only prunes when a
bound pinches the forbidden value.  Complete on finite boxes.

Incrementality: assertions live on a frame stack.  :meth:`Solver.push`
opens a frame and :meth:`Solver.pop` restores the exact pre-push state
(domains, constraints, selectors, registered variables); statistics only
ever grow.  Soft constraints are guarded by selector variables (0/1):
an enabled selector enforces its constraint, a disabled one ignores it,
and unfixed selectors are decision variables searched after the integer
variables, so cardinality-bounded removal candidates fall out of models.

A Solver instance must be used from one thread at a time; independent
instances are fully isolated.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .formulas import (
    And,
    Atom,
    BoolConst,
    Constraint,
    Formula,
    LinTerm,
    Not,
    Or,
    SsaName,
    nnf,
)

SELECTOR_BASE = "_sel"


class SolverUsageError(Exception):
    pass


@dataclass(frozen=True)
class DomainConfig:
    """Inclusive bounds applied to every integer variable."""

    lo: int = -32768
    hi: int = 32767

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty domain [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Selector:
    """0/1 guard variable tied one-to-one to a soft constraint id."""

    id: int
    var: SsaName
    constraint: Constraint


@dataclass(frozen=True)
class Sat:
    """A satisfying assignment plus the selectors it left disabled."""

    model: dict
    disabled: frozenset  # selector ids whose guard variable is 0


UNSAT = None  # check() returns None when no model exists in the box


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


# Compiled formula nodes: ('lin', op, idxs, coefs, const) with op in
# {'==', '<=', '!='} meaning  sum(coefs*x) + const  OP  0, or
# ('and', nodes) / ('or', nodes).


class _Frame:
    __slots__ = ("trail_mark", "props_len", "vars_len", "sels_len")

    def __init__(self, trail_mark, props_len, vars_len, sels_len):
        self.trail_mark = trail_mark
        self.props_len = props_len
        self.vars_len = vars_len
        self.sels_len = sels_len


class _Prop:
    __slots__ = ("watch_idxs", "queued")

    def __init__(self, watch_idxs):
        self.watch_idxs = tuple(watch_idxs)
        self.queued = False

    def propagate(self, s: "Solver") -> bool:
        raise NotImplementedError


class _NodeProp(_Prop):
    __slots__ = ("node",)

    def __init__(self, node, watch_idxs):
        super().__init__(watch_idxs)
        self.node = node

    def propagate(self, s: "Solver") -> bool:
        return s._enforce(self.node)


class _ReifyProp(_Prop):
    __slots__ = ("sel_idx", "node")

    def __init__(self, sel_idx, node, watch_idxs):
        super().__init__(watch_idxs)
        self.sel_idx = sel_idx
        self.node = node

    def propagate(self, s: "Solver") -> bool:
        if s.lo[self.sel_idx] == 1:
            return s._enforce(self.node)
        if s.hi[self.sel_idx] == 0:
            return True
        if s._status(self.node) is False:
            return s._set_hi(self.sel_idx, 0)
        return True


class Solver:
    """One handle over an assertion stack; see the module docstring."""

    def __init__(self, dom: DomainConfig = DomainConfig()):
        self.dom = dom
        self.names: list = []  # idx -> SsaName
        self.ids: dict = {}  # SsaName -> idx
        self.lo: list = []
        self.hi: list = []
        self.is_sel: list = []
        self.props: list = []
        self.watchers: dict = {}  # idx -> list[_Prop]
        self.selectors: list = []
        self.trail: list = []  # (idx, is_hi, old value)
        self.frames: list = []
        self.queue: deque = deque()
        self.stats = {"checks": 0, "propagations": 0, "assertions": 0}

    # -- variables ----------------------------------------------------------

    def _register(self, name: SsaName) -> int:
        idx = self.ids.get(name)
        if idx is not None:
            return idx
        idx = len(self.names)
        self.names.append(name)
        self.ids[name] = idx
        if name.base == SELECTOR_BASE:
            self.lo.append(0)
            self.hi.append(1)
            self.is_sel.append(True)
        else:
            self.lo.append(self.dom.lo)
            self.hi.append(self.dom.hi)
            self.is_sel.append(False)
        self.watchers[idx] = []
        return idx

    # -- frames ---------------------------------------------------------------

    def push(self) -> int:
        self.frames.append(
            _Frame(len(self.trail), len(self.props), len(self.names), len(self.selectors))
        )
        return len(self.frames)

    def pop(self, frame_id: Optional[int] = None) -> None:
        if not self.frames:
            raise SolverUsageError("pop on base frame")
        if frame_id is None:
            frame_id = len(self.frames)
        if not 1 <= frame_id <= len(self.frames):
            raise SolverUsageError(f"pop targets dead frame {frame_id}")
        frame = self.frames[frame_id - 1]
        del self.frames[frame_id - 1 :]
        for p in reversed(self.props[frame.props_len :]):
            for v in p.watch_idxs:
                top = self.watchers[v].pop()
                assert top is p
        del self.props[frame.props_len :]
        del self.selectors[frame.sels_len :]
        self._undo_to(frame.trail_mark)
        for name in self.names[frame.vars_len :]:
            del self.ids[name]
        for idx in range(frame.vars_len, len(self.names)):
            del self.watchers[idx]
        del self.names[frame.vars_len :]
        del self.lo[frame.vars_len :]
        del self.hi[frame.vars_len :]
        del self.is_sel[frame.vars_len :]

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            idx, is_hi, old = self.trail.pop()
            if is_hi:
                self.hi[idx] = old
            else:
                self.lo[idx] = old

    # -- assertions -----------------------------------------------------------

    def assert_hard(self, f: Formula) -> None:
        self.stats["assertions"] += 1
        for conjunct in self._conjuncts(nnf(f)):
            self._add_prop_for(conjunct)

    def assert_soft(self, c: Constraint) -> Selector:
        self.stats["assertions"] += 1
        sel_var = SsaName(SELECTOR_BASE, c.id)
        sel_idx = self._register(sel_var)
        node, idxs = self._compile(nnf(c.formula))
        if node is True:
            node = ("lin", "==", (), (), 0)  # trivially satisfied
        elif node is False:
            node = ("lin", "==", (), (), 1)  # trivially violated
        prop = _ReifyProp(sel_idx, node, sorted(set(idxs) | {sel_idx}))
        self._install(prop)
        sel = Selector(c.id, sel_var, c)
        self.selectors.append(sel)
        return sel

    def assert_at_most_disabled(self, selectors, k: int) -> None:
        """Bound how many of the given selectors a model may disable."""
        if k < 0:
            raise SolverUsageError("cardinality bound must be >= 0")
        self.stats["assertions"] += 1
        idxs = tuple(self._register(s.var) for s in selectors)
        n = len(idxs)
        # at most k disabled == at least n-k enabled == -(sum sel) + (n-k) <= 0
        node = ("lin", "<=", idxs, (-1,) * n, n - k)
        self._install(_NodeProp(node, idxs))

    def pin_selector(self, sel: Selector, enabled: bool) -> None:
        """Force a selector for the current frame (undone by pop).

        Implemented as an immediate, trail-recorded domain restriction, so
        `selector_state` reflects the pin without a propagation pass.
        """
        self.stats["assertions"] += 1
        idx = self._register(sel.var)
        v = 1 if enabled else 0
        if self.lo[idx] > v or self.hi[idx] < v:
            # incompatible with an earlier pin: make the frame unsatisfiable
            self._install(_NodeProp(("lin", "==", (), (), 1), ()))
            return
        # raw trail writes: no propagation queue exists outside check()
        if self.lo[idx] < v:
            self.trail.append((idx, False, self.lo[idx]))
            self.lo[idx] = v
        if self.hi[idx] > v:
            self.trail.append((idx, True, self.hi[idx]))
            self.hi[idx] = v

    def selector_state(self, sel: Selector) -> str:
        idx = self.ids[sel.var]
        if self.lo[idx] == 1:
            return "enabled"
        if self.hi[idx] == 0:
            return "disabled"
        return "free"

    def _conjuncts(self, f: Formula):
        if isinstance(f, And):
            for i in f.items:
                yield from self._conjuncts(i)
        else:
            yield f

    def _add_prop_for(self, f: Formula) -> None:
        node, idxs = self._compile(f)
        if node is True:
            return
        if node is False:
            node = ("lin", "==", (), (), 1)
        self._install(_NodeProp(node, sorted(set(idxs))))

    def _install(self, prop: _Prop) -> None:
        self.props.append(prop)
        for v in prop.watch_idxs:
            self.watchers[v].append(prop)

    def _compile(self, f: Formula):
        """Formula (in NNF) -> (node, watched idxs); True/False for constants."""
        if isinstance(f, BoolConst):
            return f.value, []
        if isinstance(f, Atom):
            diff = f.lhs - f.rhs
            op = f.op
            if op == "<":
                diff, op = diff + LinTerm.constant(1), "<="
            elif op == ">=":
                diff = -diff
                op = "<="
            elif op == ">":
                diff, op = (-diff) + LinTerm.constant(1), "<="
            idxs = tuple(self._register(n) for n, _ in diff.coeffs)
            coefs = tuple(c for _, c in diff.coeffs)
            if not idxs:
                value = {"==": diff.const == 0, "<=": diff.const <= 0, "!=": diff.const != 0}[op]
                return value, []
            return ("lin", op, idxs, coefs, diff.const), list(idxs)
        if isinstance(f, (And, Or)):
            nodes, idxs = [], []
            for item in f.items:
                node, sub = self._compile(item)
                if node is True:
                    if isinstance(f, Or):
                        return True, []
                    continue
                if node is False:
                    if isinstance(f, And):
                        return False, []
                    continue
                nodes.append(node)
                idxs.extend(sub)
            if not nodes:
                return (isinstance(f, And)), []
            if len(nodes) == 1:
                return nodes[0], idxs
            return ("and" if isinstance(f, And) else "or", tuple(nodes)), idxs
        if isinstance(f, Not):
            raise SolverUsageError("formula not in negation normal form")
        raise TypeError(f"not a formula: {f!r}")

    # -- propagation ------------------------------------------------------------

    def _touch(self, idx: int) -> None:
        for p in self.watchers[idx]:
            if not p.queued:
                p.queued = True
                self.queue.append(p)

    def _set_lo(self, idx: int, v: int) -> bool:
        if v > self.lo[idx]:
            self.trail.append((idx, False, self.lo[idx]))
            self.lo[idx] = v
            if v > self.hi[idx]:
                return False
            self._touch(idx)
        return True

    def _set_hi(self, idx: int, v: int) -> bool:
        if v < self.hi[idx]:
            self.trail.append((idx, True, self.hi[idx]))
            self.hi[idx] = v
            if v < self.lo[idx]:
                return False
            self._touch(idx)
        return True

    def _lin_bounds(self, idxs, coefs, const):
        mn = mx = const
        lo, hi = self.lo, self.hi
        for i, c in zip(idxs, coefs):
            if c > 0:
                mn += c * lo[i]
                mx += c * hi[i]
            else:
                mn += c * hi[i]
                mx += c * lo[i]
        return mn, mx

    def _status(self, node):
        """True if the node holds for every point of the current box,
        False if for none, None otherwise."""
        kind = node[0]
        if kind == "lin":
            _, op, idxs, coefs, const = node
            mn, mx = self._lin_bounds(idxs, coefs, const)
            if op == "==":
                if mn == 0 and mx == 0:
                    return True
                if mn > 0 or mx < 0:
                    return False
                return None
            if op == "<=":
                if mx <= 0:
                    return True
                if mn > 0:
                    return False
                return None
            # '!='
            if mn > 0 or mx < 0:
                return True
            if mn == 0 and mx == 0:
                return False
            return None
        if kind == "and":
            result = True
            for sub in node[1]:
                st = self._status(sub)
                if st is False:
                    return False
                if st is None:
                    result = None
            return result
        # 'or'
        result = False
        for sub in node[1]:
            st = self._status(sub)
            if st is True:
                return True
            if st is None:
                result = None
        return result

    def _enforce(self, node) -> bool:
        kind = node[0]
        if kind == "lin":
            return self._enforce_lin(node)
        if kind == "and":
            for sub in node[1]:
                if not self._enforce(sub):
                    return False
            return True
        # 'or': unit propagation over disjuncts
        unit = None
        for sub in node[1]:
            st = self._status(sub)
            if st is True:
                return True
            if st is None:
                if unit is not None:
                    return True  # two live disjuncts: nothing to do yet
                unit = sub
        if unit is None:
            return False  # every disjunct is falsified
        return self._enforce(unit)

    def _enforce_lin(self, node) -> bool:
        _, op, idxs, coefs, const = node
        mn, mx = self._lin_bounds(idxs, coefs, const)
        lo, hi = self.lo, self.hi
        if op == "==":
            if mn > 0 or mx < 0:
                return False
            for i, c in zip(idxs, coefs):
                if c > 0:
                    cmin, cmax = c * lo[i], c * hi[i]
                else:
                    cmin, cmax = c * hi[i], c * lo[i]
                others_mn = mn - cmin
                others_mx = mx - cmax
                # need: -others_mx <= c*x <= -others_mn
                a, b = -others_mx, -others_mn
                if c > 0:
                    if not self._set_lo(i, _ceil_div(a, c)):
                        return False
                    if not self._set_hi(i, _floor_div(b, c)):
                        return False
                else:
                    if not self._set_hi(i, _floor_div(a, c)):
                        return False
                    if not self._set_lo(i, _ceil_div(b, c)):
                        return False
            return True
        if op == "<=":
            if mn > 0:
                return False
            if mx <= 0:
                return True
            for i, c in zip(idxs, coefs):
                cmin = c * lo[i] if c > 0 else c * hi[i]
                others_mn = mn - cmin
                b = -others_mn  # need c*x <= b
                if c > 0:
                    if not self._set_hi(i, _floor_div(b, c)):
                        return False
                else:
                    if not self._set_lo(i, _ceil_div(b, c)):
                        return False
            return True
        # '!='
        if mn > 0 or mx < 0:
            return True
        if mn == 0 and mx == 0:
            return False
        unfixed = [t for t in zip(idxs, coefs) if lo[t[0]] != hi[t[0]]]
        if len(unfixed) == 1:
            i, c = unfixed[0]
            fixed = const + sum(cc * lo[ii] for ii, cc in zip(idxs, coefs) if ii != i)
            if fixed % c == 0:
                forbidden = -fixed // c
                if lo[i] == forbidden:
                    return self._set_lo(i, forbidden + 1)
                if hi[i] == forbidden:
                    return self._set_hi(i, forbidden - 1)
        return True

    def _drain_failed(self) -> None:
        while self.queue:
            self.queue.popleft().queued = False

    def _propagate_all(self) -> bool:
        while self.queue:
            p = self.queue.popleft()
            p.queued = False
            self.stats["propagations"] += 1
            if not p.propagate(self):
                self._drain_failed()
                return False
        return True

    # -- search -------------------------------------------------------------

    def check(self) -> Optional[Sat]:
        """Search for a model of the current assertions.

        The solver's observable state is untouched by the call; only the
        statistics advance.
        """
        self.stats["checks"] += 1
        mark = len(self.trail)
        for p in self.props:
            if not p.queued:
                p.queued = True
                self.queue.append(p)
        found = self._propagate_all() and self._dfs()
        result: Optional[Sat] = UNSAT
        if found:
            model = {}
            disabled = []
            for idx, name in enumerate(self.names):
                if self.is_sel[idx]:
                    continue
                model[name] = self.lo[idx]
            for sel in self.selectors:
                if self.lo[self.ids[sel.var]] == 0:
                    disabled.append(sel.id)
            result = Sat(model, frozenset(disabled))
        self._undo_to(mark)
        return result

    def _pick_var(self) -> Optional[int]:
        best = None
        best_size = None
        lo, hi = self.lo, self.hi
        for idx in range(len(self.names)):
            if self.is_sel[idx] or lo[idx] == hi[idx]:
                continue
            size = hi[idx] - lo[idx]
            if best_size is None or size < best_size:
                best, best_size = idx, size
        if best is not None:
            return best
        for idx in range(len(self.names)):
            if self.is_sel[idx] and lo[idx] != hi[idx]:
                return idx
        return None

    def _dfs(self) -> bool:
        idx = self._pick_var()
        if idx is None:
            return True
        lo0, hi0 = self.lo[idx], self.hi[idx]
        values = (1, 0) if self.is_sel[idx] else range(lo0, hi0 + 1)
        for v in values:
            mark = len(self.trail)
            ok = self._set_lo(idx, v) and self._set_hi(idx, v)
            if ok:
                if self._propagate_all() and self._dfs():
                    return True
            else:
                self._drain_failed()
            self._undo_to(mark)
        return False


def new_solver(dom: DomainConfig = DomainConfig()) -> Solver:
    return Solver(dom)
