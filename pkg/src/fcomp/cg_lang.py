"""The first-order target language with an explicit heap.

Statements are chains of lets over expressions; pairs and closures live in
the heap via alloc/move/load.  The machine state is an immutable heap map
plus a next-free index; stepping threads the state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .errors import HeapExhausted, OutOfBounds
from .fresh import fresh_name
from .source_lang import EvalOutcome, Outcome


class CgTerm:
    __slots__ = ()


@dataclass(frozen=True)
class GNat(CgTerm):
    n: int


@dataclass(frozen=True)
class GVar(CgTerm):
    name: str


@dataclass(frozen=True)
class GUnit(CgTerm):
    pass


@dataclass(frozen=True)
class GLoc(CgTerm):
    index: int


@dataclass(frozen=True)
class GPred(CgTerm):
    arg: CgTerm


@dataclass(frozen=True)
class GPlus(CgTerm):
    l: CgTerm
    r: CgTerm


@dataclass(frozen=True)
class GIfz(CgTerm):
    cond: CgTerm
    zbranch: CgTerm
    nzbranch: CgTerm


@dataclass(frozen=True)
class GApp(CgTerm):
    fn: CgTerm
    arg: CgTerm


@dataclass(frozen=True)
class GAlloc(CgTerm):
    n: int


@dataclass(frozen=True)
class GMove(CgTerm):
    base: CgTerm
    offset: int
    value: CgTerm


@dataclass(frozen=True)
class GLoad(CgTerm):
    base: CgTerm
    offset: int


@dataclass(frozen=True)
class GLet(CgTerm):
    bound: CgTerm
    binder: str
    body: CgTerm


@dataclass(frozen=True)
class GAbs(CgTerm):
    binder: str
    body: CgTerm


@dataclass(frozen=True)
class CgProgram:
    binders: Tuple[str, ...]
    functions: Tuple[CgTerm, ...]
    body: CgTerm


G_UNITVAL = GUnit()


def cg_is_value(t: CgTerm) -> bool:
    return isinstance(t, (GNat, GUnit, GLoc, GAbs))


def cg_free_vars(t: CgTerm) -> frozenset:
    # Cached on the (immutable) node: substitution shares untouched subtrees,
    # so the cache makes repeated stepping roughly linear in the redex path.
    fv = getattr(t, "_fv", None)
    if fv is not None:
        return fv
    if isinstance(t, GVar):
        fv = frozenset((t.name,))
    elif isinstance(t, (GNat, GUnit, GLoc, GAlloc)):
        fv = frozenset()
    elif isinstance(t, GPred):
        fv = cg_free_vars(t.arg)
    elif isinstance(t, GPlus):
        fv = cg_free_vars(t.l) | cg_free_vars(t.r)
    elif isinstance(t, GIfz):
        fv = (
            cg_free_vars(t.cond) | cg_free_vars(t.zbranch) | cg_free_vars(t.nzbranch)
        )
    elif isinstance(t, GApp):
        fv = cg_free_vars(t.fn) | cg_free_vars(t.arg)
    elif isinstance(t, GMove):
        fv = cg_free_vars(t.base) | cg_free_vars(t.value)
    elif isinstance(t, GLoad):
        fv = cg_free_vars(t.base)
    elif isinstance(t, GLet):
        fv = cg_free_vars(t.bound) | (cg_free_vars(t.body) - {t.binder})
    elif isinstance(t, GAbs):
        fv = cg_free_vars(t.body) - {t.binder}
    else:
        raise TypeError(t)
    object.__setattr__(t, "_fv", fv)
    return fv


def cg_subst(s, t: CgTerm) -> CgTerm:
    s = dict(s)
    if not s:
        return t
    fvs = {x: cg_free_vars(v) for x, v in s.items()}
    return _subst(s, fvs, t)


def _subst(s, fvs, t):
    if cg_free_vars(t).isdisjoint(s):
        return t
    if isinstance(t, GVar):
        return s.get(t.name, t)
    if isinstance(t, (GNat, GUnit, GLoc, GAlloc)):
        return t
    if isinstance(t, GPred):
        return GPred(_subst(s, fvs, t.arg))
    if isinstance(t, GPlus):
        return GPlus(_subst(s, fvs, t.l), _subst(s, fvs, t.r))
    if isinstance(t, GIfz):
        return GIfz(
            _subst(s, fvs, t.cond),
            _subst(s, fvs, t.zbranch),
            _subst(s, fvs, t.nzbranch),
        )
    if isinstance(t, GApp):
        return GApp(_subst(s, fvs, t.fn), _subst(s, fvs, t.arg))
    if isinstance(t, GMove):
        return GMove(_subst(s, fvs, t.base), t.offset, _subst(s, fvs, t.value))
    if isinstance(t, GLoad):
        return GLoad(_subst(s, fvs, t.base), t.offset)
    if isinstance(t, GLet):
        bound = _subst(s, fvs, t.bound)
        binder, body = _under(s, fvs, t.binder, t.body)
        return GLet(bound, binder, body)
    if isinstance(t, GAbs):
        binder, body = _under(s, fvs, t.binder, t.body)
        return GAbs(binder, body)
    raise TypeError(t)


def _under(s, fvs, binder, body):
    s2 = {x: v for x, v in s.items() if x != binder}
    if not s2:
        return binder, body
    relevant = set()
    for x in s2:
        relevant |= fvs[x]
    if binder in relevant:
        avoid = relevant | cg_free_vars(body) | set(s2) | {binder}
        nb = fresh_name(binder, avoid)
        body = cg_subst({binder: GVar(nb)}, body)
        binder = nb
    return binder, _subst(s2, {x: fvs[x] for x in s2}, body)


# ---------------------------------------------------------------------------
# Memory model


@dataclass(frozen=True)
class MemState:
    next_free: int = 0
    heap: tuple = ()
    cap: int = None

    def cells(self):
        return dict(enumerate(self.heap))


EMPTY_MEM = MemState()


def allocate(s: MemState, n: int):
    """n fresh cells initialized to unit; returns the base location."""
    if s.cap is not None and s.next_free + n > s.cap:
        raise HeapExhausted(f"allocation of {n} cells exceeds cap {s.cap}")
    base = s.next_free
    heap = s.heap + (G_UNITVAL,) * n
    return MemState(base + n, heap, s.cap), GLoc(base)


def heap_update(s: MemState, base: GLoc, off: int, v: CgTerm) -> MemState:
    i = base.index + off
    if not (0 <= i < s.next_free):
        raise OutOfBounds(f"update at {i}, allocated [0, {s.next_free})")
    heap = s.heap[:i] + (v,) + s.heap[i + 1 :]
    return MemState(s.next_free, heap, s.cap)


def heap_lookup(s: MemState, base: GLoc, off: int) -> CgTerm:
    i = base.index + off
    if not (0 <= i < s.next_free):
        raise OutOfBounds(f"lookup at {i}, allocated [0, {s.next_free})")
    return s.heap[i]


# ---------------------------------------------------------------------------
# Stepping


def step_cg(s: MemState, t: CgTerm):
    """One machine step, or None on values and stuck terms."""
    if cg_is_value(t):
        return None
    if isinstance(t, GPred):
        if isinstance(t.arg, GNat):
            return s, GNat(max(0, t.arg.n - 1))
        return None
    if isinstance(t, GPlus):
        if isinstance(t.l, GNat) and isinstance(t.r, GNat):
            return s, GNat(t.l.n + t.r.n)
        return None
    if isinstance(t, GIfz):
        if isinstance(t.cond, GNat):
            return s, (t.zbranch if t.cond.n == 0 else t.nzbranch)
        return None
    if isinstance(t, GApp):
        if isinstance(t.fn, GAbs) and cg_is_value(t.arg):
            return s, cg_subst({t.fn.binder: t.arg}, t.fn.body)
        return None
    if isinstance(t, GAlloc):
        s2, loc = allocate(s, t.n)
        return s2, loc
    if isinstance(t, GMove):
        if isinstance(t.base, GLoc) and cg_is_value(t.value):
            return heap_update(s, t.base, t.offset, t.value), G_UNITVAL
        return None
    if isinstance(t, GLoad):
        if isinstance(t.base, GLoc):
            return s, heap_lookup(s, t.base, t.offset)
        return None
    if isinstance(t, GLet):
        if cg_is_value(t.bound):
            return s, cg_subst({t.binder: t.bound}, t.body)
        r = step_cg(s, t.bound)
        if r is None:
            return None
        s2, b2 = r
        return s2, GLet(b2, t.binder, t.body)
    return None


def eval_cg(s: MemState, t: CgTerm, fuel: int):
    """Iterate the step relation to a value, stuck term, or fuel exhaustion.

    Maintains the enclosing let-frames on an explicit stack so that each step
    costs time near the redex rather than a walk from the root; the step
    counts agree exactly with iterating step_cg.
    """
    steps = 0
    stack = []

    def plug(u):
        for binder, body in reversed(stack):
            u = GLet(u, binder, body)
        return u

    u = t
    while True:
        while isinstance(u, GLet):
            stack.append((u.binder, u.body))
            u = u.bound
        if cg_is_value(u):
            if not stack:
                return EvalOutcome(Outcome.VALUE, u, steps), s
            if steps >= fuel:
                return EvalOutcome(Outcome.OUT_OF_FUEL, plug(u), steps), s
            binder, body = stack.pop()
            u = cg_subst({binder: u}, body)
            steps += 1
            continue
        if steps >= fuel:
            return EvalOutcome(Outcome.OUT_OF_FUEL, plug(u), steps), s
        r = step_cg(s, u)
        if r is None:
            return EvalOutcome(Outcome.STUCK, plug(u), steps), s
        s, u = r
        steps += 1


def eval_cg_program(p: CgProgram, fuel: int, cap=None):
    """Substitute the top-level functions into the body, run from empty heap."""
    body = p.body
    for binder, fn in zip(p.binders, p.functions):
        body = cg_subst({binder: fn}, body)
    return eval_cg(MemState(cap=cap), body, fuel)


def check_operand_form(t: CgTerm) -> bool:
    """Operands of pred/plus/app/move/load/ifz are constants or variables."""

    def is_operand(c):
        return isinstance(c, (GNat, GVar, GUnit, GLoc))

    def ok(t):
        if isinstance(t, (GNat, GVar, GUnit, GLoc, GAlloc)):
            return True
        if isinstance(t, GPred):
            return is_operand(t.arg)
        if isinstance(t, GPlus):
            return is_operand(t.l) and is_operand(t.r)
        if isinstance(t, GIfz):
            return is_operand(t.cond) and ok(t.zbranch) and ok(t.nzbranch)
        if isinstance(t, GApp):
            return is_operand(t.fn) and is_operand(t.arg)
        if isinstance(t, GMove):
            return is_operand(t.base) and is_operand(t.value)
        if isinstance(t, GLoad):
            return is_operand(t.base)
        if isinstance(t, GLet):
            return ok(t.bound) and ok(t.body)
        if isinstance(t, GAbs):
            return ok(t.body)
        raise TypeError(t)

    return ok(t)


def check_program_operand_form(p: CgProgram) -> bool:
    return all(check_operand_form(f) for f in p.functions) and check_operand_form(
        p.body
    )
