"""The closure-conversion target language.

Terms add abstractions without a self binder, closures and open; types
distinguish the closure arrow (->) from the code arrow (=>) and include
rigid skolem constants for the environment type hidden by open.  The module
also hosts the hoisted-program form produced by the hoisting pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Tuple

from .errors import (
    NonEmptyClosureContext,
    RigidEscape,
    TypeMismatch,
    UnboundVariable,
    UnresolvedTypeVariable,
)
from .fresh import fresh_name
from .source_lang import EvalOutcome, Outcome
from .unify import TypeExpr, Unifier, UnifyError, has_tvar


# ---------------------------------------------------------------------------
# Types


class CCType(TypeExpr):
    __slots__ = ()


@dataclass(frozen=True)
class CCNat(CCType):
    def __str__(self):
        return "nat"


@dataclass(frozen=True)
class CCUnit(CCType):
    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class ClosArrow(CCType):
    dom: CCType
    cod: CCType

    def __str__(self):
        return f"({self.dom} -> {self.cod})"


@dataclass(frozen=True)
class CodeArrow(CCType):
    dom: CCType
    cod: CCType

    def __str__(self):
        return f"({self.dom} => {self.cod})"


@dataclass(frozen=True)
class CCProd(CCType):
    left: CCType
    right: CCType

    def __str__(self):
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class Rigid(CCType):
    tag: int

    def __str__(self):
        return f"l{self.tag}"


CC_NAT = CCNat()
CC_UNIT = CCUnit()


# ---------------------------------------------------------------------------
# Terms


class CCTerm:
    __slots__ = ()


@dataclass(frozen=True)
class CNat(CCTerm):
    n: int


@dataclass(frozen=True)
class CVar(CCTerm):
    name: str


@dataclass(frozen=True)
class CPred(CCTerm):
    arg: CCTerm


@dataclass(frozen=True)
class CPlus(CCTerm):
    l: CCTerm
    r: CCTerm


@dataclass(frozen=True)
class CIfz(CCTerm):
    cond: CCTerm
    zbranch: CCTerm
    nzbranch: CCTerm


@dataclass(frozen=True)
class CUnit(CCTerm):
    pass


@dataclass(frozen=True)
class CPair(CCTerm):
    l: CCTerm
    r: CCTerm


@dataclass(frozen=True)
class CFst(CCTerm):
    arg: CCTerm


@dataclass(frozen=True)
class CSnd(CCTerm):
    arg: CCTerm


@dataclass(frozen=True)
class CLet(CCTerm):
    bound: CCTerm
    binder: str
    body: CCTerm


@dataclass(frozen=True)
class CAbs(CCTerm):
    binder: str
    body: CCTerm


@dataclass(frozen=True)
class CClos(CCTerm):
    code: CCTerm
    env: CCTerm


@dataclass(frozen=True)
class COpen(CCTerm):
    scrutinee: CCTerm
    fbinder: str
    ebinder: str
    body: CCTerm


@dataclass(frozen=True)
class CApp(CCTerm):
    fn: CCTerm
    arg: CCTerm


CC_UNITVAL = CUnit()


@dataclass(frozen=True)
class HoistedProgram:
    """letfun binders = functions in body."""

    binders: Tuple[str, ...]
    functions: Tuple[CCTerm, ...]
    body: CCTerm


def cc_is_value(t: CCTerm) -> bool:
    if isinstance(t, (CNat, CUnit, CAbs)):
        return True
    if isinstance(t, CPair):
        return cc_is_value(t.l) and cc_is_value(t.r)
    if isinstance(t, CClos):
        return cc_is_value(t.code) and cc_is_value(t.env)
    return False


def cc_free_vars(t: CCTerm) -> frozenset:
    # Cached on the (immutable) node: substitution shares untouched subtrees,
    # so the cache makes repeated stepping roughly linear in the redex path.
    fv = getattr(t, "_fv", None)
    if fv is not None:
        return fv
    if isinstance(t, CVar):
        fv = frozenset((t.name,))
    elif isinstance(t, (CNat, CUnit)):
        fv = frozenset()
    elif isinstance(t, (CPred, CFst, CSnd)):
        fv = cc_free_vars(t.arg)
    elif isinstance(t, (CPlus, CPair)):
        fv = cc_free_vars(t.l) | cc_free_vars(t.r)
    elif isinstance(t, CIfz):
        fv = (
            cc_free_vars(t.cond) | cc_free_vars(t.zbranch) | cc_free_vars(t.nzbranch)
        )
    elif isinstance(t, CLet):
        fv = cc_free_vars(t.bound) | (cc_free_vars(t.body) - {t.binder})
    elif isinstance(t, CAbs):
        fv = cc_free_vars(t.body) - {t.binder}
    elif isinstance(t, CClos):
        fv = cc_free_vars(t.code) | cc_free_vars(t.env)
    elif isinstance(t, COpen):
        fv = cc_free_vars(t.scrutinee) | (
            cc_free_vars(t.body) - {t.fbinder, t.ebinder}
        )
    elif isinstance(t, CApp):
        fv = cc_free_vars(t.fn) | cc_free_vars(t.arg)
    else:
        raise TypeError(t)
    object.__setattr__(t, "_fv", fv)
    return fv


def cc_all_names(t: CCTerm) -> set:
    out = set()

    def walk(t):
        if isinstance(t, CVar):
            out.add(t.name)
        elif isinstance(t, (CPred, CFst, CSnd)):
            walk(t.arg)
        elif isinstance(t, (CPlus, CPair)):
            walk(t.l)
            walk(t.r)
        elif isinstance(t, CIfz):
            walk(t.cond)
            walk(t.zbranch)
            walk(t.nzbranch)
        elif isinstance(t, CLet):
            out.add(t.binder)
            walk(t.bound)
            walk(t.body)
        elif isinstance(t, CAbs):
            out.add(t.binder)
            walk(t.body)
        elif isinstance(t, CClos):
            walk(t.code)
            walk(t.env)
        elif isinstance(t, COpen):
            out.add(t.fbinder)
            out.add(t.ebinder)
            walk(t.scrutinee)
            walk(t.body)
        elif isinstance(t, CApp):
            walk(t.fn)
            walk(t.arg)

    walk(t)
    return out


# ---------------------------------------------------------------------------
# Substitution


def cc_subst(s, t: CCTerm) -> CCTerm:
    s = dict(s)
    if not s:
        return t
    fvs = {x: cc_free_vars(v) for x, v in s.items()}
    return _subst(s, fvs, t)


def _subst(s, fvs, t):
    if cc_free_vars(t).isdisjoint(s):
        return t
    if isinstance(t, CVar):
        return s.get(t.name, t)
    if isinstance(t, (CNat, CUnit)):
        return t
    if isinstance(t, CPred):
        return CPred(_subst(s, fvs, t.arg))
    if isinstance(t, CFst):
        return CFst(_subst(s, fvs, t.arg))
    if isinstance(t, CSnd):
        return CSnd(_subst(s, fvs, t.arg))
    if isinstance(t, CPlus):
        return CPlus(_subst(s, fvs, t.l), _subst(s, fvs, t.r))
    if isinstance(t, CPair):
        return CPair(_subst(s, fvs, t.l), _subst(s, fvs, t.r))
    if isinstance(t, CIfz):
        return CIfz(
            _subst(s, fvs, t.cond),
            _subst(s, fvs, t.zbranch),
            _subst(s, fvs, t.nzbranch),
        )
    if isinstance(t, CClos):
        return CClos(_subst(s, fvs, t.code), _subst(s, fvs, t.env))
    if isinstance(t, CApp):
        return CApp(_subst(s, fvs, t.fn), _subst(s, fvs, t.arg))
    if isinstance(t, CLet):
        bound = _subst(s, fvs, t.bound)
        (b,), body = _under(s, fvs, (t.binder,), t.body)
        return CLet(bound, b, body)
    if isinstance(t, CAbs):
        (b,), body = _under(s, fvs, (t.binder,), t.body)
        return CAbs(b, body)
    if isinstance(t, COpen):
        scrut = _subst(s, fvs, t.scrutinee)
        (f, e), body = _under(s, fvs, (t.fbinder, t.ebinder), t.body)
        return COpen(scrut, f, e, body)
    raise TypeError(t)


def _under(s, fvs, binders, body):
    s2 = {x: v for x, v in s.items() if x not in binders}
    if not s2:
        return binders, body
    relevant = set()
    for x in s2:
        relevant |= fvs[x]
    if relevant.isdisjoint(binders):
        return binders, _subst(s2, fvs, body)
    avoid = relevant | cc_free_vars(body) | set(s2) | set(binders)
    renames = {}
    new_binders = []
    for b in binders:
        if b in relevant:
            nb = fresh_name(b, avoid)
            avoid.add(nb)
            renames[b] = CVar(nb)
            new_binders.append(nb)
        else:
            new_binders.append(b)
    if renames:
        body = cc_subst(renames, body)
    return tuple(new_binders), _subst(s2, fvs, body)


# ---------------------------------------------------------------------------
# Typing


_rigid_tags = itertools.count(1)


def typecheck_cc(ctx, t: CCTerm, mode: str = "skolem") -> CCType:
    """Infer the type of t; mode selects how open is typed.

    "skolem" follows the closure-elimination rule with a fresh rigid
    environment type per open; "pattern" types only the closure-application
    shape open f,e = M1 in f (M1', M2, e) and gives it the closure arrow's
    codomain directly.
    """
    inf = _Inference(mode)
    ty = inf.infer(list(ctx), t)
    return inf.finish(ty)


def _mentions_rigid(ty, tags):
    if isinstance(ty, Rigid):
        return ty.tag in tags
    import dataclasses

    return any(
        _mentions_rigid(c, tags)
        for f in dataclasses.fields(ty)
        if isinstance(c := getattr(ty, f.name), TypeExpr)
    )


def _ctx_lookup(ctx, name):
    for x, ty in reversed(ctx):
        if x == name:
            return ty
    raise UnboundVariable(name)


class _Inference:
    """Shared unification state for one typing run.

    code_ctx lists the bindings closure code is still allowed to mention:
    empty for plain terms, the top-level function binders for hoisted
    programs (whose closures hold stub applications of those binders).
    """

    def __init__(self, mode="skolem", code_ctx=()):
        self.u = Unifier()
        self.mode = mode
        self.rigids = []
        self.code_ctx = list(code_ctx)

    def finish(self, ty):
        ty = self.u.zonk(ty)
        if has_tvar(ty):
            raise UnresolvedTypeVariable(f"could not ground inferred type {ty}")
        if self.rigids and _mentions_rigid(ty, set(self.rigids)):
            raise RigidEscape(f"skolem environment type escapes into {ty}")
        return ty

    def check(self, ctx, sub, expected):
        actual = self.infer(ctx, sub)
        try:
            self.u.unify(actual, expected)
        except UnifyError:
            raise TypeMismatch(sub, self.u.zonk(expected), self.u.zonk(actual))
        return actual

    def infer(self, ctx, t):
        u = self.u
        if isinstance(t, CNat):
            return CC_NAT
        if isinstance(t, CUnit):
            return CC_UNIT
        if isinstance(t, CVar):
            return _ctx_lookup(ctx, t.name)
        if isinstance(t, CPred):
            self.check(ctx, t.arg, CC_NAT)
            return CC_NAT
        if isinstance(t, CPlus):
            self.check(ctx, t.l, CC_NAT)
            self.check(ctx, t.r, CC_NAT)
            return CC_NAT
        if isinstance(t, CIfz):
            self.check(ctx, t.cond, CC_NAT)
            tz = self.infer(ctx, t.zbranch)
            tnz = self.infer(ctx, t.nzbranch)
            try:
                u.unify(tz, tnz)
            except UnifyError:
                raise TypeMismatch(t, u.zonk(tz), u.zonk(tnz))
            return tz
        if isinstance(t, CPair):
            return CCProd(self.infer(ctx, t.l), self.infer(ctx, t.r))
        if isinstance(t, CFst):
            a, b = u.fresh(), u.fresh()
            self.check(ctx, t.arg, CCProd(a, b))
            return a
        if isinstance(t, CSnd):
            a, b = u.fresh(), u.fresh()
            self.check(ctx, t.arg, CCProd(a, b))
            return b
        if isinstance(t, CLet):
            tb = self.infer(ctx, t.bound)
            ctx.append((t.binder, tb))
            try:
                return self.infer(ctx, t.body)
            finally:
                ctx.pop()
        if isinstance(t, CAbs):
            targ = u.fresh()
            ctx.append((t.binder, targ))
            try:
                tb = self.infer(ctx, t.body)
            finally:
                ctx.pop()
            return CodeArrow(targ, tb)
        if isinstance(t, CApp):
            tf = self.infer(ctx, t.fn)
            ta = self.infer(ctx, t.arg)
            res = u.fresh()
            try:
                u.unify(tf, CodeArrow(ta, res))
            except UnifyError:
                raise TypeMismatch(t, CodeArrow(u.zonk(ta), u.zonk(res)), u.zonk(tf))
            return res
        if isinstance(t, CClos):
            allowed = {x for x, _ in self.code_ctx}
            fv = cc_free_vars(t.code) - allowed
            if fv:
                raise NonEmptyClosureContext(fv)
            tcode = self.infer(list(self.code_ctx), t.code)
            t1, t2, te = u.fresh(), u.fresh(), u.fresh()
            pattern = CodeArrow(CCProd(ClosArrow(t1, t2), CCProd(t1, te)), t2)
            try:
                u.unify(tcode, pattern)
            except UnifyError:
                raise TypeMismatch(t.code, pattern, u.zonk(tcode))
            self.check(ctx, t.env, te)
            return ClosArrow(t1, t2)
        if isinstance(t, COpen):
            t1, t2 = u.fresh(), u.fresh()
            self.check(ctx, t.scrutinee, ClosArrow(t1, t2))
            if self.mode == "pattern":
                body = t.body
                ok = (
                    isinstance(body, CApp)
                    and body.fn == CVar(t.fbinder)
                    and isinstance(body.arg, CPair)
                    and isinstance(body.arg.r, CPair)
                    and body.arg.r.r == CVar(t.ebinder)
                )
                if not ok:
                    raise TypeMismatch(t, "closure-application pattern", body)
                self.check(ctx, body.arg.l, ClosArrow(t1, t2))
                self.check(ctx, body.arg.r.l, t1)
                return t2
            tag = next(_rigid_tags)
            self.rigids.append(tag)
            env_ty = Rigid(tag)
            ctx.append(
                (
                    t.fbinder,
                    CodeArrow(CCProd(ClosArrow(t1, t2), CCProd(t1, env_ty)), t2),
                )
            )
            ctx.append((t.ebinder, env_ty))
            try:
                return self.infer(ctx, t.body)
            finally:
                ctx.pop()
                ctx.pop()
        raise TypeError(t)


# ---------------------------------------------------------------------------
# Evaluation


def step_cc(t: CCTerm):
    if cc_is_value(t):
        return None
    if isinstance(t, CPred):
        if isinstance(t.arg, CNat):
            return CNat(max(0, t.arg.n - 1))
        a = step_cc(t.arg)
        return None if a is None else CPred(a)
    if isinstance(t, CPlus):
        if isinstance(t.l, CNat):
            if isinstance(t.r, CNat):
                return CNat(t.l.n + t.r.n)
            r = step_cc(t.r)
            return None if r is None else CPlus(t.l, r)
        l = step_cc(t.l)
        return None if l is None else CPlus(l, t.r)
    if isinstance(t, CIfz):
        if isinstance(t.cond, CNat):
            return t.zbranch if t.cond.n == 0 else t.nzbranch
        c = step_cc(t.cond)
        return None if c is None else CIfz(c, t.zbranch, t.nzbranch)
    if isinstance(t, CPair):
        if cc_is_value(t.l):
            r = step_cc(t.r)
            return None if r is None else CPair(t.l, r)
        l = step_cc(t.l)
        return None if l is None else CPair(l, t.r)
    if isinstance(t, CFst):
        if isinstance(t.arg, CPair) and cc_is_value(t.arg):
            return t.arg.l
        a = step_cc(t.arg)
        return None if a is None else CFst(a)
    if isinstance(t, CSnd):
        if isinstance(t.arg, CPair) and cc_is_value(t.arg):
            return t.arg.r
        a = step_cc(t.arg)
        return None if a is None else CSnd(a)
    if isinstance(t, CLet):
        if cc_is_value(t.bound):
            return cc_subst({t.binder: t.bound}, t.body)
        b = step_cc(t.bound)
        return None if b is None else CLet(b, t.binder, t.body)
    if isinstance(t, CClos):
        if cc_is_value(t.code):
            e = step_cc(t.env)
            return None if e is None else CClos(t.code, e)
        c = step_cc(t.code)
        return None if c is None else CClos(c, t.env)
    if isinstance(t, COpen):
        if isinstance(t.scrutinee, CClos) and cc_is_value(t.scrutinee):
            return cc_subst(
                {t.fbinder: t.scrutinee.code, t.ebinder: t.scrutinee.env}, t.body
            )
        if cc_is_value(t.scrutinee):
            return None
        s = step_cc(t.scrutinee)
        return None if s is None else COpen(s, t.fbinder, t.ebinder, t.body)
    if isinstance(t, CApp):
        if isinstance(t.fn, CAbs):
            if cc_is_value(t.arg):
                return cc_subst({t.fn.binder: t.arg}, t.fn.body)
            a = step_cc(t.arg)
            return None if a is None else CApp(t.fn, a)
        if cc_is_value(t.fn):
            return None
        f = step_cc(t.fn)
        return None if f is None else CApp(f, t.arg)
    return None


def eval_cc(t: CCTerm, fuel: int) -> EvalOutcome:
    """Iterate the step relation to a value, stuck term, or fuel exhaustion.

    Maintains the enclosing let-frames on an explicit stack so that each step
    costs time near the redex rather than a walk from the root; the step
    counts agree exactly with iterating step_cc.
    """
    steps = 0
    stack = []

    def plug(u):
        for binder, body in reversed(stack):
            u = CLet(u, binder, body)
        return u

    u = t
    while True:
        while isinstance(u, CLet):
            stack.append((u.binder, u.body))
            u = u.bound
        if cc_is_value(u):
            if not stack:
                return EvalOutcome(Outcome.VALUE, u, steps)
            if steps >= fuel:
                return EvalOutcome(Outcome.OUT_OF_FUEL, plug(u), steps)
            binder, body = stack.pop()
            u = cc_subst({binder: u}, body)
            steps += 1
            continue
        if steps >= fuel:
            return EvalOutcome(Outcome.OUT_OF_FUEL, plug(u), steps)
        nxt = step_cc(u)
        if nxt is None:
            return EvalOutcome(Outcome.STUCK, plug(u), steps)
        u = nxt
        steps += 1


# ---------------------------------------------------------------------------
# Hoisted programs


def typecheck_hoisted(p: HoistedProgram, mode: str = "skolem") -> CCType:
    """Type every listed function in the empty context, then the body.

    Inside the body, closure code parts may mention the top-level function
    binders (stubs applied to dependency tuples); those are the only names
    the closed-code check admits there.
    """
    inf = _Inference(mode)
    ctx = []
    for binder, fn in zip(p.binders, p.functions):
        fv = cc_free_vars(fn)
        if fv:
            raise UnboundVariable(sorted(fv)[0])
        ty = inf.infer([], fn)
        ctx.append((binder, ty))
        inf.code_ctx = list(ctx)
    return inf.finish(inf.infer(ctx, p.body))


def hoisted_body_subst(p: HoistedProgram) -> CCTerm:
    """The body with each listed function substituted for its binder in order."""
    body = p.body
    for binder, fn in zip(p.binders, p.functions):
        body = cc_subst({binder: fn}, body)
    return body


def eval_hoisted(p: HoistedProgram, fuel: int) -> EvalOutcome:
    return eval_cc(hoisted_body_subst(p), fuel)


# ---------------------------------------------------------------------------
# Alpha-equivalence over CC terms (canonical de Bruijn-style renaming)


def cc_alpha_eq(a: CCTerm, b: CCTerm) -> bool:
    fa, fb = cc_free_vars(a), cc_free_vars(b)
    if fa != fb:
        return False
    env = {x: i for i, x in enumerate(sorted(fa))}
    return _canon(a, env, len(env)) == _canon(b, env, len(env))


def _canon(t, env, depth):
    if isinstance(t, CVar):
        if t.name not in env:
            raise UnboundVariable(t.name)
        return ("v", env[t.name])
    if isinstance(t, CNat):
        return ("n", t.n)
    if isinstance(t, CUnit):
        return ("u",)
    if isinstance(t, CPred):
        return ("pred", _canon(t.arg, env, depth))
    if isinstance(t, CFst):
        return ("fst", _canon(t.arg, env, depth))
    if isinstance(t, CSnd):
        return ("snd", _canon(t.arg, env, depth))
    if isinstance(t, CPlus):
        return ("plus", _canon(t.l, env, depth), _canon(t.r, env, depth))
    if isinstance(t, CPair):
        return ("pair", _canon(t.l, env, depth), _canon(t.r, env, depth))
    if isinstance(t, CIfz):
        return (
            "ifz",
            _canon(t.cond, env, depth),
            _canon(t.zbranch, env, depth),
            _canon(t.nzbranch, env, depth),
        )
    if isinstance(t, CClos):
        return ("clos", _canon(t.code, env, depth), _canon(t.env, env, depth))
    if isinstance(t, CApp):
        return ("app", _canon(t.fn, env, depth), _canon(t.arg, env, depth))
    if isinstance(t, CLet):
        bound = _canon(t.bound, env, depth)
        env2 = dict(env)
        env2[t.binder] = depth
        return ("let", bound, _canon(t.body, env2, depth + 1))
    if isinstance(t, CAbs):
        env2 = dict(env)
        env2[t.binder] = depth
        return ("abs", _canon(t.body, env2, depth + 1))
    if isinstance(t, COpen):
        scrut = _canon(t.scrutinee, env, depth)
        env2 = dict(env)
        env2[t.fbinder] = depth
        env2[t.ebinder] = depth + 1
        return ("open", scrut, _canon(t.body, env2, depth + 2))
    raise TypeError(t)


def hoisted_alpha_eq(a: HoistedProgram, b: HoistedProgram) -> bool:
    if len(a.functions) != len(b.functions):
        return False
    if not all(cc_alpha_eq(f, g) for f, g in zip(a.functions, b.functions)):
        return False
    return cc_alpha_eq(_letify(a), _letify(b))


def _letify(p: HoistedProgram) -> CCTerm:
    body = p.body
    for binder, fn in reversed(list(zip(p.binders, p.functions))):
        body = CLet(fn, binder, body)
    return body
