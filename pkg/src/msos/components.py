"""The component repository.

A component bundles one construct with the entities its rules mention, the
constructs it imports, and its local rules.  Rules never see a whole label:
they get the mentioned source objects (a dict) and, for premises, the
mentioned projection of the premise label.  The unmentioned part is carried
by :func:`local_step` itself, either passed through from the premise (the
``{X}`` rules) or fixed to identity (axioms).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from operator import itemgetter
from typing import Callable, Optional

from .labels import (
    READ_ONLY, READ_WRITE, RO, RW, WO, WRITE_ONLY, Label, Objects,
    assemble, join_objects, mentioned_label, opaque_identity,
    project_mentioned, project_unmentioned, split_objects,
)
from .terms import (
    ABS, ASSIGN, BIND, BLOCK, BOUNDID, CATCH, CMD, COND, COND_LOOP, DEREF, EMIT, ENV,
    EQ, LIT, SEQ, SKIP, SKIP_TERM, THROW, THROWING,
    Construct, RestrictedTerm, Term, is_value,
)
from .values import BREAKING, Env, same_value

RHO, SIGMA, OUT = "ρ", "σ", "out"

# kind each mentioned entity must have in any language using the component
ENTITY_KINDS = {RHO: READ_ONLY, SIGMA: READ_WRITE, OUT: WRITE_ONLY}


class Transition(tuple):
    """One element of a step relation: ``source --label--> target`` by ``rule``.

    ``premise`` keeps the transition of the stepped subterm for premise
    rules; it takes no part in equality.  A tuple underneath, because
    exhaustive checks create millions of these.
    """

    __slots__ = ()

    def __new__(cls, source: Term, label: Label, rule: str, target: Term, premise=None):
        return _tuple_new(cls, (source, label, rule, target, premise))

    source = property(itemgetter(0))
    label = property(itemgetter(1))
    rule = property(itemgetter(2))
    target = property(itemgetter(3))
    premise = property(itemgetter(4))

    def __eq__(self, other):
        return (type(other) is Transition and self[2] == other[2] and self[3] is other[3]
                and self[1] == other[1] and self[0] is other[0])

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((self[0], self[2], self[3]))

    def __reduce__(self):
        return (Transition, tuple(self))

    def __repr__(self):
        return f"Transition({self[0]} --[{self[2]}]--> {self[3]})"


_tuple_new = tuple.__new__


# --- rules ------------------------------------------------------------------

@dataclass(frozen=True)
class Axiom:
    """A rule without premises.

    ``fire(args, objs)`` returns the target term, or ``None`` when the rule
    does not apply.  Unlabeled axioms produce the identity label.  Labeled
    axioms also give ``arrows(args, objs)``: arrows for mentioned entities,
    every other entity being identity.
    """

    name: str
    fire: Callable
    arrows: Optional[Callable] = None

    kind = "axiom"

    @property
    def labeled(self) -> bool:
        return self.arrows is not None


@dataclass(frozen=True)
class Premise:
    """A rule with one premise stepping ``select(args, objs)``.

    The premise runs at the conclusion's source objects, except that
    ``premise_objects(args, objs)`` may replace mentioned ones.  Mentioned
    arrows of the conclusion come from ``conclusion_arrows(args, objs,
    premise_mentioned)`` (default: copied from the premise); the unmentioned
    part is always the premise's, unchanged.
    """

    name: str
    select: Callable
    rebuild: Callable
    premise_objects: Optional[Callable] = None
    conclusion_arrows: Optional[Callable] = None

    kind = "premise"
    labeled = True


@dataclass(frozen=True)
class Component:
    construct: Construct
    mentioned: frozenset = frozenset()
    imports: frozenset = frozenset()
    rules: tuple = ()
    uses: frozenset = frozenset()  # constructs matched by extension rules when present
    summary: str = ""
    _rule_index: dict = field(init=False, repr=False, compare=False, hash=False)

    compiled: Callable = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_rule_index", {self.rule_id(r): r for r in self.rules})
        object.__setattr__(self, "compiled", compile_rules(self))

    @property
    def id(self) -> str:
        return self.construct.id

    @property
    def sort(self) -> str:
        return self.construct.sort

    def rule_id(self, rule) -> str:
        return f"{self.construct.id}/{rule.name}"

    def rule(self, rule_id: str):
        return self._rule_index.get(rule_id)

    def local_step(self, rt: RestrictedTerm, ctx: Objects, S) -> tuple:
        return local_step(self, rt, ctx, S)

    def manifest(self) -> dict:
        return {
            "id": self.id,
            "sort": self.sort,
            "args": list(self.construct.arg_sorts),
            "mentioned": [n for n in (RHO, SIGMA, OUT) if n in self.mentioned]
            + sorted(n for n in self.mentioned if n not in (RHO, SIGMA, OUT)),
            "imports": sorted(self.imports),
            "rules": [r.name for r in self.rules],
        }


def local_step(comp: Component, rt: RestrictedTerm, ctx: Objects, S) -> tuple:
    """All transitions of ``comp``'s rules from ``rt`` at source objects ``ctx``.

    ``S(term, objects)`` is the global step relation of the full language.
    """
    if rt.construct is not comp.construct and rt.construct != comp.construct:
        raise TypeError(f"{comp.id} cannot step a term restricted to {rt.construct.id}")
    return comp.compiled(rt.term, rt.args, ctx, S)


def compile_rules(comp: Component):
    """Unroll ``comp``'s rules into one function ``(term, args, ctx, S) -> transitions``.

    Same semantics as interpreting the rule objects one by one, in rule
    order.  This is the hot path of every exhaustive check, so the rule
    loop is generated as straight-line code.
    """
    cid = comp.construct.id
    if not comp.rules:
        return lambda t, args, ctx, S: ()
    ns = {"_new": _tuple_new, "T": Transition, "_NO": _NO_OBJECTS, "m": comp.mentioned,
          "_labeled": _labeled_axiom, "_premise": _premise_transitions}
    split = bool(comp.mentioned) or any(isinstance(r, Axiom) and r.labeled for r in comp.rules)
    body = ["def step(t, args, ctx, S):",
            "    objs, rest = ctx.split(m)" if split else "    objs = _NO",
            "    out = []"]
    for i, rule in enumerate(comp.rules):
        ns[f"r{i}"] = cid + "/" + rule.name
        ns[f"rule{i}"] = rule
        if isinstance(rule, Axiom):
            ns[f"f{i}"] = rule.fire
            ns[f"g{i}"] = rule.arrows
            lab = f"_labeled(g{i}, args, objs, rest, ctx)" if rule.labeled else "ctx.identity()"
            body += [f"    target = f{i}(args, objs)",
                     "    if target is not None:",
                     f"        out.append(_new(T, (t, {lab}, r{i}, target, None)))"]
            continue
        ns[f"f{i}"] = rule.select
        ns[f"g{i}"] = rule.rebuild
        body += [f"    child = f{i}(args, objs)", "    if child is not None:"]
        if rule.premise_objects is None and rule.conclusion_arrows is None:
            # mentioned and opaque parts both copied: the label itself
            body += ["        for tr in S(child, ctx):",
                     f"            out.append(_new(T, (t, tr[1], r{i}, g{i}(args, tr[3]), tr)))"]
        else:
            body.append(f"        out.extend(_premise(rule{i}, r{i}, t, args, child, ctx, objs, rest, m, S))")
    body.append("    return tuple(out) if out else ()")
    exec(compile("\n".join(body), f"<rules of {cid}>", "exec"), ns)
    return ns["step"]


def _labeled_axiom(arrows, args, objs, rest, ctx):
    sig = ctx.signature
    return assemble(mentioned_label(sig, arrows(args, objs)), opaque_identity(rest, sig), sig)


def _premise_transitions(rule, rid, t, args, child, ctx, objs, rest, m, S):
    sig = ctx.signature
    if rule.premise_objects is None:
        pctx = ctx
    else:
        pctx = join_objects(rule.premise_objects(args, objs), rest, sig)
    for tr in S(child, pctx):
        pm = project_mentioned(tr.label, m)
        pu = project_unmentioned(tr.label, m)
        arrows = (dict(zip(pm.names, pm.arrows)) if rule.conclusion_arrows is None
                  else rule.conclusion_arrows(args, objs, pm))
        lab = assemble(mentioned_label(sig, arrows), pu, sig)
        yield Transition(t, lab, rid, rule.rebuild(args, tr.target), tr)


_NO_OBJECTS: dict = {}


# --- helpers shared by rules ------------------------------------------------

def _unless_value(t: Term):
    return None if is_value(t) else t


def _unless_terminal_cmd(t: Term):
    cid = t.cid
    return None if cid == "Cmd.skip" or cid == "Cmd.throwing" else t


# --- components -------------------------------------------------------------

SKIP_C = Component(SKIP, summary="normal termination")

_seq_make = SEQ._make
SEQ_C = Component(
    SEQ,
    imports=frozenset({SKIP.id}),
    uses=frozenset({THROWING.id}),
    rules=(
        Axiom("seq_1", lambda a, o: a[1] if a[0].cid == "Cmd.skip" else None),
        Axiom("seq_throw", lambda a, o: a[0] if a[0].cid == "Cmd.throwing" else None),
        Premise("seq_2", lambda a, o: _unless_terminal_cmd(a[0]),
                lambda a, c1: _seq_make((c1, a[1]))),
    ),
    summary="normal command sequencing",
)


def _block_ready(a, o):
    d, e = a
    return e if d.cid == "Dcl.env" and not is_value(e) else None


BLOCK_C = Component(
    BLOCK,
    mentioned=frozenset({RHO}),
    imports=frozenset({ENV.id, LIT.id}),
    rules=(
        Premise("block_dcl", lambda a, o: _unless_value(a[0]),
                lambda a, d2: BLOCK._make((d2, a[1]))),
        Premise("block_body", _block_ready,
                lambda a, e2: BLOCK._make((a[0], e2)),
                premise_objects=lambda a, o: {RHO: o[RHO].update(a[0].args[0])},
                conclusion_arrows=lambda a, o, pm: {RHO: RO(o[RHO])}),
        Axiom("block_value", lambda a, o: a[1] if a[0].cid == "Dcl.env" and is_value(a[1]) else None),
    ),
    summary="locally binds Dcl in the Exp",
)

COND_C = Component(
    COND,
    imports=frozenset({LIT.id}),
    rules=(
        Premise("cond_test", lambda a, o: _unless_value(a[0]),
                lambda a, e2: COND._make((e2, a[1], a[2]))),
        Axiom("cond_true", lambda a, o: a[1] if a[0].cid == "Exp.lit" and a[0].args[0] is True else None),
        Axiom("cond_false", lambda a, o: a[2] if a[0].cid == "Exp.lit" and a[0].args[0] is False else None),
    ),
    summary="conditional command",
)


def _unfold(a, o):
    e, c = a
    loop = COND_LOOP._make((e, c))
    return COND._make((e, SEQ._make((c, loop)), SKIP_TERM))


COND_LOOP_C = Component(
    COND_LOOP,
    imports=frozenset({COND.id, SEQ.id, SKIP.id}),
    rules=(Axiom("cond_loop_unfold", _unfold),),
    summary="a simple while-loop, propagating abrupt termination",
)

THROW_C = Component(
    THROW,
    imports=frozenset({LIT.id, THROWING.id}),
    rules=(
        Premise("throw_arg", lambda a, o: _unless_value(a[0]),
                lambda a, e2: THROW._make((e2,))),
        Axiom("throw_value", lambda a, o: THROWING._make((a[0].args[0],)) if a[0].cid == "Exp.lit" else None),
    ),
    summary="terminates abruptly with the value of the Exp",
)

THROWING_C = Component(THROWING, summary="abrupt termination carrying a value (terminal)")


def _handler(h: Term):
    """``(pattern_exp, body)`` for ``abs(eq(e), body)``, else ``None``."""
    pa = ABS.project(h)
    if pa is None:
        return None
    prm, body = pa
    ea = EQ.project(prm)
    if ea is None:
        return None
    return ea[0], body


def _catch_match(a, o):
    c, h = a
    if c.cid != "Cmd.throwing":
        return None
    hb = _handler(h)
    if hb is None or hb[0].cid != "Exp.lit":
        return None
    return hb[1] if same_value(c.args[0], hb[0].args[0]) else None


def _catch_rethrow(a, o):
    c, h = a
    if c.cid != "Cmd.throwing":
        return None
    hb = _handler(h)
    if hb is None or hb[0].cid != "Exp.lit":
        return None
    return None if same_value(c.args[0], hb[0].args[0]) else c


def _catch_handler_select(a, o):
    c, h = a
    if c.cid != "Cmd.throwing":
        return None
    hb = _handler(h)
    if hb is None or is_value(hb[0]):
        return None
    return hb[0]


def _catch_handler_rebuild(a, e2):
    c, h = a
    body = h.args[1]
    return CATCH._make((c, ABS._make((EQ._make((e2,)), body))))


CATCH_C = Component(
    CATCH,
    imports=frozenset({SKIP.id, THROWING.id, ABS.id, EQ.id, LIT.id}),
    rules=(
        Premise("catch_body", lambda a, o: _unless_terminal_cmd(a[0]),
                lambda a, c2: CATCH._make((c2, a[1]))),
        Axiom("catch_skip", lambda a, o: SKIP_TERM if a[0].cid == "Cmd.skip" else None),
        Axiom("catch_match", _catch_match),
        Axiom("catch_rethrow", _catch_rethrow),
        Premise("catch_handler", _catch_handler_select, _catch_handler_rebuild),
    ),
    summary="tries to handle abrupt termination of Cmd by procedure abstraction Pcd",
)

ABS_C = Component(ABS, imports=frozenset({EQ.id}),
                  summary="a parametrized procedure abstraction; applied only by catch")
EQ_C = Component(EQ, summary="a parameter that matches only the value computed by the Exp")
LIT_C = Component(LIT, summary="literal value (Exp value form)")
ENV_C = Component(ENV, summary="computed environment (Dcl value form)")


def _lookup(a, o):
    env = o[RHO]
    x = a[0]
    return LIT._make((env[x],)) if x in env else None


BOUNDID_C = Component(
    BOUNDID,
    mentioned=frozenset({RHO}),
    imports=frozenset({LIT.id}),
    rules=(Axiom("boundid_lookup", _lookup, arrows=lambda a, o: {RHO: RO(o[RHO])}),),
    summary="value bound to an identifier in the environment",
)

BIND_C = Component(
    BIND,
    imports=frozenset({LIT.id, ENV.id}),
    rules=(
        Premise("bind_arg", lambda a, o: _unless_value(a[1]),
                lambda a, e2: BIND._make((a[0], e2))),
        Axiom("bind_value", lambda a, o: (ENV._make((_singleton(a[0], a[1].args[0]),))
                                          if a[1].cid == "Exp.lit" else None)),
    ),
    summary="binds an identifier to the value of the Exp",
)


def _singleton(x, v):
    return Env({x: v})


ASSIGN_C = Component(
    ASSIGN,
    mentioned=frozenset({SIGMA}),
    imports=frozenset({LIT.id, SKIP.id}),
    rules=(
        Premise("assign_arg", lambda a, o: _unless_value(a[1]),
                lambda a, e2: ASSIGN._make((a[0], e2))),
        Axiom("assign_value",
              lambda a, o: SKIP_TERM if a[1].cid == "Exp.lit" else None,
              arrows=lambda a, o: {SIGMA: RW(o[SIGMA], o[SIGMA].set(a[0], a[1].args[0]))}),
    ),
    summary="updates the store",
)


def _deref(a, o):
    store = o[SIGMA]
    x = a[0]
    return LIT._make((store[x],)) if x in store else None


DEREF_C = Component(
    DEREF,
    mentioned=frozenset({SIGMA}),
    imports=frozenset({LIT.id}),
    rules=(Axiom("deref_read", _deref, arrows=lambda a, o: {SIGMA: RW(o[SIGMA], o[SIGMA])}),),
    summary="reads the store",
)

EMIT_C = Component(
    EMIT,
    mentioned=frozenset({OUT}),
    imports=frozenset({LIT.id, SKIP.id}),
    rules=(
        Premise("emit_arg", lambda a, o: _unless_value(a[0]),
                lambda a, e2: EMIT._make((e2,))),
        Axiom("emit_value",
              lambda a, o: SKIP_TERM if a[0].cid == "Exp.lit" else None,
              arrows=lambda a, o: {OUT: WO((a[0].args[0],))}),
    ),
    summary="emits the value of the Exp",
)

REPOSITORY = {c.id: c for c in (
    SKIP_C, SEQ_C, COND_C, COND_LOOP_C, CATCH_C, THROW_C, THROWING_C,
    ASSIGN_C, EMIT_C, ABS_C, EQ_C, LIT_C, BLOCK_C, BOUNDID_C, DEREF_C, ENV_C, BIND_C,
)}

# --- fixtures: deliberately misbehaving components for harness self-tests ---

FORK = Construct("Cmd.fork", CMD)
FORK_C = Component(
    FORK,
    imports=frozenset({SKIP.id, SEQ.id}),
    rules=(
        Axiom("fork_left", lambda a, o: SKIP_TERM),
        Axiom("fork_right", lambda a, o: SEQ._make((SKIP_TERM, SKIP_TERM))),
    ),
    summary="test fixture: two axioms from the same configuration",
)

FIXTURES = {FORK_C.id: FORK_C}


def lookup_component(cid: str) -> Component:
    if cid in REPOSITORY:
        return REPOSITORY[cid]
    if cid in FIXTURES:
        return FIXTURES[cid]
    raise KeyError(cid)


# --- per-component local steps ----------------------------------------------

def _bind_local(comp):
    def step(rt, ctx, S):
        return local_step(comp, rt, ctx, S)
    step.__name__ = f"local_step_{comp.construct.name}"
    step.__doc__ = f"Local step relation of {comp.id}."
    return step


local_step_skip = _bind_local(SKIP_C)
local_step_seq = _bind_local(SEQ_C)
local_step_block = _bind_local(BLOCK_C)
local_step_cond = _bind_local(COND_C)
local_step_cond_loop = _bind_local(COND_LOOP_C)
local_step_throw = _bind_local(THROW_C)
local_step_catch = _bind_local(CATCH_C)
local_step_boundid = _bind_local(BOUNDID_C)
local_step_bind = _bind_local(BIND_C)
local_step_assign = _bind_local(ASSIGN_C)
local_step_deref = _bind_local(DEREF_C)
local_step_emit = _bind_local(EMIT_C)


# --- desugaring -------------------------------------------------------------

def desugar_while_break(e: Term, c: Term) -> Term:
    """``while (e) c`` as a loop inside a handler for ``breaking``."""
    handler = ABS.inject((EQ.inject((LIT.inject((BREAKING,)),)), SKIP_TERM))
    return CATCH.inject((COND_LOOP.inject((e, c)), handler))


def desugar_break() -> Term:
    return THROW.inject((LIT.inject((BREAKING,)),))
