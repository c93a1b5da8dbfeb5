"""Composing components into a language and running it.

The global step relation of a sort dispatches a term to the one component
whose construct built it and runs that component's local step, handing it
the global relation itself for premises.  Recursion is on proper subterms,
so the knot is well founded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .components import ENTITY_KINDS, Component, Transition, local_step, lookup_component
from .labels import (
    CompositionError, Label, LabelSignature, Objects, compose, label_to_json,
)
from .sexpr import parse_term, to_sexpr
from .terms import SORTS, Construct, RestrictedTerm, Term, TermEnumerator, is_terminal, restrict

__all__ = [
    "BuildError", "UnknownComponent", "MissingImport", "EntityMismatch", "LanguageDefinition",
    "Language", "build_language", "global_step", "localize", "globalize", "LocalStep", "Step",
    "run_trace", "Trace", "NondeterminismError", "Transition", "DEFAULT_FUEL",
]

DEFAULT_FUEL = 10_000


class BuildError(Exception):
    pass


class UnknownComponent(BuildError):
    pass


class MissingImport(BuildError):
    pass


class EntityMismatch(BuildError):
    pass


class NondeterminismError(Exception):
    def __init__(self, term: Term, transitions):
        self.term = term
        self.transitions = tuple(transitions)
        rules = ", ".join(_derivation(t) for t in self.transitions)
        super().__init__(f"nondeterministic step from {to_sexpr(term)}: rules {rules}")


def _derivation(tr) -> str:
    # rule names from the conclusion down through the premises
    names = []
    while tr is not None:
        names.append(tr.rule)
        tr = tr.premise
    return " < ".join(names)


class LabelDisciplineError(AssertionError):
    """Consecutive trace labels failed to compose. Signals an engine bug."""


@dataclass
class LanguageDefinition:
    entities: list
    components: dict  # sort -> list of component ids
    sorts: list = field(default_factory=lambda: list(SORTS))
    seeds: dict = field(default_factory=dict)


class Language:
    """An immutable registry of components per sort with its global step relation."""

    def __init__(self, signature: LabelSignature, registry: Mapping[str, Iterable[Component]],
                 seeds: Mapping | None = None, sorts: Iterable[str] | None = None):
        self.signature = signature
        self.registry = {s: tuple(cs) for s, cs in registry.items()}
        self.sorts = tuple(sorts) if sorts is not None else tuple(self.registry)
        self.components = {c.id: c for cs in self.registry.values() for c in cs}
        self._by_cid = dict(self.components)
        self.enumerator = TermEnumerator(
            {s: [c.construct for c in cs] for s, cs in self.registry.items()}, seeds)
        self.seeds = self.enumerator.seeds
        self._local_steps: dict = {}

    def __repr__(self):
        return f"Language({self.signature!r}, {list(self.components)})"

    def constructs(self, sort: str | None = None) -> tuple:
        if sort is None:
            return tuple(c.construct for c in self.components.values())
        return tuple(c.construct for c in self.registry.get(sort, ()))

    def owner(self, t: Term) -> Component:
        comp = self._by_cid.get(t.cid)
        if comp is None:
            raise KeyError(f"term {to_sexpr(t)} is not in this language")
        return comp

    def objects(self, objects: Mapping | Objects | None = None) -> Objects:
        if isinstance(objects, Objects):
            return objects
        return Objects.of(self.signature, objects)

    def global_step(self, t: Term, ctx: Objects) -> tuple:
        comp = self._by_cid.get(t.cid)
        if comp is None:
            raise KeyError(f"term {to_sexpr(t)} is not in this language")
        return comp.compiled(t, t.args, ctx, self.global_step)

    def cached_step(self, cache: dict | None = None) -> "CachedStep":
        return CachedStep(self, {} if cache is None else cache)

    def local_step_of(self, c: Construct) -> "LocalStep":
        """The component's own local relation, wired to this language's ``S``."""
        ls = self._local_steps.get(c.id)
        if ls is None:
            comp = self.components.get(c.id)
            if comp is None or comp.construct != c:
                raise KeyError(f"construct {c.id} is not registered")
            ls = LocalStep(c, lambda rt, ctx, _c=comp: local_step(_c, rt, ctx, self.global_step))
            self._local_steps[c.id] = ls
        return ls

    def parse(self, text: str, sort: str | None = None) -> Term:
        """Parse a program; sugar may only expand into constructs of this language."""
        t = parse_term(text, self.constructs(), sort)
        self.check_term(t)
        return t

    def check_term(self, t: Term) -> None:
        todo = [t]
        while todo:
            u = todo.pop()
            if u.cid not in self._by_cid:
                raise KeyError(f"construct {u.cid} is not in this language")
            todo.extend(a for a in u.args if type(a) is Term)

    def manifest(self) -> list:
        return [c.manifest() for cs in self.registry.values() for c in cs]


class CachedStep:
    """Memoizing global step handle; :attr:`step` is what components get as ``S``."""

    def __init__(self, lang: Language, cache: dict):
        self.language = lang
        self.cache = cache
        steps = {cid: c.compiled for cid, c in lang._by_cid.items()}
        get = cache.get

        def S(t: Term, ctx: Objects) -> tuple:
            key = (t, ctx)
            got = get(key)
            if got is None:
                step = steps.get(t.cid)
                if step is None:
                    raise KeyError(f"term {to_sexpr(t)} is not in this language")
                got = cache[key] = step(t, t.args, ctx, S)
            return got

        S.language = lang
        self.step = S

    def __call__(self, t: Term, ctx: Objects) -> tuple:
        return self.step(t, ctx)


def global_step(lang: Language, t: Term, ctx) -> tuple:
    return lang.global_step(t, lang.objects(ctx))


# --- localize / globalize ---------------------------------------------------

class Step:
    """A step relation on a whole sort: ``(term, objects) -> transitions``."""

    def __init__(self, fn: Callable, language: Language | None = None):
        self.fn = fn
        self.language = language

    def __call__(self, t: Term, ctx: Objects) -> tuple:
        return self.fn(t, ctx)


class LocalStep:
    """A step relation on the terms of one construct: ``(restricted, objects) -> transitions``."""

    def __init__(self, construct: Construct, fn: Callable):
        self.construct = construct
        self.fn = fn

    def __call__(self, rt: RestrictedTerm, ctx: Objects) -> tuple:
        if rt.construct != self.construct:
            raise TypeError(f"local step of {self.construct.id} applied to {rt.construct.id} term")
        return self.fn(rt, ctx)


def localize(c: Construct, S) -> LocalStep:
    """Restrict a global step relation to the terms built by ``c``."""
    lang = getattr(S, "language", None)
    if isinstance(S, Language):
        lang, S = S, S.global_step
    if lang is not None and c.id not in lang.components:
        raise KeyError(f"construct {c.id} is not registered in the language")
    return LocalStep(c, lambda rt, ctx: S(rt.term, ctx))


def globalize(ls: LocalStep) -> Step:
    """Extend a local step to the whole sort, with no steps from other terms."""
    c = ls.construct

    def step(t: Term, ctx: Objects) -> tuple:
        rt = restrict(c, t)
        if rt is None:
            return ()
        return ls(rt, ctx)

    return Step(step)


# --- building ---------------------------------------------------------------

def build_language(defn: LanguageDefinition | Mapping) -> Language:
    if isinstance(defn, Mapping):
        defn = LanguageDefinition(**defn)
    sig = defn.entities if isinstance(defn.entities, LabelSignature) else LabelSignature(defn.entities)
    sorts = list(defn.sorts)
    registry: dict[str, list] = {s: [] for s in sorts}
    seen = set()
    for sort, ids in defn.components.items():
        if sort not in registry:
            raise BuildError(f"unknown sort {sort!r}")
        for cid in ids:
            comp = cid if isinstance(cid, Component) else None
            if comp is None:
                try:
                    comp = lookup_component(cid)
                except KeyError:
                    raise UnknownComponent(f"unknown component {cid!r}") from None
            if comp.sort != sort:
                raise BuildError(f"component {comp.id} has sort {comp.sort}, listed under {sort}")
            if comp.id in seen:
                raise BuildError(f"component {comp.id} listed twice")
            seen.add(comp.id)
            registry[sort].append(comp)
    for comp in (c for cs in registry.values() for c in cs):
        missing = sorted(comp.imports - seen)
        if missing:
            raise MissingImport(f"component {comp.id} imports {', '.join(missing)}, which is not in the language")
        for s in comp.construct.arg_sorts:
            if s in SORTS and s not in registry:
                raise BuildError(f"component {comp.id} needs sort {s}")
        for name in sorted(comp.mentioned):
            if name not in sig:
                raise EntityMismatch(f"component {comp.id} mentions entity {name!r}, absent from the signature")
            want = ENTITY_KINDS.get(name)
            have = sig.spec(name).kind
            if want is not None and have != want:
                raise EntityMismatch(f"component {comp.id} needs {name!r} to be {want}, signature has {have}")
    return Language(sig, registry, defn.seeds, sorts)


# --- traces -----------------------------------------------------------------

COMPLETED, STUCK, FUEL_EXHAUSTED = "completed", "stuck", "fuel_exhausted"


@dataclass
class Trace:
    initial: Objects
    transitions: list
    outcome: str
    final: Term

    @property
    def steps(self) -> int:
        return len(self.transitions)

    def composed_label(self) -> Label:
        lab = self.initial.identity()
        for tr in self.transitions:
            lab = compose(lab, tr.label)
        return lab

    def jsonl_lines(self) -> list:
        lines = []
        for n, tr in enumerate(self.transitions, 1):
            lines.append(_dumps({
                "step": n, "rule": tr.rule, "from": to_sexpr(tr.source),
                "to": to_sexpr(tr.target), "label": label_to_json(tr.label),
            }))
        lines.append(_dumps({
            "outcome": self.outcome, "final": to_sexpr(self.final), "steps": self.steps,
            "composed_label": label_to_json(self.composed_label()),
        }))
        return lines

    def to_jsonl(self) -> str:
        return "\n".join(self.jsonl_lines()) + "\n"


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def run_trace(lang: Language, t: Term, init=None, fuel: int = DEFAULT_FUEL, S=None) -> Trace:
    """Run ``t`` from ``init`` taking the unique transition at each step.

    Raises :class:`NondeterminismError` when a configuration has more than
    one transition.
    """
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    S = S or lang.global_step
    ctx = lang.objects(init)
    initial = ctx
    composed = ctx.identity()
    steps: list = []
    while True:
        trs = S(t, ctx)
        if not trs:
            outcome = COMPLETED if is_terminal(t) else STUCK
            return Trace(initial, steps, outcome, t)
        if len(trs) > 1:
            raise NondeterminismError(t, trs)
        if len(steps) >= fuel:
            return Trace(initial, steps, FUEL_EXHAUSTED, t)
        tr = trs[0]
        try:
            composed = compose(composed, tr.label)
        except CompositionError as exc:
            raise LabelDisciplineError(f"step {len(steps) + 1}: {exc}") from exc
        steps.append(tr)
        t = tr.target
        ctx = tr.label.target
