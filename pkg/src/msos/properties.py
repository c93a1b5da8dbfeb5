"""Meta-theory harness: determinism, admissibility and the label category laws.

Determinism is checked two ways over bounded enumerations.  The brute mode
computes the global step of every configuration as the union of all
globalized local steps and compares its transitions pairwise.  The modular
mode follows the admissibility reduction: the global step at a term is the
local step of the one component that built it, so determinism there follows
from that component's local certificate plus determinism of the proper
subterms its premises consulted.
"""
from __future__ import annotations

import gc
import itertools
import random
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .components import Axiom, Component, Transition
from .engine import Language, Trace, globalize, localize
from .labels import (
    READ_ONLY, READ_WRITE, RO, RW, STAR, WO, WRITE_ONLY, CompositionError, Label,
    LabelSignature, Objects, assemble, compose, compose_mentioned, compose_opaque,
    is_unobservable, label_to_json, project_mentioned, project_unmentioned,
)
from .sexpr import to_sexpr
from .terms import Construct, Term
from .values import BREAKING, Env, value_to_json

MODULAR, BRUTE, BOTH = "modular", "brute", "both"
MODES = (MODULAR, BRUTE, BOTH)

SEED_IDENTS = ("x", "y")
SEED_VALUES = (0, 1)


class HarnessMisuse(ValueError):
    """The caller compared transitions that do not share a source configuration."""


class HarnessSoundnessError(AssertionError):
    """Modular and brute-force checks disagreed. Signals a harness bug."""


@contextmanager
def _gc_paused():
    # the checks allocate millions of short-lived acyclic tuples; cyclic
    # collection passes only cost time here
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


# --- seed configurations ----------------------------------------------------

def seed_maps(idents=SEED_IDENTS, values=SEED_VALUES) -> list:
    """Every total map from ``idents`` to ``values``."""
    return [Env(zip(idents, vs)) for vs in itertools.product(values, repeat=len(idents))]


def seed_objects(sig: LabelSignature, idents=SEED_IDENTS, values=SEED_VALUES) -> list:
    """All source-object assignments built from :func:`seed_maps`; output is always ``*``."""
    maps = seed_maps(idents, values)
    pools = [(STAR,) if e.kind == WRITE_ONLY else maps for e in sig.entities]
    return [Objects(sig, combo) for combo in itertools.product(*pools)]


# --- determinism ------------------------------------------------------------

def det_pair_check(t1: Transition, t2: Transition) -> bool:
    """Whether two transitions from one configuration agree on target and label."""
    if t1.source is not t2.source or t1.label.source != t2.label.source:
        raise HarnessMisuse("transitions start from different configurations")
    return t1.target is t2.target and t1.label == t2.label


def _failing_pairs(trs) -> list:
    if len(trs) < 2:
        return []
    return [(a, b) for a, b in itertools.combinations(trs, 2) if not det_pair_check(a, b)]


def transition_to_json(tr: Transition) -> dict:
    return {"rule": tr.rule, "from": to_sexpr(tr.source), "to": to_sexpr(tr.target),
            "label": label_to_json(tr.label)}


@dataclass
class Counterexample:
    term: Term
    t1: Transition
    t2: Transition
    origin: str = ""  # modular mode: "local" (the component) or "inherited" (a subterm)

    def key(self) -> tuple:
        return (self.term, self.t1, self.t2)

    def to_json(self) -> dict:
        out = {"term": to_sexpr(self.term), "t1": transition_to_json(self.t1),
               "t2": transition_to_json(self.t2)}
        if self.origin:
            out["origin"] = self.origin
        return out


@dataclass
class DeterminismReport:
    mode: str
    sort: str
    depth: int
    terms_checked: int
    counterexamples: list = field(default_factory=list)
    configurations: int = 0
    component: str | None = None
    assumption_failures: int = 0  # local checks skipped because a subterm was nondeterministic

    @property
    def deterministic(self) -> bool:
        return not self.counterexamples

    def to_json(self) -> dict:
        out = {"mode": self.mode, "sort": self.sort, "depth": self.depth,
               "terms_checked": self.terms_checked,
               "counterexamples": [c.to_json() for c in self.counterexamples]}
        if self.component is not None:
            out["component"] = self.component
        return out


class _Oracle:
    """Memoized global step computed as the union of globalized local steps.

    ``local`` memoizes each component's local step at the terms it built;
    ``S`` is the handle given to premises.  Both are keyed by (term, objects).
    """

    def __init__(self, lang: Language):
        self.language = lang
        self.steps = {c.id: c.compiled for c in lang.components.values()}
        self.by_sort = {s: tuple((c.id, c.compiled) for c in cs) for s, cs in lang.registry.items()}
        self.local: dict = {}
        self.glob: dict = {}
        local, glob, by_sort = self.local, self.glob, self.by_sort

        def S(t: Term, ctx: Objects) -> tuple:
            key = (t, ctx)
            got = glob.get(key)
            if got is None:
                got = ()
                for cid, step in by_sort[t.sort]:
                    if t.cid == cid:  # globalize: every other construct contributes nothing
                        part = local.get(key)
                        if part is None:
                            part = local[key] = step(t, t.args, ctx, S)
                        got = got + part if got else part
                glob[key] = got
            return got

        S.language = lang
        self.S = S

    def local_step(self, t: Term, ctx: Objects) -> tuple:
        key = (t, ctx)
        got = self.local.get(key)
        if got is None:
            got = self.local[key] = self.steps[t.cid](t, t.args, ctx, self.S)
        return got

    def recording(self, failures: list):
        """``S`` that notes every queried subterm configuration that is nondeterministic."""
        S = self.S

        def R(t, ctx):
            trs = S(t, ctx)
            if len(trs) > 1 and _failing_pairs(trs):
                failures.append((t, ctx))
            return trs

        R.language = self.language
        return R

    def clear(self):
        self.local.clear()
        self.glob.clear()


def _check_sort(lang: Language, sort: str, depth: int) -> None:
    if sort not in lang.registry:
        raise ValueError(f"unknown sort {sort!r}; language has {', '.join(lang.registry)}")
    if depth < 0:
        raise ValueError("depth must be non-negative")


def check_global_determinism(lang: Language, sort: str, depth: int, mode: str = BOTH,
                             contexts: Iterable[Objects] | None = None,
                             observer: Callable | None = None,
                             terms: Iterable[Term] | None = None) -> DeterminismReport:
    """Determinism of the global step on every term of ``sort`` up to ``depth``.

    ``observer(term, ctx, transitions)``, if given, sees every checked
    configuration (used by the label-discipline audit).  ``terms`` replaces
    the enumeration by an explicit list, e.g. a sample for timing.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {', '.join(MODES)}")
    _check_sort(lang, sort, depth)
    ctxs = list(contexts) if contexts is not None else seed_objects(lang.signature)
    oracle = _Oracle(lang)
    modular = mode in (MODULAR, BOTH)
    brute = mode in (BRUTE, BOTH)
    mod_cx: list = []
    brute_cx: list = []
    with _gc_paused():
        terms = list(lang.enumerator.stream(sort, depth) if terms is None else terms)
        S = oracle.S
        steps, local = oracle.steps, oracle.local
        for ctx in ctxs:
            for t in terms:
                if modular:
                    # the global step at t reduces to the local step of the component that built t
                    key = (t, ctx)
                    trs = local.get(key)
                    if trs is None:
                        trs = local[key] = steps[t.cid](t, t.args, ctx, S)
                    if len(trs) > 1:
                        pairs = _failing_pairs(trs)
                        if pairs:
                            origin = _origin(oracle, t, ctx)
                            mod_cx.extend(Counterexample(t, a, b, origin) for a, b in pairs)
                if brute:
                    trs = S(t, ctx)
                    if len(trs) > 1:
                        brute_cx.extend(Counterexample(t, a, b) for a, b in _failing_pairs(trs))
                if observer is not None:
                    observer(t, ctx, S(t, ctx))
            oracle.clear()
    if mode == BOTH:
        mk = [c.key() for c in mod_cx]
        bk = [c.key() for c in brute_cx]
        if mk != bk:
            raise HarnessSoundnessError(
                f"modular found {len(mk)} counterexamples, brute force {len(bk)}; sets differ")
    found = mod_cx if modular else brute_cx
    return DeterminismReport(mode, sort, depth, len(terms), found, len(terms) * len(ctxs))


def _origin(oracle: _Oracle, t: Term, ctx: Objects) -> str:
    failures: list = []
    oracle.steps[t.cid](t, t.args, ctx, oracle.recording(failures))
    return "inherited" if failures else "local"


def check_local_determinism(comp: Component, lang: Language, depth: int,
                            contexts: Iterable[Objects] | None = None) -> DeterminismReport:
    """The component's local certificate on its own terms up to ``depth``.

    Configurations whose premises consulted a nondeterministic subterm are
    outside the hypothesis and are counted in ``assumption_failures``.
    """
    if lang.components.get(comp.id) is not comp:
        raise KeyError(f"component {comp.id} is not registered in the language")
    _check_sort(lang, comp.sort, depth)
    ctxs = list(contexts) if contexts is not None else seed_objects(lang.signature)
    oracle = _Oracle(lang)
    report = DeterminismReport("local", comp.sort, depth, 0, component=comp.id)
    with _gc_paused():
        terms = list(lang.enumerator.construct_terms(comp.construct, depth))
        report.terms_checked = len(terms)
        for ctx in ctxs:
            for t in terms:
                failures: list = []
                trs = comp.compiled(t, t.args, ctx, oracle.recording(failures))
                report.configurations += 1
                if failures:
                    report.assumption_failures += 1
                    continue
                report.counterexamples.extend(
                    Counterexample(t, a, b, "local") for a, b in _failing_pairs(trs))
            oracle.clear()
    return report


# --- admissibility ----------------------------------------------------------

@dataclass(frozen=True)
class PropertyCheck:
    """A configuration property ``predicate(step, term, objects) -> bool``."""

    name: str
    predicate: Callable


@dataclass
class AdmissibilityReport:
    name: str
    samples_checked: int = 0
    failures: list = field(default_factory=list)  # (construct id, term, objects)

    @property
    def holds(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"property": self.name, "samples_checked": self.samples_checked,
                "failures": [{"construct": c, "term": to_sexpr(t), "objects": objects_to_json(o)}
                             for c, t, o in self.failures]}


def objects_to_json(o: Objects) -> dict:
    return {e.name: value_to_json(x) for e, x in zip(o.signature.entities, o.objs)
            if e.kind != WRITE_ONLY}


DETERMINISM = PropertyCheck(
    "determinism", lambda S, t, ctx: not _failing_pairs(S(t, ctx)))


def _halts_within(S, t, ctx, limit):
    for _ in range(limit + 1):
        trs = S(t, ctx)
        if not trs:
            return True
        t, ctx = trs[0].target, trs[0].label.target
    return False


# "term has depth at most 2", estimated by counting steps to a configuration
# without transitions; not admissible because it looks past the construct
SHALLOW_RUN = PropertyCheck("shallow_run", lambda S, t, ctx: _halts_within(S, t, ctx, 2))


def configurations(lang: Language, sort: str, depth: int,
                   contexts: Iterable[Objects] | None = None) -> list:
    """``(construct, term, objects)`` samples for :func:`check_admissibility`."""
    ctxs = list(contexts) if contexts is not None else seed_objects(lang.signature)
    return [(lang.owner(t).construct, t, ctx)
            for t in lang.enumerator.stream(sort, depth) for ctx in ctxs]


def check_admissibility(prop: PropertyCheck, lang: Language, samples: Iterable) -> AdmissibilityReport:
    """Test ``P(globalize(localize(C, S)), C <- g) -> P(S, C <- g)`` on each sample."""
    S = lang.cached_step().step
    report = AdmissibilityReport(prop.name)
    restricted: dict = {}
    for c, t, ctx in samples:
        G = restricted.get(c.id)
        if G is None:
            G = restricted[c.id] = globalize(localize(c, S))
        if c.project(t) is None:
            raise ValueError(f"sample term {to_sexpr(t)} is not built by {c.id}")
        report.samples_checked += 1
        if prop.predicate(G, t, ctx) and not prop.predicate(S, t, ctx):
            report.failures.append((c.id, t, ctx))
    return report


# --- category laws ----------------------------------------------------------

LAW_NAMES = (
    "associativity", "left_identity", "right_identity", "definedness", "unobservability",
    "iso_assemble", "iso_project", "functor_mentioned", "functor_unmentioned", "functor_identity",
)

_RANDOM_IDENTS = ("x", "y", "z")
_RANDOM_VALUES = (0, 1, 2, True, False, BREAKING)


@dataclass
class LawsReport:
    samples: int
    seed: int
    checked: dict = field(default_factory=lambda: dict.fromkeys(LAW_NAMES, 0))
    failures: list = field(default_factory=list)  # (law, detail)

    @property
    def holds(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"samples": self.samples, "seed": self.seed, "checked": dict(self.checked),
                "failures": [{"law": law, "detail": d} for law, d in self.failures]}


class LabelSampler:
    """Pseudo-random objects and labels over a signature, reproducible from a seed."""

    def __init__(self, sig: LabelSignature, rng: random.Random):
        self.sig = sig
        self.rng = rng

    def env(self) -> Env:
        r = self.rng
        names = [n for n in _RANDOM_IDENTS if r.random() < 0.5]
        return Env({n: r.choice(_RANDOM_VALUES) for n in names})

    def objects(self) -> Objects:
        return Objects(self.sig, tuple(STAR if e.kind == WRITE_ONLY else self.env()
                                       for e in self.sig.entities))

    def label_from(self, src: Objects) -> Label:
        r = self.rng
        arrows = []
        for e, o in zip(self.sig.entities, src.objs):
            if e.kind == READ_ONLY:
                arrows.append(RO(o))
            elif e.kind == READ_WRITE:
                arrows.append(RW(o, o if r.random() < 0.3 else self.env()))
            else:
                arrows.append(WO(r.choice(_RANDOM_VALUES) for _ in range(r.choice((0, 0, 1, 2, 3)))))
        return Label(self.sig, tuple(arrows))

    def mentioned_set(self) -> frozenset:
        return frozenset(n for n in self.sig.names if self.rng.random() < 0.5)


def _composable_by_definition(a: Label, b: Label) -> bool:
    for x, y in zip(a.arrows, b.arrows):
        if type(x) is RO and x.obj != y.obj:
            return False
        if type(x) is RW and x.post != y.pre:
            return False
    return True


def check_category_laws(sig: LabelSignature, samples: int, seed: int = 0) -> LawsReport:
    """Category laws of the label category and the projection pair on random labels."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = random.Random(seed)
    gen = LabelSampler(sig, rng)
    rep = LawsReport(samples, seed)

    def law(name, ok, detail):
        rep.checked[name] += 1
        if not ok:
            rep.failures.append((name, detail() if callable(detail) else detail))

    for i in range(samples):
        a = gen.label_from(gen.objects())
        b = gen.label_from(a.target)
        c = gen.label_from(b.target)
        ab = compose(a, b)
        law("associativity", compose(ab, c) == compose(a, compose(b, c)),
            lambda: f"sample {i}: {a!r} {b!r} {c!r}")
        law("left_identity", compose(a.source.identity(), a) == a, lambda: f"sample {i}: {a!r}")
        law("right_identity", compose(a, a.target.identity()) == a, lambda: f"sample {i}: {a!r}")

        d = gen.label_from(gen.objects())
        try:
            compose(a, d)
            defined = True
        except CompositionError:
            defined = False
        law("definedness", defined == _composable_by_definition(a, d), lambda: f"sample {i}: {a!r} {d!r}")
        law("unobservability", is_unobservable(a) == (a == a.source.identity())
            and is_unobservable(a.source.identity()), lambda: f"sample {i}: {a!r}")

        m = gen.mentioned_set()
        pm, pu = project_mentioned(a, m), project_unmentioned(a, m)
        law("iso_assemble", assemble(pm, pu, sig) == a, lambda: f"sample {i}: {a!r} m={sorted(m)}")
        x, y = project_mentioned(d, m), project_unmentioned(c, m)
        both = assemble(x, y, sig)
        law("iso_project", project_mentioned(both, m) == x and project_unmentioned(both, m) == y,
            lambda: f"sample {i}: m={sorted(m)}")

        law("functor_mentioned",
            project_mentioned(ab, m) == compose_mentioned(pm, project_mentioned(b, m)),
            lambda: f"sample {i}: m={sorted(m)}")
        law("functor_unmentioned",
            project_unmentioned(ab, m) == compose_opaque(pu, project_unmentioned(b, m)),
            lambda: f"sample {i}: m={sorted(m)}")
        ida = a.source.identity()
        law("functor_identity",
            is_unobservable(project_mentioned(ida, m)) and is_unobservable(project_unmentioned(ida, m))
            and compose_mentioned(project_mentioned(ida, m), pm) == pm
            and compose_opaque(project_unmentioned(ida, m), pu) == pu,
            lambda: f"sample {i}: m={sorted(m)}")
    return rep


# --- label-discipline audit -------------------------------------------------

def audit_transition(lang: Language, tr: Transition) -> list:
    """Problems with one transition's label discipline; empty when it is sound.

    Unlabeled axioms must give the identity at the source; labeled axioms
    must leave the unmentioned part unobservable; premise rules must copy the
    opaque part of the premise label exactly and change at most mentioned
    arrows.
    """
    comp = lang.owner(tr.source)
    rule = comp.rule(tr.rule)
    if rule is None:
        return [f"{tr.rule}: not a rule of {comp.id}"]
    lab = tr.label
    src = lab.source
    m = comp.mentioned
    problems = []
    if isinstance(rule, Axiom):
        if tr.premise is not None:
            problems.append(f"{tr.rule}: axiom transition carries a premise")
        if rule.arrows is None:
            if lab is not src.identity() and not (is_unobservable(lab) and lab == src.identity()):
                problems.append(f"{tr.rule}: unlabeled rule produced an observable label")
        elif not is_unobservable(project_unmentioned(lab, m)):
            problems.append(f"{tr.rule}: unmentioned part is observable")
        return problems
    p = tr.premise
    if p is None:
        return [f"{tr.rule}: premise rule without a premise transition"]
    if lab is p.label:
        return problems
    if project_unmentioned(lab, m) != project_unmentioned(p.label, m):
        problems.append(f"{tr.rule}: opaque part differs from the premise's")
    if rule.premise_objects is None and rule.conclusion_arrows is None and lab != p.label:
        problems.append(f"{tr.rule}: pass-through rule changed the label")
    if tr.rule == "Exp.block/block_body":
        problems.extend(audit_block_body(tr))
    return problems


def audit_block_body(tr: Transition) -> list:
    """Extra checks for the block rule that runs its body in an extended environment."""
    problems = []
    p = tr.premise
    sig = tr.label.signature
    rho = "ρ"
    d = tr.source.args[0].args[0]
    rho0 = tr.label[rho].obj
    if p.label[rho].obj != rho0.update(d):
        problems.append("premise environment is not the update of the outer one")
    for n in sig.names:
        if n != rho and tr.label[n] != p.label[n]:
            problems.append(f"labels differ at {n!r}")
    return problems


def audit_trace(trace: Trace) -> list:
    """Composition failures between consecutive labels of a trace."""
    problems = []
    ctx = trace.initial
    for n, tr in enumerate(trace.transitions, 1):
        if tr.label.source != ctx:
            problems.append(f"step {n}: label source does not match the running configuration")
        ctx = tr.label.target
    try:
        trace.composed_label()
    except CompositionError as exc:
        problems.append(str(exc))
    return problems
