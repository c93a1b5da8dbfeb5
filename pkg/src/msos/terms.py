"""Sorted abstract syntax built from injection/projection pairs.

Every node records the id of the :class:`Construct` that built it, so a
construct's projection is a tag test and injection is node creation.  The
constructs of the shipped repository are declared at the bottom; their
semantics live in :mod:`msos.components`.
"""
from __future__ import annotations

import itertools
import re
import weakref
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .values import Env, Symbol, BREAKING, is_literal_value, value_key

CMD, EXP, DCL, PCD, PRM = "Cmd", "Exp", "Dcl", "Pcd", "Prm"
SORTS = (CMD, EXP, DCL, PCD, PRM)

# literal argument domains (leaves that are not terms)
VALUE, IDENT, ENVLIT = "value", "ident", "env"
LITERAL_DOMAINS = (VALUE, IDENT, ENVLIT)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class ConstructionError(Exception):
    pass


def _leaf_key(a):
    if type(a) is str:
        return ("id", a)
    return value_key(a)


class Term:
    """Immutable AST node. Build through :meth:`Construct.inject`.

    Terms are hash-consed: structurally equal terms are the same object, so
    equality and hashing are by identity.
    """

    __slots__ = ("cid", "sort", "args", "height", "__weakref__")

    def __new__(cls, cid: str, sort: str, args: tuple, height: int, all_terms: bool = False):
        key = (cid, args) if all_terms else (cid, tuple(
            a if type(a) is Term else _leaf_key(a) for a in args))
        ref = _TERMS_DATA.get(key)
        t = ref() if ref is not None else None
        if t is None:
            t = object.__new__(cls)
            t.cid = cid
            t.sort = sort
            t.args = args
            t.height = height
            _TERMS[key] = t
        return t

    def __reduce__(self):
        return (Term, (self.cid, self.sort, self.args, self.height))

    @property
    def name(self) -> str:
        return self.cid.split(".", 1)[1]

    def __repr__(self):
        from .sexpr import to_sexpr
        return f"Term({to_sexpr(self)})"

    def __str__(self):
        from .sexpr import to_sexpr
        return to_sexpr(self)


_TERMS: weakref.WeakValueDictionary = weakref.WeakValueDictionary()
_TERMS_DATA = _TERMS.data


@dataclass(frozen=True)
class Construct:
    """A named injection/projection pair between argument tuples and one sort."""

    id: str
    sort: str
    arg_sorts: tuple = ()
    term_positions: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.id.startswith(self.sort + "."):
            raise ConstructionError(f"construct id {self.id!r} must start with '{self.sort}.'")
        for s in self.arg_sorts:
            if s not in SORTS and s not in LITERAL_DOMAINS:
                raise ConstructionError(f"{self.id}: unknown argument sort {s!r}")
        object.__setattr__(self, "term_positions",
                           tuple(i for i, s in enumerate(self.arg_sorts) if s in SORTS))
        object.__setattr__(self, "_all_terms", len(self.term_positions) == len(self.arg_sorts))

    @property
    def name(self) -> str:
        return self.id.split(".", 1)[1]

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    def inject(self, args: Sequence = ()) -> Term:
        args = tuple(args)
        if len(args) != len(self.arg_sorts):
            raise ConstructionError(
                f"{self.id} takes {len(self.arg_sorts)} argument(s), got {len(args)}"
            )
        height = 0
        for i, (s, a) in enumerate(zip(self.arg_sorts, args)):
            if s in SORTS:
                if type(a) is not Term or a.sort != s:
                    raise ConstructionError(f"{self.id} argument {i}: expected {s} term, got {a!r}")
                if a.height > height:
                    height = a.height
            elif s == VALUE:
                if not is_literal_value(a):
                    raise ConstructionError(f"{self.id} argument {i}: expected literal value, got {a!r}")
            elif s == IDENT:
                if type(a) is not str or not _IDENT.match(a):
                    raise ConstructionError(f"{self.id} argument {i}: expected identifier, got {a!r}")
            elif type(a) is not Env:
                raise ConstructionError(f"{self.id} argument {i}: expected environment, got {a!r}")
        return Term(self.id, self.sort, args, height + 1, self._all_terms)

    def __call__(self, *args) -> Term:
        return self.inject(args)

    def project(self, t: Term):
        """The argument tuple if ``t`` was built by this construct, else ``None``."""
        if type(t) is Term and t.cid == self.id:
            return t.args
        return None

    def _make(self, args: tuple) -> Term:
        # unchecked injection for rule targets whose sorts are fixed by the rule pattern
        if self._all_terms:
            ref = _TERMS_DATA.get((self.id, args))
            if ref is not None:
                t = ref()
                if t is not None:
                    return t
        h = 0
        for i in self.term_positions:
            ch = args[i].height
            if ch > h:
                h = ch
        return Term(self.id, self.sort, args, h + 1, self._all_terms)


def inject(c: Construct, args: Sequence = ()) -> Term:
    return c.inject(args)


def project(c: Construct, t: Term):
    return c.project(t)


class RestrictedTerm:
    """A term together with the construct that built it (``C <- args``)."""

    __slots__ = ("construct", "args", "_term")

    def __init__(self, construct: Construct, args: tuple, term: Term | None = None):
        self.construct = construct
        self.args = tuple(args)
        self._term = term

    @property
    def term(self) -> Term:
        """The embedding into the full sort."""
        if self._term is None:
            self._term = self.construct.inject(self.args)
        return self._term

    def __eq__(self, other):
        return (type(other) is RestrictedTerm and self.construct == other.construct
                and self.term == other.term)

    def __hash__(self):
        return hash((self.construct.id, self.term))

    def __repr__(self):
        return f"{self.construct.name} <- {self.term}"


def restrict(c: Construct, t: Term) -> RestrictedTerm | None:
    args = c.project(t)
    if args is None:
        return None
    return RestrictedTerm(c, args, t)


# --- the repository grammar -------------------------------------------------

SKIP = Construct("Cmd.skip", CMD)
SEQ = Construct("Cmd.seq", CMD, (CMD, CMD))
COND = Construct("Cmd.cond", CMD, (EXP, CMD, CMD))
COND_LOOP = Construct("Cmd.cond_loop", CMD, (EXP, CMD))
CATCH = Construct("Cmd.catch", CMD, (CMD, PCD))
THROW = Construct("Cmd.throw", CMD, (EXP,))
THROWING = Construct("Cmd.throwing", CMD, (VALUE,))
ASSIGN = Construct("Cmd.assign", CMD, (IDENT, EXP))
EMIT = Construct("Cmd.emit", CMD, (EXP,))
ABS = Construct("Pcd.abs", PCD, (PRM, CMD))
EQ = Construct("Prm.eq", PRM, (EXP,))
LIT = Construct("Exp.lit", EXP, (VALUE,))
BLOCK = Construct("Exp.block", EXP, (DCL, EXP))
BOUNDID = Construct("Exp.boundid", EXP, (IDENT,))
DEREF = Construct("Exp.deref", EXP, (IDENT,))
ENV = Construct("Dcl.env", DCL, (ENVLIT,))
BIND = Construct("Dcl.bind", DCL, (IDENT, EXP))

REPOSITORY_CONSTRUCTS = (
    SKIP, SEQ, COND, COND_LOOP, CATCH, THROW, THROWING, ASSIGN, EMIT,
    ABS, EQ, LIT, BLOCK, BOUNDID, DEREF, ENV, BIND,
)

SKIP_TERM = SKIP.inject(())


def lit(v) -> Term:
    return LIT.inject((v,))


def is_value(t: Term) -> bool:
    """Computed-value forms: ``lit``, computed environments, ``eq(lit v)`` and
    ``abs`` over a value parameter. Commands have no value form."""
    cid = t.cid
    if cid == "Exp.lit" or cid == "Dcl.env":
        return True
    if cid == "Prm.eq":
        return t.args[0].cid == "Exp.lit"
    if cid == "Pcd.abs":
        return is_value(t.args[0])
    return False


def is_terminal(t: Term) -> bool:
    """Final configurations: values, normal completion ``skip``, abrupt ``throwing(v)``."""
    return t.cid == "Cmd.skip" or t.cid == "Cmd.throwing" or is_value(t)


# --- bounded enumeration ----------------------------------------------------

DEFAULT_SEEDS = {
    VALUE: (True, False, 0, 1, BREAKING),
    IDENT: ("x", "y"),
    ENVLIT: (Env({"x": 1}),),
}


class TermEnumerator:
    """Enumerates well-sorted terms by height, lowest first.

    Within one height, terms come in construct registration order, then in
    lexicographic order of argument positions. Literal leaves are drawn from
    ``seeds`` and do not add height.
    """

    def __init__(self, constructs: dict, seeds: dict | None = None):
        self.constructs = {s: tuple(cs) for s, cs in constructs.items()}
        self.seeds = dict(DEFAULT_SEEDS)
        if seeds:
            self.seeds.update({k: tuple(v) for k, v in seeds.items()})
        self._upto: dict[tuple, list] = {}

    def _choices(self, s: str, h: int):
        if s in LITERAL_DOMAINS:
            return self.seeds[s]
        return self.upto(s, h)

    def level(self, sort: str, h: int) -> Iterator[Term]:
        """Terms of ``sort`` with height exactly ``h``."""
        for c in self.constructs.get(sort, ()):
            yield from self.level_of(c, h)

    def level_of(self, c: Construct, h: int) -> Iterator[Term]:
        """Terms built by ``c`` with height exactly ``h``."""
        if h < 1:
            return
        pos = c.term_positions
        if not pos:
            if h == 1:
                for args in itertools.product(*(self.seeds[s] for s in c.arg_sorts)):
                    yield c._make(args)
            return
        if h == 1:
            return
        pools = [self._choices(s, h - 1) for s in c.arg_sorts]
        if any(len(p) == 0 for p in pools):
            return
        for args in itertools.product(*pools):
            if max(args[i].height for i in pos) == h - 1:
                yield c._make(args)

    def construct_terms(self, c: Construct, depth: int) -> Iterator[Term]:
        """Terms built by ``c`` with height at most ``depth``, lowest first."""
        for h in range(1, depth + 1):
            yield from self.level_of(c, h)

    def upto(self, sort: str, h: int) -> list:
        """Materialized list of terms of ``sort`` with height at most ``h``."""
        if h < 1:
            return []
        key = (sort, h)
        got = self._upto.get(key)
        if got is None:
            got = self.upto(sort, h - 1) + list(self.level(sort, h))
            self._upto[key] = got
        return got

    def stream(self, sort: str, depth: int) -> Iterator[Term]:
        for h in range(1, depth + 1):
            if h < depth:
                yield from self.upto(sort, h)[len(self.upto(sort, h - 1)):]
            else:
                yield from self.level(sort, h)

    def count(self, sort: str, depth: int) -> int:
        """Number of terms of height at most ``depth``, by recurrence (no enumeration)."""
        memo: dict = {}

        def upto(s, h):
            if s in LITERAL_DOMAINS:
                return len(self.seeds[s])
            if h < 1:
                return 0
            if (s, h) not in memo:
                total = 0
                for c in self.constructs.get(s, ()):
                    if not c.term_positions:
                        n = 1
                        for a in c.arg_sorts:
                            n *= len(self.seeds[a])
                        total += n
                        continue
                    n = 1
                    for a in c.arg_sorts:
                        n *= upto(a, h - 1)
                    total += n
                memo[(s, h)] = total
            return memo[(s, h)]

        return upto(sort, depth)


def enumerate_terms(sort: str, depth: int, lang) -> Iterator[Term]:
    """Every term of ``sort`` in ``lang`` with height at most ``depth``, each once."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return lang.enumerator.stream(sort, depth)
