"""Label categories built as products of per-entity categories.

Each entity is read-only (discrete category: only identities), read-write
(codiscrete pre-order: one arrow between any two objects) or write-only
(single object ``*`` whose arrows are emission lists under concatenation).
A :class:`Label` holds one arrow per entity of its :class:`LabelSignature`.

Components see labels only through the projection pair
:func:`project_mentioned` / :func:`project_unmentioned`; the unmentioned
part is an :class:`OpaqueLabel` that supports nothing but equality and
:func:`is_unobservable`.
"""
from __future__ import annotations

import weakref
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .values import Env, is_value_object, value_from_json, value_key, value_to_json

READ_ONLY = "read_only"
READ_WRITE = "read_write"
WRITE_ONLY = "write_only"
KINDS = (READ_ONLY, READ_WRITE, WRITE_ONLY)

MAP_DOMAINS = ("env", "store", "map")
OUTPUT_DOMAINS = ("output",)


class LabelError(Exception):
    pass


class SignatureMismatch(LabelError):
    pass


class CompositionError(LabelError):
    def __init__(self, entity: str, detail: str = ""):
        self.entity = entity
        super().__init__(f"labels not composable at entity {entity!r}" + (f": {detail}" if detail else ""))


class _Star:
    __slots__ = ()

    def __repr__(self):
        return "*"


STAR = _Star()


@dataclass(frozen=True)
class EntitySpec:
    name: str
    kind: str
    domain: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SignatureMismatch(f"unknown entity kind {self.kind!r} for {self.name!r}")
        allowed = OUTPUT_DOMAINS if self.kind == WRITE_ONLY else MAP_DOMAINS
        if self.domain not in allowed:
            raise SignatureMismatch(
                f"entity {self.name!r}: domain {self.domain!r} does not suit kind {self.kind}"
            )


def entity(name: str, kind: str, domain: str | None = None) -> EntitySpec:
    if domain is None:
        domain = {READ_ONLY: "env", READ_WRITE: "store", WRITE_ONLY: "output"}.get(kind, "map")
    return EntitySpec(name, kind, domain)


_OBJECT_TABLES: dict = {}


class LabelSignature:
    """Ordered entity declarations; the order is the canonical arrow order."""

    __slots__ = ("entities", "names", "index", "_hash", "_objects")

    def __init__(self, entities: Iterable[EntitySpec] = ()):
        self.entities = tuple(entities)
        self.names = tuple(e.name for e in self.entities)
        if len(set(self.names)) != len(self.names):
            raise SignatureMismatch(f"duplicate entity names in {self.names}")
        self.index = {n: i for i, n in enumerate(self.names)}
        self._hash = hash(self.entities)
        # shared by equal signatures so interned objects stay comparable by identity
        self._objects = _OBJECT_TABLES.setdefault(self.entities, weakref.WeakValueDictionary())

    def __eq__(self, other):
        return self is other or (type(other) is LabelSignature and self.entities == other.entities)

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.entities)

    def __iter__(self):
        return iter(self.entities)

    def __contains__(self, name):
        return name in self.index

    def __repr__(self):
        return "LabelSignature(" + ", ".join(f"{e.name}:{e.kind}" for e in self.entities) + ")"

    def spec(self, name: str) -> EntitySpec:
        try:
            return self.entities[self.index[name]]
        except KeyError:
            raise SignatureMismatch(f"unknown entity {name!r}") from None

    def check_names(self, names: Iterable[str]) -> frozenset:
        names = frozenset(names)
        unknown = sorted(n for n in names if n not in self.index)
        if unknown:
            raise SignatureMismatch(f"unknown entities {unknown} for {self!r}")
        return names


# --- arrows -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class RO:
    obj: Env

    @property
    def source(self):
        return self.obj

    target = source


@dataclass(frozen=True, slots=True)
class RW:
    pre: Env
    post: Env

    @property
    def source(self):
        return self.pre

    @property
    def target(self):
        return self.post


class WO:
    """Write-only arrow ``* -> *``: the list of emitted values."""

    __slots__ = ("emitted", "_key")

    def __init__(self, emitted=()):
        self.emitted = tuple(emitted)
        self._key = tuple(value_key(v) for v in self.emitted)

    source = property(lambda self: STAR)
    target = source

    def __eq__(self, other):
        return type(other) is WO and self._key == other._key

    def __hash__(self):
        return hash(("wo", self._key))

    def __repr__(self):
        return f"WO({list(self.emitted)!r})"


EMPTY_WO = WO()
_ARROW_TYPE = {READ_ONLY: RO, READ_WRITE: RW, WRITE_ONLY: WO}


def _compose_arrow(name: str, a, b):
    t = type(a)
    if t is RO:
        if a.obj != b.obj:
            raise CompositionError(name, "read-only objects differ")
        return a
    if t is RW:
        if a.post != b.pre:
            raise CompositionError(name, "post of first differs from pre of second")
        return RW(a.pre, b.post)
    if not a.emitted:
        return b
    if not b.emitted:
        return a
    return WO(a.emitted + b.emitted)


def _identity_arrow(kind: str, obj):
    if kind == READ_ONLY:
        return RO(obj)
    if kind == READ_WRITE:
        return RW(obj, obj)
    return EMPTY_WO


def _arrow_is_identity(a) -> bool:
    t = type(a)
    if t is RO:
        return True
    if t is RW:
        return a.pre == a.post
    return not a.emitted


# --- objects ----------------------------------------------------------------

def _coerce_object(spec: EntitySpec, obj):
    if spec.kind == WRITE_ONLY:
        return STAR
    if isinstance(obj, Env):
        return obj
    if isinstance(obj, Mapping):
        try:
            return Env(obj)
        except TypeError as exc:
            raise SignatureMismatch(f"entity {spec.name!r}: {exc}") from None
    raise SignatureMismatch(f"entity {spec.name!r} expects a finite map, got {obj!r}")


class Objects:
    """One object per entity of a signature: a source (or target) of labels.

    Write-only entities always carry ``*``.  Hash-consed per signature, so
    equality is identity.
    """

    __slots__ = ("signature", "objs", "_identity", "_splits", "__weakref__")

    def __new__(cls, signature: LabelSignature, objs: tuple):
        table = signature._objects
        ref = table.data.get(objs)
        o = ref() if ref is not None else None
        if o is None:
            o = object.__new__(cls)
            o.signature = signature
            o.objs = objs
            o._identity = None
            o._splits = None
            table[objs] = o
        return o

    @classmethod
    def of(cls, signature: LabelSignature, objects: Mapping | None = None) -> "Objects":
        objects = dict(objects or {})
        extra = set(objects) - set(signature.names)
        if extra:
            raise SignatureMismatch(f"objects given for unknown entities {sorted(extra)}")
        objs = []
        for spec in signature:
            if spec.kind == WRITE_ONLY:
                objs.append(STAR)
            elif spec.name not in objects:
                raise SignatureMismatch(f"missing object for entity {spec.name!r}")
            else:
                objs.append(_coerce_object(spec, objects[spec.name]))
        return cls(signature, tuple(objs))

    def __reduce__(self):
        return (Objects, (self.signature, self.objs))

    def __getitem__(self, name):
        return self.objs[self.signature.index[name]]

    def as_dict(self) -> dict:
        return {e.name: o for e, o in zip(self.signature.entities, self.objs) if e.kind != WRITE_ONLY}

    def split(self, m: frozenset) -> tuple:
        """Cached :func:`split_objects`; callers must not mutate the dict."""
        splits = self._splits
        if splits is None:
            splits = self._splits = {}
        got = splits.get(m)
        if got is None:
            got = splits[m] = split_objects(self, m)
        return got

    def identity(self) -> "Label":
        lab = self._identity
        if lab is None:
            lab = Label(self.signature, tuple(
                _identity_arrow(e.kind, o) for e, o in zip(self.signature.entities, self.objs)
            ))
            self._identity = lab
        return lab

    def __repr__(self):
        return f"Objects({self.as_dict()!r})"


class Label:
    __slots__ = ("signature", "arrows", "_hash")

    def __init__(self, signature: LabelSignature, arrows: tuple):
        if len(arrows) != len(signature.entities):
            raise SignatureMismatch(f"{len(arrows)} arrows for {len(signature.entities)} entities")
        for e, a in zip(signature.entities, arrows):
            if type(a) is not _ARROW_TYPE[e.kind]:
                raise SignatureMismatch(f"entity {e.name!r} is {e.kind}, got {a!r}")
        self.signature = signature
        self.arrows = arrows
        self._hash = None

    def __eq__(self, other):
        return self is other or (
            type(other) is Label and self.signature == other.signature and self.arrows == other.arrows
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.signature, self.arrows))
        return self._hash

    def __getitem__(self, name):
        return self.arrows[self.signature.index[name]]

    @property
    def source(self) -> Objects:
        return Objects(self.signature, tuple(a.source for a in self.arrows))

    @property
    def target(self) -> Objects:
        return Objects(self.signature, tuple(a.target for a in self.arrows))

    def __repr__(self):
        return f"Label({label_to_json(self)!r})"


@dataclass(frozen=True)
class MentionedLabel:
    """Transparent part of a label: arrows of the mentioned entities, in canonical order."""

    names: tuple
    arrows: tuple

    def __getitem__(self, name):
        try:
            return self.arrows[self.names.index(name)]
        except ValueError:
            raise SignatureMismatch(f"entity {name!r} not mentioned") from None

    def __len__(self):
        return len(self.names)


class OpaqueLabel:
    """Unmentioned part of a label.

    Supports equality and :func:`is_unobservable` only; the arrows are kept
    private so that component rules cannot branch on them.
    """

    __slots__ = ("_names", "_arrows")

    def __init__(self, names: tuple, arrows: tuple):
        self._names = names
        self._arrows = arrows

    def __eq__(self, other):
        return type(other) is OpaqueLabel and self._names == other._names and self._arrows == other._arrows

    def __hash__(self):
        return hash((self._names, self._arrows))

    def __repr__(self):
        return f"OpaqueLabel(<{len(self._names)} entities>)"


# --- operations -------------------------------------------------------------

def identity_label(sig: LabelSignature, objects: Mapping | Objects | None = None) -> Label:
    if isinstance(objects, Objects):
        if objects.signature != sig:
            raise SignatureMismatch("objects belong to a different signature")
        return objects.identity()
    return Objects.of(sig, objects).identity()


def compose(a: Label, b: Label) -> Label:
    """``a`` then ``b``; raises :class:`CompositionError` naming the first offending entity."""
    if a.signature != b.signature:
        raise SignatureMismatch("cannot compose labels over different signatures")
    names = a.signature.names
    return Label(a.signature, tuple(
        _compose_arrow(n, x, y) for n, x, y in zip(names, a.arrows, b.arrows)
    ))


def compose_mentioned(a: MentionedLabel, b: MentionedLabel) -> MentionedLabel:
    """Composition in the image of the mentioned projection."""
    if a.names != b.names:
        raise SignatureMismatch("mentioned parts over different entity sets")
    return MentionedLabel(a.names, tuple(_compose_arrow(n, x, y) for n, x, y in zip(a.names, a.arrows, b.arrows)))


def compose_opaque(a: OpaqueLabel, b: OpaqueLabel) -> OpaqueLabel:
    """Composition in the image of the unmentioned projection."""
    if a._names != b._names:
        raise SignatureMismatch("opaque parts over different entity sets")
    return OpaqueLabel(a._names, tuple(_compose_arrow(n, x, y) for n, x, y in zip(a._names, a._arrows, b._arrows)))


def composable(a: Label, b: Label) -> bool:
    try:
        compose(a, b)
    except CompositionError:
        return False
    return True


def is_unobservable(lab: Label | OpaqueLabel | MentionedLabel) -> bool:
    arrows = lab._arrows if type(lab) is OpaqueLabel else lab.arrows
    return all(_arrow_is_identity(a) for a in arrows)


def project_mentioned(lab: Label, m: Iterable[str]) -> MentionedLabel:
    sig = lab.signature
    m = sig.check_names(m)
    names = tuple(n for n in sig.names if n in m)
    return MentionedLabel(names, tuple(lab.arrows[sig.index[n]] for n in names))


def project_unmentioned(lab: Label, m: Iterable[str]) -> OpaqueLabel:
    sig = lab.signature
    m = sig.check_names(m)
    names = tuple(n for n in sig.names if n not in m)
    return OpaqueLabel(names, tuple(lab.arrows[sig.index[n]] for n in names))


def assemble(ml: MentionedLabel, u: OpaqueLabel, sig: LabelSignature) -> Label:
    """Inverse of the projection pair: rebuild the full label."""
    if set(ml.names) & set(u._names) or len(ml.names) + len(u._names) != len(sig):
        raise SignatureMismatch("mentioned and opaque parts do not tile the signature")
    by_name = dict(zip(ml.names, ml.arrows))
    by_name.update(zip(u._names, u._arrows))
    try:
        arrows = tuple(by_name[n] for n in sig.names)
    except KeyError as exc:
        raise SignatureMismatch(f"entity {exc.args[0]!r} missing from parts") from None
    m = set(ml.names)
    if ml.names != tuple(n for n in sig.names if n in m):
        raise SignatureMismatch("mentioned part is not in canonical order")
    return Label(sig, arrows)


def mentioned_label(sig: LabelSignature, arrows: Mapping) -> MentionedLabel:
    """Build a :class:`MentionedLabel` from ``{name: arrow}``, checking kinds."""
    sig.check_names(arrows)
    names = tuple(n for n in sig.names if n in arrows)
    for n in names:
        kind = sig.spec(n).kind
        if type(arrows[n]) is not _ARROW_TYPE[kind]:
            raise SignatureMismatch(f"entity {n!r} is {kind}, got {arrows[n]!r}")
    return MentionedLabel(names, tuple(arrows[n] for n in names))


# object-level counterpart of the projection pair, used to hand rules their
# mentioned source objects while keeping the rest opaque

class OpaqueObjects:
    __slots__ = ("_names", "_objs")

    def __init__(self, names, objs):
        self._names = names
        self._objs = objs

    def __eq__(self, other):
        return type(other) is OpaqueObjects and self._names == other._names and self._objs == other._objs

    def __hash__(self):
        return hash((self._names, self._objs))


def split_objects(objs: Objects, m: frozenset) -> tuple[dict, OpaqueObjects]:
    sig = objs.signature
    mentioned = {}
    names, rest = [], []
    for e, o in zip(sig.entities, objs.objs):
        if e.name in m:
            mentioned[e.name] = o
        else:
            names.append(e.name)
            rest.append(o)
    return mentioned, OpaqueObjects(tuple(names), tuple(rest))


def join_objects(mentioned: Mapping, u: OpaqueObjects, sig: LabelSignature) -> Objects:
    by_name = dict(zip(u._names, u._objs))
    out = []
    for e in sig.entities:
        if e.name in mentioned:
            out.append(STAR if e.kind == WRITE_ONLY else _coerce_object(e, mentioned[e.name]))
        else:
            out.append(by_name[e.name])
    return Objects(sig, tuple(out))


def opaque_identity(u: OpaqueObjects, sig: LabelSignature) -> OpaqueLabel:
    """Identity arrows at the opaque source objects (the unobservable rest)."""
    return OpaqueLabel(u._names, tuple(
        _identity_arrow(sig.spec(n).kind, o) for n, o in zip(u._names, u._objs)
    ))


# --- JSON -------------------------------------------------------------------

def _obj_json(o):
    return value_to_json(o)


def label_to_json(lab: Label) -> dict:
    out = {}
    for e, a in zip(lab.signature.entities, lab.arrows):
        if e.kind == READ_ONLY:
            out[e.name] = _obj_json(a.obj)
        elif e.kind == READ_WRITE:
            out[e.name] = {"pre": _obj_json(a.pre), "post": _obj_json(a.post)}
        else:
            out[e.name] = [value_to_json(v) for v in a.emitted]
    return out


def label_from_json(sig: LabelSignature, data: Mapping) -> Label:
    if list(data) != list(sig.names):
        raise SignatureMismatch(f"label entities {list(data)} do not match {list(sig.names)}")
    arrows = []
    for e in sig.entities:
        d = data[e.name]
        if e.kind == READ_ONLY:
            arrows.append(RO(_coerce_object(e, value_from_json(d))))
        elif e.kind == READ_WRITE:
            arrows.append(RW(_coerce_object(e, value_from_json(d["pre"])),
                             _coerce_object(e, value_from_json(d["post"]))))
        else:
            arrows.append(WO(value_from_json(v) for v in d))
    return Label(sig, tuple(arrows))


def check_arrow_values(lab: Label) -> None:
    for e, a in zip(lab.signature.entities, lab.arrows):
        if type(a) is WO and not all(is_value_object(v) for v in a.emitted):
            raise SignatureMismatch(f"entity {e.name!r} emitted a non-value")
