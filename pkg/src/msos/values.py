"""Computed values: integers, booleans, symbols, environment maps and unit.

Python treats ``True == 1``; the semantics does not, so every comparison of
values goes through :func:`value_key`, which tags each value with its kind.
"""
from __future__ import annotations

import re
import weakref
from collections.abc import Mapping


class Symbol:
    """An interned bare name such as ``breaking``."""

    __slots__ = ("name",)
    _table: dict[str, "Symbol"] = {}

    def __new__(cls, name: str) -> "Symbol":
        sym = cls._table.get(name)
        if sym is None:
            sym = object.__new__(cls)
            sym.name = name
            cls._table[name] = sym
        return sym

    def __reduce__(self):
        return (Symbol, (self.name,))

    def __repr__(self) -> str:
        return f"Symbol({self.name!r})"

    def __str__(self) -> str:
        return self.name


class _Unit:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = object.__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNIT"


UNIT = _Unit()
BREAKING = Symbol("breaking")


def value_key(v):
    """Hashable canonical key distinguishing value kinds (``True`` is not ``1``)."""
    if v is True or v is False:
        return ("b", v)
    if type(v) is int:
        return ("i", v)
    if type(v) is Symbol:
        return ("s", v.name)
    if type(v) is Env:
        return v
    if v is UNIT:
        return ("u",)
    raise TypeError(f"not a value: {v!r}")


def is_literal_value(v) -> bool:
    return v is True or v is False or type(v) in (int, Symbol) or v is UNIT


def is_value_object(v) -> bool:
    return is_literal_value(v) or type(v) is Env


def same_value(a, b) -> bool:
    return a is b or value_key(a) == value_key(b)


class Env(Mapping):
    """Immutable finite map from identifiers to values.

    Used for environments (read-only) and stores (read-write).  Instances
    are hash-consed, so two maps binding the same names to the same values
    are the same object and compare by identity.
    """

    __slots__ = ("_items", "_dict", "_key", "__weakref__")

    def __new__(cls, bindings=()):
        d = dict(bindings)
        for k, v in d.items():
            if not isinstance(k, str):
                raise TypeError(f"identifier expected, got {k!r}")
            if not is_value_object(v):
                raise TypeError(f"not a value: {v!r}")
        items = tuple(sorted(d.items()))
        key = ("e", tuple((k, value_key(v)) for k, v in items))
        ref = _ENVS_DATA.get(key)
        env = ref() if ref is not None else None
        if env is None:
            env = object.__new__(cls)
            env._items = items
            env._dict = d
            env._key = key
            _ENVS[key] = env
        return env

    __eq__ = object.__eq__
    __ne__ = object.__ne__
    __hash__ = object.__hash__

    def __getitem__(self, name):
        return self._dict[name]

    def __contains__(self, name):
        return name in self._dict

    def __iter__(self):
        return (k for k, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __reduce__(self):
        return (Env, (self._items,))

    def __repr__(self):
        inner = ", ".join(f"{k}: {format_value(v)}" for k, v in self._items)
        return "{" + inner + "}"

    def set(self, name: str, value) -> "Env":
        d = dict(self._dict)
        d[name] = value
        return Env(d)

    def update(self, other: Mapping) -> "Env":
        """Right-biased union: bindings of ``other`` win."""
        d = dict(self._dict)
        d.update(other)
        return Env(d)


_ENVS: weakref.WeakValueDictionary = weakref.WeakValueDictionary()
_ENVS_DATA = _ENVS.data

EMPTY_ENV = Env()

_INT = re.compile(r"[+-]?\d+\Z")
_SYMBOL = re.compile(r"[A-Za-z_][A-Za-z0-9_\-']*\Z")


def parse_literal(text: str):
    """Parse the literal grammar: integers, ``true``/``false``, ``unit``, bare symbols."""
    if _INT.match(text):
        return int(text)
    if text == "true":
        return True
    if text == "false":
        return False
    if text == "unit":
        return UNIT
    if _SYMBOL.match(text):
        return Symbol(text)
    raise ValueError(f"not a literal: {text!r}")


def format_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if v is UNIT:
        return "unit"
    if type(v) in (int, Symbol):
        return str(v)
    if type(v) is Env:
        return repr(v)
    raise TypeError(f"not a value: {v!r}")


def value_to_json(v):
    if v is UNIT:
        return None
    if type(v) is Symbol:
        return v.name
    if type(v) is Env:
        return {k: value_to_json(x) for k, x in v.items()}
    if v is True or v is False or type(v) is int:
        return v
    raise TypeError(f"not a value: {v!r}")


def value_from_json(j):
    if j is None:
        return UNIT
    if isinstance(j, bool) or isinstance(j, int):
        return j
    if isinstance(j, str):
        return Symbol(j)
    if isinstance(j, dict):
        return Env({k: value_from_json(x) for k, x in j.items()})
    raise ValueError(f"cannot decode value from {j!r}")
