"""S-expression concrete syntax for terms.

Grammar::

    term    ::= '(' name arg* ')'
    arg     ::= term | atom | binding
    binding ::= '(' ident atom ')'          ; only inside (env ...)
    atom    ::= integer | 'true' | 'false' | 'unit' | symbol

``;`` starts a comment running to end of line.  ``(while E C)`` and
``(break)`` are accepted as sugar and desugared on the way in.
"""
from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    ENVLIT, IDENT, REPOSITORY_CONSTRUCTS, SORTS, VALUE,
    Construct, ConstructionError, Term,
)
from .values import Env, format_value, parse_literal


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {msg}")


@dataclass
class Atom:
    text: str
    line: int
    col: int


@dataclass
class SList:
    items: list
    line: int
    col: int


def read(text: str) -> list:
    """Read all top-level forms."""
    stack: list[SList] = [SList([], 1, 1)]
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "(":
            stack.append(SList([], line, col))
            i += 1
            col += 1
            continue
        if ch == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].items.append(done)
            i += 1
            col += 1
            continue
        start_col = col
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        stack[-1].items.append(Atom(text[i:j], line, start_col))
        col += j - i
        i = j
    if len(stack) != 1:
        open_ = stack[-1]
        raise ParseError("unclosed '('", open_.line, open_.col)
    return stack[0].items


class TermReader:
    """Converts read forms to terms over a given set of constructs."""

    def __init__(self, constructs=REPOSITORY_CONSTRUCTS):
        self.by_name: dict[str, Construct] = {}
        for c in constructs:
            self.by_name.setdefault(c.name, c)

    def term(self, form, sort: str | None = None) -> Term:
        if isinstance(form, Atom):
            raise ParseError(f"expected a term, got atom {form.text!r}", form.line, form.col)
        if not form.items or not isinstance(form.items[0], Atom):
            raise ParseError("expected (name args...)", form.line, form.col)
        head = form.items[0]
        name = head.text.replace("-", "_")
        if name in ("while", "break"):
            t = self._sugar(name, form)
        else:
            c = self.by_name.get(name)
            if c is None:
                raise ParseError(f"unknown construct {head.text!r}", head.line, head.col)
            t = self._construct(c, form)
        if sort is not None and t.sort != sort:
            raise ParseError(f"expected {sort}, got {t.sort} term {head.text!r}", form.line, form.col)
        return t

    def _construct(self, c: Construct, form: SList) -> Term:
        rest = form.items[1:]
        if c.arg_sorts == (ENVLIT,):
            return self._inject(c, (self._env(rest, form),), form)
        if len(rest) != len(c.arg_sorts):
            raise ParseError(f"{c.name} takes {len(c.arg_sorts)} argument(s), got {len(rest)}",
                             form.line, form.col)
        args = []
        for s, f in zip(c.arg_sorts, rest):
            if s in SORTS:
                args.append(self.term(f, s))
            elif s == VALUE:
                args.append(self._literal(f))
            elif s == IDENT:
                if not isinstance(f, Atom):
                    raise ParseError("expected identifier", f.line, f.col)
                args.append(f.text)
            else:
                raise ParseError("environment literal expected", f.line, f.col)
        return self._inject(c, args, form)

    def _inject(self, c, args, form):
        try:
            return c.inject(args)
        except ConstructionError as exc:
            raise ParseError(str(exc), form.line, form.col) from None

    def _literal(self, f):
        if not isinstance(f, Atom):
            raise ParseError("expected literal atom", f.line, f.col)
        try:
            return parse_literal(f.text)
        except ValueError as exc:
            raise ParseError(str(exc), f.line, f.col) from None

    def _env(self, items, form) -> Env:
        d = {}
        for b in items:
            if not (isinstance(b, SList) and len(b.items) == 2 and isinstance(b.items[0], Atom)):
                raise ParseError("expected (ident value) binding", b.line, b.col)
            d[b.items[0].text] = self._literal(b.items[1])
        return Env(d)

    def _sugar(self, name, form):
        from .components import desugar_break, desugar_while_break

        rest = form.items[1:]
        if name == "break":
            if rest:
                raise ParseError("break takes no arguments", form.line, form.col)
            return desugar_break()
        if len(rest) != 2:
            raise ParseError("while takes a condition and a body", form.line, form.col)
        return desugar_while_break(self.term(rest[0], "Exp"), self.term(rest[1], "Cmd"))


def parse_term(text: str, constructs=REPOSITORY_CONSTRUCTS, sort: str | None = None) -> Term:
    forms = read(text)
    if len(forms) != 1:
        line, col = (forms[1].line, forms[1].col) if len(forms) > 1 else (1, 1)
        raise ParseError(f"expected exactly one term, found {len(forms)}", line, col)
    return TermReader(constructs).term(forms[0], sort)


def _leaf(a) -> str:
    if type(a) is str:
        return a
    return format_value(a)


def to_sexpr(t: Term) -> str:
    name = t.cid.split(".", 1)[1]
    parts = [name]
    for a in t.args:
        if type(a) is Term:
            parts.append(to_sexpr(a))
        elif type(a) is Env:
            parts.extend(f"({k} {format_value(v)})" for k, v in a.items())
        else:
            parts.append(_leaf(a))
    return "(" + " ".join(parts) + ")"

