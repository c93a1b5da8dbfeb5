"""Command-line front end.

Exit codes
  run / trace   0 completed, 1 parse or build error, 2 stuck,
                3 fuel exhausted, 4 nondeterminism
  check         0 no counterexamples or law failures, 5 counterexamples,
                1 invalid arguments or language file

Set MSOS_COLOR=0 to disable ANSI colour.  Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .components import FIXTURES, REPOSITORY, RHO, SIGMA
from .engine import (
    COMPLETED, DEFAULT_FUEL, FUEL_EXHAUSTED, STUCK, BuildError, Language, LanguageDefinition,
    NondeterminismError, build_language, run_trace,
)
from .labels import KINDS, LabelError, LabelSignature, entity, label_to_json
from .properties import MODES, check_category_laws, check_global_determinism
from .sexpr import ParseError, to_sexpr
from .terms import LITERAL_DOMAINS, SORTS
from .values import Env, parse_literal, value_from_json

EXIT_OK, EXIT_ERROR, EXIT_STUCK, EXIT_FUEL, EXIT_NONDET, EXIT_COUNTEREXAMPLES = 0, 1, 2, 3, 4, 5
OUTCOME_EXIT = {COMPLETED: EXIT_OK, STUCK: EXIT_STUCK, FUEL_EXHAUSTED: EXIT_FUEL}

DEFAULT_LAW_SIGNATURE = (entity(RHO, "read_only", "env"), entity(SIGMA, "read_write", "store"),
                         entity("out", "write_only", "output"))


class DefinitionError(Exception):
    pass


# --- language definition files ----------------------------------------------

_TOP_KEYS = {"language", "entities", "components", "seeds"}
_LANGUAGE_KEYS = {"name", "sorts"}
_ENTITY_KEYS = {"name", "kind", "domain"}


def _reject_unknown(where: str, got: Mapping, allowed: set) -> None:
    extra = sorted(set(got) - allowed)
    if extra:
        raise DefinitionError(f"{where}: unknown key(s) {', '.join(extra)}")


def _seed_value(v):
    if isinstance(v, dict):
        return Env({k: value_from_json(x) for k, x in v.items()})
    return value_from_json(v)


def definition_from_toml(data: Mapping) -> LanguageDefinition:
    """Validate a parsed language file and turn it into a build input."""
    _reject_unknown("language file", data, _TOP_KEYS)
    meta = data.get("language", {})
    _reject_unknown("[language]", meta, _LANGUAGE_KEYS)
    entities = []
    for i, e in enumerate(data.get("entities", [])):
        _reject_unknown(f"entities[{i}]", e, _ENTITY_KEYS)
        if "name" not in e or "kind" not in e:
            raise DefinitionError(f"entities[{i}]: name and kind are required")
        if e["kind"] not in KINDS:
            raise DefinitionError(f"entities[{i}]: kind must be one of {', '.join(KINDS)}")
        entities.append(entity(e["name"], e["kind"], e.get("domain")))
    components = data.get("components")
    if not isinstance(components, dict) or not components:
        raise DefinitionError("[components] must map sorts to lists of component ids")
    sorts = list(meta.get("sorts", components))
    for s in sorts:
        if s not in SORTS:
            raise DefinitionError(f"unknown sort {s!r}")
    seeds = {}
    for k, vs in data.get("seeds", {}).items():
        if k not in LITERAL_DOMAINS:
            raise DefinitionError(f"[seeds]: unknown domain {k!r}")
        seeds[k] = tuple(str(v) for v in vs) if k == "ident" else tuple(_seed_value(v) for v in vs)
    return LanguageDefinition(entities, {s: list(ids) for s, ids in components.items()}, sorts, seeds)


def builtin_language_path(name: str) -> Path | None:
    stem = name[:-5] if name.endswith(".toml") else name
    ref = resources.files("msos") / "languages" / f"{stem}.toml"
    return Path(str(ref)) if ref.is_file() else None


def load_language(path: str | os.PathLike) -> Language:
    """Build a language from a TOML file, or from a shipped one by name (``full``, ``skip-seq``)."""
    p = Path(path)
    if not p.is_file():
        shipped = builtin_language_path(str(path))
        if shipped is None:
            raise DefinitionError(f"no such language file: {path}")
        p = shipped
    try:
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise DefinitionError(f"{p}: {exc}") from None
    return build_language(definition_from_toml(data))


# --- output helpers ---------------------------------------------------------

def _use_color(stream) -> bool:
    return os.environ.get("MSOS_COLOR", "1") != "0" and hasattr(stream, "isatty") and stream.isatty()


def _paint(text: str, code: str, stream) -> str:
    return f"\033[{code}m{text}\033[0m" if _use_color(stream) else text


def _error(msg: str) -> None:
    print(_paint("error:", "31", sys.stderr) + " " + msg, file=sys.stderr)


def _display(t) -> str:
    # nullary terms print bare at top level: "completed: skip"
    return t.name if not t.args else to_sexpr(t)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


# --- commands ---------------------------------------------------------------

def _bindings(pairs, flag: str) -> dict:
    out = {}
    for item in pairs or ():
        name, sep, text = item.partition("=")
        if not sep or not name:
            raise DefinitionError(f"{flag} expects name=value, got {item!r}")
        try:
            out[name] = parse_literal(text)
        except ValueError as exc:
            raise DefinitionError(f"{flag} {name}: {exc}") from None
    return out


def _initial_objects(lang: Language, args) -> dict:
    init = {}
    sig = lang.signature
    for flag, name, pairs in (("--env", RHO, args.env), ("--store", SIGMA, args.store)):
        if pairs and name not in sig:
            raise DefinitionError(f"{flag} given but the language has no {name!r} entity")
    for e in sig.entities:
        if e.kind == "write_only":
            continue
        init[e.name] = {}
    if RHO in init:
        init[RHO] = _bindings(args.env, "--env")
    if SIGMA in init:
        init[SIGMA] = _bindings(args.store, "--store")
    return init


def _read_program(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def cmd_run(args, trace: bool = False) -> int:
    try:
        lang = load_language(args.language)
        term = lang.parse(_read_program(args.program))
        init = _initial_objects(lang, args)
    except (DefinitionError, BuildError, ParseError, LabelError, KeyError, OSError) as exc:
        _error(str(exc).strip("'\""))
        return EXIT_ERROR
    if args.fuel < 0:
        _error("--fuel must be non-negative")
        return EXIT_ERROR
    try:
        tr = run_trace(lang, term, init, args.fuel)
    except NondeterminismError as exc:
        _error(str(exc))
        return EXIT_NONDET
    if trace:
        text = tr.to_jsonl()
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
            return OUTCOME_EXIT[tr.outcome]
    colour = "32" if tr.outcome == COMPLETED else "33"
    print(_paint(tr.outcome, colour, sys.stdout) + ": " + _display(tr.final))
    print(f"steps: {tr.steps}")
    print("composed label: " + _dumps(label_to_json(tr.composed_label())))
    return OUTCOME_EXIT[tr.outcome]


def cmd_check(args) -> int:
    if args.what == "det":
        try:
            lang = load_language(args.language)
        except (DefinitionError, BuildError, LabelError) as exc:
            _error(str(exc))
            return EXIT_ERROR
        if args.depth < 0:
            _error("--depth must be non-negative")
            return EXIT_ERROR
        if args.sort not in lang.registry:
            _error(f"unknown sort {args.sort!r} for this language")
            return EXIT_ERROR
        report = check_global_determinism(lang, args.sort, args.depth, args.mode)
        print(json.dumps(report.to_json(), ensure_ascii=False, indent=2))
        return EXIT_OK if report.deterministic else EXIT_COUNTEREXAMPLES
    if args.samples < 1:
        _error("--samples must be at least 1")
        return EXIT_ERROR
    if args.language:
        try:
            sig = load_language(args.language).signature
        except (DefinitionError, BuildError, LabelError) as exc:
            _error(str(exc))
            return EXIT_ERROR
    else:
        sig = LabelSignature(DEFAULT_LAW_SIGNATURE)
    report = check_category_laws(sig, args.samples, args.seed)
    print(json.dumps(report.to_json(), ensure_ascii=False, indent=2))
    return EXIT_OK if report.holds else EXIT_COUNTEREXAMPLES


def component_listing(include_fixtures: bool = False) -> list:
    comps = list(REPOSITORY.values()) + (list(FIXTURES.values()) if include_fixtures else [])
    lines = []
    for c in comps:
        info = c.manifest()
        sig = " ".join(info["args"]) + " -> " + info["sort"] if info["args"] else info["sort"]
        lines += [
            f"{c.id} sort: {info['sort']}",
            f"{c.id} signature: {sig}",
            f"{c.id} mentioned: {', '.join(info['mentioned']) or '-'}",
            f"{c.id} imports: {', '.join(info['imports']) or '-'}",
            f"{c.id} rules: {', '.join(info['rules']) or '-'}",
        ]
    return lines


def cmd_components(args) -> int:
    for line in component_listing(args.fixtures):
        print(line)
    return EXIT_OK


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _error(message)
        sys.exit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="msos", description="Modular SOS engine: run programs and check meta-theory.",
                epilog=__doc__.split("\n\n", 1)[1], formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("run", "run a program and print its outcome"),
                           ("trace", "run a program and write its trace as JSON Lines")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("language", help="language file, or a shipped language name")
        sp.add_argument("program", help="program file in s-expression syntax ('-' for stdin)")
        sp.add_argument("--env", action="append", metavar="NAME=VALUE", help="initial environment binding")
        sp.add_argument("--store", action="append", metavar="NAME=VALUE", help="initial store binding")
        sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="maximum number of steps")
        if name == "trace":
            sp.add_argument("--out", help="write the trace here instead of standard output")

    cp = sub.add_parser("check", help="run the property harness")
    csub = cp.add_subparsers(dest="what", required=True, parser_class=_Parser)
    dp = csub.add_parser("det", help="determinism over all terms up to a depth")
    dp.add_argument("language")
    dp.add_argument("--sort", default="Cmd")
    dp.add_argument("--depth", type=int, required=True)
    dp.add_argument("--mode", choices=MODES, default="both")
    lp = csub.add_parser("laws", help="label category laws on random labels")
    lp.add_argument("--samples", type=int, default=10_000)
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("--language", help="take the label signature from this language")

    kp = sub.add_parser("components", help="list the component repository")
    kp.add_argument("--fixtures", action="store_true", help="include test fixtures")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "trace":
        return cmd_run(args, trace=True)
    if args.command == "check":
        return cmd_check(args)
    return cmd_components(args)


if __name__ == "__main__":
    sys.exit(main())
