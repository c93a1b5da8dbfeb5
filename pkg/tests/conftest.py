import sys
from pathlib import Path

import pytest

from msos.engine import build_language
from msos.labels import LabelSignature, entity

sys.path.insert(0, str(Path(__file__).parent))

RHO_E = entity("ρ", "read_only", "env")
SIGMA_E = entity("σ", "read_write", "store")
OUT_E = entity("out", "write_only", "output")

FULL_COMPONENTS = {
    "Cmd": ["Cmd.skip", "Cmd.seq", "Cmd.cond", "Cmd.cond_loop", "Cmd.throw", "Cmd.throwing",
            "Cmd.catch", "Cmd.assign", "Cmd.emit"],
    "Exp": ["Exp.lit", "Exp.block", "Exp.boundid", "Exp.deref"],
    "Dcl": ["Dcl.env", "Dcl.bind"],
    "Pcd": ["Pcd.abs"],
    "Prm": ["Prm.eq"],
}


def skip_seq(entities=(RHO_E, SIGMA_E), extra=()):
    return build_language({"entities": list(entities),
                           "components": {"Cmd": ["Cmd.skip", "Cmd.seq", *extra]},
                           "sorts": ["Cmd"]})


def full_language(seeds=None):
    return build_language({"entities": [RHO_E, SIGMA_E, OUT_E], "components": FULL_COMPONENTS,
                           "seeds": seeds or {}})


@pytest.fixture(scope="session")
def ss():
    return skip_seq()


@pytest.fixture(scope="session")
def fork_lang():
    return skip_seq(extra=("Cmd.fork",))


@pytest.fixture(scope="session")
def full():
    return full_language()


@pytest.fixture(scope="session")
def sig3():
    return LabelSignature([RHO_E, SIGMA_E, OUT_E])


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, text = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {text}")
