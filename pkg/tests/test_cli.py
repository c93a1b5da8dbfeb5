import json
import os
import subprocess
import sys

import pytest

from msos.cli import component_listing, definition_from_toml, DefinitionError, load_language, main


@pytest.fixture
def prog(tmp_path):
    def write(text, name="p.sx"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- run --------------------------------------------------------------------

def test_run_completed(capsys, prog):
    code, out, _ = run(capsys, "run", "full", prog("(seq (emit (lit 1)) (emit (lit 2)))"))
    assert code == 0
    assert out.splitlines() == ["completed: skip", "steps: 3",
                                'composed label: {"ρ": {}, "σ": {"pre": {}, "post": {}}, "out": [1, 2]}']


def test_run_env_and_store(capsys, prog):
    code, out, _ = run(capsys, "run", "full", prog("(assign y (block (env (z 1)) (boundid x)))"),
                       "--env", "x=true", "--store", "y=0")
    assert code == 0
    assert '"σ": {"pre": {"y": 0}, "post": {"y": true}}' in out


def test_run_stuck(capsys, prog):
    code, out, _ = run(capsys, "run", "full", prog("(emit (boundid x))"))
    assert code == 2 and out.startswith("stuck: (emit (boundid x))")


def test_run_fuel(capsys, prog):
    code, out, _ = run(capsys, "run", "full", prog("(while (lit true) (skip))"), "--fuel", "5")
    assert code == 3 and "steps: 5" in out


def test_run_nondeterminism(capsys, prog):
    code, _, err = run(capsys, "run", "skip-seq-fork", prog("(seq (fork) (skip))"))
    assert code == 4 and "fork_left" in err


def test_run_parse_error(capsys, prog):
    code, _, err = run(capsys, "run", "full", prog("(seq (skip)\n (nope))"))
    assert code == 1 and "2:3" in err


def test_run_construct_outside_language(capsys, prog):
    code, _, err = run(capsys, "run", "skip-seq", prog("(emit (lit 1))"))
    assert code == 1 and err


def test_run_bad_binding(capsys, prog):
    code, _, err = run(capsys, "run", "full", prog("(skip)"), "--env", "x")
    assert code == 1 and "--env" in err


def test_run_env_without_entity(capsys, prog, tmp_path):
    lang = tmp_path / "l.toml"
    lang.write_text('[components]\nCmd = ["Cmd.skip", "Cmd.seq"]\n', encoding="utf-8")
    code, _, err = run(capsys, "run", str(lang), prog("(skip)"), "--env", "x=1")
    assert code == 1 and "ρ" in err


def test_run_missing_language(capsys, prog):
    code, _, err = run(capsys, "run", "nope", prog("(skip)"))
    assert code == 1 and "no such language" in err


# --- trace ------------------------------------------------------------------

def test_trace_stdout(capsys, prog):
    code, out, _ = run(capsys, "trace", "skip-seq", prog("(seq (skip) (skip))"), "--env", "x=1")
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert lines[0] == {"step": 1, "rule": "Cmd.seq/seq_1", "from": "(seq (skip) (skip))", "to": "(skip)",
                        "label": {"ρ": {"x": 1}, "σ": {"pre": {}, "post": {}}}}
    assert lines[1]["outcome"] == "completed"


def test_trace_to_file(capsys, prog, tmp_path):
    dest = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "trace", "full", prog("(emit (lit 1))"), "--out", str(dest))
    assert code == 0 and "completed: skip" in out
    assert json.loads(dest.read_text(encoding="utf-8").splitlines()[-1])["composed_label"]["out"] == [1]


# --- check ------------------------------------------------------------------

def test_check_det_clean(capsys):
    code, out, _ = run(capsys, "check", "det", "skip-seq", "--depth", "4")
    assert code == 0
    js = json.loads(out)
    assert js == {"mode": "both", "sort": "Cmd", "depth": 4, "terms_checked": 26, "counterexamples": []}


def test_check_det_counterexamples(capsys):
    code, out, _ = run(capsys, "check", "det", "skip-seq-fork", "--depth", "2", "--mode", "brute")
    assert code == 5 and json.loads(out)["counterexamples"]


def test_check_det_invalid(capsys):
    assert run(capsys, "check", "det", "skip-seq", "--depth", "-1")[0] == 1
    assert run(capsys, "check", "det", "skip-seq", "--depth", "2", "--sort", "Exp")[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["check", "det", "skip-seq", "--depth", "2", "--mode", "fast"])
    assert info.value.code == 1


def test_check_laws(capsys):
    code, out, _ = run(capsys, "check", "laws", "--samples", "200", "--seed", "3")
    assert code == 0
    js = json.loads(out)
    assert js["samples"] == 200 and js["failures"] == []
    assert run(capsys, "check", "laws", "--samples", "0")[0] == 1


def test_check_laws_language_signature(capsys):
    assert run(capsys, "check", "laws", "--samples", "50", "--language", "skip-seq")[0] == 0


# --- components -------------------------------------------------------------

def test_components_listing(capsys):
    code, out, _ = run(capsys, "components")
    assert code == 0
    assert "Cmd.seq imports: Cmd.skip" in out
    assert "Exp.block mentioned: ρ" in out
    assert "Cmd.fork" not in out
    assert len([x for x in out.splitlines() if x.endswith(" sort: Cmd") or " sort: " in x]) == 17
    assert "Cmd.fork sort: Cmd" in "\n".join(component_listing(True))


# --- language files ---------------------------------------------------------

def test_definition_rejects_unknown_keys():
    with pytest.raises(DefinitionError):
        definition_from_toml({"components": {"Cmd": ["Cmd.skip"]}, "extra": 1})
    with pytest.raises(DefinitionError):
        definition_from_toml({"components": {}})
    with pytest.raises(DefinitionError):
        definition_from_toml({"components": {"Cmd": ["Cmd.skip"]},
                              "entities": [{"name": "ρ", "kind": "read_mostly"}]})


def test_shipped_languages_load():
    full = load_language("full")
    assert full.signature.names == ("ρ", "σ", "out")
    assert full.enumerator.count("Cmd", 2) == 456
    assert [c.id for c in load_language("skip-seq").registry["Cmd"]] == ["Cmd.skip", "Cmd.seq"]


def test_bad_toml(capsys, tmp_path, prog):
    bad = tmp_path / "bad.toml"
    bad.write_text("[components\n", encoding="utf-8")
    assert run(capsys, "run", str(bad), prog("(skip)"))[0] == 1


# --- process level ----------------------------------------------------------

def _proc(args, **env):
    e = dict(os.environ, **env)
    return subprocess.run([sys.executable, "-m", "msos.cli", *args], capture_output=True, text=True,
                          env=e, encoding="utf-8")


def test_process_exit_codes(prog):
    p = _proc(["run", "full", prog("(throw (lit 1))")])
    assert p.returncode == 0 and p.stdout.startswith("completed: (throwing 1)")
    assert _proc(["frobnicate"]).returncode == 1


def test_no_color_when_not_a_tty(prog):
    p = _proc(["run", "full", prog("(emit (boundid q))")], MSOS_COLOR="1")
    assert "\033[" not in p.stdout and "\033[" not in p.stderr
