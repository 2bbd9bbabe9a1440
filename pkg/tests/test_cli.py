import os
import subprocess
import sys

import pytest

from argact import cli
from argact.cli import EXIT_BOUND, EXIT_INCONSISTENT, EXIT_INPUT, EXIT_NONE, EXIT_OK

from conftest import run_cli, run_json


@pytest.fixture
def write(tmp_path):
    def make(text, name="d.ad"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)
    return make


# ----------------------------------------------------------------- exit codes


def test_solve_yale_text():
    code, out = run_cli("solve", "yale", "--semantics", "plausible")
    assert code == EXIT_OK
    assert "extensions: 1" in out
    assert "omitted: FA@0(¬loaded), FA@2(alive)" in out


def test_entail_modes():
    assert run_cli("entail", "yale", "--formula", "-[3]alive")[0] == EXIT_OK
    code, out = run_cli("entail", "roulette", "--formula", "[1]loaded", "--semantics", "q-plausible")
    assert code == EXIT_NONE and out.startswith("NO")
    code, out = run_cli("entail", "roulette", "--formula", "[1]loaded", "--semantics", "q-plausible",
                        "--mode", "credulous")
    assert code == EXIT_OK and out.startswith("YES")


@pytest.mark.parametrize("name", ["yale", "potato", "spy", "suitcase"])
def test_true_is_always_entailed(name):
    sem = "ad-plausible" if name == "suitcase" else "q-plausible"
    assert run_cli("entail", name, "--formula", "true", "--semantics", sem)[0] == EXIT_OK


def test_missing_file():
    code, out = run_cli("solve", "/nonexistent/x.ad")
    assert code == EXIT_INPUT and "no such domain file" in out


def test_parse_error_reports_position(write):
    code, out = run_cli("solve", write("domain d;\nfluents f\nhorizon 1;"))
    assert code == EXIT_INPUT and "line 3, column 1" in out


def test_undeclared_symbol(write):
    code, out = run_cli("solve", write("domain d; fluents f; horizon 1; fact [0] ghost;"))
    assert code == EXIT_INPUT and "ghost" in out


def test_inconsistent_theory(write):
    code, out = run_cli("solve", write("domain d; fluents f; horizon 1; fact [0] f; fact -[0] f;"))
    assert code == EXIT_INCONSISTENT


def test_fact_beyond_horizon(write):
    code, out = run_cli("solve", write("domain d; fluents f; horizon 1; fact [5] f;"))
    assert code == EXIT_INPUT and "outside the window" in out


def test_query_beyond_horizon():
    code, out = run_cli("entail", "yale", "--formula", "[9]alive")
    assert code == EXIT_INPUT and "outside the window" in out


def test_query_about_an_unknown_occurrence():
    code, out = run_cli("entail", "yale", "--formula", "[0,1]shoot")
    assert code == EXIT_INPUT


def test_resource_bounds(monkeypatch):
    monkeypatch.setenv("ARGACT_MAX_ASSUMPTIONS", "3")
    code, out = run_cli("solve", "spy", "--semantics", "preferred")
    assert code == EXIT_BOUND and "resource bound" in out


def test_unknown_semantics_is_an_input_error():
    assert run_cli("solve", "yale", "--semantics", "grounded")[0] == EXIT_INPUT


def test_incomplete_state():
    code, out = run_cli("trans", "circuit", "--state", "sw1")
    assert code == EXIT_INPUT and "leaves out" in out


def test_unknown_action():
    assert run_cli("trans", "circuit", "--action", "jump")[0] == EXIT_INPUT


def test_no_command_prints_usage():
    code, out = run_cli()
    assert code == EXIT_INPUT and "usage" in out.lower()


# ------------------------------------------------------------------ commands


def test_trans_outputs():
    code, out = run_cli("trans", "circuit", "--state", "¬sw1,sw2,sw3,¬relay,¬light,¬detect",
                        "--action", "toggle1")
    assert code == EXIT_OK
    assert "stable successors: 2" in out
    code, out = run_cli("trans", "relay-loop", "--max-steps", "32")
    assert code == EXIT_NONE
    assert "DIVERGED: still unstable after 32 steps" in out
    assert "cycle: relay1 -> ¬sw2 -> relay2 -> sw2 -> relay1" in out


def test_state_with_leading_minus():
    code, out = run_cli("trans", "circuit", "--state", "-sw1,sw2,sw3,-relay,-light,-detect")
    assert code == EXIT_OK


def test_verify_commands():
    code, out = run_cli("verify", "yale", "--theorem", "3")
    assert code == EXIT_OK and out.startswith("theorem 3: PASS")
    code, out = run_cli("verify", "murder-mystery", "--theorem", "3")
    assert code == EXIT_NONE and "FAIL" in out


def test_models_limit():
    code, out = run_cli("models", "stolen-car", "--kind", "cpmm", "--limit", "1")
    assert code == EXIT_OK
    assert "models: 2" in out and "... 1 more" in out


def test_alias_and_suffixless_names():
    a = run_cli("trans", "circuit-thielscher")
    b = run_cli("trans", "circuit.ad")
    assert a == b and a[0] == EXIT_OK


def test_timing_goes_to_stderr(capsys):
    code = cli.main(["--time", "solve", "yale"])
    captured = capsys.readouterr()
    assert code == EXIT_OK
    assert "extensions: 1" in captured.out
    assert "s" in captured.err


# ---------------------------------------------------------------- text vs json


@pytest.mark.parametrize("name, semantics", [
    ("yale", "plausible"), ("potato", "q-plausible"), ("spy", "preferred"), ("suitcase", "ad-plausible"),
])
def test_json_and_text_agree(name, semantics):
    _, text = run_cli("solve", name, "--semantics", semantics)
    _, report = run_json("solve", name, "--semantics", semantics)
    assert f"extensions: {len(report['extensions'])}" in text
    for ext in report["extensions"]:
        omitted = ", ".join(ext["omitted"]) or "-"
        assert f"[{ext['id']}] omitted: {omitted}" in text


def test_trans_json_and_text_agree():
    _, text = run_cli("trans", "circuit")
    _, report = run_json("trans", "circuit")
    for s in report["states"]:
        assert f"  {s}" in text
    assert report["stratified"] is True


def test_output_is_deterministic():
    first = run_cli("solve", "spy", "--semantics", "q-plausible", "--format", "json")
    assert all(run_cli("solve", "spy", "--semantics", "q-plausible", "--format", "json") == first
               for _ in range(3))


# --------------------------------------------------------------------- corpus


def test_corpus_list_names_every_entry():
    code, out = run_cli("corpus", "list")
    assert code == EXIT_OK
    for entry in cli.manifest():
        assert entry["name"] in out


@pytest.mark.parametrize("entry", [e for e in cli.manifest() if e["name"] != "circuit"],
                         ids=lambda e: e["name"])
def test_corpus_transcripts_match(entry):
    expected = (cli.corpus_dir() / "expected" / f"{entry['name']}.txt").read_text(encoding="utf-8")
    assert cli.run_entry(entry) == expected


def test_corpus_run_circuit():
    code, out = run_cli("corpus", "run", "circuit")
    assert code == EXIT_OK and "circuit: PASS" in out


def test_corpus_unknown_name():
    assert run_cli("corpus", "run", "nope")[0] == EXIT_INPUT


def test_module_entry_point():
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "argact", "entail", "yale", "--formula", "[2]loaded"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "YES"
