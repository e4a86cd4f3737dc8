import os
import subprocess
import sys

import pytest

JOIN_TREE = """\
X \\/ Y <: A \\/ B  [sq-join-elim]
  X <: A \\/ B  [sq-join-intro-1]
    X <: A  [sq-var]
      A <: A  [sq-refl-var]
  Y <: A \\/ B  [sq-join-intro-2]
    Y <: B  [sq-var]
      B <: B  [sq-refl-var]
"""

ASYNC_TRACE = """\
0: <(fn[bot](f: {top} ({bot} Top -> {bot} Top)) => f (fn[bot](z: {bot} Top) => z)) (fn[top](y: {bot} Top) => y) ; empty>
1: <fn[bot](f: {top} ({bot} Top -> {bot} Top)) => f (fn[bot](z: {bot} Top) => z) ; [] (fn[top](y: {bot} Top) => y)>
2: <fn[top](y: {bot} Top) => y ; (fn[bot](f: {top} ({bot} Top -> {bot} Top)) => f (fn[bot](z: {bot} Top) => z)) []>
3: <(fn[top](y: {bot} Top) => y) (fn[bot](z: {bot} Top) => z) ; |bot|>
4: <fn[top](y: {bot} Top) => y ; |bot|, [] (fn[bot](z: {bot} Top) => z)>
5: <fn[bot](z: {bot} Top) => z ; |bot|, (fn[top](y: {bot} Top) => y) []>
{path}: error[E-BARRIER]: call of a function coloured top under a barrier coloured bot (stuck at transition #6)
"""


def test_check_identity(cli, data):
    r = cli("check", data / "id.fq")
    assert (r.code, r.out) == (0, "{bot} ({bot} Top -> {bot} Top)\n")


def test_check_json(cli, data):
    r = cli("--json", "check", data / "id.fq")
    assert r.json() == {"calculus": "fq", "type": "{bot} ({bot} Top -> {bot} Top)"}


def test_eval_store(cli, data):
    r = cli("eval", data / "store.fm")
    assert (r.code, r.out) == (0, "value: unit\nstore:\n  #0 [bot] = unit\n")


def test_eval_async_under_sync(cli, data):
    path = data / "async.fa"
    assert cli("check", path).out == f"{path}:3:48: error[E-COLOUR]: callee coloured top is not allowed in " \
                                     "colour context bot: top is not a subqualifier of bot\n"
    r = cli("eval", path)
    assert (r.code, r.out) == (1, ASYNC_TRACE.replace("{path}", str(path)))


def test_sub_join_example(cli):
    r = cli("sub", "--env", "A<:top, B<:top, X<:A, Y<:B", "X \\/ Y", "A \\/ B")
    assert (r.code, r.out) == (0, JOIN_TREE)


def test_sub_counterexample(cli):
    r = cli("sub", "--env", "X<:top", "top", "X")
    assert r.code == 1
    assert r.out == "not derivable: top <: X\ncounterexample: in 2-chain with X := 0: left side is 1, right side is 0\n"
    j = cli("--json", "sub", "--env", "X<:top", "top", "X").json()
    assert j["counterexample"] == {"lattice": "2-chain", "assignment": {"X": "0"}, "lhs": "1", "rhs": "0"}


def test_sub_term_variables(cli):
    r = cli("sub", "--env", "one_ring: {top} Unit, fifty_fifty: {one_ring} Unit", "fifty_fifty", "one_ring")
    assert r.out == "fifty_fifty <: one_ring  [sq-tvar]\n  one_ring <: one_ring  [sq-refl-tvar]\n"


def test_sub_with_lattice_file(cli, data):
    r = cli("sub", "--lattice", data / "m3.yaml", "--env", "X <: `a", "X", "`a \\/ `b")
    assert r.code == 0


def test_subtype(cli):
    r = cli("subtype", "--env", "Y <: top", "{Y} Top", "{top} Top")
    assert r.code == 0 and r.out.splitlines()[0] == "{Y} Top <: {top} Top  [sub-qtype]"
    assert cli("subtype", "{top} Top", "{bot} Top").code == 1


def test_lattice_validate(cli, data):
    r = cli("lattice", "validate", data / "m3.yaml")
    assert r.code == 0 and r.out.startswith("M3: valid bounded lattice with 5 elements")


GOLDEN = [
    # file, command, exit code, diagnostic code
    ("syntax.fq", "check", 1, "E-SYNTAX"),
    ("pragma.fq", "check", 1, "E-PRAGMA"),
    ("unbound.fq", "check", 1, "E-UNBOUND"),
    ("mismatch.fq", "check", 1, "E-TYPE"),
    ("subqual.fq", "check", 1, "E-SUBQUAL"),
    ("bound.fq", "check", 1, "E-BOUND"),
    ("readonly.fm", "check", 1, "E-READONLY"),
    ("async.fa", "check", 1, "E-COLOUR"),
    ("capture.fc", "check", 1, "E-CAPTURE"),
    ("dangling.fm", "check", 1, "E-ILLFORMED"),
    ("stuck.fq", "eval", 1, "E-ASSERT"),
    ("subqual.fq", "eval", 1, "E-UPQUAL"),
    ("nonground.fq", "eval", 1, "E-NONGROUND"),
    ("free.fq", "eval", 1, "E-STUCK"),
    ("readonly.fm", "eval", 1, "E-SEALED"),
    ("dangling.fm", "eval", 1, "E-DANGLING"),
    ("async.fa", "eval", 1, "E-BARRIER"),
    ("m3.fq", "eval", 1, "E-ASSERT"),
    ("antichain.yaml", "lattice validate", 1, "E-LATTICE"),
]


@pytest.mark.parametrize("name,command,exit_code,code", GOLDEN, ids=[f"{g[3]}-{g[0]}" for g in GOLDEN])
def test_diagnostic_codes(cli, data, name, command, exit_code, code):
    r = cli("--json", *command.split(), data / name)
    assert r.code == exit_code
    diags = r.json()["diagnostics"]
    assert [d["code"] for d in diags] == [code]
    text = cli(*command.split(), data / name).out
    assert f"error[{code}]" in text


def test_spans_point_into_the_file(cli, data):
    d = cli("--json", "check", data / "unbound.fq").json()["diagnostics"][0]
    assert d["span"] == {"line": 2, "column": 26}


def test_out_of_fuel(cli, data):
    r = cli("--json", "eval", "--fuel", "0", data / "capp.fc")
    assert r.code == 1 and r.json()["diagnostics"][0]["code"] == "E-FUEL"


def test_checked_eval(cli, data):
    assert cli("eval", "--check", data / "stuck.fq").out.count("E-SUBQUAL") == 1
    assert cli("eval", data / "capp.fc").out == "value: unit\n"


def test_pragmas_and_lattice_files(cli, data):
    # constants of M3 are available once the pragma names the lattice
    assert "E-SUBQUAL" in cli("check", data / "m3.fq").out


def test_usage_errors(cli, data):
    assert cli("frob").code == 2
    assert cli("check", data / "missing.fq").code == 2
    assert cli("sub", "--env", "X <: Top", "X", "top").code == 2
    assert cli("eval", "--fuel", "many", data / "id.fq").code == 2


def test_internal_errors_exit_3(cli, data, monkeypatch):
    import qualfsub.cli as cli_mod

    def boom(*a, **k):
        raise RuntimeError("invariant")

    monkeypatch.setattr(cli_mod, "subqual", boom)
    r = cli("sub", "X", "X")
    assert r.code == 3 and "internal error" in r.err


def test_oracle_command(cli):
    r = cli("oracle", "--seed", "5", "--samples", "30", "--count", "10")
    assert r.code == 0 and r.out.endswith("all suites passed\n")
    assert cli("oracle", "--suite", "nope").code == 2


def _run(*argv, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    return subprocess.run([sys.executable, "-m", "qualfsub.cli", *argv], capture_output=True, env=env).stdout


@pytest.mark.parametrize("argv", [
    ("oracle", "--seed", "11", "--samples", "40", "--count", "15"),
    ("--json", "oracle", "--seed", "11", "--samples", "20", "--count", "10", "--suite", "subqual,fc"),
    ("sub", "--env", "A<:top, B<:top, X<:A, Y<:B", "A \\/ B", "X \\/ Y"),
])
def test_same_seed_same_bytes(argv):
    first = _run(*argv, hashseed=1)
    assert first
    assert _run(*argv, hashseed=2) == first
