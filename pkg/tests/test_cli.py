import json
import subprocess
import sys

import pytest

from wignerlab import cli
from wignerlab.cli import SCHEMA_VERSION, main, render_distribution
from wignerlab.errors import InvariantViolation
from wignerlab.frlab import build_fr_scenario
from wignerlab.measure import OutcomeDistribution
from wignerlab.scenario import evaluate, serialize


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fr_file(tmp_path):
    p = tmp_path / "fr.scn"
    p.write_text(serialize(build_fr_scenario()), encoding="utf-8")
    return str(p)


class TestBuiltins:
    def test_fr(self, capsys):
        code, out, _ = run(capsys, "builtin", "fr", "--policy", "unitary-agents")
        assert code == 0
        assert "P(ok,ok) = 0.0833333333333" in out
        assert "(naive)" not in out

    def test_footnote_collapse(self, capsys):
        code, out, _ = run(capsys, "builtin", "footnote", "--policy", "collapse-on-record")
        assert code == 0
        assert "0.5 / 0.5" in out
        assert "policy: collapse-on-record (naive)" in out

    def test_footnote_unitary(self, capsys):
        _, out, _ = run(capsys, "builtin", "footnote")
        assert "W plus / minus: 1 / 0" in out

    def test_doubleslit(self, capsys):
        code, out, _ = run(capsys, "builtin", "doubleslit")
        assert code == 0
        assert "without slit detector: superposition 1  mixture 0.5  interference 0.5" in out
        assert "with slit detector: superposition 0.5  mixture 0.5  interference 0" in out


class TestCommands:
    def test_run_table(self, capsys, fr_file):
        code, out, _ = run(capsys, "run", fr_file)
        assert code == 0
        rows = [l for l in out.splitlines() if l.startswith("P(") and l.count(",") == 1]
        assert len(rows) == 4
        assert sum(float(l.split("= ")[1]) for l in rows) == pytest.approx(1, abs=1e-9)

    def test_scenario_flag(self, capsys, fr_file):
        assert run(capsys, "run", "--scenario", fr_file)[1] == run(capsys, "run", fr_file)[1]

    def test_run_structured(self, capsys, fr_file):
        code, out, _ = run(capsys, "run", fr_file, "--out", "structured")
        doc = json.loads(out)
        assert code == 0
        assert doc["schema_version"] == SCHEMA_VERSION
        assert doc["records"] == ["Fbar", "F", "Wbar", "W"]
        ext = {(r["outcome"]["Wbar"], r["outcome"]["W"]): r["probability"] for r in doc["external_distribution"]}
        assert ext[("ok", "ok")] == 0.0833333333333
        assert doc["naive"] is False

    def test_viewpoint(self, capsys, fr_file):
        _, out, _ = run(capsys, "run", fr_file, "--policy", "collapse-on-record", "--viewpoint", "fbar")
        assert "P(ok,fail) = 0.416666666667" in out

    def test_audit(self, capsys, fr_file):
        code, out, _ = run(capsys, "audit", fr_file)
        assert code == 0
        assert "unsafe pairs: 2" in out
        assert "Fbar -> Wbar  gap 0.333333333333" in out
        assert "F -> W  gap 0.333333333333" in out

    def test_audit_structured(self, capsys, fr_file):
        doc = json.loads(run(capsys, "audit", fr_file, "--out", "structured")[1])
        assert [(p["agent_record"], p["later_record"]) for p in doc["unsafe_pairs"]] == [("Fbar", "Wbar"), ("F", "W")]

    def test_interference(self, capsys, fr_file):
        _, out, _ = run(capsys, "interference", fr_file)
        row = "P(Wbar=ok) vs record Fbar: superposition 0.166666666667  mixture 0.5  interference -0.333333333333"
        assert row in out

    def test_sample(self, capsys, fr_file):
        code, out, _ = run(capsys, "sample", fr_file, "--n", "1200", "--seed", "4")
        assert code == 0
        counts = [int(l.split("= ")[1].split()[0]) for l in out.splitlines() if l.startswith("N(")]
        assert sum(counts) == 1200

    def test_sample_structured(self, capsys, fr_file):
        doc = json.loads(run(capsys, "sample", fr_file, "--n", "50", "--seed", "1", "--out", "structured")[1])
        assert sum(c["count"] for c in doc["counts"]) == 50

    @pytest.mark.parametrize("cmd", [["run"], ["sample", "--seed", "9"], ["audit"], ["interference"]])
    def test_byte_identical_reruns(self, capsys, fr_file, cmd):
        a = run(capsys, cmd[0], fr_file, *cmd[1:])
        b = run(capsys, cmd[0], fr_file, *cmd[1:])
        assert a == b


class TestExitCodes:
    def test_missing_file(self, capsys, tmp_path):
        code, out, err = run(capsys, "run", str(tmp_path / "missing.scn"))
        assert code == 2
        assert "file not found" in err
        assert out == ""

    def test_parse_error(self, capsys, tmp_path):
        p = tmp_path / "bad.scn"
        p.write_text("register x labels=a,b\nprepare x : 1, 1\n", encoding="utf-8")
        code, _, err = run(capsys, "run", str(p))
        assert code == 2
        assert "line 2, col 1" in err

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["run"],
            ["frobnicate"],
            ["builtin", "nope"],
            ["builtin", "fr", "--tol", "0"],
            ["builtin", "fr", "--n", "0"],
            ["builtin", "fr", "--seed", "-1"],
            ["builtin", "fr", "--policy", "sometimes"],
            ["builtin", "fr", "--viewpoint", "fbar"],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 1

    def test_runtime_scenario_error(self, capsys, tmp_path):
        p = tmp_path / "s.scn"
        p.write_text(
            "register c labels=h,t\nagent g ready=h labels=h,t\nregister s labels=u,d\n"
            "prepare s : 0, 1\n"
            "ameasure g on c basis { h: 1, 0 ; t: 0, 1 } record G\n"
            "cprepare s on G { h: 1, 0 ; t: 0, 1 }\n",
            encoding="utf-8",
        )
        assert run(capsys, "run", str(p))[0] == 2

    def test_invariant_violation(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise InvariantViolation("weights sum to 0.9")

        monkeypatch.setattr(cli, "evaluate", boom)
        code, _, err = run(capsys, "builtin", "fr")
        assert code == 3
        assert "weights sum to 0.9" in err

    def test_help(self, capsys):
        assert run(capsys, "--help")[0] == 0


class TestRender:
    def test_singleton(self):
        text = render_distribution(OutcomeDistribution([(("b",), 1.0)], names=["R"]))
        assert text.splitlines() == ["records: R", "P(b) = 1"]

    def test_empty_records(self):
        assert render_distribution(OutcomeDistribution([((), 1.0)], names=[])) == "records: (none)"

    def test_fr_rows(self):
        d = evaluate(build_fr_scenario()).external_distribution()
        lines = render_distribution(d).splitlines()
        assert lines[0] == "records: Wbar, W"
        assert lines[1:] == [
            "P(ok,ok) = 0.0833333333333",
            "P(ok,fail) = 0.0833333333333",
            "P(fail,ok) = 0.0833333333333",
            "P(fail,fail) = 0.75",
        ]

    def test_structured(self):
        d = evaluate(build_fr_scenario()).external_distribution()
        doc = json.loads(render_distribution(d, "structured"))
        assert doc["records"] == ["Wbar", "W"]
        assert doc["rows"][0] == {"outcome": {"Wbar": "ok", "W": "ok"}, "probability": 0.0833333333333}


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "wignerlab.cli", "builtin", "fr"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert "P(ok,ok) = 0.0833333333333" in proc.stdout
