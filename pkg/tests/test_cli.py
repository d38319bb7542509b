import json
from pathlib import Path

import pytest

from icmech.cli import main
from icmech.fixtures import fixture_path

FX1 = str(fixture_path("fx1"))
FX2 = str(fixture_path("fx2"))
FX3 = str(fixture_path("fx3"))
FX4 = str(fixture_path("fx4"))
FX5 = str(fixture_path("fx5"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, (json.loads(out) if out else None)


@pytest.fixture
def xstar_file(tmp_path):
    p = tmp_path / "xstar.json"
    p.write_text(json.dumps({"x": [["1", "0"], ["0", "1"]]}))
    return str(p)


class TestCommands:
    def test_oracle_fx1(self, capsys):
        code, rep = run_json(capsys, "oracle", FX1)
        assert code == 0
        assert rep["value"] == "1/2"
        assert rep["profitable"] is True

    def test_oracle_fx2_zero(self, capsys):
        code, rep = run_json(capsys, "oracle", FX2)
        assert code == 0
        assert rep["value"] == "0"
        assert rep["profitable"] is False

    def test_check_ic_verdicts(self, capsys, xstar_file):
        code, rep = run_json(capsys, "check-ic", FX1, xstar_file)
        assert code == 0 and rep["ic"] is True
        code, rep = run_json(capsys, "check-ic", FX2, xstar_file)
        assert code == 0 and rep["ic"] is False
        assert rep["violations"]

    def test_spans_full_rank_over_independent(self, capsys):
        code, rep = run_json(capsys, "spans", FX2, FX1)
        assert code == 0
        assert rep["spans"] is True
        code, rep = run_json(capsys, "spans", FX1, FX2)
        assert rep["spans"] is False

    def test_inspect(self, capsys):
        code, rep = run_json(capsys, "inspect", FX2)
        assert code == 0
        assert rep["rank"] == 2
        assert rep["independent"] is False
        assert rep["expected_value"] == "-1/2"

    def test_classify(self, capsys):
        code, rep = run_json(capsys, "classify", FX2)
        assert rep["maximal"] is True and rep["minimal"] is False

    def test_additivity(self, capsys):
        code, rep = run_json(capsys, "additivity", FX5)
        assert rep["pi_additive"] is True
        code, rep = run_json(capsys, "additivity", FX1)
        assert rep["pi_additive"] is False

    def test_construct(self, capsys):
        code, rep = run_json(capsys, "construct", FX1)
        assert code == 0
        assert rep["profitable"] is True
        assert rep["payoff"] == "1/2"
        assert rep["epsilon"] == "2"

    def test_transport(self, capsys):
        code, rep = run_json(capsys, "transport", FX2)
        assert rep["value"] == "-1/2"
        assert rep["profitable"] is False

    def test_orthogonal(self, capsys):
        code, rep = run_json(capsys, "orthogonal", FX2, FX1)
        assert rep["orthogonal"] is True
        code, rep = run_json(capsys, "orthogonal", FX2, FX2)
        assert rep["orthogonal"] is False

    def test_decompose(self, capsys, xstar_file):
        code, rep = run_json(capsys, "decompose", FX1, xstar_file)
        assert code == 0
        assert rep["q"] == "1/2"
        assert rep["gammas"] == ["1/2"]

    def test_myo(self, capsys):
        code, rep = run_json(capsys, "myo", FX3)
        assert rep["best_value"] == "2/9"
        assert rep["profitable"] is True
        assert rep["diagonal_sum"] == "2"

    def test_alloc_n(self, capsys):
        code, rep = run_json(capsys, "alloc-n", FX4)
        assert code == 0
        assert rep["profitable"] is True
        assert rep["payoff"] == "1/2"

    def test_alloc_n_disposal_mechanism_round_trips(self, capsys, tmp_path):
        data = json.loads(Path(FX4).read_text())
        data["disposal"] = True
        inst_file = tmp_path / "fx4d.json"
        inst_file.write_text(json.dumps(data))
        code, rep = run_json(capsys, "alloc-n", str(inst_file))
        assert code == 0
        assert rep["profitable"] is True
        assert set(rep["mechanism"]["x"]) == {"1", "2", "3"}
        mech_file = tmp_path / "mech.json"
        mech_file.write_text(json.dumps(rep["mechanism"]))
        code, check = run_json(capsys, "check-ic", str(inst_file), str(mech_file))
        assert code == 0
        assert check["ic"] is True

    def test_maximin_standalone(self, capsys, xstar_file):
        code, rep = run_json(capsys, "maximin", xstar_file)
        assert code == 0
        assert rep["value"] == "1/2"

    def test_generate_round_trips(self, capsys, tmp_path):
        out = tmp_path / "inst.json"
        code, _ = run(capsys, "generate", "--seed", "4", "--shape", "2x2",
                      "--kind", "full-rank", "--out", str(out))
        assert code == 0
        code, rep = run_json(capsys, "classify", str(out))
        assert rep["maximal"] is True

    def test_fixture_emission(self, capsys):
        code, rep = run_json(capsys, "fixture", "fx3")
        assert code == 0
        assert rep["types"]["l"] == [-1, 0, 1]


class TestContracts:
    def test_exit_code_schema_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"agents\": [\"l\"]}")
        code, out = run(capsys, "inspect", str(bad))
        assert code == 1 and out == ""

    def test_exit_code_missing_file(self, capsys):
        code, _ = run(capsys, "inspect", "/nonexistent/inst.json")
        assert code == 1

    def test_exit_code_precondition(self, capsys):
        # Matching analysis on a correlated instance is refused, not failed.
        code, _ = run(capsys, "myo", FX2)
        assert code == 2

    def test_float_entries_rejected(self, capsys, tmp_path):
        bad = tmp_path / "f.json"
        bad.write_text(json.dumps({
            "agents": ["l", "r"], "types": {"l": [0], "r": [0]},
            "pi": [[1.0]], "vL": [[0]]}))
        code, _ = run(capsys, "inspect", str(bad))
        assert code == 1

    def test_report_mechanism_round_trip(self, capsys, tmp_path):
        # Feed the construct report's mechanism back into check-ic.
        code, rep = run_json(capsys, "construct", FX1)
        mech_file = tmp_path / "mech.json"
        mech_file.write_text(json.dumps(rep["mechanism"]))
        code, check = run_json(capsys, "check-ic", FX1, str(mech_file))
        assert code == 0
        assert check["ic"] is True
        # The whole report also works, via its embedded mechanism.
        rep_file = tmp_path / "rep.json"
        rep_file.write_text(json.dumps(rep))
        code, check2 = run_json(capsys, "check-ic", FX1, str(rep_file))
        assert check2["ic"] is True

    def test_deterministic_output(self, capsys):
        _, first = run(capsys, "oracle", FX1)
        _, second = run(capsys, "oracle", FX1)
        assert first == second

    def test_out_flag_writes_file(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code, printed = run(capsys, "oracle", FX1, "--out", str(out))
        assert code == 0
        assert printed == ""
        assert json.loads(out.read_text())["value"] == "1/2"

    def test_text_format(self, capsys):
        code, out = run(capsys, "oracle", FX1, "--format", "text")
        assert code == 0
        assert "value: 1/2" in out
