import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from ftbn.cli import main

AV = ("--builtin", "av")


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def load_schema(name):
    text = resources.files("ftbn").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def check_schema(name, doc):
    jsonschema.validate(doc, load_schema(name))


@pytest.fixture
def small_model(tmp_path):
    path = tmp_path / "small.ft"
    path.write_text(
        'top T "top"\n'
        'event A basic "a" subsystem=s1 rate=40\n'
        'event B basic "b" subsystem=s1 rate=35\n'
        'event C basic "c" subsystem=s2 rate=25\n'
        'event M intermediate "m" subsystem=s1\n'
        "gate M = AND(A, B)\n"
        "gate T = OR(M, C)\n"
    )
    return str(path)


def test_validate_ok(capsys, small_model):
    code, out, _ = run_cli(capsys, "validate", small_model)
    assert code == 0
    doc = json.loads(out)
    check_schema("validate", doc)
    assert doc["ok"] is True


def test_validate_reports_cycle_and_exits_1(capsys, tmp_path):
    path = tmp_path / "cyclic.ft"
    path.write_text(
        'top T "t"\nevent X basic "x"\n'
        'event A intermediate "a"\nevent B intermediate "b"\n'
        "gate A = OR(B, X)\ngate B = OR(A, X)\ngate T = OR(A, X)\n"
    )
    code, out, _ = run_cli(capsys, "validate", str(path))
    assert code == 1
    doc = json.loads(out)
    check_schema("validate", doc)
    assert any(f["code"] == "cycle-detected" for f in doc["findings"])


def test_unparseable_model_is_exit_1_with_error_json(capsys, tmp_path):
    path = tmp_path / "broken.ft"
    path.write_text("gate T = OR(\n")
    code, out, err = run_cli(capsys, "validate", str(path))
    assert code == 1
    assert out == ""
    error = json.loads(err)["error"]
    assert error["type"] == "FaultTreeParseError"


def test_missing_model_file(capsys):
    code, _, err = run_cli(capsys, "validate", "/no/such/file.ft")
    assert code == 1
    assert "cannot read" in json.loads(err)["error"]["message"]


def test_model_source_is_required_and_exclusive(capsys, small_model):
    with pytest.raises(SystemExit) as exc_info:
        main(["cutsets"])
    assert exc_info.value.code == 2
    with pytest.raises(SystemExit) as exc_info:
        main(["cutsets", small_model, "--builtin", "av"])
    assert exc_info.value.code == 2


def test_cutsets_json_av(capsys):
    code, out, _ = run_cli(capsys, "cutsets", *AV)
    assert code == 0
    doc = json.loads(out)
    check_schema("cutsets", doc)
    assert len(doc) == 22
    assert ["PF1", "PF2"] in doc
    assert ["SF1", "SF2", "SF3", "SF4", "SF5"] in doc


def test_cutsets_table_format(capsys, small_model):
    code, out, _ = run_cli(capsys, "cutsets", small_model, "--format", "table")
    assert code == 0
    assert "minimal cut sets" in out
    assert "{C}" in out


def test_cutsets_row_cap_exit_1(capsys):
    code, _, err = run_cli(capsys, "cutsets", *AV, "--max-rows", "3")
    assert code == 1
    assert json.loads(err)["error"]["type"] == "CutSetLimitError"


def test_quantify_json_schema_and_determinism(capsys):
    code, first, _ = run_cli(capsys, "quantify", *AV, "--seed", "7")
    assert code == 0
    doc = json.loads(first)
    check_schema("quantify", doc)
    assert doc["top_event"] == "COLLISION"
    assert doc["method"] == "gate-formulas"
    assert len(doc["rates_fit"]) == 29
    code, second, _ = run_cli(capsys, "quantify", *AV, "--seed", "7")
    assert first == second
    code, third, _ = run_cli(capsys, "quantify", *AV, "--seed", "8")
    assert third != first


def test_quantify_declared_rates(capsys, small_model):
    code, out, _ = run_cli(capsys, "quantify", small_model, "--rates", "declared")
    assert code == 0
    doc = json.loads(out)
    check_schema("quantify", doc)
    assert doc["rates_fit"] == {"A": 40.0, "B": 35.0, "C": 25.0}
    assert doc["rates_source"] == "declared"


def test_quantify_declared_rates_missing(capsys):
    code, _, err = run_cli(capsys, "quantify", *AV, "--rates", "declared")
    assert code == 1
    assert "does not declare rates" in json.loads(err)["error"]["message"]


def test_quantify_csv(capsys, small_model):
    code, out, _ = run_cli(capsys, "quantify", small_model, "--format", "csv", "--seed", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "event,probability"
    assert len(lines) == 1 + 5  # A B C M T


def test_to_bn_json(capsys, small_model):
    code, out, _ = run_cli(capsys, "to-bn", small_model, "--rates", "declared")
    assert code == 0
    doc = json.loads(out)
    check_schema("network", doc)
    assert doc["query"] == "T"
    by_id = {n["id"]: n for n in doc["nodes"]}
    assert by_id["M"]["parents"] == ["A", "B"]
    assert by_id["M"]["cpt_rows"] == [0.0, 0.0, 0.0, 1.0]


def test_infer_single_query(capsys):
    code, out, _ = run_cli(
        capsys, "infer", *AV, "--evidence", "COLLISION=true", "--query", "PF5", "--seed", "3"
    )
    assert code == 0
    doc = json.loads(out)
    check_schema("infer", doc)
    assert set(doc) == {"PF5"}
    assert 0.0 < doc["PF5"] < 1.0


def test_infer_default_queries_all_nodes(capsys, small_model):
    code, out, _ = run_cli(capsys, "infer", small_model, "--rates", "declared")
    doc = json.loads(out)
    assert set(doc) == {"A", "B", "C", "M", "T"}


def test_infer_methods_agree(capsys, small_model):
    args = ("infer", small_model, "--rates", "declared", "--evidence", "T=true")
    _, ve_out, _ = run_cli(capsys, *args, "--method", "ve")
    _, enum_out, _ = run_cli(capsys, *args, "--method", "enum")
    ve = json.loads(ve_out)
    enum = json.loads(enum_out)
    for node, value in ve.items():
        assert enum[node] == pytest.approx(value, abs=1e-12)


def test_infer_bad_evidence_value_is_usage_error(capsys, small_model):
    with pytest.raises(SystemExit) as exc_info:
        main(["infer", small_model, "--evidence", "T=maybe"])
    assert exc_info.value.code == 2


def test_infer_unknown_node_exit_1(capsys, small_model):
    code, _, err = run_cli(capsys, "infer", small_model, "--evidence", "GHOST=true")
    assert code == 1
    assert "GHOST" in json.loads(err)["error"]["message"]
    code, _, err = run_cli(capsys, "infer", small_model, "--query", "GHOST")
    assert code == 1
    assert "GHOST" in json.loads(err)["error"]["message"]


def test_infer_inconsistent_evidence_exit_1(capsys, small_model):
    code, _, err = run_cli(
        capsys, "infer", small_model, "--rates", "declared",
        "--evidence", "T=true", "--evidence", "A=false",
        "--evidence", "B=false", "--evidence", "C=false",
    )
    assert code == 1
    assert json.loads(err)["error"]["type"] == "InconsistentEvidenceError"


def test_experiment_json_schema_and_save(capsys, small_model, tmp_path):
    saved = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys, "experiment", small_model, "--reps", "3", "--seed", "2", "--save", str(saved)
    )
    assert code == 0
    doc = json.loads(out)
    check_schema("experiment", doc)
    assert json.loads(saved.read_text()) == doc
    assert len(doc["events"]) == 3
    assert doc["config"]["evidence"] == {"T": True}


def test_experiment_csv_mirrors_reference_columns(capsys, small_model):
    code, out, _ = run_cli(
        capsys, "experiment", small_model, "--reps", "2", "--seed", "2", "--format", "csv"
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "event,name,mean_fit,halfwidth_fit"
    assert len(lines) == 1 + 3


def test_experiment_determinism(capsys, small_model):
    args = ("experiment", small_model, "--reps", "3", "--seed", "4")
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second


def test_report_from_saved_run(capsys, small_model, tmp_path):
    saved = tmp_path / "report.json"
    run_cli(capsys, "experiment", small_model, "--reps", "3", "--seed", "2", "--save", str(saved))

    code, out, _ = run_cli(capsys, "report", "--load", str(saved), "--format", "table")
    assert code == 0
    section = out.split("## Posterior rates")[1].split("##")[0]
    rows = [l for l in section.splitlines() if l.startswith("| ") and "---" not in l][1:]
    means = [float(l.split("|")[3]) for l in rows]
    assert len(means) == 3
    assert means == sorted(means, reverse=True)
    assert "Subsystem roll-ups" in out

    code, out, _ = run_cli(capsys, "report", "--load", str(saved), "--format", "csv")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "id,mean_fit,ci_low,ci_high"
    assert len(rows) == 1 + 3

    code, out, _ = run_cli(capsys, "report", "--load", str(saved), "--format", "json")
    check_schema("experiment", json.loads(out))


def test_report_inline_run(capsys, small_model):
    code, out, _ = run_cli(
        capsys, "report", small_model, "--reps", "2", "--seed", "1", "--format", "table"
    )
    assert code == 0
    assert out.startswith("# Failure-rate report")


def test_out_flag_writes_file(capsys, small_model, tmp_path):
    target = tmp_path / "sets.json"
    code, out, _ = run_cli(capsys, "cutsets", small_model, "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text()) == [["C"], ["A", "B"]]


def test_module_entrypoint_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "ftbn", "cutsets", "--builtin", "av"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert len(json.loads(proc.stdout)) == 22
