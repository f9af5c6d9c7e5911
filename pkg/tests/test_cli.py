import json
import subprocess
import sys

import pytest

from lmanifold import cli
from lmanifold.formal import example_generator


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else cli.dumps(doc))
    return str(path)


def tsv(text):
    lines = text.strip().split("\n")
    header = lines[0].split("\t")
    return [dict(zip(header, l.split("\t"))) for l in lines[1:]]


def test_verify_bundled(capsys):
    code, out, _ = run(capsys, "verify", "bundled:gl11.json")
    assert code == 0 and json.loads(out)["passed"] is True
    code, out, err = run(capsys, "verify", "bundled:gl11-perturbed.json")
    report = json.loads(out)
    assert code == 1
    assert report["jacobi_failing_arities"] == [3]
    assert report["first_failing_relation"]["arity"] == 3
    assert "arity 3" in err


def test_verify_empty_operations(capsys, tmp_path):
    doc = {"format": 1, "kind": "algebra", "basis": [], "pairing": [], "operations": {}}
    code, out, _ = run(capsys, "verify", write(tmp_path, "empty.json", doc))
    assert code == 0


def test_verify_potentials(capsys, tmp_path):
    good = cli.potential_document(example_generator("dim_n2", phi={(1, 0): 1, (0, 0): 1}, C=1, n_even=2, truncation=6))
    code, out, _ = run(capsys, "verify", write(tmp_path, "n2.json", good))
    assert code == 0 and json.loads(out)["omega_QQ"] == "2/1"
    bad = cli.potential_document(example_generator("dim_n1", phi={(1, 0): 1, (0, 0): 1}, n_even=2, truncation=6))
    code, out, _ = run(capsys, "verify", write(tmp_path, "n1.json", bad))
    report = json.loads(out)
    assert code == 1 and report["first_nonzero_residual"] is not None
    code, _, _ = run(capsys, "verify", "--truncation", "9", write(tmp_path, "n1b.json", bad))
    assert code == 2


def test_parse_error_position(capsys, tmp_path):
    code, _, err = run(capsys, "verify", write(tmp_path, "bad.json", '{"format": 1,\n "kind": }'))
    assert code == 2 and "line 2" in err


@pytest.mark.parametrize(
    "doc,needle",
    [
        ({"format": 2, "kind": "algebra"}, "format"),
        ({"format": 1, "kind": "algebra", "basis": [], "pairing": []}, "operations"),
        ({"format": 1, "kind": "algebra", "basis": [{"label": "a", "parity": 0}], "pairing": [["1/0"]], "operations": {}}, "rational"),
        ({"format": 1, "kind": "algebra", "basis": [{"label": "a", "parity": 0}], "pairing": [["1"]], "operations": {"2": [[0, 0, "1"]]}}, "operations[2][0]"),
    ],
)
def test_schema_errors(capsys, tmp_path, doc, needle):
    code, _, err = run(capsys, "verify", write(tmp_path, "x.json", doc))
    assert code == 2 and needle in err


def test_convert_gl_potential_to_ops(capsys, tmp_path):
    pot = cli.potential_document(example_generator("gl", m=1, n=1, truncation=3))
    code, out, _ = run(capsys, "convert", write(tmp_path, "gl.json", pot))
    ops = json.loads(out)["operations"]
    assert code == 0 and list(ops) == ["2"]


def test_convert_flat_q(capsys, tmp_path):
    pot = cli.potential_document(example_generator("flat_q", a=[1, 0]))
    code, out, _ = run(capsys, "convert", write(tmp_path, "flat.json", pot))
    assert code == 0 and list(json.loads(out)["operations"]) == ["0"]


def test_convert_insufficient_truncation(capsys, tmp_path):
    pot = cli.potential_document(example_generator("gl", m=1, n=1, truncation=3))
    code, _, err = run(capsys, "convert", "--max-arity", "4", write(tmp_path, "gl.json", pot))
    assert code == 2 and "minimal sufficient truncation is 5" in err
    code, _, err = run(capsys, "convert", "--truncation", "2", "bundled:gl11.json")
    assert code == 2 and "is 5" in err


def test_roundtrip_is_byte_identical(capsys, tmp_path):
    code, out, _ = run(capsys, "convert", "bundled:gl11.json", "--roundtrip")
    original = cli.dumps(cli.read_document("bundled:gl11.json"))
    assert code == 0 and out == original
    pot = cli.potential_document(example_generator("gl", m=1, n=1, truncation=5))
    path = write(tmp_path, "gl.json", pot)
    code, out, _ = run(capsys, "convert", path, "--roundtrip")
    assert code == 0 and out == cli.dumps(pot)


@pytest.mark.parametrize("name", ["gl11.json", "gl11-perturbed.json"])
def test_bundled_documents_roundtrip(name):
    doc = cli.read_document("bundled:" + name)
    again = cli.algebra_document(cli.parse_algebra(doc), doc["name"])
    assert again == doc
    assert cli.load_json(cli.dumps(again)) == doc


def test_hdim_table(capsys):
    code, out, _ = run(capsys, "hdim-table", "--n", "0-2", "--max-degree", "4")
    rows = tsv(out)
    dims = {(int(r["n"]), int(r["p"])): int(r["dimension"]) for r in rows}
    assert code == 0
    assert [dims[(0, p)] for p in range(5)] == [1, 1, 0, 0, 0]
    assert [dims[(1, p)] for p in range(5)] == [1, 0, 0, 0, 0]
    assert [dims[(2, p)] for p in range(5)] == [1] * 5


def test_metric_column(capsys):
    code, out, _ = run(capsys, "hdim-table", "--n", "3", "--max-degree", "3", "--metric")
    rows = tsv(out)
    assert code == 0 and all(r["dimension"] == r["metric"] for r in rows)


def test_graph_table(capsys):
    code, out, _ = run(capsys, "graph-table", "--n", "2", "--w", "1-4")
    rows = tsv(out)
    assert code == 0
    for r in rows:
        expected = 1 if int(r["p"]) == int(r["w"]) - 1 else 0
        assert int(r["dimension"]) == expected


def test_presentation_and_cohft_commands(capsys):
    code, out, _ = run(capsys, "presentation-check", "--n", "1-3", "--max-degree", "2")
    assert code == 0 and all(r["ok"] == "yes" for r in tsv(out))
    code, out, _ = run(capsys, "cohft-check", "--n", "1-3")
    assert code == 0
    code, out, _ = run(capsys, "cohft-check", "bundled:gl11-perturbed.json", "--n", "3", "--format", "json")
    assert code == 1 and json.loads(out)[0]["equivariant"] is False


def test_budget_refusal(capsys, monkeypatch, tmp_path):
    code, out, err = run(capsys, "hdim-table", "--max-degree", "9")
    assert code == 2 and out == "" and "max_p" in err
    monkeypatch.setenv("LMAN_BUDGET", "max_p=6")
    code, out, _ = run(capsys, "hdim-table", "--n", "2", "--max-degree", "6")
    assert code == 0 and len(tsv(out)) == 7
    budget = tmp_path / "budget.json"
    budget.write_text('{"max_S": 1}')
    monkeypatch.setenv("LMAN_BUDGET", str(budget))
    code, out, err = run(capsys, "hdim-table", "--n", "0-2")
    assert code == 2 and out == ""
    monkeypatch.setenv("LMAN_BUDGET", "bogus=1")
    code, _, err = run(capsys, "hdim-table")
    assert code == 2 and "unknown budget key" in err


def test_jobs_are_deterministic(capsys):
    _, serial, _ = run(capsys, "hdim-table", "--n", "0-4", "--max-degree", "2")
    _, parallel, _ = run(capsys, "hdim-table", "--n", "0-4", "--max-degree", "2", "--jobs", "3")
    assert serial == parallel


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["hdim-table", "--n", "4-1"])
    assert exc.value.code == 2
    assert cli.main(["hdim-table", "--jobs", "0"]) == 2
    capsys.readouterr()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lmanifold", "verify", "bundled:gl11.json", "--format", "tsv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "passed\tyes" in proc.stdout
