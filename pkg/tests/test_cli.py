import dataclasses
import io
import json

import jsonschema
import pytest

from uqcbounds import cli
from uqcbounds.linalg import haar_unitary, save_matrix

SCHEMA = json.loads(cli.SCHEMA_PATH.read_text())


def _run(argv):
    buf = io.StringIO()
    code = cli.run(argv, stdout=buf)
    return code, buf.getvalue()


def _json(argv):
    code, out = _run(argv + ["--format", "json"])
    data = json.loads(out)
    jsonschema.validate(data, SCHEMA)
    return code, data


def test_bound_inversion_json():
    code, data = _json(["bound", "--task", "inversion", "--d", "3"])
    assert code == 0
    (r,) = data["results"]
    assert abs(r["numeric_sdp_value"] - 8.0) <= 1e-5
    assert r["refined_bound"]["value"] == 9
    assert r["status"] == "consistent" and r["solver_status"] == "optimal"


def test_prob_curve_csv():
    code, out = _run(["prob-curve", "--task", "transposition", "--d", "2", "--n-max", "4", "--format", "csv"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "task,d,N,max_p_sdp,closed_form,canonical,trace_norm_path"
    assert [float(l.split(",")[4]) for l in lines[1:]] == [0.25, 0.64, 1.0, 1.0]
    assert [int(l.split(",")[2]) for l in lines[1:]] == [1, 2, 3, 4]


def test_certify_so_inversion():
    code, data = _json(["certify", "--task", "so_inversion", "--d", "4"])
    assert code == 0
    c = data["results"][0]["certificate"]
    assert c["values_match"] and abs(c["primal_value"] - 3) <= 1e-8


@pytest.mark.parametrize("argv", [
    ["bound", "--task", "conjugation", "--d-range", "2-4", "--round"],
    ["bound", "--task", "iteration:3", "--d", "2", "--u0", "haar:7"],
    ["bound", "--f-expr", "conj o inv", "--d", "2"],
    ["bound", "--task", "inversion", "--d", "2", "--subgroup", "tensor:2"],
    ["bound", "--task", "so_inversion", "--d", "3"],
    ["prob-curve", "--task", "inversion", "--d", "2", "--n-max", "3"],
    ["certify", "--task", "iteration", "--order", "2", "--d-range", "2,3"],
    ["catalysis", "--task", "conjugation", "--d", "3"],
    ["catalysis", "--task", "inversion", "--d", "2", "--known", "4"],
    ["derivative-check", "--task", "transposition", "--d", "3", "--u0", "haar:1"],
    ["derivative-check", "--f-expr", "inv * T", "--d", "2"],
])
def test_every_subcommand_emits_valid_json(argv):
    code, data = _json(argv)
    assert code == 0
    assert data["command"] == argv[0] and data["results"]


def test_output_is_deterministic():
    argv = ["bound", "--task", "conjugation", "--d-range", "2-4", "--u0", "haar:3", "--format", "json"]
    assert _run(argv)[1] == _run(argv)[1]
    argv = ["prob-curve", "--task", "transposition", "--d", "2", "--n-max", "3", "--format", "json"]
    assert _run(argv)[1] == _run(argv)[1]


def test_sweep_order_is_stable(monkeypatch):
    monkeypatch.setenv("UQC_THREADS", "3")
    _, data = _json(["bound", "--task", "transposition", "--d-range", "4,2,3"])
    assert [r["d"] for r in data["results"]] == [2, 3, 4]


def test_catalysis_verdicts():
    _, data = _json(["catalysis", "--task", "conjugation", "--d", "3"])
    assert data["results"][0]["catalysis"]["verdict"] == "catalysis_ruled_out"
    _, data = _json(["catalysis", "--task", "inversion", "--d", "2", "--known", "4"])
    assert data["results"][0]["catalysis"]["verdict"] == "inconclusive"


@pytest.mark.parametrize("argv", [
    [],
    ["bound", "--task", "inversion", "--d", "9"],
    ["bound", "--task", "inversion", "--d", "1"],
    ["bound", "--task", "rotation", "--d", "2"],
    ["bound", "--f-expr", "inv o", "--d", "2"],
    ["bound", "--task", "inversion", "--f-expr", "inv", "--d", "2"],
    ["bound", "--task", "inversion", "--d", "2", "--subgroup", "tensor:4"],
    ["bound", "--task", "inversion", "--d", "2", "--subgroup", "sp"],
    ["bound", "--task", "iteration", "--d", "2"],
    ["prob-curve", "--task", "inversion", "--d", "2", "--n-max", "0"],
    ["derivative-check", "--task", "inversion", "--d", "2", "--eps", "0.5"],
    ["bound", "--task", "inversion", "--d", "2", "--u0", "haar:x"],
])
def test_usage_errors(argv, capsys):
    code, out = _run(argv)
    assert code == 2 and out == ""
    assert "error" in capsys.readouterr().err


def test_u0_file(tmp_path):
    path = tmp_path / "u0.json"
    save_matrix(path, haar_unitary(3, seed=2))
    code, data = _json(["bound", "--task", "conjugation", "--d", "3", "--u0", str(path)])
    assert code == 0 and abs(data["results"][0]["numeric_sdp_value"] - 2) <= 1e-5
    assert _run(["bound", "--task", "conjugation", "--d", "2", "--u0", str(path)])[0] == 2


def test_inconsistent_exit_code(monkeypatch):
    real = cli.solve_primal

    def off_by_tenth(J):
        sol = real(J)
        return dataclasses.replace(sol, primal_value=sol.primal_value - 0.1)

    monkeypatch.setattr(cli, "solve_primal", off_by_tenth)
    code, data = _json(["bound", "--task", "inversion", "--d", "3"])
    assert code == 4
    assert data["results"][0]["status"] == "inconsistent"


def test_nonconvergence_exit_code(monkeypatch):
    real = cli.solve_primal
    monkeypatch.setattr(cli, "solve_primal", lambda J: dataclasses.replace(real(J), status="max_iter"))
    code, data = _json(["bound", "--task", "inversion", "--d", "2"])
    assert code == 3 and data["results"][0]["solver_status"] == "max_iter"


def test_text_and_csv_outputs():
    code, out = _run(["bound", "--task", "inversion", "--d", "2"])
    assert code == 0 and "inversion" in out and "consistent" in out
    code, out = _run(["bound", "--task", "inversion", "--d", "2", "--format", "csv"])
    assert out.splitlines()[0].startswith("task,order,subgroup,d,numeric_sdp_value")
