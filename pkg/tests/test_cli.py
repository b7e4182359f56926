import json

import pandas as pd
import pytest

from main import main
from routers import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK
from routers.lqg_router import parse_grid
from routers.validate_router import validate_path
from services.diagram import brute_force_solve
from services.diagram_loader import load_diagram
from tests.conftest import DATA, TOY
from utils.errors import DiagramError
from utils.settings import settings

QUERIES = DATA / "queries"
TOY_LOOP_HEADER = ("fun_weight.payload,res_cost.total,"
                   "witness_motor,witness_battery,witness_weight,witness_cost")


def write_json(path, document):
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


# ----- solve -----

def test_solve_writes_json_records(tmp_path):
    assert main(["solve", str(QUERIES / "toy_loop_payload.json"), "--out", str(tmp_path)]) == EXIT_OK
    records = json.loads((tmp_path / "toy_loop_payload.json").read_text())
    assert [r["fun_weight.payload"] for r in records] == [0.0, 0.5, 1.0, 5.0]
    assert records[0]["res_cost.total"] == 70.0
    assert (records[0]["witness_motor"], records[0]["witness_battery"]) == ("small", "light")
    assert (records[1]["witness_motor"], records[1]["witness_battery"]) == ("large", "heavy")
    assert records[3]["res_cost.total"] is None


def test_solve_writes_csv(tmp_path):
    query = str(QUERIES / "toy_loop_payload.json")
    assert main(["solve", query, "--out", str(tmp_path), "--format", "csv"]) == EXIT_OK
    lines = (tmp_path / "toy_loop_payload.csv").read_text().splitlines()
    assert lines[0] == TOY_LOOP_HEADER
    assert lines[1] == "0.0,70.0,small,light,sum,sum"
    assert lines[4] == "5.0,,,,,"


def test_solve_is_deterministic(tmp_path):
    query = str(QUERIES / "toy_loop_payload.json")
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["solve", query, "--out", str(first), "--format", "csv"]) == EXIT_OK
    assert main(["solve", query, "--out", str(second), "--format", "csv"]) == EXIT_OK
    assert (first / "toy_loop_payload.csv").read_bytes() == (second / "toy_loop_payload.csv").read_bytes()


def test_solve_budget_query(tmp_path):
    assert main(["solve", str(QUERIES / "toy_loop_budget.json"), "--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "toy_loop_budget.csv")
    assert list(frame["res_cost.total"]) == [60.0, 120.0, 200.0]
    assert frame["fun_weight.payload"].isna().tolist() == [True, False, False]
    assert list(frame["fun_weight.payload"][1:]) == [1.0, 1.0]


def test_infeasible_query_exits_with_two(tmp_path):
    query = write_json(tmp_path / "heavy.json", {
        "diagram": str(DATA / "toy_loop.json"),
        "sweep": [[5.0], [10.0]],
    })
    assert main(["solve", str(query), "--out", str(tmp_path)]) == EXIT_INFEASIBLE
    assert (tmp_path / "heavy.csv").exists()


@pytest.mark.parametrize("document", [
    {"diagram": "toy_loop.json", "sweep": [[0.0]]},
    {"sweep": [[0.0]]},
    {"diagram": "PLACEHOLDER", "sweep": [[0.0, 1.0]]},
    {"diagram": "PLACEHOLDER", "sweep": [[0.0]], "bounds": {"motor.mass": 1.0}},
])
def test_bad_queries_exit_with_one(tmp_path, document):
    document = {k: (str(DATA / "toy_loop.json") if v == "PLACEHOLDER" else v) for k, v in document.items()}
    query = write_json(tmp_path / "bad.json", document)
    assert main(["solve", str(query), "--out", str(tmp_path)]) == EXIT_INPUT


def test_iteration_budget_flag(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "MAX_ITER", settings.MAX_ITER)
    query = str(QUERIES / "toy_loop_payload.json")
    assert main(["--max-iter", "1", "solve", query, "--out", str(tmp_path)]) == EXIT_INPUT
    assert settings.MAX_ITER == 1


def test_drone_query_matches_enumeration(tmp_path):
    query = write_json(tmp_path / "one_mission.json", {
        "diagram": str(DATA / "drone_toy.json"),
        "sweep": [[15, 100, 0.1]],
        "format": "json",
    })
    assert main(["solve", str(query), "--out", str(tmp_path)]) == EXIT_OK
    records = json.loads((tmp_path / "one_mission.json").read_text())
    expected = brute_force_solve(load_diagram(DATA / "drone_toy.json"), (15.0, 100.0, 0.1))
    got = sorted((r["res_cost_sum.total"], r["res_energy.total_power"], r["res_lqg.tracking_error"])
                 for r in records)
    assert len(got) == len(expected)
    for row, point in zip(got, sorted(expected.points)):
        assert row == pytest.approx(point, rel=1e-12)


# ----- lqg-sweep -----

def test_scalar_sweep_has_closed_forms(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["lqg-sweep", str(DATA / "systems" / "scalar.json"), "--alpha", "0.1,1,10", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["alpha", "v", "w", "P_track", "P_effort",
                                   "closed_form_P_track", "closed_form_P_effort"]
    assert frame["P_track"].is_monotonic_decreasing
    assert frame["P_effort"].is_monotonic_increasing
    assert frame["P_track"].to_numpy() == pytest.approx(frame["closed_form_P_track"].to_numpy(), rel=1e-6)
    assert frame.loc[1, "P_track"] == pytest.approx(1.5)


def test_matrix_sweep_has_no_closed_forms(tmp_path):
    out = tmp_path / "heading.json"
    code = main(["lqg-sweep", str(DATA / "systems" / "drone_heading.json"), "--alpha", "0.1:10:3",
                 "--w", "0.5,1", "--format", "json", "--out", str(out)])
    assert code == EXIT_OK
    records = json.loads(out.read_text())
    assert len(records) == 6
    assert "closed_form_P_track" not in records[0]


def test_empty_grid_gives_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    code = main(["lqg-sweep", str(DATA / "systems" / "scalar.json"), "--alpha", "1:10:0", "--out", str(out)])
    assert code == EXIT_OK
    assert out.read_text() == "alpha,v,w,P_track,P_effort,closed_form_P_track,closed_form_P_effort\n"


@pytest.mark.parametrize("flags", [["--alpha", "1:10"], ["--alpha", "0:10:3"], ["--v", "-1"], ["--w", "x"]])
def test_bad_sweep_grids_exit_with_one(tmp_path, flags):
    args = ["lqg-sweep", str(DATA / "systems" / "scalar.json"), "--out", str(tmp_path / "s.csv")] + flags
    assert main(args) == EXIT_INPUT


def test_parse_grid_forms():
    assert parse_grid(None) is None
    assert parse_grid("1:100:3") == pytest.approx([1.0, 10.0, 100.0])
    assert parse_grid("0:1:3", log=False) == pytest.approx([0.0, 0.5, 1.0])
    assert parse_grid("0.5, 2") == [0.5, 2.0]
    assert parse_grid("1:10:0") == []


# ----- validate -----

SHIPPED = (
    [DATA / "catalogs" / name for name in sorted(p.name for p in (DATA / "catalogs").glob("*.csv"))]
    + sorted(TOY.glob("*.csv"))
    + [DATA / "toy_loop.json", DATA / "drone_toy.json", DATA / "drone.json"]
    + sorted((DATA / "queries").glob("*.json"))
    + sorted((DATA / "systems").glob("*.json"))
)


def test_shipped_files_validate():
    assert main(["validate"] + [str(p) for p in SHIPPED]) == EXIT_OK


@pytest.mark.parametrize("path, kind", [
    (DATA / "toy" / "batteries.csv", "catalog"),
    (DATA / "toy_loop.json", "diagram"),
    (QUERIES / "toy_loop_budget.json", "query"),
    (DATA / "systems" / "scalar.json", "system"),
])
def test_file_kinds(path, kind):
    report = validate_path(str(path))
    assert report.ok, report.message
    assert report.kind == kind


def test_bad_catalog_column_is_located(tmp_path):
    text = (TOY / "batteries.csv").read_text().replace("NiMH,50,75,2.4,800", "NiMH,50,75,2.4,lots")
    bad = tmp_path / "batteries.csv"
    bad.write_text(text)
    report = validate_path(str(bad))
    assert not report.ok
    assert ":6 [cycle_life]" in report.message
    assert main(["validate", str(bad)]) == EXIT_INPUT


def test_port_mismatch_names_both_ports(tmp_path):
    document = json.loads((DATA / "toy_loop.json").read_text())
    document["edges"][0] = "battery.power -> motor.mass"
    document["edges"][1] = "weight.motor -> motor.power"
    bad = write_json(tmp_path / "mismatch.json", document)
    report = validate_path(str(bad))
    assert not report.ok
    assert "battery.power" in report.message and "motor.mass" in report.message


def test_unreadable_json_is_an_input_error(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert not validate_path(str(bad)).ok
    assert main(["validate", str(bad)]) == EXIT_INPUT


def test_json_syntax_error_names_line_and_column(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text('{\n  "nodes": [,\n  "edges": []\n}\n')
    report = validate_path(str(bad))
    assert not report.ok
    assert f"{bad}:2:13: invalid JSON" in report.message
    with pytest.raises(DiagramError) as exc:
        load_diagram(bad)
    assert ":2:13: invalid JSON: Expecting value" in str(exc.value)
