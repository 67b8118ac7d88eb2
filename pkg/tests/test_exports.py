import io
import json
import zipfile

import openpyxl
import pandas as pd
import pytest

import file_manager
from analysis import DmaxScanResult, Rung, SequenceResult, summarize_sequence
from export_excel import generate_excel
from export_pdf import generate_pdf
from export_table import generate_csv, generate_json
from export_zip import generate_zip


@pytest.fixture
def sequence():
    rungs = []
    for m in (2, 3, 4, 5):
        N = (4 * m + 1) ** 2
        rel = -0.5000066 + 0.3 * N ** -2.0
        nrel = -0.5 + 0.3 * N ** -2.0
        rungs.append(Rung(m=m, Ne=2 * m * m, N=N, E_rel=rel, E_nrel=nrel, shift=rel - nrel,
                          outer_iters=3))
    result = SequenceResult(rungs=rungs, parameters={"system": {"Z1": 1.0, "Z2": 0.0, "R": 1.0,
                                                                "mode": "relativistic"},
                                                     "transform": {"nu": 2, "D_max": 20.0,
                                                                   "xi_max": 40.02},
                                                     "p": 4})
    return summarize_sequence(result)


@pytest.fixture
def failed_sequence(sequence):
    sequence.rungs.append(Rung(m=6, Ne=72, N=625, status="failed",
                               error="ConvergenceError: outer iteration did not converge"))
    return sequence


def test_csv_layout(sequence):
    text = generate_csv(sequence)
    lines = text.splitlines()
    assert lines[0] == "m,Ne,N,E_rel,E_nrel,shift,outer_iters"
    assert len([l for l in lines if not l.startswith("#")]) == 5
    assert any(l.startswith("# E_extrap E_rel=") for l in lines)


def test_csv_round_trips_values(sequence):
    frame = pd.read_csv(io.StringIO(generate_csv(sequence)), comment="#")
    for rung, (_, row) in zip(sequence.rungs, frame.iterrows()):
        assert row["E_rel"] == rung.E_rel
        assert row["shift"] == rung.shift


def test_csv_is_deterministic(sequence):
    assert generate_csv(sequence) == generate_csv(sequence)


def test_failure_marker(failed_sequence):
    text = generate_csv(failed_sequence)
    assert "# FAILED m=6: ConvergenceError" in text
    assert not failed_sequence.succeeded


def test_json_fields(failed_sequence):
    data = json.loads(generate_json(failed_sequence))
    for key in ("rungs", "q_fit", "E_extrap", "uncertainty"):
        assert key in data
    assert data["rungs"][-1]["E_rel"] is None
    assert data["failures"][0]["m"] == 6


def test_excel(sequence):
    book = openpyxl.load_workbook(io.BytesIO(generate_excel(sequence)))
    assert book.sheetnames == ["Rungs", "Summary"]
    assert book["Rungs"]["A1"].value == "m"


def test_pdf(sequence):
    assert generate_pdf(sequence).startswith(b"%PDF")


def test_scan_reports(sequence):
    scan = DmaxScanResult(entries=[(15.0, sequence), (20.0, sequence)])
    text = generate_csv(scan)
    assert text.splitlines()[0].startswith("D_max,xi_max")
    assert "# scatter shift last=0 extrap=0" in text
    assert generate_pdf(scan).startswith(b"%PDF")
    json.loads(generate_json(scan))


def test_zip():
    payload = generate_zip({"csv": b"a", "json": b"{}"})
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        assert sorted(archive.namelist()) == ["minmax_report.csv", "minmax_report.json"]


def test_run_directories(tmp_path, monkeypatch):
    monkeypatch.setattr(file_manager, "BASE_DIR", str(tmp_path / "runs"))
    run_id = file_manager.generate_run_id()
    file_manager.save_run(run_id, "Z1 = 1\n", {"rungs": []}, b"m,Ne\n", "report.csv")
    assert file_manager.list_all_runs() == [run_id]
    assert file_manager.load_result(run_id) == {"rungs": []}
    assert file_manager.get_config_path(run_id).endswith("config.cfg")
    file_manager.delete_run(run_id)
    assert file_manager.list_all_runs() == []
    assert file_manager.load_result(run_id) is None
