import json
import shutil
import subprocess

import pytest

from qdrelay.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


SMALL = """
[sweep]
axis1 = fss
axis1_min = 0
axis1_max = 0.5
axis1_points = 3
axis2 = delta_e
axis2_min = 0
axis2_max = 0.2
axis2_points = 2
depths = 1, 2
"""


def test_sweep_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--scale", "3"]) == EXIT_OK
    files = sorted(p.name for p in out.iterdir())
    assert files == ["sweep.csv", "sweep.json", "sweep_L1.ppm", "sweep_L1.txt", "sweep_L2.ppm", "sweep_L2.txt"]
    assert len((out / "sweep.csv").read_text().splitlines()) == 1 + 6 * 2
    assert (out / "sweep_L1.ppm").read_bytes().startswith(b"P6\n9 6\n255\n")


def test_sweep_preset_with_overrides(tmp_path):
    out = tmp_path / "o"
    code = main(["sweep", "--preset", "fig2c", "--points", "3", "--depths", "2", "--out", str(out), "--formats", "csv"])
    assert code == EXIT_OK
    assert [p.name for p in out.iterdir()] == ["fig2c.csv"]


def test_sweep_threads_give_same_bytes(tmp_path):
    cfg = write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(cfg), "--out", str(a), "--formats", "csv"]) == EXIT_OK
    assert main(["sweep", "--config", str(cfg), "--out", str(b), "--formats", "csv", "--threads", "2"]) == EXIT_OK
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_point_reports_diagnostics(capsys):
    assert main(["point", "--preset", "fig2c", "--depth", "2", "--at", "4", "0.2", "--grid", "1024"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["fidelity"] == pytest.approx(0.93, abs=0.05)
    assert [len(x) for x in doc["bsm_overlaps"]] == [2, 1]
    assert len(doc["pmd_factors"]) == 4
    assert len(doc["stage_fidelities"]) == 3
    chk = doc["engine_check"]
    assert chk["M_grid"] == pytest.approx(chk["M_closed_form"], abs=1e-3)


def test_point_with_defaults(capsys):
    assert main(["point", "--depth", "0"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["fidelity"] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "text",
    ["[source]\npurcel_x = 2\n", "[source]\ng2 = 2\n", "[sweep]\npreset = fig2a\npurcell_xx_ratio = 2\n"],
)
def test_config_errors_exit_2(tmp_path, capsys, text):
    cfg = write(tmp_path, text)
    assert main(["point", "--config", str(cfg)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_flags_exit_2(tmp_path):
    assert main(["sweep", "--threads", "0"]) == EXIT_CONFIG
    assert main(["sweep", "--grid", "8"]) == EXIT_CONFIG
    assert main(["sweep", "--preset", "fig2c", "--depths", "x", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["sweep", "--out", str(tmp_path)]) == EXIT_CONFIG  # no axes
    with pytest.raises(SystemExit) as err:
        main(["sweep", "--preset", "fig9"])
    assert err.value.code == 2


def test_numeric_error_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, "[filter]\nfwhm = 0.001\n")
    assert main(["point", "--config", str(cfg), "--grid", "1024"]) == EXIT_NUMERIC
    assert "numeric error" in capsys.readouterr().err


def test_io_error_exits_4(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    assert main(["sweep", "--config", str(cfg), "--out", str(blocker / "x")]) == EXIT_IO
    assert main(["point", "--config", str(tmp_path / "missing.ini")]) == EXIT_IO


@pytest.mark.skipif(shutil.which("qdrelay") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["qdrelay", "point", "--depth", "1"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "fidelity" in json.loads(proc.stdout)
