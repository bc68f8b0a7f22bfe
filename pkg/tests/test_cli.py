import csv
import io
import json
import subprocess
import sys

import pytest

from ezfsim.cli import PRESETS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestFronthaul:
    def test_reference_tables_csv(self, capsys):
        code, out, _ = run(capsys, "fronthaul", "--paper-tables")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 14
        apd = [r["gain_percent"] for r in rows if r["scheme"] == "APD"]
        dezf = [r["gain_percent"] for r in rows if r["scheme"] == "DEZF"]
        assert apd == ["74.33", "52.26", "24.04", "7.62", "74.33", "61.83", "36.83"]
        assert dezf == ["68.27", "40.87", "5.77", "-14.66", "68.27", "52.88", "22.12"]

    def test_json_matches_csv(self, capsys):
        _, out_csv, _ = run(capsys, "fronthaul", "--paper-tables")
        _, out_json, _ = run(capsys, "fronthaul", "--paper-tables", "--format", "json")
        rows = list(csv.DictReader(io.StringIO(out_csv)))
        doc = json.loads(out_json)
        assert len(doc["rows"]) == len(rows)
        for a, b in zip(rows, doc["rows"]):
            for key, value in a.items():
                assert float(value) == float(b[key]) if key != "scheme" else value == b[key]

    def test_bad_sweep_exit_code(self, capsys, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("system: {N_T: 256, P: 4, M: 64, K: 16, N_R: 4, L: 2}\n"
                       "sweep:\n  - {P: 8, M: 64}\n  - {K: 24}\n")
        code, out, err = run(capsys, "fronthaul", "--config", str(cfg))
        assert code == 2
        assert "P·M = N_T" in err
        assert len(out.strip().splitlines()) == 3

    def test_bad_base_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("system: {N_T: 100, P: 4, M: 64, K: 16, N_R: 4, L: 2}\n")
        code, _, err = run(capsys, "fronthaul", "--config", str(cfg))
        assert code == 2 and "P·M = N_T" in err

    def test_sweep_lists_and_out(self, capsys, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("system: {N_T: 256, P: 4, M: 64, K: 16, N_R: 4, L: 2, tau: 65}\n"
                       "sweep: {K: [16, 36]}\n")
        out = tmp_path / "sub" / "t.csv"
        assert run(capsys, "fronthaul", "--config", str(cfg), "--out", str(out))[0] == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["zeta"] for r in rows] == ["8544", "10560", "30744", "38160"]

    def test_preset(self, capsys):
        code, out, _ = run(capsys, "fronthaul", "--preset", "table2")
        assert code == 0 and len(out.strip().splitlines()) == 7


class TestBer:
    def test_zero_trials(self, capsys):
        code, _, err = run(capsys, "ber", "--preset", "fig3", "--scale", "0.25", "--trials", "0")
        assert code == 2 and "trials" in err

    def test_preset_scaling(self):
        from ezfsim.cli import _apply_scale
        s = _apply_scale(PRESETS["fig3"], 0.25)
        assert s["system"]["n_t"] == 64
        assert [(c["n_bcu"], c["m"]) for c in s["cases"]] == [(4, 16), (8, 8)]

    def test_outputs_and_determinism(self, capsys, tmp_path):
        args = ["ber", "--preset", "fig3", "--scale", "0.25", "--trials", "2", "--power-db", "0", "6",
                "--seed", "5"]
        assert run(capsys, *args, "--out", str(tmp_path / "a.csv"))[0] == 0
        assert run(capsys, *args, "--out", str(tmp_path / "b.csv"))[0] == 0
        for case in ("P4_M16_K4", "P8_M8_K4"):
            a = (tmp_path / f"a_{case}.csv").read_bytes()
            assert a == (tmp_path / f"b_{case}.csv").read_bytes()
            assert a.startswith(b"scheme,power_db,ber,bits,ci95\n")
            assert len(a.decode().strip().splitlines()) == 1 + 4 * 2
        meta = json.loads((tmp_path / "a.meta.json").read_text())
        assert meta["seed"] == 5 and meta["trials"] == 2 and meta["rng"]
        assert meta["cases"][1]["cfg"]["n_bcu"] == 8
        assert {"redraws", "bits_per_point"} <= set(meta["cases"][0])
        assert meta["model"]["kind"] == "iid-rayleigh"

    def test_single_case_stdout(self, capsys):
        code, out, err = run(capsys, "ber", "--preset", "fig4", "--scale", "0.125", "--trials", "1",
                             "--scheme", "CEN", "--power-db", "3", "--noiseless",
                             "--model", "bcu-disparity", "--spread-db", "6")
        assert code == 0
        assert "# P4_M8_K4" in out and "CEN,3.0,0.0," in out
        assert json.loads(err)["model"] == {"kind": "bcu-disparity", "spread_db": 6.0}

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "ber", "--preset", "fig3", "--scale", "0.125", "--trials", "1",
                           "--scheme", "APD", "--power-db", "0", "--format", "json")
        doc = json.loads(out)
        assert code == 0 and set(doc) == {"meta", "curves"}


class TestLedgerAndValidate:
    def test_ledger(self, capsys):
        code, out, _ = run(capsys, "ledger", "--preset", "table1", "--scheme", "APD")
        doc = json.loads(out)
        assert code == 0 and doc["total"] == 8544 and doc["scheme"] == "APD"

    def test_ledger_all(self, capsys):
        code, out, _ = run(capsys, "ledger", "--preset", "table1")
        assert [d["total"] for d in json.loads(out)] == [33280, 8544, 10560]

    def test_validate(self, capsys):
        code, out, _ = run(capsys, "validate", "--instances", "3")
        assert code == 0 and "FAIL" not in out

    def test_validate_fault(self, capsys):
        code, out, _ = run(capsys, "validate", "--instances", "3", "--inject-fault", "skip-q",
                           "--format", "json")
        doc = json.loads(out)
        assert code == 4 and not doc["passed"]

    def test_missing_config(self, capsys):
        code, _, err = run(capsys, "ledger")
        assert code == 2 and "configuration" in err

    def test_unreadable_config(self, capsys, tmp_path):
        code, _, _ = run(capsys, "ledger", "--config", str(tmp_path / "nope.yaml"))
        assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ezfsim", "fronthaul", "--paper-tables"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "74.33" in proc.stdout


@pytest.mark.parametrize("argv", [["--help"], ["fronthaul", "--help"]])
def test_help(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 0
