import csv
import json
from pathlib import Path

import pytest

from zakharov_lab.cli import EXIT_BLOWUP, EXIT_ENVELOPE, EXIT_OK, EXIT_USAGE, OUT_ENV, main, run_id_for
from zakharov_lab.state import load_state


def write(tmp_path: Path, text: str, name: str = "cfg.toml") -> Path:
    p = tmp_path / name
    p.write_text(text)
    return p


def rows(path: Path) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


PLANE = """
experiment = "simulate"
[grid]
M = 32
[integrator]
dt = 1e-3
T = 0.2
record_every = 50
[data]
kind = "plane_wave"
u_amplitude = 1.0
plane_k = 1
"""

ESTIMATES = """
experiment = "estimates"
seed = 3
[estimates]
kmax = 50
fuzz_count = 1000
N_list = [1, 2, 4]
L_list = [1, 2]
trials = 10
"""


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--out", str(out), "--workers", "1", "--quiet", *extra])


class TestSimulate:
    def test_plane_wave(self, tmp_path):
        out = tmp_path / "out"
        assert run("simulate", write(tmp_path, PLANE), out) == EXIT_OK
        diag = rows(out / "diagnostics.csv")
        assert len(diag) == 5
        assert all(float(r["nonlinear_part_norm"]) < 1e-10 for r in diag)
        assert diag[0]["run_id"] == json.loads((out / "manifest.json").read_text())["run_id"]
        final = load_state(out / "final_state.zks")
        assert final.time == pytest.approx(0.2)

    def test_zero_data(self, tmp_path):
        cfg = write(tmp_path, PLANE.replace('"plane_wave"', '"zero"'))
        assert run("simulate", cfg, tmp_path / "o") == EXIT_OK
        for r in rows(tmp_path / "o" / "diagnostics.csv"):
            for key in ("mass", "hamiltonian", "i_energy", "sobolev_u", "l2_wave", "fl_wave"):
                assert float(r[key]) == 0.0

    def test_blow_up(self, tmp_path):
        cfg = write(tmp_path, PLANE.replace('"plane_wave"', '"smooth"').replace("u_amplitude = 1.0", "u_amplitude = 1e6")
                    .replace("dt = 1e-3", "dt = 1e-2"))
        assert run("simulate", cfg, tmp_path / "o") == EXIT_BLOWUP
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["status"] == "blow-up"
        assert (tmp_path / "o" / "final_state.zks").exists()

    def test_missing_key(self, tmp_path, capsys):
        cfg = write(tmp_path, PLANE.replace("T = 0.2", ""))
        assert run("simulate", cfg, tmp_path / "o") == EXIT_USAGE
        assert "integrator.T" in capsys.readouterr().err

    @pytest.mark.parametrize("patch", [("M = 32", "M = 32\nbogus = 1"), ("[grid]", "[extra]\nx = 1\n[grid]")])
    def test_unknown_key(self, tmp_path, patch):
        assert run("simulate", write(tmp_path, PLANE.replace(*patch)), tmp_path / "o") == EXIT_USAGE

    def test_wrong_type(self, tmp_path):
        assert run("simulate", write(tmp_path, PLANE.replace("M = 32", 'M = "big"')), tmp_path / "o") == EXIT_USAGE

    @pytest.mark.parametrize("patch", [("M = 32", "M = 24"), ("dt = 1e-3", "dt = -1e-3"), ("T = 0.2", 'T = 0.2\nscheme = "rk4"')])
    def test_invalid_value(self, tmp_path, patch):
        assert run("simulate", write(tmp_path, PLANE.replace(*patch)), tmp_path / "o") == EXIT_USAGE

    def test_wrong_experiment(self, tmp_path):
        assert run("conserve", write(tmp_path, PLANE), tmp_path / "o") == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert run("simulate", tmp_path / "nope.toml", tmp_path / "o") == EXIT_USAGE


CONSERVE = """
experiment = "conserve"
[grid]
M = 32
[conserve]
dt_list = [2e-2, 1e-2]
T = 0.5
"""


class TestConserve:
    def test_table(self, tmp_path, capsys):
        assert main(["conserve", "--config", str(write(tmp_path, CONSERVE)), "--out", str(tmp_path / "o"),
                     "--workers", "1"]) == EXIT_OK
        text = capsys.readouterr().out
        assert "mass drift" in text and "mass: PASS" in text
        r = rows(tmp_path / "o" / "conserve.csv")
        assert [float(x["dt"]) for x in r] == [2e-2, 1e-2]
        assert r[0]["order"] == "" and float(r[1]["order"]) > 1.5

    def test_zero_data(self, tmp_path):
        cfg = write(tmp_path, CONSERVE + '[data]\nkind = "zero"\n')
        assert run("conserve", cfg, tmp_path / "o") == EXIT_OK
        assert all(float(x["mass_drift_rel"]) == 0 for x in rows(tmp_path / "o" / "conserve.csv"))

    def test_large_dt_flagged(self, tmp_path):
        cfg = write(tmp_path, CONSERVE.replace("[2e-2, 1e-2]", "[0.05, 4e-3]"))
        assert run("conserve", cfg, tmp_path / "o") == EXIT_OK
        flags = [x["dt_flagged"] for x in rows(tmp_path / "o" / "conserve.csv")]
        assert flags == ["1", "0"]

    def test_empty_list(self, tmp_path):
        assert run("conserve", write(tmp_path, CONSERVE.replace("[2e-2, 1e-2]", "[]")), tmp_path / "o") == EXIT_USAGE


SCAN = """
experiment = "highlow-scan"
[data]
kind = "fl_deterministic"
u_amplitude = 0.5
[scan]
M = 64
N_HL_list = [4, 8, 16, 32]
dt = 1e-3
T = 0.01
growth_N_HL = 4
growth_T_list = [0.02]
"""


class TestHighLowScan:
    def test_small(self, tmp_path):
        assert run("highlow-scan", write(tmp_path, SCAN), tmp_path / "o") == EXIT_OK
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["predicted_slope"] == pytest.approx(0.6 - 0.45 - 0.5)
        assert len(rows(tmp_path / "o" / "scan.csv")) == 4
        ledger = rows(tmp_path / "o" / "growth_ledger.csv")
        assert ledger and all(float(r["audit_error"]) < 1e-9 for r in ledger)

    def test_short_list(self, tmp_path):
        cfg = write(tmp_path, SCAN.replace("[4, 8, 16, 32]", "[4, 8]"))
        assert run("highlow-scan", cfg, tmp_path / "o") == EXIT_USAGE

    def test_degenerate(self, tmp_path):
        # every cutoff sits above the grid's dealias band, so no high part exists
        cfg = write(tmp_path, SCAN.replace("[4, 8, 16, 32]", "[64, 128, 256, 512]"))
        assert run("highlow-scan", cfg, tmp_path / "o") == EXIT_USAGE


class TestEstimates:
    def test_small(self, tmp_path):
        assert run("estimates", write(tmp_path, ESTIMATES), tmp_path / "o") == EXIT_OK
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["resonance_sweep_residual"] == 0 and summary["resonance_fuzz_residual"] == 0
        assert summary["count_max_ratio"] <= 16
        assert len(rows(tmp_path / "o" / "sweep.csv")) == 3 * 2 * 4
        assert len(rows(tmp_path / "o" / "probe.csv")) == 3 * 2 * 10

    def test_overlapping_shell(self, tmp_path):
        cfg = write(tmp_path, ESTIMATES + 'shell_convention = "overlapping"\n')
        assert run("estimates", cfg, tmp_path / "o") == EXIT_ENVELOPE

    def test_empty_lists(self, tmp_path):
        assert run("estimates", write(tmp_path, ESTIMATES.replace("[1, 2, 4]", "[]")), tmp_path / "o") == EXIT_USAGE

    def test_non_dyadic(self, tmp_path):
        assert run("estimates", write(tmp_path, ESTIMATES.replace("[1, 2, 4]", "[1, 3]")), tmp_path / "o") == EXIT_USAGE


class TestReproducibility:
    def test_manifest(self, tmp_path):
        out = tmp_path / "o"
        run("estimates", write(tmp_path, ESTIMATES), out)
        m = json.loads((out / "manifest.json").read_text())
        assert m["status"] == "ok" and m["finished"] is not None
        assert set(m["outputs"]) == {"sweep.csv", "probe.csv", "summary.json"}
        assert m["seed"] == 3 and m["experiment"] == "estimates"

    def test_rerun_from_manifest(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run("estimates", write(tmp_path, ESTIMATES), a)
        assert main(["estimates", "--config", str(a / "manifest.json"), "--out", str(b), "--workers", "2",
                     "--quiet"]) == EXIT_OK
        for name in ("sweep.csv", "probe.csv", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_run_id_ignores_out(self, tmp_path):
        a = run_id_for({"seed": 0, "grid": {"M": 8}}, "simulate")
        assert a == run_id_for({"grid": {"M": 8}, "seed": 0}, "simulate")
        assert a != run_id_for({"seed": 1, "grid": {"M": 8}}, "simulate")

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert main(["simulate", "--config", str(write(tmp_path, PLANE)), "--quiet"]) == EXIT_OK
        assert (tmp_path / "env" / "manifest.json").exists()

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, ESTIMATES)
        run("estimates", cfg, tmp_path / "a", "--seed", "9")
        m = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert m["seed"] == 9 and m["config"]["seed"] == 9

    def test_bad_workers(self, tmp_path):
        assert run("estimates", write(tmp_path, ESTIMATES), tmp_path / "o", "--workers", "0") == EXIT_USAGE
