import json
import subprocess
import sys

import pytest

from isogap import dump_model, make_star, star_weights
from isogap.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestAnalyze:
    def test_star_all_ok(self, capsys):
        code, out, _ = run(capsys, "analyze", "--model", "star",
                           "--a", "0.3," + ",".join(["0.1"] * 7))
        assert code == 0
        assert "rho = 0.7" in out and "VIOLATED" not in out

    def test_cycle_no_certificate(self, capsys):
        code, out, _ = run(capsys, "analyze", "--model", "cycle", "--p", "7", "--horizon", "7")
        assert code == 0
        assert "no spectral gap certificate; k_7 = " in out

    def test_malformed_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("2\n0.5 0.4\n0.5 0.5\n")
        code, _, err = run(capsys, "analyze", "--file", str(bad))
        assert code == 2 and "RowSumViolation" in err

    def test_missing_model(self, capsys):
        assert run(capsys, "analyze")[0] == 2

    def test_bad_horizon_and_kappa(self, capsys):
        assert run(capsys, "analyze", "--model", "star", "--horizon", "0")[0] == 2
        assert run(capsys, "analyze", "--model", "star", "--kappa", "0.5")[0] == 2

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["analyze", "--model", "star", "--bogus"])
        assert exc.value.code == 2

    def test_outputs_written(self, capsys, tmp_path):
        code, _, _ = run(capsys, "analyze", "--model", "hypercube", "--dim", "2",
                         "--horizon", "40", "--out", str(tmp_path), "--format", "text,csv,json")
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["bounds.json", "gelfand.csv", "profile.csv", "spectral.json", "summary.txt"]
        rep = json.loads((tmp_path / "bounds.json").read_text())
        assert rep["all_ok"] and rep["certificate"]["m_nonempty"]
        spec = json.loads((tmp_path / "spectral.json").read_text())
        assert spec["rho"] == 0.5

    def test_round_trip(self, capsys, tmp_path):
        model = make_star(star_weights(0.3, 6))
        path = tmp_path / "star.txt"
        dump_model(model, path)
        _, a, _ = run(capsys, "analyze", "--model", "star", "--n", "6", "--horizon", "30")
        _, b, _ = run(capsys, "analyze", "--file", str(path), "--horizon", "30")
        # everything after the model line must agree at printed precision
        assert a.splitlines()[1:] == b.splitlines()[1:]


class TestReproduce:
    def test_hypercube(self, capsys):
        code, out, _ = run(capsys, "reproduce", "hypercube", "--dim", "8")
        assert code == 0 and "FAIL" not in out

    def test_mm1(self, capsys):
        code, out, _ = run(capsys, "reproduce", "mm1", "--p", "0.7", "--trunc", "600")
        assert code == 0 and "0.916515" in out

    def test_cycle(self, capsys):
        code, out, _ = run(capsys, "reproduce", "cycle", "--p", "7")
        assert code == 0 and "m_nonempty=False" in out

    def test_star_reports_true_value(self, capsys):
        # the target a1 is not the spectral radius (which is 1 - a1), so
        # the command must report the mismatch instead of hiding it
        code, out, _ = run(capsys, "reproduce", "star", "--a1", "0.3", "--n", "10")
        assert code == 1
        assert "0.7" in out and "FAIL" in out


class TestProptest:
    def test_default_passes(self, capsys):
        code, out, _ = run(capsys, "proptest", "--trials", "20", "--seed", "3")
        assert code == 0 and "checks=" in out

    def test_injected_failure(self, capsys):
        code, out, _ = run(capsys, "proptest", "--trials", "3", "--inject-failure")
        assert code == 1
        assert "reproduce: seed=0 trial=0" in out

    def test_zero_trials(self, capsys):
        code, out, _ = run(capsys, "proptest", "--trials", "0")
        assert code == 0 and "checks=0" in out


class TestProfileCertify:
    def test_profile_csv(self, capsys):
        code, out, _ = run(capsys, "profile", "--model", "cycle", "--p", "5", "--horizon", "3")
        assert code == 0 and out.splitlines()[0].startswith("n,k_inf")

    def test_profile_candidates_for_large(self, capsys):
        code, out, _ = run(capsys, "profile", "--model", "hypercube", "--dim", "6",
                           "--horizon", "3")
        assert code == 0 and out.splitlines()[1].endswith(",false")

    def test_certify(self, capsys):
        code, out, _ = run(capsys, "certify", "--model", "star", "--format", "json")
        assert code == 0 and json.loads(out)["m_nonempty"]

    def test_certify_too_large(self, capsys):
        code, _, err = run(capsys, "certify", "--model", "hypercube", "--dim", "5")
        assert code == 2 and "exhaustive" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "isogap", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("isogap")
