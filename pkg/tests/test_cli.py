"""Command-line front end: strict configs, exit codes, artifacts, determinism."""

import json

import pytest

from ahscat.cli import main


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


CONSTANTS_CFG = {"experiment": "constants",
                 "grid": {"n": 2, "k": [1], "zeta": [2.3, 2.8]}}


class TestConfigStrictness:
    def test_unknown_key_named(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {**CONSTANTS_CFG, "extra": 1})
        code = main(["constants", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "config"
        assert "extra" in err["message"]

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code = main(["constants", "--config", str(path),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert json.loads(capsys.readouterr().err)["exit_code"] == 2

    def test_wrong_experiment_kind(self, tmp_path):
        cfg = _write(tmp_path, "c.json", CONSTANTS_CFG)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_missing_required_key(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {"experiment": "constants"})
        assert main(["constants", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2
        assert "grid" in json.loads(capsys.readouterr().err)["message"]


class TestConstants:
    def test_artifacts(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", CONSTANTS_CFG)
        out = tmp_path / "o"
        assert main(["constants", "--config", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        assert (out / "constants.csv").exists()
        assert (out / "constants.png").exists()
        report = json.loads((out / "constants.json").read_text())
        assert report["ahscat_version"]
        assert len(report["config_hash"]) == 16
        header = (out / "constants.csv").read_text().splitlines()
        assert header[0].startswith("# config_hash=")
        assert header[1].split(",")[:3] == ["k", "re_zeta", "im_zeta"]

    def test_deterministic_csv(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", CONSTANTS_CFG)
        blobs = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            assert main(["constants", "--config", cfg, "--out", str(out)]) == 0
            blobs.append((out / "constants.csv").read_bytes())
        capsys.readouterr()
        assert blobs[0] == blobs[1]


class TestSweepAndCompare:
    def test_sweep_csv_columns(self, tmp_path, capsys):
        cfg = _write(tmp_path, "s.json", {
            "experiment": "sweep",
            "model": {"kind": "cylinder", "n": 1, "zeta": 1.8, "eps": [0.0]},
            "modes": [[2], [5]],
            "output": {"figures": False}})
        out = tmp_path / "o"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[1].split(",") == [
            "eps", "mode_0", "lambda", "re_f_plus", "im_f_plus", "re_f_minus",
            "im_f_minus", "re_s", "im_s", "quality", "flags"]
        assert len(lines) == 4

    def test_compare_exact(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {
            "experiment": "compare", "reference": "exact",
            "model": {"kind": "cylinder", "n": 1, "zeta": 1.8},
            "modes": [[2], [5], [11]],
            "output": {"figures": False}})
        out = tmp_path / "o"
        assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        report = json.loads((out / "compare.json").read_text())
        assert report["max_rel_error"] < 1e-6

    def test_mismatched_prediction_zeta_is_join_error(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {
            "experiment": "compare", "reference": "exact",
            "model": {"kind": "cylinder", "n": 1, "zeta": 1.8},
            "prediction": {"zeta": 2.3},
            "modes": [[2], [5]]})
        code = main(["compare", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "GateError"

    def test_invalid_spectral_point_is_precondition_error(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {
            "experiment": "sweep",
            "model": {"kind": "cylinder", "n": 2, "zeta": 1.0},
            "modes": [[1, 0]]})
        code = main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 3
        capsys.readouterr()


class TestNormalformCommand:
    def test_report_documents_factor(self, tmp_path, capsys):
        cfg = _write(tmp_path, "n.json", {
            "experiment": "normalform",
            "jet": {"n": 1, "N": 2, "a": [0, "1/2", 1], "b": [[0], [0], ["1/3"]],
                    "c": [[[2]], [[1]], [[0]]]},
            "output": {"figures": False}})
        out = tmp_path / "o"
        assert main(["normalform", "--config", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        report = json.loads((out / "normalform.json").read_text())
        assert report["slots_cleared"] is True
        assert report["correction_factor"]["a_slot_response"] == [2, 1]
        assert report["gamma"]["2"] == [-1, 4]  # -a[1] / 2
