import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from keybound import cli, quantum as qc
from keybound.bounds import reports_from_csv
from keybound.bsa import EquivalenceClassSpec
from keybound.errors import NumericalFailure
from keybound.protocols import born_table, protocol_povms


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), stdout=out)
    return code, out.getvalue()


def product_class_file(tmp_path):
    povm = protocol_povms("six-state").tomography_povm
    plus = np.array([1, 1]) / np.sqrt(2)
    rho = np.kron(qc.projector(qc.ket(0, 2)), qc.projector(plus))
    spec = EquivalenceClassSpec(povm, povm, born_table(rho, povm, povm))
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(spec.to_json()))
    return path


def test_scan_ideal_six_state(tmp_path):
    out = tmp_path / "ideal.csv"
    code, _ = run("scan", "--protocol", "six-state", "--e-start", "0", "--e-end", "0.35", "--steps", "71",
                  "--dark-count", "0", "--efficiency", "1", "--out", str(out))
    assert code == 0
    rows = reports_from_csv(out.read_text())
    assert len(rows) == 71
    for row in rows:
        assert row["upper_bound"] == pytest.approx(max(0.0, 1 - 3 * row["e"]), abs=1e-4)
        assert row["upper_bound"] == pytest.approx((1 - row["lambda_max"]) * row["i_ent"], abs=1e-8)
        assert 0 <= row["upper_bound"] <= row["i_ent"] + 1e-9


def test_scan_four_state_noisy_shape():
    # stated shape: positive at e = 0 and zero by e ~ 0.15
    code, text = run("scan", "--protocol", "four-state", "--dark-count", "1e-6", "--efficiency", "0.15",
                     "--e-start", "0", "--e-end", "0.2", "--steps", "21")
    assert code == 0
    rows = reports_from_csv(text)
    assert rows[0]["upper_bound"] > 0
    assert all(r["upper_bound"] == 0 for r in rows if r["e"] >= 0.152)


def test_scan_four_state_noisy_vanishes_at_one_quarter():
    code, text = run("scan", "--protocol", "four-state", "--dark-count", "1e-6", "--efficiency", "0.15",
                     "--e-start", "0", "--e-end", "0.3", "--steps", "7")
    assert code == 0
    rows = reports_from_csv(text)
    bounds = [r["upper_bound"] for r in rows]
    assert bounds[0] == pytest.approx(0.15, abs=5e-4)
    assert all(b > 0 for b in bounds[:5]) and bounds[5] == 0 and bounds[6] == 0
    assert all(b <= a for a, b in zip(bounds, bounds[1:]))


def test_byte_identical_runs(tmp_path):
    args = ["scan", "--protocol", "four-state", "--dark-count", "1e-6", "--efficiency", "0.15", "--steps", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, "--out", str(a))[0] == 0
    assert run(*args, "--workers", "3", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_point_json():
    code, text = run("point", "--protocol", "six-state", "--e", "0.1", "--format", "json")
    assert code == 0
    obj = json.loads(text)
    assert obj[0]["upper_bound"] == pytest.approx(0.7, abs=1e-6)


def test_bsa_custom_product_state(tmp_path):
    path = product_class_file(tmp_path)
    out = tmp_path / "result.json"
    code, text = run("bsa", "--input", str(path), "--out", str(out))
    assert code == 0
    assert "lambda_max = 1" in text
    assert "verdict: separable-compatible; bound = 0" in text
    assert json.loads(out.read_text())["separable_compatible"] is True


def test_bsa_from_protocol():
    code, text = run("bsa", "--protocol", "six-state", "--e", "0.1")
    assert code == 0
    assert "lambda_max = 0.3" in text and "entangled-verified" in text


def test_bsa_conflicting_flags(tmp_path, capsys):
    path = product_class_file(tmp_path)
    code, _ = run("bsa", "--input", str(path), "--protocol", "six-state")
    assert code == 2
    assert "--input" in capsys.readouterr().err


def test_bsa_inconsistent_statistics(tmp_path):
    povm = protocol_povms("six-state").tomography_povm
    p = np.full((6, 6), 1 / 36)
    for k in range(3):
        p[2 * k:2 * k + 2, 2 * k:2 * k + 2] = np.diag([1 / 18, 1 / 18])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(EquivalenceClassSpec(povm, povm, p).to_json()))
    assert run("bsa", "--input", str(path))[0] == 3


def test_numerical_failure_exit(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise NumericalFailure("stalled", best_bound=0.25)

    monkeypatch.setattr(cli, "corollary2_bound", boom)
    code, _ = run("point", "--protocol", "six-state", "--e", "0.1")
    assert code == 4
    assert "0.25" in capsys.readouterr().err


@pytest.mark.parametrize("argv, needle", [
    (["point", "--protocol", "six-state", "--e", "0.1", "--efficiency", "1.5"], "efficiency"),
    (["point", "--protocol", "six-state", "--e", "0.7"], "--e"),
    (["point", "--protocol", "six-state", "--e", "abc"], "--e"),
    (["scan", "--protocol", "six-state", "--steps", "0"], "--steps"),
    (["scan", "--protocol", "six-state", "--e-start", "0.3", "--e-end", "0.1"], "--e-start"),
    (["scan", "--protocol", "six-state", "--dark-count", "1"], "--dark-count"),
    (["scan", "--protocol", "six-state", "--tol", "0"], "--tol"),
    (["scan"], "--protocol"),
    (["point", "--protocol", "six-state"], "--e"),
    (["info"], "--input"),
])
def test_invalid_arguments(argv, needle, capsys):
    code, _ = run(*argv)
    assert code == 2
    assert needle in capsys.readouterr().err


def test_argparse_errors_exit_2():
    assert run("scan", "--protocol", "nine-state")[0] == 2
    assert run("frobnicate")[0] == 2
    assert run()[0] == 2


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.json"
    code, _ = run("bsa", "--input", str(missing))
    assert code == 2
    assert str(missing) in capsys.readouterr().err
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json")
    assert run("info", "--input", str(garbage))[0] == 2


def test_validate_config_defaults():
    cfg = cli.validate_config({"command": "scan", "protocol": "six-state"})
    assert cfg.detectors.dark_total == 0 and cfg.detectors.is_ideal
    assert cfg.steps == 100 and cfg.format == "csv"
    assert cfg.e_grid()[0] == 0 and cfg.e_grid()[-1] == 0.5


def test_dark_count_flag_splits_equally():
    cfg = cli.validate_config({"command": "point", "protocol": "six-state", "e": "0.1", "dark_count": "1e-6"})
    assert cfg.detectors.dark_total == 1e-6
    assert np.allclose(cfg.detectors.split_for(2), [5e-7, 5e-7])


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "run.json"
    conf.write_text(json.dumps({"protocol": "six-state", "e_start": 0.0, "e_end": 0.3, "steps": 4,
                                "efficiency": 0.5}))
    code, text = run("scan", "--config", str(conf))
    assert code == 0
    assert [r["e"] for r in reports_from_csv(text)] == [0, 0.1, 0.2, 0.3]
    code, text = run("scan", "--config", str(conf), "--steps", "2")
    assert [r["e"] for r in reports_from_csv(text)] == [0, 0.3]
    conf.write_text(json.dumps({"protocol": "six-state", "colour": "blue"}))
    assert run("scan", "--config", str(conf))[0] == 2


def test_no_partial_output_on_failure(tmp_path, monkeypatch):
    out = tmp_path / "keep.csv"
    out.write_text("previous\n")

    def broken(*args, **kwargs):
        raise RuntimeError("disk full")

    monkeypatch.setattr(cli.os, "replace", broken)
    with pytest.raises(RuntimeError):
        cli.main(["point", "--protocol", "six-state", "--e", "0.1", "--out", str(out)])
    assert out.read_text() == "previous\n"
    assert os.listdir(tmp_path) == ["keep.csv"]


def test_out_directory_missing(tmp_path, capsys):
    code, _ = run("point", "--protocol", "six-state", "--e", "0.1", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 2
    assert "--out" in capsys.readouterr().err


def test_info_command(tmp_path):
    path = tmp_path / "dist.json"
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 1, 1] = 0.5
    path.write_text(json.dumps(p.tolist()))
    code, text = run("info", "--input", str(path))
    assert code == 0
    obj = json.loads(text)
    assert obj["I(A;B)"] == pytest.approx(1)
    assert obj["I(A;B|E)"] == pytest.approx(0, abs=1e-12)
    assert obj["I(A;B|E) intrinsic"] == pytest.approx(0, abs=1e-12)
    path.write_text(json.dumps([[0.5, 0.0], [0.0, 0.5]]))
    assert json.loads(run("info", "--input", str(path))[1])["I(A;B)"] == pytest.approx(1)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "keybound", "point", "--protocol", "six-state", "--e", "0.2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "e,lambda_max,i_ent,upper_bound,mutual_info,e_r"
    assert proc.stdout.splitlines()[1].startswith("0.2,0.6")
