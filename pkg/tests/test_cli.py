import json
import logging

import pytest

from weilpos import cache as wcache
from weilpos.cli import main


def run(tmp_path, cache_dir, *argv, out="out"):
    code = main(["--out", str(tmp_path / out), "--cache-dir", str(cache_dir), *argv])
    return code, tmp_path / out


def files(out, sub):
    return {p.name: p.read_bytes() for p in (out / sub).iterdir()}


def test_layout_and_manifest(tmp_path, cache_dir, capsys):
    code, out = run(tmp_path, cache_dir, "tails", "--N", "10")
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"tables", "spectra", "certificates", "manifests"}
    (manifest,) = (out / "manifests").iterdir()
    doc = json.loads(manifest.read_text())
    assert doc["command"] == "tails" and doc["parameters"] == {"N": 10}
    assert {"basis_hash", "outputs", "wall_time", "tool_version"} <= doc.keys()
    assert "tail_bound(10)" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["prolate"], ["delta", "--grid", "50"], ["epsilon"],
                                  ["qepsilon"], ["toeplitz", "--omega", "0.01", "--eig", "3"]])
def test_reruns_are_byte_identical(tmp_path, cache_dir, argv):
    _, a = run(tmp_path, cache_dir, *argv, out="a")
    _, b = run(tmp_path, cache_dir, "--no-cache", *argv, out="b")
    for sub in ("tables", "spectra"):
        assert files(a, sub) == files(b, sub)


def test_toeplitz_prints_eigenvalues(tmp_path, cache_dir, capsys):
    run(tmp_path, cache_dir, "toeplitz", "--omega", "0.001", "--eig", "2")
    lines = capsys.readouterr().out.split()
    assert lines[:3] == ["dim", "=", "693"]
    assert abs(float(lines[3]) - 1.05177) < 2e-3


def test_angles_and_decompose(tmp_path, cache_dir, capsys):
    run(tmp_path, cache_dir, "angles", "--omega", "0.0005")
    run(tmp_path, cache_dir, "decompose", "--omega", "0.0005")
    out = capsys.readouterr().out
    assert "alpha_1..3 = 1.333" in out
    assert "d(1..2) = 1.17" in out


def test_external_tables(tmp_path, cache_dir, approx, capsys):
    path = tmp_path / "tables.csv"
    path.write_text(approx.truncated(40).to_csv())
    code, out = run(tmp_path, cache_dir, "model", "--alphas", str(path),
                    "--lam", repr(approx.lambda_max), "--M", "80")
    assert code == 0
    assert (out / "spectra" / "model-M80.csv").exists()
    assert "eigenvalues:" in capsys.readouterr().out


def test_certify_with_reference_inputs(tmp_path, cache_dir):
    code, out = run(tmp_path, cache_dir, "certify", "--reference-inputs", "--a", "0.064")
    assert code == 0
    doc = json.loads((out / "certificates" / "certificate.json").read_text())
    assert abs(doc["gamma"]["value"] - 2.94355) < 5e-3


def test_corrupt_cache_entry_is_recomputed(tmp_path, caplog):
    cdir = tmp_path / "cache"
    _, a = run(tmp_path, cdir, "toeplitz", "--omega", "0.01", out="a")
    entries = [p for p in cdir.rglob("*.json")]
    assert entries and not list(cdir.rglob(".tmp-*"))
    for p in entries:
        p.write_text(p.read_text()[:-20])
    with caplog.at_level(logging.WARNING):
        _, b = run(tmp_path, cdir, "toeplitz", "--omega", "0.01", out="b")
    assert "corrupt cache entry" in caplog.text
    assert files(a, "spectra") == files(b, "spectra")


def test_tampered_payload_detected(tmp_path):
    c = wcache.ResultCache(tmp_path)
    key = wcache.cache_key("x", {"a": 1})
    c.put(key, {"v": 1.5})
    path = next(tmp_path.rglob("*.json"))
    path.write_text(path.read_text().replace("1.5", "2.5"))
    assert c.get(key) is None
    assert c.memo("x", {"a": 1}, lambda: {"v": 1.5}) == {"v": 1.5}
    assert c.get(key) == {"v": 1.5} and c.hits == 1


def test_cache_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv(wcache.CACHE_ENV, str(tmp_path / "env"))
    assert wcache.ResultCache().directory == tmp_path / "env"


def test_disabled_cache_writes_nothing(tmp_path):
    c = wcache.ResultCache(tmp_path / "off", enabled=False)
    c.put("k" * 64, {"v": 1})
    assert not (tmp_path / "off").exists()


def test_bad_arguments_exit_nonzero(tmp_path, cache_dir):
    with pytest.raises(SystemExit) as exc:
        main(["--out", str(tmp_path), "toeplitz", "--omega", "abc"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["nope"])


def test_report_flags_the_single_unattainable_check(tmp_path, cache_dir):
    code, out = run(tmp_path, cache_dir, "report", "--quick")
    rows = (out / "tables" / "report.csv").read_text().splitlines()[1:]
    failed = [r for r in rows if r.endswith(",FAIL")]
    assert code == 1
    assert len(failed) == 1 and "-1 among the roots" in failed[0]
