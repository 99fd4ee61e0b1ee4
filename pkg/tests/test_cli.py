import json
import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from bhpfit.bhp import CACHE_ENV_VAR
from bhpfit.cli import EXIT_IO, EXIT_NUMERIC, EXIT_PARSE, EXIT_USAGE, build_parser, main
from bhpfit.report import file_digest
from bhpfit.svg import FIGURES


@pytest.fixture
def shared_cache(tmp_path_factory, monkeypatch):
    # one warm cache for the whole module keeps the CLI tests fast
    d = tmp_path_factory.getbasetemp() / "cli-cache"
    monkeypatch.setenv(CACHE_ENV_VAR, str(d))
    return d


def bundle_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_table_metadata(shared_cache, capsys):
    assert main(["table", "--lattice", "10"]) == 0
    out = capsys.readouterr().out
    assert "eigenvalue_count: 99" in out
    files = list(shared_cache.glob("*.csv"))
    assert len(files) == 1
    header = files[0].read_text().splitlines()[0]
    assert "eigenvalue_count=99" in header or "L=10" in header


def test_table_warm_cache(shared_cache, capsys):
    main(["table"])
    (path,) = shared_cache.glob("*.csv")
    digest, mtime = file_digest(path), path.stat().st_mtime_ns
    t0 = time.perf_counter()
    assert main(["table", "--lattice", "10"]) == 0
    elapsed = time.perf_counter() - t0
    assert "(cached)" in capsys.readouterr().out
    assert file_digest(path) == digest
    assert path.stat().st_mtime_ns == mtime
    assert elapsed < 5


@pytest.mark.parametrize("value", ["1", "0", "x"])
def test_table_bad_lattice(value, capsys):
    assert main(["table", "--lattice", value]) == EXIT_USAGE
    assert "lattice" in capsys.readouterr().err


def test_one_row_file_is_parse_error(tmp_path, shared_cache):
    f = tmp_path / "one.csv"
    f.write_text("Date,Adj Close\n2000-01-03,100.0\n")
    assert main(["analyze", "--input", str(f), "--out", str(tmp_path / "o")]) == EXIT_PARSE


def test_garbage_file_is_parse_error(tmp_path, shared_cache):
    f = tmp_path / "bad.csv"
    f.write_text("Date,Adj Close\n2000-01-03,abc\n2000-01-04,1\n")
    assert main(["analyze", "--input", str(f), "--out", str(tmp_path / "o")]) == EXIT_PARSE


def test_missing_input_is_io_error(tmp_path, shared_cache):
    assert main(["analyze", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == EXIT_IO


def test_missing_required_flags(tmp_path, shared_cache):
    assert main(["analyze", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["synthetic"]) == EXIT_USAGE


def test_constant_prices_numeric_error(tmp_path, shared_cache):
    f = tmp_path / "flat.csv"
    rows = ["Date,Adj Close"] + [f"2000-01-{d:02d},100" for d in range(3, 20)]
    f.write_text("\n".join(rows) + "\n")
    assert main(["analyze", "--input", str(f), "--out", str(tmp_path / "o")]) == EXIT_NUMERIC


@pytest.fixture(scope="module")
def synth_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    env = os.environ.copy()
    mp = pytest.MonkeyPatch()
    mp.setenv(CACHE_ENV_VAR, str(tmp_path_factory.getbasetemp() / "cli-cache"))
    try:
        codes = [main(["synthetic", "--seed", "7", "--n", "2500", "--out", str(root / name)]) for name in ("a", "b")]
    finally:
        mp.undo()
    assert os.environ == env
    return root, codes


def test_synthetic_recovers_alpha(synth_run):
    root, codes = synth_run
    assert codes == [0, 0]
    summary = json.loads((root / "a" / "summary.json").read_text())
    pos = summary["signs"]["positive"]
    assert pos["count"] == 2500
    assert 0.48 <= pos["alpha_star"] <= 0.52
    assert summary["synthetic"] == {"n": 2500, "seed": 7, "true_alpha": 0.5}


def test_synthetic_deterministic(synth_run):
    root, _ = synth_run
    a, b = bundle_bytes(root / "a"), bundle_bytes(root / "b")
    assert a.keys() == b.keys()
    assert a == b
    for sub in ("pos", "neg"):
        for fig in FIGURES:
            assert f"{sub}/{fig}" in a


def test_analyze_sign_filter(synth_run, tmp_path, shared_cache):
    root, _ = synth_run
    out = tmp_path / "o"
    assert main(["analyze", "--input", str(root / "a" / "input.csv"), "--out", str(out), "--sign", "pos", "--no-svg"]) == 0
    assert (out / "pos").is_dir()
    assert not (out / "neg").exists()
    assert not list(out.rglob("*.svg"))
    assert list(json.loads((out / "summary.json").read_text())["signs"]) == ["positive"]


def test_analyze_matches_synthetic(synth_run, tmp_path, shared_cache):
    root, _ = synth_run
    out = tmp_path / "o"
    assert main(["analyze", "--input", str(root / "a" / "input.csv"), "--out", str(out)]) == 0
    a = json.loads((root / "a" / "summary.json").read_text())
    b = json.loads((out / "summary.json").read_text())
    assert a["signs"] == b["signs"]


def test_small_n_warns(tmp_path, shared_cache, caplog):
    with caplog.at_level("WARNING", logger="bhpfit"):
        assert main(["synthetic", "--seed", "3", "--n", "10", "--out", str(tmp_path / "s")]) == 0
    assert "unreliable" in caplog.text
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert any("unreliable" in w for w in summary["warnings"])


def test_report_rerenders(synth_run, tmp_path, shared_cache):
    import shutil

    root, _ = synth_run
    out = tmp_path / "copy"
    shutil.copytree(root / "a", out)
    for svg in out.rglob("*.svg"):
        svg.unlink()
    assert main(["report", "--out", str(out)]) == 0
    assert bundle_bytes(out) == bundle_bytes(root / "a")


def test_report_without_bundle(tmp_path, shared_cache):
    assert main(["report", "--out", str(tmp_path)]) == EXIT_IO


def test_config_precedence(synth_run, tmp_path, shared_cache):
    root, _ = synth_run
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# narrower scan\nalpha-min = 0.45\nalpha_max = 0.55  # inclusive\nsign = neg\n")
    out = tmp_path / "o"
    args = ["analyze", "--config", str(cfg), "--input", str(root / "a" / "input.csv"), "--out", str(out), "--no-svg"]
    assert main(args + ["--alpha-max", "0.5"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["alpha_min"] == 0.45
    assert summary["config"]["alpha_max"] == 0.5
    assert summary["config"]["sign"] == "neg"
    lines = (out / "neg" / "pcurve.csv").read_text().splitlines()
    assert len(lines) == 1 + 6


def test_bad_config(tmp_path, shared_cache):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["table", "--config", str(cfg)]) == EXIT_USAGE


def test_help_documents_flags(capsys):
    parser = build_parser()
    for cmd in ("table", "analyze", "synthetic", "report"):
        with pytest.raises(SystemExit) as exc:
            parser.parse_args([cmd, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        sub = parser._subparsers._group_actions[0].choices[cmd]
        for action in sub._actions:
            for flag in action.option_strings:
                assert flag in text, (cmd, flag)
            if action.option_strings and action.dest != "help":
                assert action.help, (cmd, action.dest)


def test_unknown_flag():
    assert main(["table", "--frobnicate"]) != 0
    assert main([]) != 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "bhpfit", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "bhpfit" in r.stdout
