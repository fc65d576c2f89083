import json
import subprocess
import sys

import numpy as np
import pytest

from gaborphase.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from gaborphase.wavio import read_grid, save_wav


@pytest.fixture
def wav(tmp_path):
    l = np.arange(8000)
    x = 0.4 * np.sin(2 * np.pi * 700 * l / 16000)
    path = tmp_path / "tone.wav"
    save_wav(path, x, 16000)
    return path


def test_reconstruct(wav, tmp_path, capsys):
    rc = main(["reconstruct", str(wav), "-o", str(tmp_path / "o"), "--algo", "pghi",
               "--window", "hann", "--export-phasediff", "--range-db", "50"])
    assert rc == EXIT_OK
    assert "C_dB=" in capsys.readouterr().out
    assert read_grid(tmp_path / "o" / "tone.pghi.phasediff.bin").shape[0] == 513
    meta = json.loads((tmp_path / "o" / "tone.pghi.json").read_text())
    assert meta["config"]["window"] == "hann" and meta["config"]["range_db"] == 50


def test_lattice_overrides(wav, tmp_path):
    assert main(["reconstruct", str(wav), "-o", str(tmp_path), "-a", "64", "-M", "512", "--tol2", "1e-6"]) == EXIT_OK
    meta = json.loads((tmp_path / "tone.pghi2.json").read_text())
    assert (meta["config"]["a"], meta["config"]["M"], meta["config"]["tol2"]) == (64, 512, 1e-6)


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["reconstruct", "x.wav", "--algo", "magic"])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == EXIT_USAGE
    assert main(["reconstruct", "x.wav", "--tol1", "1e-12"]) == EXIT_USAGE


def test_io_error(tmp_path):
    assert main(["reconstruct", str(tmp_path / "missing.wav")]) == EXIT_IO
    assert main(["bench", str(tmp_path)]) == EXIT_IO


def test_numerical_failure(wav, tmp_path):
    # a 128-sample Hann window cannot cover a hop of 256
    rc = main(["reconstruct", str(wav), "-o", str(tmp_path), "-a", "256", "-M", "256",
               "--window", "hann", "--support", "128"])
    assert rc == EXIT_NUMERIC


def test_bench_pitchshift_gradients_corpus(tmp_path, capsys):
    assert main(["corpus", str(tmp_path / "c")]) == EXIT_OK
    assert len(list((tmp_path / "c").rglob("*.wav"))) == 10
    rc = main(["bench", str(tmp_path / "c" / "speech"), "-o", str(tmp_path / "b"), "--algos", "pghi2",
               "--windows", "gauss", "--max-seconds", "0.3", "--workers", "1"])
    assert rc == EXIT_OK and (tmp_path / "b" / "results.csv").exists()
    src = tmp_path / "c" / "music" / "flute.wav"
    assert main(["pitchshift", str(src), str(tmp_path / "up.wav"), "--semitones", "6", "--max-seconds", "0.5"]) == EXIT_OK
    assert json.loads((tmp_path / "up.json").read_text())["analysis_hop"] == 181
    assert main(["gradients", str(src), "-o", str(tmp_path / "g"), "--max-seconds", "0.3"]) == EXIT_OK
    assert {p.name for p in (tmp_path / "g").iterdir()} == {"flute.slog.bin", "flute.fgrad.bin", "flute.tgrad.bin"}


def test_entry_point_subprocess(wav, tmp_path):
    r = subprocess.run([sys.executable, "-m", "gaborphase.cli", "reconstruct", str(wav), "-o", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "gaborphase.cli", "frobnicate"], capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE
