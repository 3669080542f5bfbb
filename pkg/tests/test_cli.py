import csv
import json

import numpy as np
import pytest

from irsifc.channel import load_channels
from irsifc.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, main


@pytest.fixture(scope="module")
def chan(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "chan.json"
    assert main(["generate", "--preset", "desk", "--seed", "3", "--N", "4", "-o", str(path)]) == EXIT_OK
    return path


def test_generate_is_deterministic(tmp_path, chan):
    other = tmp_path / "again.json"
    main(["generate", "--preset", "desk", "--seed", "3", "--N", "4", "-o", str(other)])
    assert other.read_bytes() == chan.read_bytes()
    assert load_channels(chan).N == 4


def test_generate_from_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "config": {"K": 1, "M": 2, "N": 3, "P": [1.0], "sigma2": 1e-9},
        "geometry": {"tx_pos": [[0, 10]], "rx_pos": [[0, 0]], "irs_pos": [[5, 5]]}}))
    out = tmp_path / "c.json"
    assert main(["generate", "--config", str(cfg), "--seed", "2", "-o", str(out)]) == EXIT_OK
    cs = load_channels(out)
    assert (cs.K, cs.M, cs.N, cs.config.seed) == (1, 2, 3, 2)


def test_generate_needs_a_source(tmp_path):
    assert main(["generate", "-o", str(tmp_path / "x.json")]) == EXIT_USAGE


def test_sweep_rows_and_manifest_replay(tmp_path, chan):
    out = tmp_path / "r.csv"
    args = ["sweep", str(chan), "--points", "5", "--n-rand", "20", "--eps", "1e-2",
            "--jobs", "1", "-o", str(out)]
    assert main(args) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 15
    assert set(rows[0]) == {"scheme", "zeta_1", "zeta_2", "R", "R_1", "R_2", "seed", "status"}
    manifest = json.loads((tmp_path / "r.csv.manifest.json").read_text())
    again = tmp_path / "r2.csv"
    assert main(["sweep", "--from-manifest", str(tmp_path / "r.csv.manifest.json"),
                 "-o", str(again), "--jobs", "1"]) == EXIT_OK
    assert again.read_bytes() == out.read_bytes()
    assert manifest["options"]["n_rand"] == 20


def test_single_corner_comparison(tmp_path, chan, capsys):
    out = tmp_path / "s.json"
    assert main(["single", str(chan), "--zeta", "1,0", "--n-rand", "20", "-o", str(out)]) == EXIT_OK
    assert "single-user comparison" in capsys.readouterr().out
    rep = json.loads(out.read_text())
    assert "singleuser_comparison" in rep
    assert np.all(np.diff(rep["R_trace"]) >= -1e-6)


def test_single_invalid_zeta(chan):
    assert main(["single", str(chan), "--zeta", "0.7,0.7"]) == EXIT_USAGE
    assert main(["single", str(chan), "--zeta", "1"]) == EXIT_USAGE


def test_singleuser(tmp_path, chan):
    out = tmp_path / "su.json"
    assert main(["singleuser", str(chan), "--user", "2", "--random-init", "-o", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert np.all(np.diff(rep["snr_trace"]) >= 0)


def test_missing_file(tmp_path):
    assert main(["single", str(tmp_path / "nope.json"), "--zeta", "1,0"]) == EXIT_IO


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--no-such-flag"])
    assert exc.value.code == EXIT_USAGE
