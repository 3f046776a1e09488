import json
from pathlib import Path

import numpy as np
import pytest

from kpzf import cli
from kpzf import distributions as ds


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("KPZF_CACHE", raising=False)
    return tmp_path


def test_manifest_hash_is_stable_and_order_independent():
    a = cli.RunManifest("tabulate", {"dist": "gue", "grid": "-1:1:1"})
    b = cli.RunManifest("tabulate", {"grid": "-1:1:1", "dist": "gue"})
    assert a.content_hash == b.content_hash and len(a.content_hash) == 16
    assert a.cache_key.startswith("v1-tabulate-")
    assert cli.RunManifest("tabulate", {"dist": "bbp"}).content_hash != a.content_hash


def test_parse_grid():
    g = cli.parse_grid("-6:4:0.25")
    assert len(g) == 41 and g[0] == -6.0 and g[-1] == 4.0
    assert g[1] == -5.75
    for bad in ("1:0:0.1", "0:1:0", "0:1", "a:b:c", "0:1:0.3"):
        with pytest.raises(cli.UsageError):
            cli.parse_grid(bad)


def test_tabulate_gue_and_cache_hit(work, capsys):
    out = work / "gue.csv"
    assert cli.main(["tabulate", "--dist", "gue", "--grid", "-6:4:0.25", "--out", str(out)]) == 0
    header, cols, data = cli.read_table(out)
    assert cols == ["r", "value"] and data.shape == (41, 2)
    assert np.all(np.diff(data[:, 1]) >= 0)
    assert header["dist"] == "gue"
    assert data[24, 1] == pytest.approx(ds.f_gue(0.0), abs=1e-8)
    first = out.read_bytes()
    out.unlink()
    assert cli.main(["tabulate", "--dist", "gue", "--grid", "-6:4:0.25", "--out", str(out)]) == 0
    assert "cache hit" in capsys.readouterr().err
    assert out.read_bytes() == first
    assert len(list((work / ".cache").glob("v1-tabulate-*.csv"))) == 1


def test_tabulate_rows_have_17_digits(work):
    out = work / "t.csv"
    cli.main(["tabulate", "--grid=0:0:1", "--no-cache", "--out", str(out)])
    row = out.read_text().splitlines()[-1]
    assert float(row.split(",")[1]) == ds.f_gue(0.0, 1e-8, "real")
    assert not (work / ".cache").exists()


def test_cache_dir_from_environment(work, monkeypatch):
    monkeypatch.setenv("KPZF_CACHE", str(work / "envcache"))
    cli.main(["tabulate", "--grid=0:1:1", "--out", str(work / "x.csv")])
    assert len(list((work / "envcache").glob("*.csv"))) == 1


def test_bbp_spikes_recorded_verbatim(work):
    out = work / "bbp.csv"
    assert cli.main(["tabulate", "--dist", "bbp", "--spikes", "0.5,-0.5", "--grid", "-1:1:1", "--out", str(out)]) == 0
    header, _, data = cli.read_table(out)
    assert header["spikes"] == "0.5,-0.5"
    assert data[1, 1] == pytest.approx(ds.f_bbp(0.0, (0.5, -0.5)), abs=1e-8)


def test_invalid_grid_exit_2(work):
    assert cli.main(["tabulate", "--grid", "4:-6:0.25"]) == 2
    assert cli.main(["tabulate", "--dist", "nope"]) == 2


def test_config_file_layering(work):
    conf = work / "run.conf"
    conf.write_text("# comment\ndist = bbp\nspikes = 0.5\ngrid = -1:1:1\n")
    out = work / "c.csv"
    assert cli.main(["tabulate", "--config", str(conf), "--grid", "0:1:1", "--no-cache", "--out", str(out)]) == 0
    header, _, data = cli.read_table(out)
    assert header["dist"] == "bbp" and header["spikes"] == "0.5" and header["grid"] == "0:1:1"
    assert data.shape == (2, 2)
    conf.write_text("bogus = 1\n")
    assert cli.main(["tabulate", "--config", str(conf)]) == 2
    assert cli.main(["tabulate", "--config", str(work / "missing.conf")]) == 2


def _simulate(prefix, *extra):
    args = ["simulate", "--model", "polymer", "--n", "8", "--kappa", "1", "--samples", "1000", "--seed", "7",
            "--mesh", "512", "--out", str(prefix), *extra]
    assert cli.main(args) == 0
    return Path(f"{prefix}.json").read_bytes(), Path(f"{prefix}.csv").read_bytes()


def test_simulate_twice_identical(work):
    assert _simulate(work / "a") == _simulate(work / "b")


def test_simulate_threads_identical(work):
    a = _simulate(work / "t1", "--threads", "1")
    b = _simulate(work / "t4", "--threads", "4")
    assert a == b


def test_simulate_outputs(work):
    js, _ = _simulate(work / "s")
    body = json.loads(js)
    assert body["manifest"]["params"]["kappa"] == "1"
    assert body["summary"]["model"] == "polymer" and body["summary"]["samples"] == 1000
    assert "elapsed" not in body["summary"] and "threads" not in body["summary"]["config"]
    header, cols, data = cli.read_table(work / "s.csv")
    assert cols == ["value"] and data.shape == (1000, 1)
    assert header["scheme"] == "split"


def test_simulate_gue(work):
    assert cli.main(["simulate", "--model", "gue", "--n", "8", "--out", str(work / "g")]) == 0
    _, _, data = cli.read_table(work / "g.csv")
    assert data.shape == (1000, 1)
    assert 4.0 < data.mean() < 6.5


def test_simulate_usage_errors(work):
    assert cli.main(["simulate", "--model", "brownian"]) == 2
    assert cli.main(["simulate", "--n", "2", "--drifts", "1,2,3"]) == 2
    assert cli.main(["simulate", "--scheme", "euler"]) == 2


def test_compare_polymer_against_table(work, capsys):
    assert cli.main(["simulate", "--n", "16", "--samples", "300", "--seed", "3", "--mesh", "1024",
                     "--out", str(work / "p")]) == 0
    assert cli.main(["tabulate", "--grid=-8:6:0.1", "--out", str(work / "gue.csv")]) == 0
    capsys.readouterr()
    assert cli.main(["compare", "--samples-file", str(work / "p.csv"), "--table", str(work / "gue.csv"),
                     "--out", str(work / "cmp.dat")]) == 0
    assert "KS statistic" in capsys.readouterr().out
    header, _, data = cli.read_table(work / "cmp.dat")
    assert float(header["ks"]) < 0.3
    assert data.shape[1] == 3 and np.all(np.diff(data[:, 1]) >= 0)
    # also without a table
    assert cli.main(["compare", "--samples-file", str(work / "p.csv"), "--out", str(work / "cmp2.dat")]) == 0
    assert abs(float(cli.read_table(work / "cmp2.dat")[0]["ks"]) - float(header["ks"])) < 1e-3


def test_compare_laplace_z_scores(work, capsys):
    assert cli.main(["simulate", "--n", "2", "--tau", "1", "--samples", "4000", "--seed", "5", "--mesh", "1024",
                     "--out", str(work / "l")]) == 0
    capsys.readouterr()
    assert cli.main(["compare", "--samples-file", str(work / "l.csv"), "--log-u=-0.6931471805599453,0,0.6931471805599453",
                     "--out", str(work / "lap.dat")]) == 0
    assert capsys.readouterr().out.count("z=") == 3
    _, _, data = cli.read_table(work / "lap.dat")
    assert data.shape == (3, 5) and np.all(np.abs(data[:, 4]) < 4)


def test_compare_errors(work):
    assert cli.main(["compare", "--samples-file", str(work / "missing.csv")]) == 2
    cli.main(["tabulate", "--dist", "cdrp-laplace", "--grid", "1:2:1", "--T", "1", "--out", str(work / "lap.csv")])
    assert cli.main(["compare", "--samples-file", str(work / "lap.csv")]) == 2


def test_verify_identities_n1(capsys):
    assert cli.main(["verify", "--suite", "identities", "--n", "1"]) == 0
    out = capsys.readouterr().out
    assert "AC-1 PASS" in out and "AC-2" not in out and "AC-10" not in out
    assert "1/1 passed" in out


def test_verify_usage_errors():
    assert cli.main(["verify", "--suite", "nope"]) == 2
    assert cli.main(["verify", "--suite", "limits", "--n", "1"]) == 2
