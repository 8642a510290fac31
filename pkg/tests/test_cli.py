import csv
import io
import os

import pytest

from nlneumann import cli
from nlneumann.config import ConfigError, load_config

SMALL = """
[grid]
h = 0.03125
[problem]
s = 0.4
q = sin
f = gauss(0.3, 0.1)
[verify]
h0 = 0.0625
levels = 2
pairs = 2
[rates]
h = 0.02
s_values = 0.25, 0.75
[oracle]
n = 17
resolution = 16
[maxprinciple]
trials = 6
h = 0.03125
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(SMALL)
    return p


def _read(path):
    text = path.read_text()
    head = [l for l in text.splitlines() if l.startswith("#")]
    body = list(csv.reader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))
    return head, body


@pytest.mark.parametrize("cmd,files", [
    ("solve", ["solution.csv", "trace.csv", "summary.txt"]),
    ("verify", ["identities.csv", "seminorms.csv"]),
    ("rates", ["rates.csv"]),
    ("oracle", ["oracle.csv"]),
    ("maxprinciple", ["campaign.csv"]),
])
def test_commands_succeed_and_are_deterministic(cmd, files, cfg_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main([cmd, "--config", str(cfg_path), "--out", str(out1), "--seed", "4"]) == 0
    assert cli.main([cmd, "--config", str(cfg_path), "--out", str(out2), "--seed", "4", "--threads", "2"]) == 0
    for f in files:
        assert (out1 / f).read_bytes() == (out2 / f).read_bytes(), f
        if f.endswith(".csv"):
            head, body = _read(out1 / f)
            keys = {l[2:].split(":")[0] for l in head}
            assert {"config_hash", "seed", "s", "h", "R_trunc", "tolerances"} <= keys
            assert len(body) > 1 and all(len(r) == len(body[0]) for r in body)
    assert not [p for p in out1.iterdir() if p.name.endswith(".tmp")]


def test_seed_changes_random_output(cfg_path, tmp_path):
    cli.main(["maxprinciple", "--config", str(cfg_path), "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["maxprinciple", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a/campaign.csv").read_bytes() != (tmp_path / "b/campaign.csv").read_bytes()


def test_headers_record_hash(cfg_path, tmp_path):
    cli.main(["solve", "--config", str(cfg_path), "--out", str(tmp_path), "--seed", "9"])
    head, body = _read(tmp_path / "solution.csv")
    assert f"# config_hash: {load_config(cfg_path).hash}" in head
    assert "# seed: 9" in head
    assert body[0] == ["x", "u"]


def test_exit_codes_config(tmp_path, cfg_path):
    assert cli.main(["solve", "--config", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["nonsense"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[problem]\ns = 1.2\n")
    assert cli.main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    bad.write_text("[nosuch]\nx = 1\n")
    assert cli.main(["solve", "--config", str(bad)]) == 2
    bad.write_text("[problem]\nf = wobble(3)\n")
    assert cli.main(["solve", "--config", str(bad)]) == 2
    assert cli.main(["solve", "--config", str(cfg_path), "--threads", "0"]) == 2


def test_exit_code_numeric(tmp_path):
    bad = tmp_path / "fail.ini"
    bad.write_text("[grid]\nh = 0.0625\n[problem]\nf = cos\n[solver]\nmax_iter = 1\neps_min = 0.01\n")
    assert cli.main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 3


def test_atomic_write_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.csv"
    cli.atomic_write(target, "old\n")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        cli.atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["x.csv"]


def test_config_hash_ignores_seed(cfg_path):
    assert load_config(cfg_path, 1).hash == load_config(cfg_path, 2).hash
    with pytest.raises(ConfigError):
        load_config(None).params(2.0)
