import json
import subprocess
import sys

import pytest

from biregular_mp import cli
from biregular_mp.graphs import from_json


def run(tmp_path, *argv, environ=None, name="out"):
    out = tmp_path / name
    code = cli.run([*argv, "--out", str(out), "--workers", "1"], environ or {})
    return code, out


def test_sample_writes_graph(tmp_path):
    code, out = run(tmp_path, "sample", "--M", "6", "--N", "4", "--d_b", "2", "--d_w", "3", "--seed", "1")
    assert code == 0
    g = from_json((out / "graph.json").read_text())
    assert g.config.M == 6
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "sample" and man["resolved"]["seed"] == 1
    assert man["outputs"] == ["graph.json"] and "version" in man and man["wall_time_s"] >= 0


def test_seed_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"M": 6, "N": 4, "d_b": 2, "d_w": 3, "seed": 5}))
    args = cli.build_parser().parse_args(["sample", "--config", str(cfg)])
    assert cli.resolve(args, {})["seed"] == 5
    assert cli.resolve(args, {"SEED": "7"})["seed"] == 7
    args = cli.build_parser().parse_args(["sample", "--config", str(cfg), "--seed", "9"])
    assert cli.resolve(args, {"SEED": "7"})["seed"] == 9


def test_mp_eval(tmp_path):
    code, out = run(tmp_path, "mp-eval", "--gamma", "0.5", "--grid", "default", "--N", "10")
    assert code == 0
    lines = (out / "transforms.csv").read_text().splitlines()
    assert lines[0].startswith("re_z,im_z,re_m_inf")
    assert len(lines) == 1 + 4 * 61
    assert len((out / "classical_locations.csv").read_text().splitlines()) == 11


@pytest.mark.parametrize("argv", [
    ["identities", "--M", "6", "--N", "4", "--d_b", "2", "--d_w", "3", "--samples", "2"],
    ["local-law", "--N", "40", "--d_b", "4", "--gamma", "0.5", "--samples", "2",
     "--grid", "1.0,2.0;0.3", "--override-eta-floor"],
    ["spectrum", "--M", "6", "--N", "4", "--d_b", "2", "--d_w", "3", "--grid", "1.0;0.5"],
    ["uniformity", "--M", "3", "--N", "3", "--d_b", "2", "--d_w", "2", "--steps", "50", "--samples", "300"],
])
def test_manifest_rerun_is_byte_identical(tmp_path, argv):
    code, first = run(tmp_path, *argv, name="a")
    assert code == 0
    manifest = first / "manifest.json"
    code, second = run(tmp_path, argv[0], "--config", str(manifest), name="b")
    assert code == 0
    outs = json.loads(manifest.read_text())["outputs"]
    assert outs
    for name in outs:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_exit_codes(tmp_path):
    code, _ = run(tmp_path, "sample", "--M", "5", "--N", "3", "--d_b", "2", "--d_w", "3")
    assert code == 2
    code, _ = run(tmp_path, "sample", "--N", "3")
    assert code == 2
    code, _ = run(tmp_path, "local-law", "--N", "40", "--d_b", "4", "--grid", "1.0;0.01")
    assert code == 2  # below the eta floor
    code, _ = run(tmp_path, "uniformity", "--M", "6", "--N", "6", "--d_b", "3", "--d_w", "3")
    assert code == 4  # enumeration guard
    code, _ = run(tmp_path, "sample", "--M", "2", "--N", "2", "--d_b", "1", "--d_w", "1",
                  environ={"SEED": "x"})
    assert code == 2
    with pytest.raises(SystemExit) as info:
        cli.run(["sample", "--bogus"])
    assert info.value.code == 2


def test_bad_config_keys(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"M": 2, "colour": "red"}))
    code, _ = run(tmp_path, "sample", "--config", str(cfg))
    assert code == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "m"
    proc = subprocess.run([sys.executable, "-m", "biregular_mp", "mp-eval", "--gamma", "1",
                           "--grid", "1.0;1.0", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    row = (out / "transforms.csv").read_text().splitlines()[1].split(",")
    assert float(row[0]) == 1.0 and float(row[1]) == 1.0
