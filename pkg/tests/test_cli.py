import csv
import json

import pytest

from recordlab import __version__
from recordlab.cli import config_hash, main


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_verify_unitarity_passes(tmp_path):
    assert main(["verify", "unitarity", "--out", str(tmp_path)]) == 0
    (path,) = tmp_path.iterdir()
    rep = json.loads(path.read_text())
    assert rep["pass"] and rep["version"] == __version__
    assert path.name == f"verify-{rep['config_hash']}.json"


def test_unknown_suite_is_config_error(tmp_path, capsys):
    assert main(["verify", "nonsense", "--out", str(tmp_path)]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_bad_config_exit_codes(tmp_path):
    assert main(["progress", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["progress", "--config", str(bad)]) == 2
    cfg = write(tmp_path, "k.json", {"family": "bernoulli", "N": [2], "K": [3], "M": [2], "T": [1]})
    assert main(["progress", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    cfg = write(tmp_path, "s.json", {"N": [64], "K": [4], "S": [64]})
    assert main(["emulate2", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()  # validation happens before any output
    with pytest.raises(SystemExit) as exc:
        main(["progress", "--format", "xml"])
    assert exc.value.code == 2


def test_progress_zero_queries_gives_single_row(tmp_path):
    cfg = write(tmp_path, "c.json", {"M": [2], "N": [3], "T": [0]})
    assert main(["progress", "--config", cfg, "--format", "csv", "--out", str(tmp_path)]) == 0
    (path,) = tmp_path.glob("progress-*.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# recordlab")
    rows = list(csv.DictReader(lines[1:]))
    assert [(r["t"], r["k"]) for r in rows] == [("0", "0")]
    assert float(rows[0]["q"]) == pytest.approx(1.0, abs=1e-12)


def test_bounds_metadata_lists_constants(tmp_path):
    cfg = write(tmp_path, "c.json", {"kinds": ["collision-upper"], "N": [4096], "K": [8],
                                     "S": [4, 8, 16], "constants": {"collision-upper": {"c_upper": 3.0}}})
    assert main(["bounds", "--config", cfg, "--out", str(tmp_path)]) == 0
    (path,) = tmp_path.glob("bounds-*.json")
    (curve,) = json.loads(path.read_text())["report"]["curves"]
    assert curve["constants"] == {"c_upper": 3.0}
    T = [r["T"] for r in curve["rows"]]
    assert T == sorted(T, reverse=True)


def test_sort_instance(tmp_path):
    cfg = write(tmp_path, "c.json", {"N": 16, "S": 1, "r": 3})
    assert main(["sort-instance", "--config", cfg, "--seed", "5", "--out", str(tmp_path)]) == 0
    (path,) = tmp_path.glob("sort-instance-*.json")
    rep = json.loads(path.read_text())["report"]
    f, g = rep["f"], rep["g"]
    assert f[:2] == [2, 2] and f[2:10] == g and f[10:] == [0] * 6


def test_reduction_small(tmp_path):
    cfg = write(tmp_path, "c.json", {"N": 500, "rounds": 5000, "algorithm1_seeds": 2})
    assert main(["reduction", "--config", cfg, "--format", "csv", "--out", str(tmp_path)]) == 0
    rep = json.loads(next(tmp_path.glob("reduction-*.json")).read_text())["report"]
    assert rep["events"]["ABCD"]["pass"]
    assert rep["algorithm1"]["seeds"] == 2
    lines = next(tmp_path.glob("reduction-*.csv")).read_text().splitlines()
    assert lines[1] == "a,b,f_value"


@pytest.mark.parametrize("argv", [
    ["verify", "oracle-equivalence"],
    ["progress"],
    ["bounds", "--format", "csv"],
    ["emulate2", "--format", "csv"],
    ["sort-instance"],
])
def test_byte_identical_reruns(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--seed", "17", "--out", str(a)]) == 0
    assert main(argv + ["--seed", "17", "--out", str(b)]) == 0
    assert outputs(a) == outputs(b)


def test_worker_pool_preserves_order(tmp_path):
    cfg = write(tmp_path, "c.json", {"N": [1024], "K": [4, 8], "seeds": 3})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["emulate2", "--config", cfg, "--format", "csv", "--out", str(a)]) == 0
    assert main(["emulate2", "--config", cfg, "--format", "csv", "--jobs", "2", "--out", str(b)]) == 0
    assert outputs(a) == outputs(b)


def test_config_hash_depends_on_seed_and_config():
    h = config_hash("bounds", {"N": [1]}, 0)
    assert h == config_hash("bounds", {"N": [1]}, 0)
    assert h != config_hash("bounds", {"N": [1]}, 1)
    assert h != config_hash("bounds", {"N": [2]}, 0)
