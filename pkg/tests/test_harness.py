import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mststream.cli import main
from mststream.generators import (InstanceSpec, cantor_gaps, generate_cantor, parse_spec, random_families)
from mststream.geometry import PointMultiset, StreamUpdate, write_stream
from mststream.oracle import component_count_true, mst_kruskal, mst_oracle
from mststream.report import EstimateReport


def test_oracle_examples():
    assert mst_oracle(PointMultiset.from_points([[1], [6]]))[0] == 5
    assert mst_oracle(PointMultiset.from_points([[1], [2], [4]]))[0] == 3
    with pytest.raises(ValueError):
        mst_oracle(PointMultiset(2))


def test_oracle_agrees_with_kruskal():
    rng = np.random.default_rng(0)
    for _ in range(500):
        n, d = int(rng.integers(1, 15)), int(rng.integers(1, 4))
        X = rng.integers(1, 20, size=(n, d))
        assert mst_oracle(X)[0] == mst_kruskal(X)[0]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 30), st.integers(1, 30)), min_size=1, max_size=15), st.randoms())
def test_oracle_permutation_and_duplicates(rows, rnd):
    base = mst_oracle(np.array(rows))[0]
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert mst_oracle(np.array(shuffled))[0] == base
    assert mst_oracle(np.array(rows + rows[:3]))[0] == base


def test_cantor_examples():
    P4 = generate_cantor(4)
    cost, edges = mst_oracle(P4)
    assert cost == 4 and sorted(w for _, _, w in edges) == [1, 1, 2]
    assert mst_oracle(generate_cantor(2))[1] == [(0, 1, 1)]
    assert cantor_gaps(8).tolist() == [1, 2, 1, 4, 1, 2, 1]
    for n in (8, 32, 128):
        P = generate_cantor(n)
        for i in range(int(np.log2(n))):
            assert component_count_true(P, 2 ** i) == n // 2 ** (i + 1)
    with pytest.raises(Exception):
        generate_cantor(6)


def test_generators_in_box_and_versioned():
    for spec in random_families(40, 3, 64, 5):
        P = spec.build()
        X = P.distinct()
        assert X.min() >= 1 and X.max() <= spec.Lambda and X.shape[1] == 3
        assert spec.describe()["version"]
    a = InstanceSpec("uniform", 10, 2, 50, 3).build()
    assert a == InstanceSpec("uniform", 10, 2, 50, 3).build()


def test_parse_spec():
    s = parse_spec("clustered:n=30,d=3,Lambda=99,clusters=5", seed=4)
    assert (s.n, s.d, s.Lambda, s.seed, s.params) == (30, 3, 99, 4, {"clusters": 5})
    assert parse_spec("cantor:n=8").d == 1


def test_report_roundtrip():
    rep = EstimateReport("onepass", {"epsilon": 0.25}, 12.5, seed=3, levels=[{"t": 1.0, "Z": 0.5}],
                         warnings=["w"], extra={"x": float("inf")})
    rep.attach_oracle(10)
    back = EstimateReport.from_json(rep.to_json())
    assert back == rep and back.ratio == 1.25
    with pytest.raises(ValueError):
        EstimateReport("nope", {}, 1.0)


def run_cli(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_cli_oracle_cantor(capsys):
    code, out = run_cli(["oracle", "--gen", "cantor:n=8"], capsys)
    assert code == 0 and json.loads(out.out)["mst"] == 12


def test_cli_estimate_ratio(capsys):
    code, out = run_cli(["estimate", "--mode", "exact-Z", "--gen", "uniform:n=12,d=2,Lambda=32",
                         "--oracle", "--deterministic"], capsys)
    rep = json.loads(out.out)
    assert code == 0 and rep["mode"] == "Z" and rep["ratio"] is not None
    assert rep["wall_time"] == 0


def test_cli_no_ratio_without_oracle(capsys):
    code, out = run_cli(["estimate", "--mode", "ideal", "--gen", "uniform:n=8,d=1,Lambda=32"], capsys)
    assert code == 0 and json.loads(out.out)["ratio"] is None


def test_cli_report_file_and_determinism(tmp_path):
    args = ["estimate", "--mode", "onepass", "--gen", "uniform:n=6,d=2,Lambda=16", "--samples", "3",
            "--threshold", "4", "--deterministic", "--seed", "7"]
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert main(args + ["--report", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_cli_input_file(tmp_path, capsys):
    path = tmp_path / "s.txt"
    write_stream(path, 16, 1, [StreamUpdate(1, (1,)), StreamUpdate(1, (5,)), StreamUpdate(1, (9,)),
                               StreamUpdate(-1, (9,))])
    code, out = run_cli(["oracle", "--input", str(path)], capsys)
    assert code == 0 and json.loads(out.out)["mst"] == 4


def test_cli_errors(capsys, tmp_path):
    assert main(["estimate", "--bogus"]) == 2
    assert main(["estimate", "--mode", "nope", "--gen", "cantor:n=4"]) == 2
    assert main(["estimate", "--mode", "onepass", "--epsilon", "0.3", "--gen", "cantor:n=4"]) == 2
    assert main(["estimate", "--alpha", "2", "--passes", "5", "--gen", "cantor:n=4"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("4 1\n- 2\n")
    assert main(["oracle", "--input", str(bad)]) == 3


def test_cli_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("MSTSTREAM_SEED", "11")
    code, out = run_cli(["estimate", "--mode", "Z", "--gen", "uniform:n=5,d=1,Lambda=20"], capsys)
    assert json.loads(out.out)["seed"] == 11
    monkeypatch.setenv("MSTSTREAM_SEED", "x")
    assert main(["estimate", "--gen", "cantor:n=4"]) == 2


def test_cli_selftest_and_calibrate(capsys, monkeypatch):
    code, out = run_cli(["selftest"], capsys)
    assert code == 0 and "FAIL" not in out.out
    import mststream.cli as cli
    monkeypatch.setattr(cli, "selftest_suites", lambda: [("broken", lambda: False)])
    assert main(["selftest"]) != 0
    capsys.readouterr()
    code, out = run_cli(["calibrate", "--p", "1"], capsys)
    assert code == 0 and json.loads(out.out)[0]["median"] == pytest.approx(1.0)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "mststream", "oracle", "--gen", "cantor:n=4"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["mst"] == 4
