import json

import pytest

from semistream.bench import bench_cluster_quality, gaussian_mixture, summarize_ratios
from semistream.cli import main


@pytest.fixture
def points_csv(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("0\n1\n10\n")
    return str(path)


@pytest.fixture
def mixture_csv(tmp_path):
    data, _ = gaussian_mixture(3, 400, seed=1)
    path = tmp_path / "mix.csv"
    path.write_text("".join(f"{p.payload[0]!r}\n" for p in data.points))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ofl(capsys, points_csv):
    code, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "100", "--seed", "3")
    rec = json.loads(out)
    assert code == 0 and rec["facilities"][0] == 0 and rec["config"]["seed"] == 3
    assert rec["total"] == rec["facility_cost"] + rec["connection_cost"]


def test_ofl_with_order_file(capsys, tmp_path, points_csv):
    trace = tmp_path / "t.json"
    trace.write_text('{"sigma": [2, 0, 1], "hand_high_water": 2}')
    code, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "100", "--order-file", str(trace))
    assert code == 0 and json.loads(out)["facilities"] == [1]


def test_compress(capsys, points_csv):
    code, out, _ = run(capsys, "compress", "--input", points_csv, "--k", "1")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# config")
    assert lines[1:4] == ["id,x0,weight", "0,0.0,2", "2,10.0,1"]
    assert json.loads(lines[4].split(" ", 2)[2])["lambda"] == 1.0


def test_cluster(capsys, mixture_csv):
    code, out, _ = run(capsys, "cluster", "--input", mixture_csv, "--k", "3", "--m", "2", "--delta", "0.25", "--adversary", "delay-set", "--t", "8")
    rec = json.loads(out)
    assert code == 0 and len(rec["centers"]) == 3
    assert rec["max_support"] <= rec["space_bound"] == 58 and rec["epochs"] >= 1
    assert rec["hand_high_water"] <= 8


def test_cluster_default_m(capsys, points_csv):
    code, out, _ = run(capsys, "cluster", "--input", points_csv, "--k", "1", "--t", "16")
    assert json.loads(out)["m"] == 8


def test_lowerbound_csv(capsys):
    code, out, _ = run(capsys, "lowerbound", "--t-list", "4", "--trials", "30", "--seed", "1")
    lines = out.splitlines()
    assert code == 0 and lines[1] == "t,m,h,n,opt,mean_ratio,stderr" and len(lines) == 3


def test_bench_ratio_has_control(capsys):
    code, out, _ = run(capsys, "bench-ratio", "--t-list", "4,256", "--trials", "30")
    header = out.splitlines()[1].split(",")
    assert code == 0 and "control_mean" in header and len(out.splitlines()) == 4


def test_bench_cluster(capsys):
    code, out, _ = run(capsys, "bench-cluster", "--k", "2", "--n", "600", "--t-list", "1,16", "--adversaries", "passthrough,depth-order", "--trials", "2")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2 + 8 + 1 and lines[-1].startswith("# summary")


def test_check_order(capsys, tmp_path):
    code, out, _ = run(capsys, "check-order", "--sigma", "0,2,1,3")
    assert code == 0 and json.loads(out)["min_bound"] == 2
    code, out, err = run(capsys, "check-order", "--sigma", "3,2,1,0", "--t", "2")
    assert code == 3 and json.loads(out)["ok"] is False and "hand" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["ofl", "--input", "/nonexistent.csv", "--f", "1"],
        ["ofl", "--input", "{csv}", "--f", "-1"],
        ["cluster", "--input", "{csv}", "--k", "1", "--delta", "2"],
        ["cluster", "--input", "{csv}", "--k", "1", "--measure", "nope"],
        ["lowerbound", "--t-list", "3"],
        ["check-order", "--sigma", "0,0"],
        ["check-order"],
    ],
)
def test_bad_input_exits_2(capsys, points_csv, argv):
    code, _, err = run(capsys, *[a.replace("{csv}", points_csv) for a in argv])
    assert code == 2 and err.startswith("semistream:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["cluster"])
    assert exc.value.code == 2


def test_seed_from_environment(capsys, monkeypatch, points_csv):
    monkeypatch.setenv("SEMISTREAM_SEED", "41")
    _, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "5")
    assert json.loads(out)["config"]["seed"] == 41
    _, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "5", "--seed", "2")
    assert json.loads(out)["config"]["seed"] == 2
    monkeypatch.setenv("SEMISTREAM_SEED", "x")
    assert run(capsys, "ofl", "--input", points_csv, "--f", "5")[0] == 2


def test_timing_is_opt_in(capsys, points_csv):
    _, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "5")
    assert "wall_time_s" not in out
    _, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "5", "--timing")
    assert "wall_time_s" in out


def test_output_file(capsys, tmp_path, points_csv):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "ofl", "--input", points_csv, "--f", "5", "-o", str(target))
    assert code == 0 and out == "" and json.loads(target.read_text())["n"] == 3


def test_bench_rows_ordered_and_failures_kept():
    rows = bench_cluster_quality(k=2, n=300, t_values=(1, 4), adversaries=("passthrough", "delay-set"), trials=2, with_oracle=False)
    assert [(r.trial, r.t, r.adversary) for r in rows] == [
        (tr, t, a) for tr in range(2) for t in (1, 4) for a in ("passthrough", "delay-set")
    ]
    bad = bench_cluster_quality(k=2, n=300, trials=1, m=0, with_oracle=False)
    assert bad[0].status == "error:ParameterError"
    assert summarize_ratios(bad) == {"count": 0}


def test_parallel_bench_matches_serial():
    kw = dict(k=2, n=300, t_values=(1, 4), adversaries=("depth-order",), trials=2, with_oracle=False)
    # rows carry NaN oracle fields, so compare their text
    assert list(map(repr, bench_cluster_quality(jobs=2, **kw))) == list(map(repr, bench_cluster_quality(jobs=1, **kw)))
