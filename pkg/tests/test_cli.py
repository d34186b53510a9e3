import csv
import json
from fractions import Fraction

import pytest

from bfmech import registry
from bfmech.bounds import frange, tune_params
from bfmech.cli import main
from bfmech.instances import generate_instance, instance_from_dict, save_instance
from bfmech.mechanisms import CoinTranscript, MechParams, sample_arrival


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# bfmech ") and "csv version 1" in lines[0]
    return list(csv.DictReader(lines[1:]))


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_bounds_preset_cor43(tmp_path):
    out = tmp_path / "b"
    assert main(["bounds", "--preset", "cor4.3", "--epsilon", "0,1", "--out", str(out),
                 "--no-figures"]) == 0
    recips = [float(r["reciprocal"]) for r in summary(out)["reports"]]
    assert recips[0] == pytest.approx(94.8, abs=0.05)
    assert recips[1] == pytest.approx(279.8, abs=0.05)
    rows = read_csv(out / "results.csv")
    assert len(rows) == 2 and all(r["config_digest"] for r in rows)


def test_bounds_single_bound_with_params(tmp_path):
    out = tmp_path / "b"
    assert main(["bounds", "--bound", "mono_pred", "--param", "p=0.46", "--param", "a=0.685",
                 "--param", "z=1.85", "--epsilon", "0", "--out", str(out), "--no-figures"]) == 0
    assert float(summary(out)["reports"][0]["bound"]) == pytest.approx(0.16995, abs=1e-5)


def test_audit_mech3_exhaustive_n5(tmp_path):
    out = tmp_path / "a"
    assert main(["audit", "--mech", "mech3", "--n", "5", "--exhaustive-orders",
                 "--out", str(out)]) == 0
    s = summary(out)
    assert s["passed"] and s["reports"][0]["violations"] == 0
    assert read_csv(out / "results.csv") == []
    assert not list(out.glob("*.png"))


def test_audit_mutation_exit_status(tmp_path, capsys):
    out = tmp_path / "a"
    code = main(["audit", "--mech", "mech4", "--n", "4", "--instance-seed", "3",
                 "--mutation", "first-price", "--max-violations", "3", "--out", str(out)])
    assert code == 1
    s = summary(out)
    assert not s["passed"] and s["first_violation_row"] == 1
    assert "results.csv data row 1" in capsys.readouterr().err
    assert len(read_csv(out / "results.csv")) >= 1


def test_lowerbound_k3(tmp_path):
    out = tmp_path / "l"
    assert main(["lowerbound", "--k", "3", "--yao", "20", "--out", str(out)]) == 0
    s = summary(out)
    assert s["max_expected_ratio"] == "2/3"
    assert (out / "witness_k3.json").exists()
    assert (out / "witness_k3.png").exists()


def test_run_is_byte_identical_and_replayable(tmp_path):
    args = ["run", "--mech", "mech1", "--family", "coverage", "--n", "6", "--trials", "40",
            "--seed", "5", "--epsilon", "0,0.5"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--no-figures"]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert list(a.glob("*.png")) and not list(b.glob("*.png"))

    replay = json.loads((a / "replay.json").read_text())
    rows = read_csv(a / "results.csv")
    base = instance_from_dict(replay["instance"])
    params = MechParams(**replay["params"])
    optimum = Fraction(rows[0]["optimum"])
    from bfmech.instances import attach_prediction
    for row, rec in zip(rows, replay["trials"]):
        aug = attach_prediction(base, Fraction(rec["epsilon"]), optimum)
        order = sample_arrival(base.n, rec["order_seed"])
        t = CoinTranscript.from_seed(rec["transcript_seed"])
        outc = registry.run(replay["mechanism"], aug, order, t, params)
        assert " ".join(map(str, sorted(outc.winners))) == row["winners"]
        assert " ".join(map(str, order.perm)) == row["order"]


def test_run_reports_bound_comparison(tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--mech", "mech2", "--family", "additive", "--n", "8",
                 "--trials", "300", "--preset", "cor3.3", "--out", str(out),
                 "--no-figures"]) == 0
    est = summary(out)["estimates"][0]
    assert est["above_bound_minus_3se"]
    assert est["analytic_bound"] == pytest.approx(0.16995, abs=1e-5)


def test_run_from_instance_file(tmp_path):
    path = tmp_path / "inst.json"
    save_instance(generate_instance({"family": "cut", "n": 5, "density": 0.8}, 2), path)
    out = tmp_path / "r"
    assert main(["run", "--mech", "mech7", "--instance", str(path), "--trials", "20",
                 "--out", str(out), "--no-figures"]) == 0
    assert len(read_csv(out / "results.csv")) == 20


def test_tune_writes_result(tmp_path):
    out = tmp_path / "t"
    assert main(["tune", "--bound", "mono_sample", "--grid", "q=0.64:0.68:0.01",
                 "--grid", "delta=0.16:0.19:0.01", "--fixed", "z=2.1", "--fixed", "beta=0.29",
                 "--out", str(out)]) == 0
    res = summary(out)["result"]
    direct = tune_params("mono_sample", {"q": frange("0.64", "0.68", "0.01"),
                                         "delta": frange("0.16", "0.19", "0.01")},
                         fixed={"z": "2.1", "beta": "0.29"})
    assert float(res["best_bound"]) == pytest.approx(float(direct.best_bound), rel=1e-12)
    assert float(res["best_params"]["q"]) == pytest.approx(float(direct.best_params["q"]))
    assert res["evaluations"] == 20
    assert list(out.glob("*.png"))


def test_demo(tmp_path):
    out = tmp_path / "d"
    assert main(["demo", "--epsilon-small", "0.01", "--transcripts", "300",
                 "--out", str(out), "--no-figures"]) == 0
    assert summary(out)["passed"]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("BFMECH_OUT", str(tmp_path / "env"))
    from bfmech.cli import build_parser
    args = build_parser().parse_args(["bounds", "--preset", "cor3.4"])
    assert args.out == str(tmp_path / "env")


@pytest.mark.parametrize("argv", [
    ["run", "--mech", "mech1", "--instance", "/no/such/file.json"],
    ["run", "--mech", "mech3", "--family", "cut", "--n", "4"],
    ["bounds", "--bound", "mech4", "--param", "q=0.5"],
    ["tune", "--bound", "mech4", "--grid", "q=oops"],
    ["lowerbound", "--k", "1"],
    ["audit", "--mech", "mech1", "--n", "12", "--exhaustive-orders"],
])
def test_bad_input_exits_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "x"), "--no-figures"]) == 2


def test_unknown_mechanism_is_argparse_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--mech", "mech9", "--out", str(tmp_path)])
    assert exc.value.code == 2
