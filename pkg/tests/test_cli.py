import csv
import json

import numpy as np
import pytest

from oglasso.cli import main
from oglasso.data import SyntheticSpec, gen_sliding, write_libsvm
from oglasso.groups import GroupCovering, write_groups
from oglasso.trace import read_jsonl


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_sliding_adadrops(tmp_path):
    out = tmp_path / "run.json"
    code = main(["solve", "--gen", "sliding", "--N", "20", "--gs", "10", "--os", "3",
                 "--lambda-ratio", "10", "--solver", "admm", "--adadrops", "ogn",
                 "--init-size", "2", "--growth-cap", "3", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["schema"] == 1 and rep["seed"] == 0
    assert rep["n"] == 20 * 10 - 19 * 3 and rep["n_groups"] == 20
    assert rep["config"]["adadrops"] == "ogn"
    for key in ("objective", "residual", "iterations", "kappa", "support", "wall_time", "trace"):
        assert key in rep
    records = read_jsonl(rep["trace"])
    its = [r for r in records if "obj" in r]
    rounds = [r for r in records if "round" in r]
    assert its[-1]["obj"] == rep["objective"]
    assert its[-1]["res"] == rep["residual"]
    assert its[-1]["iter"] == rep["iterations"]
    assert len(rounds) == rep["rounds"] >= 1
    kappas = [r["kappa"] for r in rounds]
    for a, b in zip(rounds, rounds[1:]):
        assert b["kappa"] >= a["kappa"]
        if not a["added_groups"]:
            assert b["kappa"] == a["kappa"]
    assert max(kappas) <= rep["n"]
    assert rep["support"]["active_groups"] == len(rep["support"]["groups"])


def test_solve_libsvm_varpro(tmp_path):
    P, C = gen_sliding(SyntheticSpec(8, 4, 1, seed=3))
    data, grp, out = tmp_path / "f.libsvm", tmp_path / "g.grp", tmp_path / "r.json"
    write_libsvm(data, P.A, P.y)
    write_groups(C, grp)
    code = main(["solve", "--data", str(data), "--groups", str(grp), "--solver", "varpro",
                 "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["n"] == C.n and rep["m"] == P.m
    assert rep["lambda"] == pytest.approx(P.lam)
    assert rep["kappa"] == C.n  # vanilla runs keep every coordinate


def test_solve_pd_bad_steps_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["solve", "--gen", "sliding", "--N", "5", "--gs", "4", "--os", "1",
              "--solver", "pd", "--sigma", "1", "--tau", "1", "--out", str(tmp_path / "r.json")])
    assert err.value.code == 2
    assert "sigma*tau" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve"],
    ["solve", "--gen", "sliding", "--data", "x"],
    ["solve", "--gen", "sliding", "--lambda", "1", "--lambda-ratio", "2"],
    ["solve", "--gen", "sliding", "--gs", "3", "--os", "3"],
    ["solve", "--gen", "bogus"],
    ["solve", "--data", "x.libsvm"],
])
def test_bad_flags(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == 2


def test_missing_file_is_solver_failure(tmp_path, capsys):
    grp = tmp_path / "g.grp"
    write_groups(GroupCovering(2, [[0], [1]]), grp)
    code = main(["solve", "--data", str(tmp_path / "nope.libsvm"), "--groups", str(grp)])
    assert code == 3
    assert "error" in capsys.readouterr().err


def test_not_converged_exit_code(tmp_path):
    code = main(["solve", "--gen", "sliding", "--N", "10", "--gs", "5", "--os", "2",
                 "--max-iters", "3", "--out", str(tmp_path / "r.json")])
    assert code == 1
    assert json.loads((tmp_path / "r.json").read_text())["converged"] is False


def test_seed_controls_instance(tmp_path):
    reps = []
    for seed in (1, 1, 2):
        out = tmp_path / f"r{len(reps)}.json"
        main(["solve", "--gen", "sliding", "--N", "6", "--gs", "4", "--os", "1",
              "--seed", str(seed), "--out", str(out)])
        reps.append(json.loads(out.read_text()))
    assert reps[0]["objective"] == reps[1]["objective"]
    assert reps[0]["objective"] != reps[2]["objective"]


# certify

HEADER = ["group", "weight", "beta_norm", "ogn_norm", "lasso_zero", "ogn_zero", "true_zero"]


def test_certify_csv_shape(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code = main(["certify", "--gen", "sliding", "--N", "15", "--gs", "6", "--os", "2",
                 "--lambda-ratio", "5", "--out", str(out)])
    assert code == 0
    rows = _read_csv(out)
    assert rows[0] == HEADER
    body, total = rows[1:-1], rows[-1]
    assert [int(r[0]) for r in body] == list(range(1, 16))
    assert total[0] == "total"
    for col in (4, 5, 6):
        assert int(total[col]) == sum(int(r[col]) for r in body)
    # detected groups are truly zero, OGN detects at least what LASSO does
    for r in body:
        assert int(r[4]) <= int(r[5]) <= int(r[6])
    summary = json.loads(capsys.readouterr().out)
    assert summary["true_zero"] == int(total[6])
    assert summary["lasso_detected"] == int(total[4])
    assert summary["ogn_detected"] == int(total[5])


def test_certify_nonoverlapping_counts_agree(tmp_path):
    out = tmp_path / "c.csv"
    main(["certify", "--gen", "sliding", "--N", "20", "--gs", "5", "--os", "0",
          "--lambda-ratio", "3", "--out", str(out)])
    total = _read_csv(out)[-1]
    assert total[4] == total[5]


def test_certify_above_lambda_max_all_zero(tmp_path):
    out = tmp_path / "c.csv"
    main(["certify", "--gen", "sliding", "--N", "10", "--gs", "5", "--os", "2",
          "--lambda-ratio", "0.9", "--out", str(out)])
    total = _read_csv(out)[-1]
    assert total[4:] == ["10", "10", "10"]


def test_certify_stdout_without_out(capsys):
    code = main(["certify", "--gen", "tree", "--depth", "2", "--fanout", "3", "--lambda-ratio", "2"])
    assert code == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == HEADER and len(rows) == 1 + 4 + 1


def test_certify_multitask(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["certify", "--gen", "multitask", "--N", "12", "--q", "3", "--lambda-ratio", "2",
                 "--out", str(out)]) == 0
    rows = _read_csv(out)
    np.testing.assert_array_equal([float(r[1]) for r in rows[1:-1]], 1.0)
