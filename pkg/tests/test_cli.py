import json

import numpy as np
import pytest

import ssl_forge.cli.commands as commands
from main import main
from ssl_forge.cli.commands import bench_row, experiment_split, run_experiment
from ssl_forge.cli.models import ExperimentConfig, SplitConfig


MOONS = {"synthetic": {"kind": "two_moons", "params": {"n": 200, "noise_sd": 0.05}, "seed": 0}}


def _experiment(**overrides):
    config = {
        "dataset": MOONS,
        "split": {"n_labeled": 10, "seed": 0},
        "algorithm": {"name": "label_spreading", "params": {"alpha": 0.9, "k": 7}},
    }
    config.update(overrides)
    return config


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_gen_writes_header_plus_rows(tmp_path):
    out = tmp_path / "moons.csv"
    assert main(["gen", "two_moons", "--param", "n=200", "--seed", "0", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 201
    assert lines[0] == "x0,x1,label"


def test_gen_is_byte_identical_across_runs(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        assert main(["gen", "blobs", "--param", "n=30", "--param", "k=3", "--seed", "5", "--out", str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_gen_from_config(tmp_path):
    out = tmp_path / "linear.csv"
    config = _write(tmp_path, "gen.json", {"kind": "linear", "params": {"n": 20, "d": 3}, "out": str(out)})
    assert main(["gen", "--config", config]) == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 21


@pytest.mark.parametrize("argv", [
    ["gen", "spirals", "--out", "unused.csv"],
    ["gen", "two_moons", "--param", "n=-5", "--out", "unused.csv"],
    ["gen", "two_moons", "--param", "oops"],
    ["gen", "two_moons"],
    ["frobnicate"],
])
def test_configuration_errors_exit_2(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_help_exits_0():
    assert main(["--help"]) == 0


def test_run_label_spreading(tmp_path):
    out = tmp_path / "result.json"
    config = _write(tmp_path, "run.json", _experiment())
    assert main(["run", "--config", config, "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert text.endswith("\n")
    document = json.loads(text)
    assert document["algorithm"] == "label_spreading"
    assert document["metrics"]["accuracy"] >= 0.9
    assert "log_loss" in document["metrics"]
    assert document["diagnostics"]["converged"] is True
    assert document["split"] == {"n_labeled": 10, "n_unlabeled": 190, "n_eval": 190, "evaluation": "transductive"}
    assert document["confusion_matrix"]["labels"] == [0, 1]
    assert np.array(document["confusion_matrix"]["matrix"]).sum() == 190
    assert list(document) == sorted(document)


def test_run_is_deterministic(tmp_path):
    config = ExperimentConfig(**_experiment(algorithm={"name": "tri_training"}))
    first, second = run_experiment(config), run_experiment(config)
    assert first["metrics"] == second["metrics"]
    assert run_experiment(config, seed=4)["seed"] == 4


def test_run_unknown_algorithm_exits_2(tmp_path):
    config = _write(tmp_path, "run.json", _experiment(algorithm={"name": "magic"}))
    assert main(["run", "--config", config]) == 2


def test_run_bad_params_exit_2(tmp_path):
    config = _write(tmp_path, "run.json", _experiment(algorithm={"name": "label_spreading", "params": {"alpha": 2}}))
    assert main(["run", "--config", config]) == 2


def test_run_metric_of_wrong_task_exits_2(tmp_path):
    config = _write(tmp_path, "run.json", _experiment(metrics=["mse"]))
    assert main(["run", "--config", config]) == 2


def test_run_missing_csv_exits_3(tmp_path):
    config = _write(tmp_path, "run.json", _experiment(dataset={"csv": {"path": str(tmp_path / "missing.csv")}}))
    assert main(["run", "--config", config]) == 3


def test_run_infeasible_constraints_exits_4(tmp_path):
    config = _write(tmp_path, "run.json", {
        "dataset": {"synthetic": {"kind": "blobs", "params": {"n": 60, "k": 3, "sd": 0.5}}},
        "split": {"n_labeled": 6},
        "algorithm": {"name": "constrained_kmeans", "params": {"must_link": [[0, 1]], "cannot_link": [[0, 1]]}},
    })
    assert main(["run", "--config", config]) == 4


def test_run_from_csv_with_unlabeled_rows(tmp_path):
    rows = ["x0,x1,label"]
    rng = np.random.default_rng(0)
    for i in range(40):
        label = i % 2
        x = rng.normal(loc=4.0 * label, scale=0.3, size=2)
        rows.append(f"{float(x[0])!r},{float(x[1])!r},{label if i < 30 else ''}")
    data = tmp_path / "data.csv"
    data.write_text("\n".join(rows) + "\n", encoding="utf-8")
    config = ExperimentConfig(**_experiment(dataset={"csv": {"path": str(data)}}, split={"n_labeled": 4}))
    document = run_experiment(config)
    assert document["split"]["n_labeled"] == 4
    assert document["split"]["n_eval"] == 26
    assert document["split"]["n_unlabeled"] == 36


def test_held_out_rows_never_reach_the_fit(monkeypatch):
    seen = []
    real = commands.pipeline_fit

    def spy(spec, dataset, seed, log):
        seen.append(dataset)
        return real(spec, dataset, seed, log)

    monkeypatch.setattr(commands, "pipeline_fit", spy)
    config = ExperimentConfig(**_experiment(split={"n_labeled": 10, "seed": 3, "test_fraction": 0.5}))
    document = run_experiment(config)
    assert document["split"]["evaluation"] == "held_out"
    dataset = seen[0]
    assert dataset.n_labeled == 10
    assert dataset.n_unlabeled + document["split"]["n_eval"] == 190


def test_split_keeps_eval_rows_out_of_the_dataset():
    X = np.arange(100, dtype=np.float64).reshape(50, 2)
    y = np.arange(50) % 2
    split = experiment_split(X, y, np.empty((0, 2)), SplitConfig(n_labeled=6, seed=1, test_fraction=0.4), True, 1)
    fitted_rows = {tuple(row) for row in split.dataset.X_all}
    assert not fitted_rows & {tuple(row) for row in split.eval_X}
    assert split.eval_X.shape[0] == 18
    assert split.dataset.n_unlabeled == 26


def test_bench_rows_and_failures(tmp_path):
    out = tmp_path / "bench.json"
    suite = _write(tmp_path, "suite.json", {
        "experiments": [
            _experiment(name="spreading"),
            _experiment(name="knn", algorithm={"name": "knn", "params": {"k": 1}}),
            _experiment(name="broken", algorithm={"name": "knn", "params": {"k": 50}}),
        ],
        "seeds": [0, 1, 2],
    })
    assert main(["bench", "--config", suite, "--out", str(out)]) == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["seeds"] == [0, 1, 2]
    assert [row["experiment"] for row in document["rows"]] == ["spreading", "knn", "broken"]
    spreading, knn, broken = document["rows"]
    assert spreading["status"] == knn["status"] == "ok"
    assert spreading["n_seeds"] == 3
    assert set(spreading["metrics"]["accuracy"]) == {"mean", "std"}
    assert broken["status"] == "failed"
    assert broken["n_failed"] == 3
    assert [e["seed"] for e in broken["errors"]] == [0, 1, 2]
    assert broken["errors"][0]["exit_code"] == 2


def test_bench_records_unexpected_errors(monkeypatch):
    real = commands.pipeline_fit

    def flaky(spec, dataset, seed, log):
        if seed == 1:
            raise RuntimeError("solver blew up")
        return real(spec, dataset, seed, log)

    monkeypatch.setattr(commands, "pipeline_fit", flaky)
    row = bench_row(ExperimentConfig(**_experiment(name="spreading")), [0, 1, 2])
    assert row["status"] == "partial"
    assert row["n_failed"] == 1
    assert row["errors"] == [{"seed": 1, "error": "RuntimeError", "message": "solver blew up", "exit_code": 4}]
    assert set(row["metrics"]["accuracy"]) == {"mean", "std"}


def test_bench_seed_override_and_table(tmp_path, capsys):
    suite = _write(tmp_path, "suite.json", {"experiments": [_experiment(name="spreading")], "seeds": [0, 1]})
    assert main(["bench", "--config", suite, "--seed", "7", "--format", "table"]) == 0
    output = capsys.readouterr().out
    assert "spreading" in output
    assert "metrics.accuracy.mean" in output


def test_bench_empty_suite_exits_2(tmp_path):
    suite = _write(tmp_path, "suite.json", {"experiments": [], "seeds": [0]})
    assert main(["bench", "--config", suite]) == 2


def test_eval_predictions(tmp_path):
    path = tmp_path / "pred.csv"
    path.write_text("y_true,y_pred,score_0,score_1\n0,0,0.8,0.2\n1,1,0.3,0.7\n1,0,0.6,0.4\n", encoding="utf-8")
    out = tmp_path / "metrics.json"
    assert main(["eval", str(path), "--out", str(out)]) == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["n_rows"] == 3
    assert document["accuracy"] == pytest.approx(2.0 / 3.0)
    assert "log_loss" in document
    assert document["confusion_matrix"] == [[1, 0], [1, 1]]


def test_eval_regression_and_bad_file(tmp_path):
    path = tmp_path / "pred.csv"
    path.write_text("y_true,y_pred\n1.0,1.5\n2.0,2.0\n", encoding="utf-8")
    out = tmp_path / "metrics.json"
    assert main(["eval", str(path), "--task", "regression", "--out", str(out)]) == 0
    assert json.loads(out.read_text(encoding="utf-8"))["mse"] == pytest.approx(0.125)
    broken = tmp_path / "broken.csv"
    broken.write_text("y_true\n1\n", encoding="utf-8")
    assert main(["eval", str(broken)]) == 3
