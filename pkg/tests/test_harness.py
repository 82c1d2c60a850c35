import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import confusion_loop, mape_loop, minmax_loop, rmse_loop, tsallis_loop
from tsallis_fin.engine.spec import DenseSpec, NetworkSpec, count_params
from tsallis_fin.errors import ConfigError, DomainError, SchemaError, ShapeError
from tsallis_fin.harness import (ExperimentConfig, ExperimentReport, TableSchema, apply_overrides,
                                 baseline_search, chrono_split, class_metrics, confusion,
                                 entropy_classification_table, entropy_regression_table,
                                 from_dict, load_feature_table, load_table, make_windows, mape,
                                 render_table, rmse, run_experiment, stratified_split)
from tsallis_fin.harness.config import config_hash, to_dict
from tsallis_fin.harness.data import split_point
from tsallis_fin.harness.tasks import EntropyClassificationTask, EntropyRegressionTask


def write_csv(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return path


SCHEMA = TableSchema(features=("a", "b"), target="y", time="t")


def series_csv(tmp_path, n, order=None):
    rows = [(t, 0.5 * t, -t, 10.0 + t) for t in range(n)]
    if order is not None:
        rows = [rows[i] for i in order]
    return write_csv(tmp_path / "s.csv", ["t", "a", "b", "y"], rows)


# ingestion

def test_load_table_ten_rows(tmp_path):
    table = load_table(series_csv(tmp_path, 10), SCHEMA)
    assert len(table) == 10
    assert np.all(np.diff(table.time) > 0)
    assert table.features.shape == (10, 2)
    assert table.report.rows_kept == 10


def test_load_table_sorts_shuffled_rows(tmp_path):
    order = np.random.default_rng(0).permutation(10)
    table = load_table(series_csv(tmp_path, 10, order), SCHEMA)
    np.testing.assert_array_equal(table.time, np.arange(10))
    np.testing.assert_array_equal(table.target, 10.0 + np.arange(10))


def test_load_table_missing_target_column(tmp_path):
    path = write_csv(tmp_path / "s.csv", ["t", "a", "b"], [(0, 1, 2), (1, 2, 3)])
    with pytest.raises(SchemaError, match="y"):
        load_table(path, SCHEMA)


def test_load_table_drops_and_counts_gaps(tmp_path):
    rows = [(t, t, t, t) for t in range(20)]
    rows[3] = (3, "", 3, 3)
    rows[7] = (7, 7, "NA", 7)
    table = load_table(write_csv(tmp_path / "s.csv", ["t", "a", "b", "y"], rows), SCHEMA)
    assert len(table) == 18
    assert table.report.rows_with_gaps == 2
    assert not np.isnan(table.features).any()


def test_load_table_rejects_many_unparseable_rows(tmp_path):
    rows = [(t, "x" if t % 2 else t, t, t) for t in range(20)]
    with pytest.raises(SchemaError, match="could not be parsed"):
        load_table(write_csv(tmp_path / "s.csv", ["t", "a", "b", "y"], rows), SCHEMA)


def test_load_table_drops_duplicate_times(tmp_path):
    rows = [(0, 1, 1, 1), (1, 2, 2, 2), (1, 9, 9, 9), (2, 3, 3, 3)]
    table = load_table(write_csv(tmp_path / "s.csv", ["t", "a", "b", "y"], rows), SCHEMA)
    np.testing.assert_array_equal(table.time, [0, 1, 2])
    assert table.report.rows_duplicate_time == 1


def test_load_table_date_range(tmp_path):
    rows = [(f"2020-01-{d:02d}", d, d, d) for d in range(1, 11)]
    path = write_csv(tmp_path / "d.csv", ["Date", "a", "b", "y"], rows)
    schema = TableSchema(("a", "b"), "y", "Date", start="2020-01-03", end="2020-01-06")
    table = load_table(path, schema)
    np.testing.assert_array_equal(table.target, [3, 4, 5, 6])


def test_load_table_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_table(tmp_path / "nope.csv", SCHEMA)


# windowing and splits

def test_make_windows_ten_rows(tmp_path):
    samples = make_windows(load_table(series_csv(tmp_path, 10), SCHEMA), window=7)
    assert len(samples) == 3
    np.testing.assert_array_equal(samples.target_time, [7, 8, 9])
    np.testing.assert_array_equal(samples.targets, [17.0, 18.0, 19.0])
    assert samples.windows.shape == (3, 7, 2)


def test_make_windows_eight_rows(tmp_path):
    assert len(make_windows(load_table(series_csv(tmp_path, 8), SCHEMA), window=7)) == 1


def test_make_windows_one_step(tmp_path):
    samples = make_windows(load_table(series_csv(tmp_path, 3), SCHEMA), window=1)
    assert len(samples) == 2
    np.testing.assert_array_equal(samples.windows[:, 0, 0], [0.0, 0.5])


def test_make_windows_too_short(tmp_path):
    with pytest.raises(DomainError):
        make_windows(load_table(series_csv(tmp_path, 7), SCHEMA), window=7)


@settings(max_examples=30, deadline=None)
@given(st.integers(8, 60), st.integers(1, 7), st.integers(1, 3))
def test_window_rows_precede_target(n, window, horizon):
    rows = [(t, t, t, t) for t in range(n)]
    from tsallis_fin.harness.data import TimeSeriesTable, IngestionReport
    arr = np.array(rows, dtype=float)
    table = TimeSeriesTable(arr[:, 0], arr[:, 1:3], arr[:, 3], ("a", "b"), "y",
                            IngestionReport(n, n, 0, 0, 0, 0))
    if n < window + horizon:
        return
    s = make_windows(table, window, horizon)
    assert np.all(s.windows[:, :, 0].max(axis=1) < s.target_time)
    assert np.all(s.window_end < s.target_time)


def test_chrono_split_examples(tmp_path):
    assert split_point(100, 0.85) == 85
    assert split_point(7, 0.85) == 5
    samples = make_windows(load_table(series_csv(tmp_path, 107), SCHEMA), window=7)
    train, test = chrono_split(samples, 0.85)
    assert (len(train), len(test)) == (85, 15)
    assert train.target_time.max() < test.target_time.min()


def test_chrono_split_empty_side():
    with pytest.raises(DomainError):
        split_point(3, 0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=20, max_size=200), st.integers(0, 100))
def test_stratified_split_partitions(labels, seed):
    labels = np.array(labels)
    parts = stratified_split(labels, [0.6, 0.2, 0.2], seed)
    joined = np.concatenate(parts)
    assert len(joined) == len(labels) == len(np.unique(joined))
    for p in parts:
        assert np.all(np.diff(p) > 0)


def test_load_feature_table(tmp_path):
    path = write_csv(tmp_path / "f.csv", ["f1", "f2", "label"],
                     [(1, 2, "b"), (3, 4, "a"), (5, 6, "b")])
    table = load_feature_table(path, "label")
    np.testing.assert_array_equal(table.labels, [1, 0, 1])
    assert table.features.shape == (3, 2)


# metrics

def test_rmse_mape_examples():
    assert math.isclose(rmse([3, 4], [0, 0]), math.sqrt(12.5), abs_tol=1e-12)
    assert math.isclose(rmse([3, 4], [0, 0]), 3.535534, abs_tol=1e-6)
    assert math.isclose(mape([110], [100]), 10.0, abs_tol=1e-12)
    assert rmse([1.5, 2], [1.5, 2]) == 0.0 and mape([1.5, 2], [1.5, 2]) == 0.0


def test_mape_zero_actual():
    with pytest.raises(DomainError):
        mape([1.0, 2.0], [1.0, 0.0])


def test_metric_shape_errors():
    with pytest.raises(ShapeError):
        rmse([1, 2], [1])
    with pytest.raises(ShapeError):
        mape([], [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0.5, 1e3)), min_size=1, max_size=40))
def test_metrics_match_loop_oracles(pairs):
    pred, actual = zip(*pairs)
    assert math.isclose(rmse(pred, actual), rmse_loop(pred, actual), rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(mape(pred, actual), mape_loop(pred, actual), rel_tol=1e-12, abs_tol=1e-12)


def forty_sample_fixture():
    truth = [1] * 20 + [0] * 20
    pred = [1] * 12 + [0] * 8 + [0] * 13 + [1] * 7
    return pred, truth


def test_class_metrics_forty_samples():
    pred, truth = forty_sample_fixture()
    m = class_metrics(pred, truth)
    assert (m.tp, m.fn, m.tn, m.fp) == (12, 8, 13, 7)
    assert math.isclose(m.accuracy, 62.5, abs_tol=1e-9)
    assert math.isclose(m.specificity, 65.0, abs_tol=1e-9)
    assert math.isclose(m.sensitivity, 60.0, abs_tol=1e-9)


def test_class_metrics_all_correct_and_all_positive():
    truth = [0, 1, 1, 0, 1]
    m = class_metrics(truth, truth)
    assert (m.accuracy, m.specificity, m.sensitivity) == (100.0, 100.0, 100.0)
    m = class_metrics([1] * 5, truth)
    assert (m.sensitivity, m.specificity) == (100.0, 0.0)


def test_class_metrics_single_class_flags_undefined():
    m = class_metrics([1, 1, 1], [1, 1, 1])
    assert m.accuracy == 100.0 and m.sensitivity == 100.0
    assert m.specificity is None


def test_class_metrics_multiclass_macro():
    truth = [0, 1, 2, 2]
    pred = [0, 1, 2, 1]
    m = class_metrics(pred, truth)
    assert m.averaging.startswith("macro")
    assert math.isclose(m.accuracy, 75.0)
    # class 2 sensitivity 50, others 100
    assert math.isclose(m.sensitivity, 100.0 * (1 + 1 + 0.5) / 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_class_metrics_consistent_with_confusion(pairs):
    pred, truth = zip(*pairs)
    m = class_metrics(pred, truth)
    assert (m.tp, m.fn, m.tn, m.fp) == confusion(pred, truth) == confusion_loop(pred, truth)
    for v in (m.accuracy, m.specificity, m.sensitivity):
        assert v is None or 0.0 <= v <= 100.0
    assert math.isclose(m.accuracy, 100.0 * (m.tp + m.tn) / m.n)


# baseline search

def spec(hidden, name=""):
    layers = [DenseSpec(h, "relu") for h in hidden] + [DenseSpec(1, "identity")]
    return NetworkSpec((4,), layers, 1, name=name)


def fake_trainer(scores):
    def trainer(s, data, seed):
        return None, None, scores[s.name]
    return trainer


def test_search_single_candidate():
    chosen, _, report = baseline_search([spec((8,), "only")], None, 0, min_params=10,
                                        trainer=fake_trainer({"only": 1.0}))
    assert chosen.name == "only" and report.best_index == 0


def test_search_rejects_small_candidate():
    small = spec((2,), "small")
    with pytest.raises(ConfigError, match="fewer parameters"):
        baseline_search([small], None, 0, min_params=count_params(small) + 1,
                        trainer=fake_trainer({"small": 0.0}))


def test_search_tie_breaks_by_size_then_index():
    big, small, small2 = spec((8, 8), "big"), spec((8,), "small"), spec((8,), "small2")
    scores = {"big": 0.5, "small": 0.5, "small2": 0.5}
    chosen, _, _ = baseline_search([big, small, small2], None, 0, min_params=1,
                                   trainer=fake_trainer(scores))
    assert chosen.name == "small"


def test_search_candidate_limit():
    specs = [spec((8,), f"c{i}") for i in range(11)]
    with pytest.raises(ConfigError):
        baseline_search(specs, None, 0, min_params=1, trainer=fake_trainer({}))


# configs

def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="wibble"):
        from_dict(ExperimentConfig, {"wibble": 1})


def test_config_overrides_and_hash():
    data = apply_overrides({}, ["train.lr=0.5", "model.hidden=[4,4]", "name=x"])
    cfg = from_dict(ExperimentConfig, data)
    assert cfg.train.lr == 0.5 and cfg.model.hidden == (4, 4) and cfg.name == "x"
    again = from_dict(ExperimentConfig, to_dict(cfg))
    assert config_hash(again) == config_hash(cfg)
    assert config_hash(from_dict(ExperimentConfig, {})) != config_hash(cfg)


def test_config_task_shape_consistency():
    with pytest.raises(ConfigError):
        from_dict(ExperimentConfig, {"task": "classification"})


# constructed tasks

def test_regression_task_target_matches_loop_oracle():
    task = EntropyRegressionTask(n_rows=40, n_features=3, window=5, drivers=(0, 2),
                                 weights=(4.0, -2.0))
    table = entropy_regression_table(task, 1)
    x = table.features
    ent = {}
    for d in task.drivers:
        h = [tsallis_loop(minmax_loop(list(x[s - task.window:s, d])), task.q, task.tau)
             for s in range(task.window, task.n_rows + 1)]
        ent[d] = (np.array(h) - np.mean(h)) / np.std(h)
    for t in range(task.window, task.n_rows):
        expected = task.level + sum(w * ent[d][t - task.window]
                                    for d, w in zip(task.drivers, task.weights))
        assert math.isclose(table.target[t], expected, abs_tol=1e-9)
    assert np.all(table.target[: task.window] == task.level)


def test_classification_task_balanced():
    table = entropy_classification_table(EntropyClassificationTask(n_samples=400), 0)
    assert table.features.shape == (400, 64)
    assert abs(table.labels.mean() - 0.5) <= 0.01


# experiments

TINY_REG = {"name": "tiny", "train": {"max_epochs": 3, "batch_size": 64},
            "model": {"hidden": [8, 4]},
            "dataset": {"regression": {"n_rows": 200, "n_features": 3}},
            "attachment": {"mode": "input_level", "fin_mode": "exact",
                           "output_scaling": "standardized"}}
TINY_CLS = {"name": "tiny-cls", "task": "classification", "model": {"shape": "exp3",
            "hidden": [16, 8]}, "train": {"max_epochs": 3},
            "dataset": {"classification": {"n_samples": 300, "n_features": 16,
                                           "latent_dim": 8}},
            "attachment": {"mode": "latent_concat", "fin_mode": "exact",
                           "trainable_q": True, "trainable_tau": True}}


@pytest.mark.parametrize("raw", [TINY_REG, TINY_CLS])
def test_report_reproducible(raw):
    cfg = from_dict(ExperimentConfig, raw)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.to_json() == b.to_json()
    assert a.param_counts["NN-Baseline"] >= a.param_counts["FIN-ENN"]


def test_report_round_trips(tmp_path):
    report = run_experiment(from_dict(ExperimentConfig, TINY_CLS))
    report.write(tmp_path / "r.json")
    assert ExperimentReport.read(tmp_path / "r.json").to_json() == report.to_json()
    m = report.metrics["FIN-ENN"]
    c = m["confusion"]
    assert math.isclose(m["Accuracy"], 100.0 * (c["tp"] + c["tn"]) / sum(c.values()))


def test_regression_split_has_no_leakage():
    report = run_experiment(from_dict(ExperimentConfig, TINY_REG))
    d = report.data
    assert d["train"] + d["val"] + d["test"] == d["samples"]


def test_constant_target_reaches_zero_rmse(tmp_path):
    rows = [(t, 3.0, 4.0, 5.0) for t in range(120)]
    path = write_csv(tmp_path / "c.csv", ["Date", "a", "b", "y"], rows)
    cfg = from_dict(ExperimentConfig, {
        "name": "constant", "dataset": {"kind": "csv", "path": str(path), "features": ["a", "b"],
                                        "target": "y"},
        "model": {"hidden": [8, 4]}, "train": {"max_epochs": 100},
        "attachment": {"mode": "input_level", "fin_mode": "exact"}})
    report = run_experiment(cfg)
    assert report.metrics["NN-Baseline"]["RMSE"] < 1e-3
    assert report.metrics["FIN-ENN"]["RMSE"] < 1e-3


def test_single_class_dataset(tmp_path):
    rng = np.random.default_rng(0)
    rows = [(*rng.random(4), 1) for _ in range(60)]
    path = write_csv(tmp_path / "one.csv", ["f1", "f2", "f3", "f4", "label"], rows)
    cfg = from_dict(ExperimentConfig, {
        "name": "one", "task": "classification", "model": {"shape": "exp3", "hidden": [8, 4]},
        "dataset": {"kind": "csv", "path": str(path), "features": []},
        "attachment": {"mode": "latent_concat", "fin_mode": "exact"},
        "train": {"max_epochs": 30}})
    report = run_experiment(cfg)
    for model in ("NN-Baseline", "FIN-ENN"):
        assert report.metrics[model]["Accuracy"] == 100.0
        assert report.metrics[model]["Specificity"] is None


def test_render_table_with_cited_rows():
    report = run_experiment(from_dict(ExperimentConfig, TINY_REG))
    table = render_table([report, report], extra_cited=["exp1-period1"])
    assert "median of 2" in table
    assert "FIN-ENN [cited]" in table and "277.45" in table
    assert "%" in table


def test_render_table_empty():
    with pytest.raises(ConfigError):
        render_table([])
