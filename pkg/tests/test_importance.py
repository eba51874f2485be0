import numpy as np
import pytest

from co2fuse.importance import (
    _coalition_tables,
    exact_shapley_row,
    permutation_importance,
    shapley_attribution,
    write_report_csv,
)
from co2fuse.models import GbtConfig, LinearModel, TrainedModel, predict_batch, train_gbt

rng = np.random.default_rng(19)


def test_linear_closed_form_exact():
    # under mean imputation, a linear model attributes a_i * (x_i - mu_i)
    a = rng.normal(size=14)
    f = lambda X: X @ a + 3.0
    mu = rng.normal(size=14)
    x = rng.normal(size=14)
    phi = exact_shapley_row(f, x, mu, _coalition_tables(14))
    assert np.abs(phi - a * (x - mu)).max() < 1e-9


def test_local_accuracy_identity():
    a = rng.normal(size=6)
    f = lambda X: np.sin(X @ a) * 10.0  # nonlinear on purpose
    mu = rng.normal(size=6)
    x = rng.normal(size=6)
    phi = exact_shapley_row(f, x, mu, _coalition_tables(6))
    assert phi.sum() == pytest.approx(float(f(x[None, :])[0] - f(mu[None, :])[0]), abs=1e-6)


def test_symmetry_of_interchangeable_features():
    f = lambda X: X[:, 0] + X[:, 1]  # features 0 and 1 play identical roles
    mu = np.zeros(4)
    x = np.array([2.5, 2.5, 9.0, -3.0])
    phi = exact_shapley_row(f, x, mu, _coalition_tables(4))
    assert abs(phi[0] - phi[1]) < 1e-9


def test_dummy_feature_gets_zero():
    f = lambda X: 2.0 * X[:, 3]
    mu = rng.normal(size=5)
    for _ in range(5):
        x = rng.normal(size=5)
        phi = exact_shapley_row(f, x, mu, _coalition_tables(5))
        for j in (0, 1, 2, 4):
            assert phi[j] == pytest.approx(0.0, abs=1e-12)


def _linear_trained_model():
    return TrainedModel("baseline", LinearModel(slope=0.8, intercept=80.0))


def test_report_on_trained_model():
    tm = _linear_trained_model()
    X = rng.normal(415, 5, size=(40, 14))
    report = shapley_attribution(tm, X, X, seed=0)
    assert len(report.entries) == 14
    assert report.method == "shapley"
    assert report.entries[0].feature == "xco2"  # the only live feature
    assert report.entries[0].value > 0
    for e in report.entries[1:]:
        assert e.value == pytest.approx(0.0, abs=1e-12)
    ranks = [e.rank for e in report.entries]
    assert ranks == list(range(1, 15))
    mu = X.mean(axis=0)
    assert report.baseline == pytest.approx(float(predict_batch(tm, mu[None, :])[0]))


def test_report_local_accuracy_on_gbt():
    X = rng.normal(415, 4, size=(120, 14))
    y = X[:, 0] + 0.5 * X[:, 8] + rng.normal(0, 0.5, 120)
    tm = TrainedModel("gbt", train_gbt(X, y, GbtConfig(n_estimators=25)))
    mu = X.mean(axis=0)
    tables = _coalition_tables(14)
    f = lambda Z: predict_batch(tm, Z)
    for x in X[:4]:
        phi = exact_shapley_row(f, x, mu, tables)
        assert phi.sum() == pytest.approx(
            float(f(x[None, :])[0] - f(mu[None, :])[0]), abs=1e-6
        )


def test_row_subsample_deterministic():
    tm = _linear_trained_model()
    X = rng.normal(415, 5, size=(300, 14))
    a = shapley_attribution(tm, X, X, seed=11, max_rows=20)
    b = shapley_attribution(tm, X, X, seed=11, max_rows=20)
    assert [(e.feature, e.value) for e in a.entries] == [
        (e.feature, e.value) for e in b.entries
    ]


def test_shapley_input_validation():
    tm = _linear_trained_model()
    X = rng.normal(size=(5, 14))
    with pytest.raises(ValueError):
        shapley_attribution(tm, X, np.empty((0, 14)))
    with pytest.raises(ValueError):
        shapley_attribution(tm, np.empty((0, 14)), X)


def test_permutation_ranks_copied_feature_first():
    X = rng.normal(size=(300, 14))
    y = X[:, 3].copy()  # label is an exact copy of feature 3
    # train a depth-2 booster; it must lock onto feature 3
    tm = TrainedModel("gbt", train_gbt(X, y, GbtConfig(max_depth=2, n_estimators=40)))
    report = permutation_importance(tm, (X, y), repeats=3, seed=5)
    assert report.entries[0].feature == "longitude"  # canonical name of column 3
    assert report.entries[0].value > 10 * abs(report.entries[-1].value)


def test_permutation_ignored_feature_is_small():
    tm = _linear_trained_model()  # uses xco2 only
    X = rng.normal(415, 5, size=(400, 14))
    y = 0.8 * X[:, 0] + 80.0
    report = permutation_importance(tm, (X, y), repeats=4, seed=2)
    by_name = {e.feature: e.value for e in report.entries}
    for name, value in by_name.items():
        if name != "xco2":
            assert abs(value) <= 0.01


def test_permutation_repeats_validation():
    tm = _linear_trained_model()
    X = rng.normal(size=(10, 14))
    with pytest.raises(ValueError):
        permutation_importance(tm, (X, np.zeros(10)), repeats=0)


def test_bar_summary_ordering():
    from co2fuse.importance import bar_summary

    tm = _linear_trained_model()
    X = rng.normal(415, 5, size=(20, 14))
    report = shapley_attribution(tm, X, X)
    lines = bar_summary(report).splitlines()
    assert len(lines) == 14
    assert lines[0].startswith("xco2")
    assert "#" in lines[0] and "#" not in lines[-1]


def test_report_csv_format(tmp_path):
    tm = _linear_trained_model()
    X = rng.normal(415, 5, size=(20, 14))
    report = shapley_attribution(tm, X, X)
    path = tmp_path / "imp.csv"
    write_report_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "feature,mean_abs_attribution_ppm,rank,method"
    assert len(lines) == 15
    assert lines[1].split(",")[0] == "xco2"
    assert lines[1].endswith("shapley")
