"""Smoke tests for the gramnet extension module."""

import numpy as np
import pytest

import gramnet


@pytest.fixture()
def line_data():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(500, 4))
    beta = np.array([2.0, -1.5, 0.0, 0.5])
    y = X @ beta + 1.0 + 0.1 * rng.normal(size=500)
    return X, y, beta


def test_stats_match_numpy(line_data):
    X, y, _ = line_data
    s = gramnet.stats_from_arrays(X, y)
    assert s.n == 500
    assert s.sum_y == pytest.approx(y.sum(), rel=1e-12)
    assert s.sum_yy == pytest.approx(y @ y, rel=1e-12)
    np.testing.assert_allclose(s.sum_x, X.sum(axis=0), rtol=1e-12)
    np.testing.assert_allclose(s.xty, X.T @ y, rtol=1e-12)
    np.testing.assert_allclose(s.xtx(), X.T @ X, rtol=1e-12)


def test_merge_is_additive(line_data):
    X, y, _ = line_data
    whole = gramnet.stats_from_arrays(X, y)
    merged = gramnet.merge(
        gramnet.stats_from_arrays(X[:200], y[:200]),
        gramnet.stats_from_arrays(X[200:], y[200:]),
    )
    assert merged.n == whole.n
    np.testing.assert_allclose(merged.xtx(), whole.xtx(), rtol=1e-12)


def test_standardize_invariants(line_data):
    X, y, _ = line_data
    p = gramnet.standardize(gramnet.stats_from_arrays(X, y))
    np.testing.assert_allclose(np.diag(p.g), np.ones(4), atol=1e-10)
    assert np.abs(p.g).max() <= 1.0 + 1e-10
    assert p.tss == pytest.approx(np.sum((y - y.mean()) ** 2), rel=1e-12)


def test_ridge_closed_form_matches_numpy(line_data):
    X, y, _ = line_data
    p = gramnet.standardize(gramnet.stats_from_arrays(X, y))
    beta = gramnet.ridge_closed_form(p, 2.5)
    expected = np.linalg.solve(p.g + 2.5 * np.eye(4), p.b)
    np.testing.assert_allclose(beta, expected, atol=1e-10)


def test_fit_recovers_the_signal(line_data):
    X, y, beta = line_data
    model = gramnet.fit(X, y, penalty="lasso", k=5, seed=11)
    assert model.converged
    assert model.intercept == pytest.approx(1.0, abs=0.05)
    np.testing.assert_allclose(model.coefficients, beta, atol=0.05)
    # prediction helper agrees with the linear form
    x0 = X[0]
    assert model.predict(x0) == pytest.approx(model.intercept + x0 @ model.coefficients)


def test_cv_report_is_consistent(line_data):
    X, y, _ = line_data
    folds = gramnet.fold_stats_from_arrays(X, y, k=5, seed=3)
    assert folds.k == 5
    assert sum(f.n for f in folds.folds) == 500
    report = gramnet.cross_validate(folds, gramnet.PenaltySpec("lasso", n_lambdas=30))
    assert len(report.lambdas) == 30
    assert report.lambda_opt == report.lambdas[report.lambda_opt_index]
    assert report.mean_mse[report.lambda_opt_index] == pytest.approx(report.mean_mse.min())
    np.testing.assert_allclose(
        report.mean_mse, np.nanmean(report.fold_mse, axis=0), rtol=1e-12
    )


def test_solve_path_norms_grow_as_lambda_falls(line_data):
    X, y, _ = line_data
    p = gramnet.standardize(gramnet.stats_from_arrays(X, y))
    path = gramnet.solve_path(p, gramnet.PenaltySpec("lasso", n_lambdas=20))
    norms = [np.abs(sol.beta_std).sum() for sol in path]
    assert all(b >= a - 1e-8 for a, b in zip(norms, norms[1:]))
    assert all(sol.converged for sol in path)


def test_lambda_max_zeroes_the_fit(line_data):
    X, y, _ = line_data
    p = gramnet.standardize(gramnet.stats_from_arrays(X, y))
    spec = gramnet.PenaltySpec("lasso")
    top = gramnet.lambda_max(p, spec)
    sol = gramnet.coordinate_descent(p, spec, top)
    assert np.all(sol.beta_std == 0.0)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(gramnet.EmptyModelError):
        gramnet.standardize(
            gramnet.stats_from_arrays(np.full((10, 2), 3.0), np.arange(10.0))
        )
    with pytest.raises(ValueError):
        gramnet.PenaltySpec("lasso", lambdas=[1.0, 2.0])  # not descending


def test_fold_assignment_is_deterministic():
    assert gramnet.assign_fold(0, 42, 5) == 3
    assert gramnet.assign_fold(12345, 42, 5) == 4
    keys = {gramnet.assign_fold(i, 7, 2) for i in range(100)}
    assert keys == {0, 1}


def test_csv_ingest_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(120, 2))
    y = X @ np.array([1.0, -2.0]) + 0.05 * rng.normal(size=120)
    csv = tmp_path / "data.csv"
    with open(csv, "w") as f:
        f.write("a,b,y\n")
        for i in range(120):
            f.write(f"{float(X[i, 0])!r},{float(X[i, 1])!r},{float(y[i])!r}\n")

    config = gramnet.IngestConfig()
    config.shards = [str(csv)]
    config.response = "y"
    config.k = 4
    config.seed = 9
    result = gramnet.ingest(config)
    assert result.folded.total_records == 120
    assert result.feature_names == ["a", "b"]

    model = gramnet.train(result.folded, gramnet.PenaltySpec("lasso"))
    np.testing.assert_allclose(model.coefficients, [1.0, -2.0], atol=0.05)
