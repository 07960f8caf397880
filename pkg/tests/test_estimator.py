import numpy as np
import pytest
from sklearn.base import clone

from lidarcam.estimator import GeneticCalibrator
from lidarcam.geometry import project_points
from lidarcam.synth import default_ground_truth

KW = dict(slots=2, population=80, generations=10, max_iterations=6,
          convergence_epsilon=1e-6, seed=0)


def truth_pairs(n=40, seed=0):
    cal = default_ground_truth("pinhole")
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-3, 3, n), rng.uniform(3, 10, n),
                           rng.uniform(-1, 2, n)])
    pix, visible = project_points(pts, cal)
    assert visible.all()
    return pts, pix


class TestEstimatorApi:
    def test_get_params_round_trip(self):
        est = GeneticCalibrator(model="fisheye", seed=5)
        params = est.get_params()
        assert params["model"] == "fisheye" and params["seed"] == 5
        est2 = GeneticCalibrator(**params)
        assert est2.get_params() == params

    def test_clone(self):
        est = GeneticCalibrator(**KW)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_set_params(self):
        est = GeneticCalibrator().set_params(population=10, seed=3)
        assert est.population == 10 and est.seed == 3

    def test_predict_before_fit_raises(self):
        with pytest.raises(RuntimeError):
            GeneticCalibrator().predict([[0, 5, 0]])


class TestFitPredictScore:
    def test_fit_recovers_low_error(self):
        X, y = truth_pairs()
        est = GeneticCalibrator(**KW).fit(X, y)
        assert est.train_error_ < 50.0  # tiny budget, just sanity
        assert est.params_.shape == (10,)
        pred = est.predict(X)
        assert pred.shape == y.shape
        assert est.score(X, y) == pytest.approx(-est.train_error_, rel=1e-9)

    def test_fit_deterministic(self):
        X, y = truth_pairs()
        a = GeneticCalibrator(**KW).fit(X, y)
        b = GeneticCalibrator(**KW).fit(X, y)
        assert np.array_equal(a.params_, b.params_)

    def test_predict_nan_behind_camera(self):
        X, y = truth_pairs()
        est = GeneticCalibrator(**KW).fit(X, y)
        behind = np.array([[0.0, -50.0, 0.0]])
        assert np.isnan(est.predict(behind)).all()

    def test_input_validation(self):
        X, y = truth_pairs(n=12)
        est = GeneticCalibrator(**KW)
        with pytest.raises(ValueError):
            est.fit(X[:, :2], y)
        with pytest.raises(ValueError):
            est.fit(X, y[:-1])
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            est.fit(bad, y)
