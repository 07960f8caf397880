"""Scikit-learn style estimator wrapping the genetic calibration solver."""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .geometry import project_points, reprojection_error
from .solver import (GaConfig, ParamBounds, default_bounds,
                     params_to_calibration, solve)
from .validation import check_pixels, check_points


class GeneticCalibrator(BaseEstimator):
    """Estimate LiDAR-to-camera calibration from point/pixel pairs.

    Parameters mirror the solver configuration; ``fit`` expects LiDAR
    points ``X`` of shape (N, 3) and annotated pixels ``y`` of shape
    (N, 2).  After fitting, ``predict`` projects points to pixels (NaN
    rows for points behind the camera) and ``score`` returns the
    negative mean reprojection error, so larger is better.
    """

    def __init__(self, model: str = "pinhole", slots: int = 5,
                 population: int = 800, generations: int = 30,
                 bound_scale: float = 0.5, max_iterations: int = 20,
                 convergence_epsilon: float = 1e-3, seed: int = 0,
                 bounds: Optional[ParamBounds] = None, parallel: bool = False):
        self.model = model
        self.slots = slots
        self.population = population
        self.generations = generations
        self.bound_scale = bound_scale
        self.max_iterations = max_iterations
        self.convergence_epsilon = convergence_epsilon
        self.seed = seed
        self.bounds = bounds
        self.parallel = parallel

    def _config(self) -> GaConfig:
        return GaConfig(slots=self.slots, population=self.population,
                        generations=self.generations,
                        bound_scale=self.bound_scale,
                        max_iterations=self.max_iterations,
                        convergence_epsilon=self.convergence_epsilon,
                        seed=self.seed)

    def fit(self, X, y):
        X = check_points(X)
        y = check_pixels(y, n=X.shape[0])
        cfg = self._config()
        bounds = self.bounds if self.bounds is not None else default_bounds(self.model)
        report = solve((X, y), self.model, initial_bounds=bounds, cfg=cfg,
                       parallel=self.parallel)
        self.report_ = report
        self.params_ = report.best_params
        self.calibration_ = params_to_calibration(report.best_params, self.model)
        self.train_error_ = report.best_error_px
        self.n_features_in_ = 3
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_points(X)
        pixels, _ = project_points(X, self.calibration_)
        return pixels

    def score(self, X, y) -> float:
        self._check_fitted()
        X = check_points(X)
        y = check_pixels(y, n=X.shape[0])
        return -reprojection_error(X, y, self.calibration_)

    def _check_fitted(self):
        if not hasattr(self, "calibration_"):
            raise RuntimeError("GeneticCalibrator is not fitted yet; call fit first")
