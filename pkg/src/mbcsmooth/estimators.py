"""scikit-learn compatible wrappers around the smoothers.

Both estimators take a single covariate, passed either as a 1-D array or as a
``(n_samples, 1)`` matrix, so they drop into pipelines and model-selection
utilities. A bandwidth left as ``None`` is chosen by leave-one-out
cross-validation at fit time.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .bandwidth import BandwidthGrid, select_ll, select_mbc
from .mbc import MbcConfig, mbc_fit, resolve_offset
from .smoothing import SampleSet, gaussian_kernel, local_linear_fit


def check_1d_X(X, name="X"):
    """Coerce ``X`` to a 1-D float array; accepts ``(n,)`` or ``(n, 1)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"{name} must have exactly one feature, got {X.shape[1]}")
        X = X[:, 0]
    elif X.ndim != 1:
        raise ValueError(f"{name} must be 1-D or a single-column 2-D array")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return X


def check_sample(X, y) -> SampleSet:
    x = check_1d_X(X)
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"X and y have inconsistent lengths ({x.size} != {y.size})")
    return SampleSet.from_unsorted(x, y)


def _grid(values, data):
    return BandwidthGrid.default_for(data.xs) if values is None else BandwidthGrid(values)


class LocalLinearRegression(RegressorMixin, BaseEstimator):
    """Local linear kernel regression.

    Parameters
    ----------
    bandwidth : float or None, default=None
        Kernel bandwidth. ``None`` selects it by leave-one-out cross-validation
        over ``bandwidth_grid``.
    bandwidth_grid : array-like or None, default=None
        Candidates for cross-validation. ``None`` uses 30 log-spaced values from
        the mean design spacing to half the design range.
    kernel : callable, default=gaussian_kernel

    Attributes
    ----------
    bandwidth_ : float
    cv_result_ : CvResult or None
    """

    def __init__(self, bandwidth=None, bandwidth_grid=None, kernel=gaussian_kernel):
        self.bandwidth = bandwidth
        self.bandwidth_grid = bandwidth_grid
        self.kernel = kernel

    def fit(self, X, y):
        data = check_sample(X, y)
        self.cv_result_ = None
        if self.bandwidth is None:
            self.cv_result_ = select_ll(data, _grid(self.bandwidth_grid, data), self.kernel)
            (self.bandwidth_,) = self.cv_result_.selected
        else:
            self.bandwidth_ = float(self.bandwidth)
        self.sample_ = data
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "sample_")
        return local_linear_fit(self.sample_, self.bandwidth_, check_1d_X(X), self.kernel).values


class MultiplicativeBiasCorrectedRegression(RegressorMixin, BaseEstimator):
    """Local linear regression with a multiplicative bias correction.

    An over-smoothed pilot fit (``h0``) is multiplied by a smoothed ratio of
    responses to pilot values (``h1``).

    Parameters
    ----------
    h0, h1 : float or None, default=None
        Pilot and correction bandwidths. If either is ``None`` both are chosen
        jointly by leave-one-out cross-validation.
    h0_grid, h1_grid : array-like or None
        Cross-validation candidates; ``h1_grid`` defaults to ``h0_grid``.
    pilot_clamp : float or None
        Smallest pilot magnitude used as a ratio denominator.
    offset : None, float or "auto"
        Constant added to the responses before the correction and removed
        afterwards. Use ``"auto"`` for responses that change sign.
    kernel : callable, default=gaussian_kernel

    Attributes
    ----------
    h0_, h1_, offset_ : float
    cv_result_ : CvResult or None
    n_clamped_ : int
        Number of data points where the pilot was clamped in the final fit.
    """

    def __init__(
        self,
        h0=None,
        h1=None,
        h0_grid=None,
        h1_grid=None,
        pilot_clamp=None,
        offset=None,
        kernel=gaussian_kernel,
    ):
        self.h0 = h0
        self.h1 = h1
        self.h0_grid = h0_grid
        self.h1_grid = h1_grid
        self.pilot_clamp = pilot_clamp
        self.offset = offset
        self.kernel = kernel

    def fit(self, X, y):
        data = check_sample(X, y)
        self.offset_ = resolve_offset(data.ys, self.offset)
        self.cv_result_ = None
        if self.h0 is None or self.h1 is None:
            grid0 = _grid(self.h0_grid, data)
            grid1 = grid0 if self.h1_grid is None else BandwidthGrid(self.h1_grid)
            self.cv_result_ = select_mbc(
                data, grid0, grid1, self.pilot_clamp, self.offset_, self.kernel
            )
            self.h0_, self.h1_ = self.cv_result_.selected
        else:
            self.h0_, self.h1_ = float(self.h0), float(self.h1)
        self.config_ = MbcConfig(self.h0_, self.h1_, self.pilot_clamp, self.offset_)
        self.sample_ = data
        self.n_features_in_ = 1
        self.n_clamped_ = mbc_fit(data, self.config_, data.xs[:1], self.kernel).meta["n_clamped"]
        return self

    def predict(self, X):
        check_is_fitted(self, "sample_")
        return mbc_fit(self.sample_, self.config_, check_1d_X(X), self.kernel).values
