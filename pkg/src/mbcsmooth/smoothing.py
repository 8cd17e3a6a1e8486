"""Gaussian kernel, local moment sums and the local linear smoother.

The local linear weight attached to observation ``j`` at an evaluation
point ``x`` is

    w_j(x; h) = K_h(X_j - x) * (S2 - (X_j - x) * S1) / (S2 * S0 - S1**2)

with ``S_k = sum_j (X_j - x)**k K_h(X_j - x)`` and ``K_h(u) = K(u / h) / h``.
Internally the weights are evaluated in the algebraically identical
centred form

    w_j = K_j * (1 / S0 - xbar * (d_j - xbar) / S2c)

where ``d_j = X_j - x``, ``xbar = S1 / S0`` and ``S2c = sum_j K_j (d_j - xbar)**2``
is computed directly, so the denominator never suffers the cancellation in
``S2 * S0 - S1**2``. Fitted values are formed as a locally weighted mean minus
the centred slope correction, without materialising the weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .exceptions import DegenerateDesignError

SQRT_2PI = math.sqrt(2.0 * math.pi)

# A fit is declared degenerate when the kernel-weighted spread of the design
# around its local mean falls below this fraction of the raw second moment
# S2. Rounding in the weights grows like eps / ratio, so 1e-5 keeps the
# identities sum(w) = 1 and sum((X - x) w) = 0 to about 1e-11.
DEGENERACY_RTOL = 1e-5

Kernel = Callable[[np.ndarray], np.ndarray]


def gaussian_kernel(u):
    """Standard normal density ``exp(-u**2 / 2) / sqrt(2 pi)``."""
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u) / SQRT_2PI


@dataclass(frozen=True)
class SampleSet:
    """Paired regression observations, sorted by covariate."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).ravel()
        ys = np.array(self.ys, dtype=float).ravel()
        if xs.shape != ys.shape:
            raise ValueError(f"xs and ys differ in length ({xs.size} != {ys.size})")
        if xs.size < 3:
            raise ValueError(f"need at least 3 observations, got {xs.size}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("observations must be finite")
        if np.any(np.diff(xs) < 0):
            raise ValueError("xs must be sorted in non-decreasing order")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_unsorted(cls, xs, ys) -> "SampleSet":
        xs = np.asarray(xs, dtype=float).ravel()
        ys = np.asarray(ys, dtype=float).ravel()
        if xs.shape != ys.shape:
            raise ValueError(f"xs and ys differ in length ({xs.size} != {ys.size})")
        order = np.argsort(xs, kind="stable")
        return cls(xs[order], ys[order])

    @property
    def n(self) -> int:
        return self.xs.size

    def drop(self, i: int) -> "SampleSet":
        """Copy of the sample without observation ``i``."""
        keep = np.arange(self.n) != i
        return SampleSet(self.xs[keep], self.ys[keep])

    def with_ys(self, ys) -> "SampleSet":
        return SampleSet(self.xs, ys)


@dataclass(frozen=True)
class WeightVector:
    eval_point: float
    bandwidth: float
    weights: np.ndarray


@dataclass(frozen=True)
class FitCurve:
    """Estimator values on an evaluation grid.

    ``method`` is ``"LocalLinear"`` or ``"MBC"``; ``bandwidths`` is ``(h,)``
    or ``(h0, h1)``. ``meta`` carries diagnostics such as the number of
    clamped pilot values.
    """

    grid: np.ndarray
    values: np.ndarray
    method: str
    bandwidths: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if grid.shape != values.shape:
            raise ValueError("grid and values differ in length")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bandwidths", tuple(float(b) for b in self.bandwidths))


@dataclass(frozen=True)
class CiBand:
    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    tau_sq: np.ndarray


def _check_bandwidth(h) -> float:
    h = float(h)
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"bandwidth must be positive and finite, got {h!r}")
    return h


def moment_sums(xs, x: float, h: float, kernel: Kernel = gaussian_kernel):
    """Return ``(S0, S1, S2, S3)`` at ``x`` for bandwidth ``h``."""
    h = _check_bandwidth(h)
    d = np.asarray(xs, dtype=float) - x
    k = kernel(d / h) / h
    return tuple(float(np.sum(d**p * k)) for p in range(4))


def weight_rows(xs, points, h: float, kernel: Kernel = gaussian_kernel):
    """Local linear weights of ``xs`` for every evaluation point.

    Returns ``(W, ok)`` with ``W`` of shape ``(len(points), len(xs))`` and a
    boolean mask ``ok`` flagging non-degenerate rows. Degenerate rows are NaN.
    """
    xs = np.asarray(xs, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    d = xs[None, :] - points[:, None]
    k = kernel(d / h) / h
    return _centred_weights(d, k)


def _centred_weights(d, k, axis=-1):
    # d, k broadcast together; sums run over `axis`
    s0 = np.sum(k, axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xbar = np.sum(k * d, axis=axis, keepdims=True) / s0
        dc = d - xbar
        s2c = np.sum(k * dc * dc, axis=axis, keepdims=True)
        ok = _nondegenerate(s0, xbar, s2c)
        w = k * (1.0 / s0 - xbar * dc / s2c)
    w = np.where(ok, w, np.nan)
    return w, np.squeeze(ok, axis=axis)


def _nondegenerate(s0, xbar, s2c):
    # s2c + s0 * xbar**2 is the raw second moment S2
    return (s0 > 0) & np.isfinite(xbar) & (s2c > DEGENERACY_RTOL * (s2c + s0 * xbar * xbar))


@dataclass(frozen=True)
class _FitParts:
    """Response-independent pieces of local linear fits along the last axis."""

    k: np.ndarray
    kdc: np.ndarray
    s0: np.ndarray
    xbar: np.ndarray
    s2c: np.ndarray
    ok: np.ndarray

    @classmethod
    def build(cls, d, k) -> "_FitParts":
        s0 = np.sum(k, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xbar = np.sum(k * d, axis=-1) / s0
            kdc = k * (d - xbar[..., None])
            s2c = np.sum(kdc * (d - xbar[..., None]), axis=-1)
        return cls(k, kdc, s0, xbar, s2c, _nondegenerate(s0, xbar, s2c))

    def apply(self, y) -> np.ndarray:
        """Fitted values (NaN where degenerate) for responses ``y`` on the last axis."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            fit = np.sum(self.k * y, axis=-1) / self.s0 - self.xbar * (
                np.sum(self.kdc * y, axis=-1) / self.s2c
            )
        return np.where(self.ok, fit, np.nan)


def fit_parts(xs, points, h: float, kernel: Kernel = gaussian_kernel) -> _FitParts:
    xs = np.asarray(xs, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    d = xs[None, :] - points[:, None]
    return _FitParts.build(d, kernel(d / h) / h)


def local_linear_values(xs, ys, points, h: float, kernel: Kernel = gaussian_kernel) -> np.ndarray:
    """Local linear fit at ``points``; raises on the first degenerate point."""
    h = _check_bandwidth(h)
    parts = fit_parts(xs, points, h, kernel)
    if not np.all(parts.ok):
        bad = float(np.atleast_1d(points)[np.argmin(parts.ok)])
        raise DegenerateDesignError(
            f"degenerate local design at x={bad:g} with h={h:g}", eval_point=bad, bandwidth=h
        )
    return parts.apply(np.asarray(ys, dtype=float))


def local_linear_weights(xs, x: float, h: float, kernel: Kernel = gaussian_kernel) -> WeightVector:
    """Weights ``w_j(x; h)`` of the local linear smoother at a single point.

    Raises
    ------
    DegenerateDesignError
        If the kernel mass around ``x`` is concentrated on a single abscissa.
    """
    h = _check_bandwidth(h)
    w, ok = weight_rows(xs, [x], h, kernel)
    if not ok[0]:
        raise DegenerateDesignError(
            f"degenerate local design at x={x:g} with h={h:g}", eval_point=float(x), bandwidth=h
        )
    return WeightVector(float(x), h, w[0])


def weight_matrix(xs, points, h: float, kernel: Kernel = gaussian_kernel) -> np.ndarray:
    """Stacked local linear weights; raises on the first degenerate point."""
    h = _check_bandwidth(h)
    w, ok = weight_rows(xs, points, h, kernel)
    if not np.all(ok):
        bad = float(np.atleast_1d(points)[np.argmin(ok)])
        raise DegenerateDesignError(
            f"degenerate local design at x={bad:g} with h={h:g}", eval_point=bad, bandwidth=h
        )
    return w


def smooth_with(W, values) -> np.ndarray:
    """Row-wise ``sum_j W[i, j] * values[j]``."""
    return np.sum(W * values, axis=-1)


def _warn_outside(data: SampleSet, grid, h):
    lo, hi = data.xs[0] - h, data.xs[-1] + h
    if np.any(grid < lo) or np.any(grid > hi):
        warnings.warn(
            f"evaluation points outside [{lo:g}, {hi:g}]; boundary bias likely",
            RuntimeWarning,
            stacklevel=3,
        )


def local_linear_fit(data: SampleSet, h: float, grid, kernel: Kernel = gaussian_kernel) -> FitCurve:
    """Local linear estimate ``sum_j w_j(x; h) Y_j`` at each grid point."""
    h = _check_bandwidth(h)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    _warn_outside(data, grid, h)
    values = local_linear_values(data.xs, data.ys, grid, h, kernel)
    return FitCurve(grid, values, "LocalLinear", (h,))


def difference_sigma(ys) -> float:
    """First-difference noise estimate ``sqrt(sum(diff(y)**2) / (2 (n - 1)))``.

    ``ys`` must be ordered by covariate.
    """
    ys = np.asarray(ys, dtype=float)
    return math.sqrt(float(np.sum(np.diff(ys) ** 2)) / (2.0 * (ys.size - 1)))


def pointwise_ci(
    fit: FitCurve,
    data: SampleSet,
    sigma_hat: Optional[float] = None,
    level: float = 0.95,
    kernel: Kernel = gaussian_kernel,
) -> CiBand:
    """Normal-approximation band ``fit +/- z * sigma_hat * ||w(x)||``.

    The weights are those of the local linear smoother at the fit's last
    bandwidth, i.e. ``h`` for a local linear fit and ``h1`` for a corrected
    fit, whose asymptotic variance matches the local linear smoother at
    ``h1``. ``sigma_hat`` defaults to :func:`difference_sigma`.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    if sigma_hat is None:
        sigma_hat = difference_sigma(data.ys)
    if not (sigma_hat > 0 and math.isfinite(sigma_hat)):
        raise ValueError(f"sigma_hat must be positive, got {sigma_hat!r}")
    h = fit.bandwidths[-1]
    W = weight_matrix(data.xs, fit.grid, h, kernel)
    sum_sq = np.sum(W * W, axis=1)
    half = ndtri(0.5 + level / 2.0) * sigma_hat * np.sqrt(sum_sq)
    return CiBand(fit.grid, fit.values - half, fit.values + half, float(level), data.n * h * sum_sq)
