"""Multiplicative bias corrected local linear smoothing.

A pilot local linear fit at bandwidth ``h0`` is computed first. The ratios
``V_j = Y_j / pilot(X_j)`` are smoothed at bandwidth ``h1`` into a correction
factor ``alpha(x)``, and the corrected estimate is ``alpha(x) * pilot(x)``.

The correction assumes a regression function bounded away from zero. Two
knobs handle data that do not respect this:

* ``pilot_clamp`` keeps the ratios finite by pushing pilot values whose
  magnitude falls below the threshold out to the threshold, preserving sign.
* ``offset`` adds a constant to every response before the correction and
  subtracts it afterwards, so sign-changing responses can be corrected on a
  strictly positive scale.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import ClampEngagedWarning
from .smoothing import (
    FitCurve,
    Kernel,
    SampleSet,
    _check_bandwidth,
    gaussian_kernel,
    local_linear_fit,
    local_linear_values,
)


@dataclass(frozen=True)
class MbcConfig:
    """Bandwidths and safeguards of the two-stage estimator.

    ``pilot_clamp=None`` resolves to :func:`default_clamp` of the (offset)
    responses at fit time.
    """

    h0: float
    h1: float
    pilot_clamp: Optional[float] = None
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h0", _check_bandwidth(self.h0))
        object.__setattr__(self, "h1", _check_bandwidth(self.h1))
        if self.pilot_clamp is not None and not self.pilot_clamp > 0:
            raise ValueError(f"pilot_clamp must be positive, got {self.pilot_clamp!r}")
        if not math.isfinite(self.offset):
            raise ValueError("offset must be finite")

    @property
    def regime_ok(self) -> bool:
        """Whether the correction bandwidth is the smaller one, as the theory asks."""
        return self.h1 < self.h0


@dataclass(frozen=True)
class RatioSeries:
    values: np.ndarray
    n_clamped: int = 0


def default_clamp(ys) -> float:
    return max(1e-8, 1e-6 * float(np.median(np.abs(ys))))


def resolve_offset(ys, offset: Union[None, float, str]) -> float:
    """Turn an offset specification into a constant.

    ``"auto"`` shifts the responses just enough that their minimum equals
    their range (or 1 for constant data); positive responses that already
    clear that floor are left alone.
    """
    if offset is None:
        return 0.0
    if isinstance(offset, str):
        if offset != "auto":
            raise ValueError(f"unknown offset rule {offset!r}")
        ys = np.asarray(ys, dtype=float)
        spread = float(np.ptp(ys))
        floor = spread if spread > 0 else 1.0
        return max(0.0, floor - float(np.min(ys)))
    return float(offset)


def clamp_pilot(pilot, clamp: float):
    """Sign-preserving clamp: values with ``|p| < clamp`` become ``+-clamp``."""
    pilot = np.asarray(pilot, dtype=float)
    small = np.abs(pilot) < clamp
    return np.where(small, np.where(pilot < 0, -clamp, clamp), pilot), small


def pilot_fit(data: SampleSet, h0: float, at, kernel: Kernel = gaussian_kernel) -> FitCurve:
    """Over-smoothed first-stage local linear fit."""
    fit = local_linear_fit(data, h0, at, kernel)
    return FitCurve(fit.grid, fit.values, fit.method, fit.bandwidths, {"stage": "pilot"})


def ratio_series(data: SampleSet, pilot_at_data, clamp: float) -> RatioSeries:
    """Ratios ``Y_j / clamp(pilot(X_j))``; warns when the clamp engages."""
    pilot_at_data = np.asarray(pilot_at_data, dtype=float)
    if pilot_at_data.shape != data.ys.shape:
        raise ValueError("pilot_at_data must have one value per observation")
    if not clamp > 0:
        raise ValueError("clamp must be positive")
    safe, small = clamp_pilot(pilot_at_data, clamp)
    n_clamped = int(np.count_nonzero(small))
    if n_clamped:
        warnings.warn(
            f"pilot magnitude below {clamp:g} at {n_clamped} data point(s); "
            "the regression function may not be bounded away from zero",
            ClampEngagedWarning,
            stacklevel=2,
        )
    return RatioSeries(data.ys / safe, n_clamped)


def mbc_fit(data: SampleSet, config: MbcConfig, grid, kernel: Kernel = gaussian_kernel) -> FitCurve:
    """Corrected estimate ``alpha(x) * pilot(x)`` on ``grid``."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    shifted = data.with_ys(data.ys + config.offset) if config.offset else data
    clamp = config.pilot_clamp if config.pilot_clamp is not None else default_clamp(shifted.ys)

    pilot = pilot_fit(shifted, config.h0, np.concatenate([data.xs, grid]), kernel).values
    pilot_data, pilot_grid = pilot[: data.n], pilot[data.n :]
    ratios = ratio_series(shifted, pilot_data, clamp)

    alpha = local_linear_values(data.xs, ratios.values, grid, config.h1, kernel)
    meta = {
        "n_clamped": ratios.n_clamped,
        "pilot_clamp": clamp,
        "offset": config.offset,
        "regime_ok": config.regime_ok,
    }
    return FitCurve(grid, alpha * pilot_grid - config.offset, "MBC", (config.h0, config.h1), meta)
