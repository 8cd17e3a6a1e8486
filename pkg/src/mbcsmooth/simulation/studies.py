"""Monte-Carlo studies comparing local linear and corrected smoothers.

Three studies are provided:

``local_study``
    Squared bias, variance and MSE of both estimators at a single point over
    a fixed design, for a range of bandwidths.
``global_study``
    Per replicate, bandwidths are chosen by leave-one-out cross-validation
    and the integrated squared error of each selected fit is recorded.
``envelope_data``
    Mean and interquartile range of both estimators on a grid across
    replicates.

Every report can be written as CSV (one row per record, floats with 17
significant digits) and summarised as JSON. Reports depend only on the
configuration and seed.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from ..bandwidth import BandwidthGrid, select_ll, select_mbc
from ..exceptions import (
    AllDegenerateError,
    ClampEngagedWarning,
    DegenerateDesignError,
    GridTooCoarseError,
    StudyFailedError,
)
from ..mbc import MbcConfig, clamp_pilot, default_clamp, mbc_fit, resolve_offset
from ..smoothing import FitCurve, SampleSet, local_linear_fit, smooth_with, weight_rows
from .functions import TestFunction
from .rng import normals, open_uniforms, stream

MAX_DROP_FRACTION = 0.05
ISE_POINTS = 1001
ISE_MIN_POINTS = 101


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    replications: int = 200
    seed: int = 0
    fixed_design: bool = False

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if self.replications < 2:
            raise ValueError("replications must be at least 2")


def generate_sample(f: TestFunction, cfg: SimConfig, replicate_index: int) -> SampleSet:
    """Uniform design on ``f.design_interval`` plus Gaussian noise.

    With ``fixed_design`` every replicate shares the design drawn from design
    stream 0; otherwise replicate ``r`` draws from design stream ``r``.
    """
    lo, hi = f.design_interval
    design_index = 0 if cfg.fixed_design else replicate_index
    xs = lo + (hi - lo) * open_uniforms(stream(cfg.seed, "design", design_index), cfg.n)
    xs = np.sort(xs)
    ys = f(xs)
    if f.noise_sd > 0:
        ys = ys + normals(stream(cfg.seed, "noise", replicate_index), cfg.n, f.noise_sd)
    return SampleSet(xs, ys)


def _check_drops(dropped: int, total: int, what: str):
    if total and dropped / total >= MAX_DROP_FRACTION:
        raise StudyFailedError(f"{what}: {dropped} of {total} replicates degenerate")


# -- local study ----------------------------------------------------------------


@dataclass(frozen=True)
class LocalStudyRow:
    method: str
    h0: float  # NaN for the local linear smoother
    h: float  # h for LL, h1 for MBC
    bias_sq: float
    variance: float
    mse: float
    n_used: int


@dataclass
class LocalStudyReport:
    function: str
    at: float
    config: SimConfig
    rows: list
    n_clamped: int = 0

    def optimal(self, method: str, h0: Optional[float] = None) -> LocalStudyRow:
        """Row of minimal MSE for ``method`` (and pilot bandwidth ``h0`` for MBC)."""
        rows = [r for r in self.rows if r.method == method and not math.isnan(r.mse)]
        if h0 is not None:
            rows = [r for r in rows if math.isclose(r.h0, h0)]
        if not rows:
            raise KeyError(f"no rows for method={method!r}, h0={h0!r}")
        return min(rows, key=lambda r: r.mse)

    def to_csv(self, path):
        header = ["method", "h0", "h", "bias_sq", "variance", "mse", "n_used"]
        _write_csv(path, header, [[getattr(r, c) for c in header] for r in self.rows])

    def summary(self) -> dict:
        out = {
            "function": self.function,
            "at": self.at,
            "n": self.config.n,
            "replications": self.config.replications,
            "seed": self.config.seed,
            "n_clamped": self.n_clamped,
            "optimal": {},
        }
        for key, row in self._optima():
            out["optimal"][key] = {
                "h0": None if math.isnan(row.h0) else row.h0,
                "h": row.h,
                "bias_sq": row.bias_sq,
                "variance": row.variance,
                "mse": row.mse,
            }
        return out

    def _optima(self):
        yield "LL", self.optimal("LL")
        for h0 in sorted({r.h0 for r in self.rows if r.method == "MBC"}):
            yield f"MBC h0={fmt(h0)}", self.optimal("MBC", h0)

    def to_json(self, path):
        _write_json(path, self.summary())


def _moments(estimates, truth):
    """Per column: squared bias, variance (ddof=1) and count over finite entries."""
    out = []
    for col in estimates.T:
        col = col[np.isfinite(col)]
        if col.size < 2:
            out.append((math.nan, math.nan, col.size))
            continue
        bias = float(np.mean(col)) - truth
        out.append((bias * bias, float(np.var(col, ddof=1)), col.size))
    return out


def local_study(
    f: TestFunction,
    cfg: SimConfig,
    h_grid,
    h0_list: Sequence[float],
    h1_grid,
    at: float = 0.0,
) -> LocalStudyReport:
    """Bias, variance and MSE at ``at`` for both smoothers across bandwidths.

    Each row is computed from the replicates whose fit at ``at`` was not
    degenerate; the study fails if 5% or more of them were dropped. With a
    fixed design a bandwidth at which the design itself is degenerate yields a
    NaN row that is skipped when looking for optima.
    """
    lo, hi = f.design_interval
    if not lo <= at <= hi:
        raise ValueError(f"evaluation point {at} outside design interval {f.design_interval}")
    h_grid = h_grid if isinstance(h_grid, BandwidthGrid) else BandwidthGrid(h_grid)
    h1_grid = h1_grid if isinstance(h1_grid, BandwidthGrid) else BandwidthGrid(h1_grid)
    h0_list = [float(h) for h in h0_list]

    n_ll = len(h_grid)
    n_mbc = len(h0_list) * len(h1_grid)
    est = np.full((cfg.replications, n_ll + n_mbc), np.nan)
    n_clamped = 0
    cache = {}
    for r in range(cfg.replications):
        data = generate_sample(f, cfg, r)
        if not cfg.fixed_design or not cache:
            cache = _local_weights(data.xs, at, h_grid, h0_list, h1_grid)
        W_ll, stage = cache["ll"], cache["mbc"]
        est[r, :n_ll] = smooth_with(W_ll, data.ys)
        clamp = default_clamp(data.ys)
        col = n_ll
        for W0, w0_at, W1_at in stage:
            if W0 is None:
                col += len(h1_grid)
                continue
            safe, small = clamp_pilot(smooth_with(W0, data.ys), clamp)
            n_clamped += int(np.count_nonzero(small))
            pilot_at = float(smooth_with(w0_at, data.ys))
            est[r, col : col + len(h1_grid)] = smooth_with(W1_at, data.ys / safe) * pilot_at
            col += len(h1_grid)

    truth = float(f(at))
    moments = _moments(est, truth)
    rows = []
    labels = [("LL", math.nan, h) for h in h_grid] + [
        ("MBC", h0, h1) for h0 in h0_list for h1 in h1_grid
    ]
    for (method, h0, h), (b2, var, used) in zip(labels, moments):
        if used == 0 and cfg.fixed_design:
            # the shared design itself is degenerate at this bandwidth
            rows.append(LocalStudyRow(method, h0, h, math.nan, math.nan, math.nan, 0))
            continue
        _check_drops(cfg.replications - used, cfg.replications, f"{method} h0={h0} h={h}")
        rows.append(LocalStudyRow(method, h0, h, b2, var, b2 + var, used))
    return LocalStudyReport(f.id, float(at), cfg, rows, n_clamped)


def local_reproduction_grids():
    """``(h_grid, h0_list, h1_grid)``: steps of 0.001 over [0.005, 0.04] and
    [0.005, 0.06], pilots 0.03 and 0.008."""
    return (
        BandwidthGrid.linspace(0.005, 0.040, 36),
        (0.03, 0.008),
        BandwidthGrid.linspace(0.005, 0.060, 56),
    )


def _local_weights(xs, at, h_grid, h0_list, h1_grid):
    W_ll = np.vstack([weight_rows(xs, [at], h)[0] for h in h_grid])
    W1_at = np.vstack([weight_rows(xs, [at], h1)[0] for h1 in h1_grid])
    stage = []
    for h0 in h0_list:
        W0, ok = weight_rows(xs, xs, h0)
        w0_at, ok_at = weight_rows(xs, [at], h0)
        if not (ok.all() and ok_at.all()):
            stage.append((None, None, None))
        else:
            stage.append((W0, w0_at[0], W1_at))
    return {"ll": W_ll, "mbc": stage}


# -- integrated squared error ---------------------------------------------------------


def ise(fit: FitCurve, f: TestFunction, interval=(0.0, 1.0)) -> float:
    """Trapezoid integral of ``(f - fit)**2`` on a 1001-point grid over ``interval``.

    Fits sampled on another grid are linearly interpolated onto it; the fit must
    cover the interval with at least 101 points inside it.
    """
    lo, hi = map(float, interval)
    inside = np.count_nonzero((fit.grid >= lo) & (fit.grid <= hi))
    if inside < ISE_MIN_POINTS:
        raise GridTooCoarseError(f"fit has {inside} points in [{lo}, {hi}], need {ISE_MIN_POINTS}")
    if fit.grid.min() > lo or fit.grid.max() < hi:
        raise GridTooCoarseError(f"fit grid does not cover [{lo}, {hi}]")
    x = np.linspace(lo, hi, ISE_POINTS)
    if fit.grid.shape == x.shape and np.array_equal(fit.grid, x):
        values = fit.values
    else:
        order = np.argsort(fit.grid, kind="stable")
        values = np.interp(x, fit.grid[order], fit.values[order])
    return float(np.trapezoid((f(x) - values) ** 2, x))


# -- global study --------------------------------------------------------------------


@dataclass(frozen=True)
class StudyGrids:
    h: BandwidthGrid
    h0: BandwidthGrid
    h1: BandwidthGrid

    @classmethod
    def shared(cls, grid: BandwidthGrid) -> "StudyGrids":
        return cls(grid, grid, grid)


def reproduction_grids() -> StudyGrids:
    """30 log-spaced bandwidths on [0.005, 0.1], shared by h, h0 and h1."""
    return StudyGrids.shared(BandwidthGrid.logspace(0.005, 0.10, 30))


@dataclass(frozen=True)
class Replicate:
    index: int
    h: float
    h0: float
    h1: float
    offset: float
    ise_ll: float
    ise_mbc: float


@dataclass
class GlobalStudyRow:
    function: str
    h: float
    h0: float
    h1: float
    ise_ll: float
    ise_mbc: float
    r_ise: float
    near_tie: bool
    n_dropped: int
    replicates: list = field(default_factory=list)


@dataclass
class GlobalStudyReport:
    config: SimConfig
    offset: Union[None, float, str]
    rows: list

    def row(self, function: str) -> GlobalStudyRow:
        for r in self.rows:
            if r.function == function:
                return r
        raise KeyError(function)

    def to_csv(self, path):
        header = ["function", "h", "h0", "h1", "ise_ll", "ise_mbc", "r_ise", "near_tie", "n_dropped"]
        _write_csv(path, header, [[getattr(r, c) for c in header] for r in self.rows])

    def replicates_to_csv(self, path):
        header = ["function", "index", "h", "h0", "h1", "offset", "ise_ll", "ise_mbc"]
        rows = []
        for r in self.rows:
            for rep in r.replicates:
                rows.append([r.function] + [getattr(rep, c) for c in header[1:]])
        _write_csv(path, header, rows)

    def summary(self) -> dict:
        return {
            "n": self.config.n,
            "replications": self.config.replications,
            "seed": self.config.seed,
            "offset": self.offset,
            "rows": {
                r.function: {
                    "h": r.h,
                    "h0": r.h0,
                    "h1": r.h1,
                    "ise_ll": r.ise_ll,
                    "ise_mbc": r.ise_mbc,
                    "r_ise": r.r_ise,
                    "near_tie": r.near_tie,
                    "n_dropped": r.n_dropped,
                }
                for r in self.rows
            },
        }

    def to_json(self, path):
        _write_json(path, self.summary())


def _ise_grid():
    return np.linspace(0.0, 1.0, ISE_POINTS)


def _global_replicate(f, cfg, grids, offset, index):
    data = generate_sample(f, cfg, index)
    x = _ise_grid()
    try:
        sel_ll = select_ll(data, grids.h)
        shift = resolve_offset(data.ys, offset)
        sel_mbc = select_mbc(data, grids.h0, grids.h1, offset=shift)
        (h,), (h0, h1) = sel_ll.selected, sel_mbc.selected
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampEngagedWarning)
            fit_mbc = mbc_fit(data, MbcConfig(h0, h1, offset=shift), x)
        fit_ll = local_linear_fit(data, h, x)
    except (DegenerateDesignError, AllDegenerateError):
        return None
    return Replicate(index, h, h0, h1, shift, ise(fit_ll, f), ise(fit_mbc, f))


def _median(values) -> float:
    # numpy's median averages the two middle values for even counts
    return float(np.median(np.asarray(values, dtype=float)))


def global_study(
    functions: Sequence[TestFunction],
    cfg: SimConfig,
    grids: Optional[StudyGrids] = None,
    offset: Union[None, float, str] = "auto",
    n_jobs: int = 1,
) -> GlobalStudyReport:
    """Cross-validated ISE comparison of both smoothers for each test function.

    ``offset`` is applied to the responses of the corrected smoother only (see
    :func:`mbcsmooth.mbc.resolve_offset`); ``"auto"`` lifts sign-changing data
    onto a positive scale before the multiplicative correction. ``R_ISE`` is
    the ratio of the median ISEs.
    """
    grids = reproduction_grids() if grids is None else grids
    rows = []
    for f in functions:
        jobs = (delayed(_global_replicate)(f, cfg, grids, offset, r) for r in range(cfg.replications))
        results = Parallel(n_jobs=n_jobs)(jobs) if n_jobs != 1 else list(
            _global_replicate(f, cfg, grids, offset, r) for r in range(cfg.replications)
        )
        kept = [rep for rep in results if rep is not None]
        dropped = cfg.replications - len(kept)
        _check_drops(dropped, cfg.replications, f"global study {f.id}")
        ise_ll = _median([r.ise_ll for r in kept])
        ise_mbc = _median([r.ise_mbc for r in kept])
        tiny = max(ise_ll, ise_mbc) < 1e-8
        r_ise = 1.0 if tiny else ise_ll / ise_mbc
        rows.append(
            GlobalStudyRow(
                f.id,
                _median([r.h for r in kept]),
                _median([r.h0 for r in kept]),
                _median([r.h1 for r in kept]),
                ise_ll,
                ise_mbc,
                r_ise,
                tiny or abs(math.log(r_ise)) < math.log(1.02),
                dropped,
                kept,
            )
        )
    return GlobalStudyReport(cfg, offset, rows)


# -- envelopes -----------------------------------------------------------------------


@dataclass
class EnvelopeTable:
    function: str
    grid: np.ndarray
    truth: np.ndarray
    ll: np.ndarray  # (3, len(grid)): mean, q25, q75
    mbc: np.ndarray

    COLUMNS = ("x", "truth", "ll_mean", "ll_q25", "ll_q75", "mbc_mean", "mbc_q25", "mbc_q75")

    def records(self):
        for i, x in enumerate(self.grid):
            yield (x, self.truth[i], *self.ll[:, i], *self.mbc[:, i])

    def to_csv(self, path):
        _write_csv(path, self.COLUMNS, self.records())


def envelope_data(
    f: TestFunction,
    cfg: SimConfig,
    grid,
    grids: Optional[StudyGrids] = None,
    bandwidths: Optional[tuple] = None,
    offset: Union[None, float, str] = "auto",
) -> EnvelopeTable:
    """Mean and interquartile envelope of both smoothers across replicates.

    Bandwidths are cross-validated per replicate unless ``bandwidths=(h, h0, h1)``
    pins them.
    """
    grid = np.asarray(grid, dtype=float)
    grids = reproduction_grids() if grids is None else grids
    ll = np.empty((cfg.replications, grid.size))
    mbc = np.empty_like(ll)
    for r in range(cfg.replications):
        data = generate_sample(f, cfg, r)
        shift = resolve_offset(data.ys, offset)
        if bandwidths is None:
            (h,) = select_ll(data, grids.h).selected
            h0, h1 = select_mbc(data, grids.h0, grids.h1, offset=shift).selected
        else:
            h, h0, h1 = bandwidths
        ll[r] = local_linear_fit(data, h, grid).values
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampEngagedWarning)
            mbc[r] = mbc_fit(data, MbcConfig(h0, h1, offset=shift), grid).values

    def summarise(a):
        return np.vstack([a.mean(axis=0), *np.percentile(a, [25, 75], axis=0)])

    return EnvelopeTable(f.id, grid, f(grid), summarise(ll), summarise(mbc))


def with_noise(f: TestFunction, noise_sd: float) -> TestFunction:
    return replace(f, noise_sd=float(noise_sd))
