"""Smoothing of binned count spectra.

A spectrum is a table of ``(channel, count)`` pairs treated directly as
regression data, with channel numbers as the covariate. No energy
calibration and no variance-stabilising transform are applied, so every
bandwidth is expressed in channel units.

Input files are UTF-8 CSV with a ``channel,count`` header. Lines starting
with ``#`` before the header are read as ``key: value`` metadata. Result
files carry the columns

``channel, raw_count[, ll_fit][, mbc_fit][, ci_lo, ci_hi]``

where optional columns appear only when computed and every number is written
with 17 significant digits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .bandwidth import BandwidthGrid, CvResult, select_ll, select_mbc
from .exceptions import EmptySpectrumError, SpectrumParseError
from .mbc import MbcConfig, mbc_fit, resolve_offset
from .simulation.rng import normals, stream
from .smoothing import CiBand, FitCurve, SampleSet, local_linear_fit, pointwise_ci
from .simulation.studies import fmt

METHODS = ("ll", "mbc", "both")


@dataclass(frozen=True)
class Spectrum:
    channels: np.ndarray
    counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        channels = np.asarray(self.channels)
        counts = np.asarray(self.counts, dtype=float)
        if channels.ndim != 1 or channels.shape != counts.shape:
            raise ValueError("channels and counts must be 1-D and of equal length")
        if channels.size == 0:
            raise EmptySpectrumError("spectrum has no channels")
        if not np.issubdtype(channels.dtype, np.integer):
            raise ValueError("channels must be integers")
        if np.any(np.diff(channels) <= 0):
            raise ValueError("channels must be strictly increasing")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise ValueError("counts must be finite and non-negative")
        object.__setattr__(self, "channels", channels.astype(np.int64))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return self.channels.size

    def select(self, channel_range: Optional[Tuple[int, int]]) -> "Spectrum":
        """Channels in the inclusive range ``(lo, hi)``; ``None`` keeps all."""
        if channel_range is None:
            return self
        lo, hi = channel_range
        if lo > hi or lo < self.channels[0] or hi > self.channels[-1]:
            raise ValueError(
                f"range {lo}:{hi} is outside the spectrum "
                f"({self.channels[0]}:{self.channels[-1]})"
            )
        keep = (self.channels >= lo) & (self.channels <= hi)
        return Spectrum(self.channels[keep], self.counts[keep], self.metadata)

    def to_sample(self) -> SampleSet:
        return SampleSet(self.channels.astype(float), self.counts)


def read_spectrum(path) -> Spectrum:
    """Parse a ``channel,count`` CSV file."""
    metadata = {}
    channels, counts = [], []
    header_seen = False
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if not header_seen and row[0].lstrip().startswith("#"):
                key, _, value = ",".join(row).lstrip()[1:].partition(":")
                if key.strip():
                    metadata[key.strip()] = value.strip()
                continue
            if not header_seen:
                if [cell.strip().lower() for cell in row] != ["channel", "count"]:
                    raise SpectrumParseError("expected header 'channel,count'", lineno)
                header_seen = True
                continue
            if len(row) != 2:
                raise SpectrumParseError(f"expected 2 fields, got {len(row)}", lineno)
            channels.append(_parse_channel(row[0], lineno))
            counts.append(_parse_count(row[1], lineno))
            if len(channels) > 1 and channels[-1] <= channels[-2]:
                raise SpectrumParseError("channels must be strictly increasing", lineno)
    if not header_seen:
        raise SpectrumParseError("missing header 'channel,count'", 1)
    if not channels:
        raise EmptySpectrumError(f"{path}: no data rows")
    return Spectrum(np.array(channels, dtype=np.int64), np.array(counts), metadata)


def _parse_channel(text, lineno) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise SpectrumParseError(f"channel {text.strip()!r} is not an integer", lineno) from None


def _parse_count(text, lineno) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise SpectrumParseError(f"count {text.strip()!r} is not a number", lineno) from None
    if not math.isfinite(value):
        raise SpectrumParseError(f"count {text.strip()!r} is not finite", lineno)
    if value < 0:
        raise SpectrumParseError(f"count {text.strip()!r} is negative", lineno)
    return value


def write_spectrum(spectrum: Spectrum, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in spectrum.metadata.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["channel", "count"])
        for c, y in zip(spectrum.channels, spectrum.counts):
            writer.writerow([fmt(c), fmt(y)])


@dataclass(frozen=True)
class SmoothJob:
    """What to smooth and how.

    Bandwidths are in channel units. With ``cv=True`` any missing bandwidth
    is chosen by leave-one-out cross-validation over ``grid`` (default:
    :meth:`BandwidthGrid.default_for` the selected channels); pinned values
    are used as given.
    """

    method: str = "both"
    channel_range: Optional[Tuple[int, int]] = None
    h: Optional[float] = None
    h0: Optional[float] = None
    h1: Optional[float] = None
    cv: bool = False
    grid: Optional[BandwidthGrid] = None
    ci_level: Optional[float] = None
    offset: object = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("h", "h0", "h1"):
            value = getattr(self, name)
            if value is not None and not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value!r}")
        if not self.cv:
            if self.wants("ll") and self.h is None:
                raise ValueError("local linear smoothing needs h or cv")
            if self.wants("mbc") and (self.h0 is None or self.h1 is None):
                raise ValueError("corrected smoothing needs h0 and h1 or cv")
        if self.ci_level is not None and not 0 < self.ci_level < 1:
            raise ValueError(f"ci level must lie in (0, 1), got {self.ci_level!r}")

    def wants(self, method: str) -> bool:
        return self.method in (method, "both")


@dataclass(frozen=True)
class SpectrumResult:
    """Fitted curves over the selected channels.

    ``curves`` maps ``"ll"``/``"mbc"`` to fits; the band in ``ci`` belongs to
    the local linear fit when present, otherwise to the corrected fit.
    """

    channels: np.ndarray
    raw_counts: np.ndarray
    curves: Dict[str, FitCurve] = field(default_factory=dict)
    ci: Optional[CiBand] = None
    cv: Dict[str, CvResult] = field(default_factory=dict)

    def columns(self) -> Dict[str, np.ndarray]:
        out = {"channel": self.channels, "raw_count": self.raw_counts}
        for name in ("ll", "mbc"):
            if name in self.curves:
                out[f"{name}_fit"] = self.curves[name].values
        if self.ci is not None:
            out["ci_lo"], out["ci_hi"] = self.ci.lower, self.ci.upper
        return out


def smooth_spectrum(spectrum: Spectrum, job: SmoothJob) -> SpectrumResult:
    """Run the requested smoothers at every channel of the job's range."""
    part = spectrum.select(job.channel_range)
    data = part.to_sample()
    curves, cv = {}, {}

    if job.wants("ll"):
        h = job.h
        if h is None:
            cv["ll"] = select_ll(data, job.grid)
            (h,) = cv["ll"].selected
        curves["ll"] = local_linear_fit(data, h, data.xs)

    if job.wants("mbc"):
        offset = resolve_offset(data.ys, job.offset)
        h0, h1 = job.h0, job.h1
        if h0 is None or h1 is None:
            cv["mbc"] = select_mbc(data, job.grid, job.grid, offset=offset)
            h0, h1 = cv["mbc"].selected
        curves["mbc"] = mbc_fit(data, MbcConfig(h0, h1, offset=offset), data.xs)

    ci = None
    if job.ci_level is not None and curves:
        ci = pointwise_ci(curves.get("ll", curves.get("mbc")), data, level=job.ci_level)
    return SpectrumResult(part.channels, part.counts, curves, ci, cv)


def write_results(result: SpectrumResult, path):
    """Write the result table; a result without curves gives a header-only file."""
    columns = result.columns()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(columns))
        if not result.curves:
            return
        for row in zip(*columns.values()):
            writer.writerow([fmt(v) for v in row])


def read_results(path) -> Dict[str, np.ndarray]:
    """Load a result table back into named float columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    table = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: table[:, i] for i, name in enumerate(header)}


def write_cv_table(result: CvResult, path):
    names = ["h"] if len(result.grids) == 1 else ["h0", "h1"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names + ["loo_mse"])
        for row in result.rows():
            writer.writerow([fmt(v) for v in row])


# Synthetic barium-like spectrum at 1.85 keV per channel with NaI-like
# resolution: (centre channel, height, Gaussian width) per line.
FIXTURE_PEAKS = (
    (17.0, 500.0, 2.2),  # 31 keV x-rays
    (44.0, 350.0, 3.0),  # 81 keV
    (149.0, 60.0, 6.0),  # 276 keV
    (164.0, 150.0, 6.3),  # 303 keV
    (192.0, 400.0, 6.9),  # 356 keV
    (208.0, 60.0, 7.1),  # 384 keV
)


def fixture_truth(channels) -> np.ndarray:
    """Noise-free fixture: scatter continuum plus Gaussian lines."""
    c = np.asarray(channels, dtype=float)
    curve = 250.0 * np.exp(-c / 50.0) + 40.0 * np.exp(-c / 300.0) + 5.0
    for centre, height, width in FIXTURE_PEAKS:
        curve = curve + height * np.exp(-0.5 * ((c - centre) / width) ** 2)
    return curve


def synthetic_spectrum(seed: int, n_channels: int = 1024) -> Spectrum:
    """Fixture counts: truth plus Gaussian noise of variance equal to the mean, floored at 0."""
    channels = np.arange(1, n_channels + 1, dtype=np.int64)
    truth = fixture_truth(channels)
    noise = normals(stream(seed, "fixture", 0), truth.size) * np.sqrt(truth)
    counts = np.maximum(truth + noise, 0.0)
    meta = {"source": "synthetic", "seed": str(int(seed)), "channels": str(n_channels)}
    return Spectrum(channels, counts, meta)


def truth_landmarks(channels) -> Tuple[int, int]:
    """Indices of the tallest apex and of the deepest valley of the truth.

    A valley is a local minimum lying between two local maxima; its depth is
    the lower of those two neighbouring maxima minus its own value.
    """
    truth = fixture_truth(channels)
    apex = int(np.argmax(truth))
    mid = truth[1:-1]
    maxima = np.flatnonzero((mid > truth[:-2]) & (mid > truth[2:])) + 1
    minima = np.flatnonzero((mid < truth[:-2]) & (mid < truth[2:])) + 1
    best, best_depth = None, -np.inf
    for i in minima:
        left, right = maxima[maxima < i], maxima[maxima > i]
        if left.size and right.size:
            depth = min(truth[left[-1]], truth[right[0]]) - truth[i]
            if depth > best_depth:
                best, best_depth = int(i), depth
    if best is None:
        raise ValueError("truth has no valley between two peaks in this range")
    return apex, best
