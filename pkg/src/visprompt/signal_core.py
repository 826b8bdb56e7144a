"""Canonical sensor time-series model: load, validate, normalize, window.

Every downstream stage (DSP, rendering, prompting, evaluation) consumes the
immutable :class:`TimeSeries` / :class:`Window` types defined here. All
operations are pure functions; nothing here mutates its inputs.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    ChannelCountMismatch,
    ChannelLayoutMismatch,
    EmptyInput,
    MalformedRow,
    NoDataForUser,
    WindowLongerThanSeries,
)


class Modality(str, enum.Enum):
    ACCELEROMETER = "accelerometer"
    ECG = "ecg"
    PPG = "ppg"
    EDA = "eda"
    EMG = "emg"
    EOG = "eog"
    RESPIRATION = "respiration"
    GENERIC = "generic"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Multichannel sampled signal with shared sampling rate and metadata.

    ``data`` has shape (n_channels, n_samples); ``channel_names`` matches its
    first axis. Arrays are read-only after construction.
    """

    channel_names: tuple[str, ...]
    data: np.ndarray
    sampling_rate_hz: float
    modality: Modality = Modality.GENERIC
    user_id: str | None = None
    label: str | None = None

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=np.float64))
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "modality", Modality(self.modality))
        if data.ndim != 2:
            raise ValueError("data must be 2-D (channels x samples)")
        if len(self.channel_names) != data.shape[0]:
            raise ChannelCountMismatch(
                f"{len(self.channel_names)} channel names for {data.shape[0]} data rows"
            )
        if data.shape[1] < 1:
            raise EmptyInput("time series has no samples")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise ValueError("channel names must be unique")
        if not (self.sampling_rate_hz > 0):
            raise ValueError("sampling_rate_hz must be positive")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate_hz

    def channel(self, name: str) -> np.ndarray:
        return self.data[self.channel_names.index(name)]

    @property
    def channels(self) -> list[tuple[str, np.ndarray]]:
        return list(zip(self.channel_names, self.data))


@dataclass(frozen=True)
class Window:
    """A fixed-duration slice of a parent series; inherits its metadata."""

    series: TimeSeries
    start_index: int
    duration_s: float
    sample_id: str = ""

    def __post_init__(self):
        if self.start_index < 0:
            raise ValueError("start_index must be non-negative")
        if not (self.duration_s > 0):
            raise ValueError("duration_s must be positive")
        expected = self.duration_s * self.series.sampling_rate_hz
        if abs(self.series.n_samples - expected) > 1.0:
            raise ValueError(
                f"window length {self.series.n_samples} inconsistent with "
                f"duration {self.duration_s}s at {self.series.sampling_rate_hz}Hz"
            )

    @property
    def n_samples(self) -> int:
        return self.series.n_samples

    @property
    def modality(self) -> Modality:
        return self.series.modality

    @property
    def label(self) -> str | None:
        return self.series.label


@dataclass(frozen=True)
class UserStats:
    """Per-channel mean/std computed over one user's data (population std)."""

    user_id: str
    channel_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "mean", _freeze(np.atleast_1d(self.mean)))
        object.__setattr__(self, "std", _freeze(np.atleast_1d(self.std)))
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean/std must be 1-D and congruent")
        if len(self.channel_names) != self.mean.shape[0]:
            raise ChannelLayoutMismatch("stats channel count mismatch")
        if np.any(self.std < 0):
            raise ValueError("std must be non-negative")


@dataclass(frozen=True)
class ColumnSchema:
    """Maps CSV columns to channels; ``index_column`` is skipped if present."""

    channel_names: tuple[str, ...]
    index_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if not self.channel_names:
            raise ValueError("schema needs at least one channel")


def load_timeseries(
    source: IO[bytes] | IO[str] | bytes | str | Path,
    schema: ColumnSchema,
    *,
    sampling_rate_hz: float = 1.0,
    modality: Modality | str = Modality.GENERIC,
    user_id: str | None = None,
    label: str | None = None,
) -> TimeSeries:
    """Parse a headered CSV into a validated TimeSeries.

    The header must contain every schema channel (plus optionally the schema's
    index column, which is ignored). Rows are numbered from 1 for error
    reporting, excluding the header.
    """
    text = _as_text(source)
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise EmptyInput("no CSV content")
    header = [h.strip() for h in rows[0]]
    try:
        col_idx = [header.index(name) for name in schema.channel_names]
    except ValueError as exc:
        raise ChannelCountMismatch(
            f"header {header} does not contain schema channels {list(schema.channel_names)}"
        ) from exc
    body = rows[1:]
    if not body:
        raise EmptyInput("CSV has a header but no data rows")
    data = np.empty((len(schema.channel_names), len(body)), dtype=np.float64)
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise ChannelCountMismatch(
                f"data row {r} has {len(row)} cells, header has {len(header)}"
            )
        for c, idx in enumerate(col_idx):
            cell = row[idx].strip()
            try:
                value = float(cell)
            except ValueError:
                raise MalformedRow(r, cell) from None
            if not math.isfinite(value):
                raise MalformedRow(r, cell)
            data[c, r - 1] = value
    return TimeSeries(
        channel_names=schema.channel_names,
        data=data,
        sampling_rate_hz=sampling_rate_hz,
        modality=Modality(modality),
        user_id=user_id,
        label=label,
    )


def serialize_timeseries(series: TimeSeries) -> str:
    """CSV text that :func:`load_timeseries` round-trips value-exactly."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(series.channel_names)
    for i in range(series.n_samples):
        writer.writerow(format(v, ".17g") for v in series.data[:, i])
    return out.getvalue()


METADATA_FIELDS = ("sampling_rate_hz", "modality", "user_id", "label")


def write_csv_with_sidecar(series: TimeSeries, csv_path: str | Path) -> Path:
    """Write ``foo.csv`` plus ``foo.meta.json`` carrying the metadata fields."""
    csv_path = Path(csv_path)
    csv_path.write_text(serialize_timeseries(series))
    meta = {
        "sampling_rate_hz": series.sampling_rate_hz,
        "modality": series.modality.value,
        "user_id": series.user_id,
        "label": series.label,
    }
    meta_path = csv_path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return meta_path


def read_csv_with_sidecar(csv_path: str | Path) -> TimeSeries:
    """Load ``foo.csv`` using its ``foo.meta.json`` sidecar (all channels)."""
    csv_path = Path(csv_path)
    meta_path = csv_path.with_suffix(".meta.json")
    if not meta_path.exists():
        raise EmptyInput(f"missing metadata sidecar {meta_path}")
    meta = json.loads(meta_path.read_text())
    text = csv_path.read_text()
    first_line = text.splitlines()[0] if text.strip() else ""
    if not first_line:
        raise EmptyInput(f"{csv_path} is empty")
    header = [h.strip() for h in next(csv.reader(io.StringIO(first_line)))]
    schema = ColumnSchema(channel_names=tuple(header))
    return load_timeseries(
        text,
        schema,
        sampling_rate_hz=float(meta["sampling_rate_hz"]),
        modality=Modality(meta.get("modality", "generic")),
        user_id=meta.get("user_id"),
        label=meta.get("label"),
    )


def _as_text(source) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    raw = source.read()
    return raw.decode("utf-8") if isinstance(raw, bytes) else raw


def compute_user_stats(series_set: Iterable[TimeSeries], user_id: str) -> UserStats:
    """Per-channel mean/std over the concatenation of one user's samples.

    Population std (divisor n). Raises NoDataForUser when nothing matches.
    """
    mine = [s for s in series_set if s.user_id == user_id]
    if not mine:
        raise NoDataForUser(f"no series for user {user_id!r}")
    names = mine[0].channel_names
    for s in mine:
        if s.channel_names != names:
            raise ChannelLayoutMismatch(
                f"series for user {user_id!r} disagree on channel layout"
            )
    concat = np.concatenate([s.data for s in mine], axis=1)
    return UserStats(
        user_id=user_id,
        channel_names=names,
        mean=concat.mean(axis=1),
        std=concat.std(axis=1),  # ddof=0
    )


def z_normalize(series: TimeSeries, stats: UserStats) -> TimeSeries:
    """(x - mean) / std per channel; zero-variance channels map to all zeros."""
    if series.channel_names != stats.channel_names:
        raise ChannelLayoutMismatch(
            f"series channels {series.channel_names} != stats channels {stats.channel_names}"
        )
    std = stats.std.copy()
    dead = std == 0.0
    std[dead] = 1.0
    out = (series.data - stats.mean[:, None]) / std[:, None]
    out[dead, :] = 0.0
    return replace(series, data=out)


def segment_windows(series: TimeSeries, duration_s: float, stride_s: float) -> list[Window]:
    """Slice ``series`` into fixed-duration windows; trailing partial dropped.

    Windows inherit all metadata. ``stride_s == duration_s`` yields
    non-overlapping, gap-free windows.
    """
    if not (duration_s > 0 and stride_s > 0):
        raise ValueError("duration_s and stride_s must be positive")
    length = int(round(duration_s * series.sampling_rate_hz))
    stride = int(round(stride_s * series.sampling_rate_hz))
    if length < 1 or stride < 1:
        raise ValueError("window/stride shorter than one sample")
    if length > series.n_samples:
        raise WindowLongerThanSeries(
            f"window of {length} samples exceeds series of {series.n_samples}"
        )
    windows = []
    start = 0
    while start + length <= series.n_samples:
        piece = replace(series, data=series.data[:, start : start + length])
        windows.append(Window(series=piece, start_index=start, duration_s=duration_s))
        start += stride
    return windows
