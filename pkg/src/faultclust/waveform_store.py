"""Waveform data model and on-disk dataset format.

A dataset on disk is a pair of files sharing one stem: a JSON manifest
(``<stem>.json``) describing the shape, and a raw little-endian float32
blob (``<stem>.f32``) holding the samples in record-major, channel-major,
time-minor order. Record ids are positional: record ``i`` in the blob has
id ``i``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

N_CHANNELS = 6
CHANNEL_NAMES = ("V1", "V2", "V3", "I1", "I2", "I3")

MANIFEST_FIELDS = ("record_count", "channels", "timesteps", "sampling_rate_hz", "nominal_freq_hz")

QUANT_MAX = 32767  # 16-bit encoding range of the source recordings


class DatasetFormatError(ValueError):
    """Raised when a dataset file pair is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class DatasetMeta:
    """Shape and acquisition parameters of a waveform dataset."""

    record_count: int
    timesteps: int
    channels: int = N_CHANNELS
    sampling_rate_hz: float = 6400.0
    nominal_freq_hz: float = 50.0
    voltage_step_v: float = 18.310
    current_step_a: float = 4.314

    def __post_init__(self):
        if self.channels != N_CHANNELS:
            raise ValueError(f"channels must be {N_CHANNELS}, got {self.channels}")
        if self.record_count < 0:
            raise ValueError("record_count must be >= 0")
        if self.timesteps <= 0:
            raise ValueError("timesteps must be positive")
        if not self.sampling_rate_hz > 2 * self.nominal_freq_hz:
            raise ValueError(
                f"sampling_rate_hz ({self.sampling_rate_hz}) must exceed twice the "
                f"nominal frequency ({self.nominal_freq_hz})"
            )
        if self.period < 2:
            raise ValueError("sampling_rate_hz / nominal_freq_hz must round to an integer >= 2")

    @property
    def period(self) -> int:
        """Samples per fundamental cycle (the seasonal-decomposition period)."""
        return int(round(self.sampling_rate_hz / self.nominal_freq_hz))


@dataclass(frozen=True)
class WaveformRecord:
    """One fault event: six time-synchronized channels V1,V2,V3,I1,I2,I3."""

    id: int
    samples: np.ndarray  # (6, timesteps) float64

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] != N_CHANNELS:
            raise ValueError(f"samples must have shape (6, timesteps), got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"record {self.id} contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def channel(self, name: str) -> np.ndarray:
        return self.samples[CHANNEL_NAMES.index(name)]


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of waveform records plus metadata."""

    meta: DatasetMeta
    records: tuple[WaveformRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        records = tuple(self.records)
        if len(records) != self.meta.record_count:
            raise ValueError(
                f"meta.record_count={self.meta.record_count} but {len(records)} records given"
            )
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")
        for r in records:
            if r.samples.shape[1] != self.meta.timesteps:
                raise ValueError(
                    f"record {r.id} has {r.samples.shape[1]} timesteps, expected {self.meta.timesteps}"
                )
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index: int) -> WaveformRecord:
        return self.records[index]

    def record_by_id(self, sample_id: int) -> WaveformRecord:
        for r in self.records:
            if r.id == sample_id:
                return r
        raise KeyError(f"no record with id {sample_id}")

    def to_array(self) -> np.ndarray:
        """Stack all records into an (N, 6, timesteps) array."""
        if not self.records:
            return np.empty((0, N_CHANNELS, self.meta.timesteps), dtype=np.float64)
        return np.stack([r.samples for r in self.records])


def dataset_from_array(data: np.ndarray, meta: DatasetMeta | None = None, **meta_kwargs) -> Dataset:
    """Build a Dataset from an (N, 6, timesteps) array with positional ids."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 3 or data.shape[1] != N_CHANNELS:
        raise ValueError(f"expected (N, 6, timesteps) array, got shape {data.shape}")
    if meta is None:
        meta = DatasetMeta(record_count=data.shape[0], timesteps=data.shape[2], **meta_kwargs)
    records = tuple(WaveformRecord(id=i, samples=data[i]) for i in range(data.shape[0]))
    return Dataset(meta=meta, records=records)


def _blob_path(manifest_path: Path) -> Path:
    return manifest_path.with_suffix(".f32")


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a manifest + float32 blob pair readable by :func:`load_dataset`.

    Record ids must be positional (record i has id i); the binary format
    does not store ids. Round-trips bit-exactly for float32-representable
    values; synthesizers in this package emit float32-exact data.
    """
    path = Path(path)
    for i, r in enumerate(ds.records):
        if r.id != i:
            raise ValueError(
                f"dataset ids must be positional to be saved (record {i} has id {r.id})"
            )
    manifest = {
        "record_count": ds.meta.record_count,
        "channels": ds.meta.channels,
        "timesteps": ds.meta.timesteps,
        "sampling_rate_hz": ds.meta.sampling_rate_hz,
        "nominal_freq_hz": ds.meta.nominal_freq_hz,
    }
    blob = ds.to_array().astype("<f4")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    _blob_path(path).write_bytes(blob.tobytes())


def load_dataset(path: str | Path, **meta_overrides) -> Dataset:
    """Load a manifest + blob pair. Fails rather than truncates on any mismatch.

    ``meta_overrides`` may supply fields the manifest does not carry
    (quantization steps).
    """
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"manifest not found: {path}")
    blob_path = _blob_path(path)
    if not blob_path.exists():
        raise DatasetFormatError(f"blob not found: {blob_path}")

    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"manifest is not valid JSON: {exc}") from exc
    missing = set(MANIFEST_FIELDS) - set(manifest)
    if missing:
        raise DatasetFormatError(f"manifest missing fields: {sorted(missing)}")

    meta = DatasetMeta(
        record_count=int(manifest["record_count"]),
        channels=int(manifest["channels"]),
        timesteps=int(manifest["timesteps"]),
        sampling_rate_hz=float(manifest["sampling_rate_hz"]),
        nominal_freq_hz=float(manifest["nominal_freq_hz"]),
        **meta_overrides,
    )

    raw = blob_path.read_bytes()
    expected = meta.record_count * meta.channels * meta.timesteps * 4
    if len(raw) != expected:
        raise DatasetFormatError(
            f"blob size mismatch: manifest implies {expected} bytes, file has {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(meta.record_count, meta.channels, meta.timesteps)
    data = data.astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise DatasetFormatError("blob contains non-finite values")
    return dataset_from_array(data, meta=meta)


def import_csv(path: str | Path, meta: DatasetMeta) -> Dataset:
    """Import a long-format CSV (columns id,channel,t,value) as a Dataset.

    Convenience for hand-made fixtures; every (id, channel, t) cell must be
    present exactly once.
    """
    path = Path(path)
    data = np.full((meta.record_count, meta.channels, meta.timesteps), np.nan)
    id_index: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            rid = int(row["id"])
            if rid not in id_index:
                if len(id_index) >= meta.record_count:
                    raise DatasetFormatError("CSV contains more record ids than the meta allows")
                id_index[rid] = len(id_index)
            ch = row["channel"]
            ci = CHANNEL_NAMES.index(ch) if ch in CHANNEL_NAMES else int(ch)
            data[id_index[rid], ci, int(row["t"])] = float(row["value"])
    if np.any(np.isnan(data)):
        raise DatasetFormatError("CSV does not cover every (id, channel, t) cell")
    return dataset_from_array(data, meta=meta)


def dequantize(ds: Dataset) -> Dataset:
    """Scale raw integer counts to volts/amperes using the meta's step sizes.

    Not applied automatically anywhere; downstream features are amplitude
    invariant so this only matters for display.
    """
    steps = np.array([ds.meta.voltage_step_v] * 3 + [ds.meta.current_step_a] * 3)
    records = tuple(
        replace(r, samples=r.samples * steps[:, None]) for r in ds.records
    )
    return Dataset(meta=ds.meta, records=records)


def labeled_subset(ds: Dataset, sample_ids: Sequence[int]) -> list[WaveformRecord]:
    """Records for the given ids, raising KeyError for unknown ids."""
    by_id = {r.id: r for r in ds.records}
    return [by_id[i] for i in sample_ids]
