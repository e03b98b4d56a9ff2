"""Frequency-domain feature extraction.

Each record becomes one feature row: the six channels are transformed
independently, each magnitude spectrum is truncated to its positive-
frequency half and peak-normalized, and the six blocks are concatenated
in channel order V1,V2,V3,I1,I2,I3. Peak normalization makes the features
amplitude invariant, so classification rests on relative spectral shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .preprocess import normalize
from .validation import check_signal
from .waveform_store import Dataset


@dataclass(frozen=True)
class Spectrum:
    """Positive-frequency magnitude spectrum of one channel."""

    magnitudes: np.ndarray  # floor(N/2) non-negative reals
    bin_hz: float  # sampling_rate / N of the (possibly padded) transform


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-per-record spectral features plus bookkeeping."""

    record_ids: np.ndarray  # (N,) int
    features: np.ndarray  # (N, 6 * floor(n_fft/2)) float
    degenerate: np.ndarray  # (N,) bool, True if any channel block was all zero

    @property
    def shape(self) -> tuple[int, int]:
        return self.features.shape


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def fft_complex(x: np.ndarray) -> np.ndarray:
    """Full complex DFT X(k) = sum_n x(n) exp(-j 2 pi k n / N), k = 0..N-1."""
    return np.fft.fft(x)


def fft_magnitude(x, *, sampling_rate_hz: float = 6400.0, pad_to_pow2: bool = True) -> Spectrum:
    """Magnitude of the first floor(N/2) DFT bins of a real signal.

    Non-power-of-two lengths are zero-padded to the next power of two by
    default; bin_hz reflects the padded length.
    """
    x = check_signal(x, min_length=2)
    n = len(x)
    if pad_to_pow2 and n & (n - 1):
        n = _next_pow2(n)
        x = np.concatenate([x, np.zeros(n - len(x))])
    mags = np.abs(fft_complex(x)[: n // 2])
    return Spectrum(magnitudes=mags, bin_hz=sampling_rate_hz / n)


def normalize_spectrum(s: Spectrum) -> Spectrum:
    """Divide each magnitude by the maximum; an all-zero spectrum passes through."""
    peak = s.magnitudes.max() if s.magnitudes.size else 0.0
    if peak == 0.0:
        return s
    return Spectrum(magnitudes=s.magnitudes / peak, bin_hz=s.bin_hz)


class SpectralFeaturizer(BaseEstimator, TransformerMixin):
    """Dataset -> FeatureMatrix transformer.

    Parameters
    ----------
    normalize_input : bool
        Scale each channel into [-1, 1] before the transform (default), or
        transform raw samples.
    truncate : int or None
        Use only the first ``truncate`` samples of each channel.
    pad_to_pow2 : bool
        Zero-pad non-power-of-two lengths to the next power of two.
    """

    def __init__(self, normalize_input: bool = True, truncate: int | None = None,
                 pad_to_pow2: bool = True):
        self.normalize_input = normalize_input
        self.truncate = truncate
        self.pad_to_pow2 = pad_to_pow2

    def fit(self, ds: Dataset, y=None):
        return self

    def transform(self, ds: Dataset) -> FeatureMatrix:
        lengths = {r.samples.shape[1] for r in ds.records}
        if len(lengths) > 1:
            raise ValueError(f"records have inconsistent lengths: {sorted(lengths)}")

        rows = []
        degenerate = []
        for record in ds.records:
            blocks = []
            degen = False
            for channel in record.samples:
                x = channel[: self.truncate] if self.truncate else channel
                if self.normalize_input:
                    x = normalize(x).values
                spec = fft_magnitude(
                    x, sampling_rate_hz=ds.meta.sampling_rate_hz, pad_to_pow2=self.pad_to_pow2
                )
                if spec.magnitudes.max() == 0.0:
                    degen = True
                blocks.append(normalize_spectrum(spec).magnitudes)
            rows.append(np.concatenate(blocks))
            degenerate.append(degen)

        features = np.array(rows) if rows else np.empty((0, 0))
        return FeatureMatrix(
            record_ids=np.array([r.id for r in ds.records], dtype=int),
            features=features,
            degenerate=np.array(degenerate, dtype=bool),
        )


def build_features(ds: Dataset, *, normalize_input: bool = True, truncate: int | None = None,
                   pad_to_pow2: bool = True) -> FeatureMatrix:
    """Functional wrapper around :class:`SpectralFeaturizer`."""
    return SpectralFeaturizer(
        normalize_input=normalize_input, truncate=truncate, pad_to_pow2=pad_to_pow2
    ).fit(ds).transform(ds)


def save_features_csv(fm: FeatureMatrix, path) -> None:
    header = "record_id," + ",".join(f"f{i}" for i in range(fm.features.shape[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for rid, row in zip(fm.record_ids, fm.features):
            f.write(str(int(rid)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def load_features_csv(path) -> FeatureMatrix:
    import csv

    ids, rows = [], []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader)
        for line in reader:
            ids.append(int(line[0]))
            rows.append([float(v) for v in line[1:]])
    features = np.array(rows) if rows else np.empty((0, 0))
    return FeatureMatrix(
        record_ids=np.array(ids, dtype=int),
        features=features,
        degenerate=np.zeros(len(ids), dtype=bool),
    )
