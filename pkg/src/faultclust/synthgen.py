"""Labeled synthetic 3-phase fault recordings for end-to-end validation.

Waveform shapes are parameterized caricatures of the standard fault
taxonomy: voltage dips with current surges and a decaying DC offset for
short circuits, current steps for switching events, a damped
high-frequency burst for transients, one dropped current channel for open
circuits. They are not electromagnetically faithful; they exist to make
the classes spectrally separable so the pipeline can be validated against
known labels.

Randomness uses the counter-based 64-bit Philox generator: record i of a
dataset seeded with s draws from the stream keyed by the 128-bit value
(s mod 2^64) * 2^64 + i, so generation is reproducible across platforms
and parallelizable per record. With noise_std == 0 no random draws happen
at all and the output is pure deterministic trigonometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .labels import LabelRecord
from .waveform_store import Dataset, DatasetMeta, WaveformRecord

EVENT_TYPES = (
    "Normal",
    "SC-1P-A",
    "SC-1P-B",
    "SC-1P-C",
    "SC-LL",
    "SC-DLG",
    "SC-3PH",
    "SwitchOn",
    "SwitchOff",
    "Transient",
    "OpenCircuit",
)

# event type -> (fault_class, fault_type, phase)
LABEL_FOR_EVENT: dict[str, tuple[str, str, str]] = {
    "Normal": ("Normal", "Normal", "N/A"),
    "SC-1P-A": ("Short-circuit", "1-P-SC", "A"),
    "SC-1P-B": ("Short-circuit", "1-P-SC", "B"),
    "SC-1P-C": ("Short-circuit", "1-P-SC", "C"),
    "SC-LL": ("Short-circuit", "2-P-SC", "multi"),
    "SC-DLG": ("Short-circuit", "2-P-G-SC", "multi"),
    "SC-3PH": ("Short-circuit", "3-P-SC", "multi"),
    "SwitchOn": ("Switching", "Switch On", "N/A"),
    "SwitchOff": ("Switching", "Switch Off", "N/A"),
    "Transient": ("Transients", "Transients", "N/A"),
    "OpenCircuit": ("Other", "Open Circuit", "B"),
}

# phases touched by each short-circuit type (0=A, 1=B, 2=C)
SC_PHASES = {
    "SC-1P-A": (0,),
    "SC-1P-B": (1,),
    "SC-1P-C": (2,),
    "SC-LL": (0, 1),
    "SC-DLG": (1, 2),
    "SC-3PH": (0, 1, 2),
}

V_AMPLITUDE = 1.0
I_AMPLITUDE = 0.5
CURRENT_LAG = math.pi / 6  # inductive load
CURRENT_SURGE_GAIN = 9.0
TRANSIENT_FREQ_MULTIPLE = 16  # >= 10x fundamental
OPEN_CIRCUIT_CHANNEL = 4  # I2

_SHUFFLE_STREAM = 0xFFFFFFFF


@dataclass(frozen=True)
class FaultSpec:
    """Parameters of one synthetic fault event."""

    event_type: str
    inception_sample: int
    duration_samples: int
    severity: float = 0.8
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {self.event_type!r}")
        if not 0.0 < self.severity <= 1.0:
            raise ValueError("severity must be in (0, 1]")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be >= 0")
        if self.inception_sample < 0 or self.duration_samples < 0:
            raise ValueError("inception and duration must be >= 0")


def _philox(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key))


def _record_key(dataset_seed: int, counter: int) -> int:
    return (dataset_seed % 2**64) * 2**64 + counter


def _baseline(meta: DatasetMeta, timesteps: int) -> np.ndarray:
    n = np.arange(timesteps)
    omega = 2.0 * math.pi * meta.nominal_freq_hz / meta.sampling_rate_hz
    offsets = np.array([0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0])
    volts = V_AMPLITUDE * np.sin(omega * n[None, :] + offsets[:, None])
    amps = I_AMPLITUDE * np.sin(omega * n[None, :] + offsets[:, None] - CURRENT_LAG)
    return np.vstack([volts, amps])


def generate(spec: FaultSpec, meta: DatasetMeta) -> tuple[WaveformRecord, LabelRecord]:
    """Synthesize one labeled fault recording (record id is 0; callers renumber)."""
    timesteps = meta.timesteps
    if spec.inception_sample + spec.duration_samples > timesteps:
        raise ValueError("fault window exceeds record length")

    samples = _baseline(meta, timesteps)
    start = spec.inception_sample
    stop = start + spec.duration_samples
    window = slice(start, stop)
    rel = np.arange(stop - start)
    period = meta.period

    if spec.event_type in SC_PHASES:
        dc_tau = 2.0 * period
        for p in SC_PHASES[spec.event_type]:
            samples[p, window] *= 1.0 - spec.severity
            samples[3 + p, window] *= 1.0 + CURRENT_SURGE_GAIN * spec.severity
            samples[3 + p, window] += (
                spec.severity * I_AMPLITUDE * np.exp(-rel / dc_tau)
            )
    elif spec.event_type == "SwitchOn":
        samples[3:, :start] = 0.0
    elif spec.event_type == "SwitchOff":
        samples[3:, start:] = 0.0
    elif spec.event_type == "Transient":
        f_burst = TRANSIENT_FREQ_MULTIPLE * meta.nominal_freq_hz
        tau = max(spec.duration_samples / 4.0, 1.0)
        burst = (
            spec.severity
            * V_AMPLITUDE
            * np.exp(-rel / tau)
            * np.sin(2.0 * math.pi * f_burst / meta.sampling_rate_hz * rel)
        )
        samples[:, window] += burst
    elif spec.event_type == "OpenCircuit":
        samples[OPEN_CIRCUIT_CHANNEL, window] = 0.0
    # "Normal" leaves the baseline untouched

    if spec.noise_std > 0.0:
        rng = _philox(spec.seed)
        samples = samples + rng.normal(0.0, spec.noise_std, size=samples.shape)

    # float32 round-trip safety for the on-disk format
    samples = samples.astype(np.float32).astype(np.float64)

    cls, ftype, phase = LABEL_FOR_EVENT[spec.event_type]
    label = LabelRecord(sample_id=0, fault_class=cls, fault_type=ftype, phase=phase,
                        comment=f"synthetic {spec.event_type}")
    return WaveformRecord(id=0, samples=samples), label


def generate_dataset(
    class_counts: Mapping[str, int],
    meta: DatasetMeta | None = None,
    seed: int = 0,
    *,
    timesteps: int = 2048,
    noise_std: float = 0.0,
) -> tuple[Dataset, list[LabelRecord]]:
    """Deterministically generate a labeled dataset with the given class mix.

    Per-record fault windows and severities are drawn from each record's own
    keyed stream; the result is shuffled deterministically and ids are
    assigned by final position.
    """
    total = sum(class_counts.values())
    if total <= 0:
        raise ValueError("class_counts must request at least one record")
    for event_type in class_counts:
        if event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {event_type!r}")

    if meta is None:
        meta = DatasetMeta(record_count=total, timesteps=timesteps)
    elif meta.record_count != total:
        raise ValueError(f"meta.record_count={meta.record_count} but counts sum to {total}")
    period = meta.period

    pairs: list[tuple[WaveformRecord, LabelRecord]] = []
    counter = 0
    for event_type in sorted(class_counts):
        for _ in range(class_counts[event_type]):
            key = _record_key(seed, counter)
            rng = _philox(key)
            inception = int(rng.integers(meta.timesteps // 4, meta.timesteps // 2))
            duration = int(rng.integers(4 * period, 8 * period + 1))
            duration = min(duration, meta.timesteps - inception)
            severity = float(rng.uniform(0.7, 0.9))
            spec = FaultSpec(
                event_type=event_type,
                inception_sample=inception,
                duration_samples=duration,
                severity=severity,
                noise_std=noise_std,
                seed=key + 1,  # distinct stream for the noise draws
            )
            pairs.append(generate(spec, meta))
            counter += 1

    order = _philox(_record_key(seed, _SHUFFLE_STREAM)).permutation(total)
    records = []
    labels = []
    for new_id, src in enumerate(order):
        rec, lab = pairs[src]
        records.append(WaveformRecord(id=new_id, samples=rec.samples))
        labels.append(
            LabelRecord(
                sample_id=new_id,
                fault_class=lab.fault_class,
                fault_type=lab.fault_type,
                phase=lab.phase,
                comment=lab.comment,
            )
        )
    return Dataset(meta=meta, records=tuple(records)), labels
