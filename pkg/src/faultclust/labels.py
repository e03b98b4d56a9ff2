"""Expert label records, the fault-type vocabulary, and label persistence.

The vocabulary maps each fault class to its admissible fault types and
each fault type to a phase policy: "single" types name one impacted phase
(A/B/C), "multi" types span several phases, and "na" types carry no phase.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

FAULT_CLASSES = ("Normal", "Short-circuit", "Switching", "Transients", "Other")
PHASES = ("A", "B", "C", "N/A", "multi")

# fault_class -> {fault_type: phase policy}
VOCABULARY: dict[str, dict[str, str]] = {
    "Normal": {"Normal": "na"},
    "Short-circuit": {
        "1-P-SC": "single",
        "2-P-SC": "multi",
        "2-P-G-SC": "multi",
        "3-P-SC": "multi",
    },
    "Switching": {"Switch On": "na", "Switch Off": "na"},
    "Transients": {"Transients": "na"},
    "Other": {"Off - No Switch": "na", "Open Circuit": "single", "Other": "na"},
}


class VocabularyError(ValueError):
    """Raised when a label violates the class/type/phase vocabulary."""


def validate_label(fault_class: str, fault_type: str, phase: str) -> None:
    if fault_class not in VOCABULARY:
        raise VocabularyError(f"unknown fault class {fault_class!r}")
    types = VOCABULARY[fault_class]
    if fault_type not in types:
        raise VocabularyError(
            f"fault type {fault_type!r} not valid for class {fault_class!r} "
            f"(expected one of {sorted(types)})"
        )
    policy = types[fault_type]
    if policy == "single" and phase not in ("A", "B", "C"):
        raise VocabularyError(f"fault type {fault_type!r} requires phase A, B or C, got {phase!r}")
    if policy == "multi" and phase != "multi":
        raise VocabularyError(f"fault type {fault_type!r} requires phase 'multi', got {phase!r}")
    if policy == "na" and phase != "N/A":
        raise VocabularyError(f"fault type {fault_type!r} takes no phase (use 'N/A'), got {phase!r}")


@dataclass(frozen=True)
class LabelRecord:
    """One expert annotation for one sample."""

    sample_id: int
    fault_class: str
    fault_type: str
    phase: str
    comment: str = ""

    def __post_init__(self):
        validate_label(self.fault_class, self.fault_type, self.phase)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "fault_class": self.fault_class,
            "fault_type": self.fault_type,
            "phase": self.phase,
            "comment": self.comment,
        }


LABEL_CSV_HEADER = ("sample_id", "fault_class", "fault_type", "phase", "comment")


def save_labels_csv(labels: Iterable[LabelRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LABEL_CSV_HEADER)
        for rec in labels:
            writer.writerow([rec.sample_id, rec.fault_class, rec.fault_type, rec.phase, rec.comment])


def load_labels_csv(path) -> list[LabelRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(
                LabelRecord(
                    sample_id=int(row["sample_id"]),
                    fault_class=row["fault_class"],
                    fault_type=row["fault_type"],
                    phase=row["phase"],
                    comment=row.get("comment", ""),
                )
            )
    return out


class LabelLog:
    """Append-only JSON-lines label log; the latest revision per sample wins."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, record: LabelRecord) -> dict:
        entry = record.to_dict()
        entry["revision"] = self.last_revision() + 1
        entry["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(entry, sort_keys=True) + "\n")
        return entry

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def last_revision(self) -> int:
        entries = self.entries()
        return max((e["revision"] for e in entries), default=0)

    def current_view(self) -> dict[int, dict]:
        """Replay the log: latest revision per sample_id."""
        view: dict[int, dict] = {}
        for entry in self.entries():
            view[entry["sample_id"]] = entry
        return view

    def current_labels(self) -> list[LabelRecord]:
        return [
            LabelRecord(
                sample_id=e["sample_id"],
                fault_class=e["fault_class"],
                fault_type=e["fault_type"],
                phase=e["phase"],
                comment=e.get("comment", ""),
            )
            for e in sorted(self.current_view().values(), key=lambda e: e["sample_id"])
        ]
