"""Synthetic concept-drift decision streams and stream file I/O.

Stands in for live sub-detector output: each simulated expert has a
time-varying accuracy schedule, optional confidence noise, and optional
"flip episodes" during which its sign is inverted (a persistent false-alarm
source such as moving foliage). Generation is deterministic for a given
(config, seed): draws per step are truth, then per expert in order
sign / magnitude / noise, each from the shared PCG-32 generator.

Wire formats
------------
JSONL: one event per line,
  {"event_id": str, "step": int, "decisions": [...], "truth": -1|1|null,
   "preset_id": str}
  (optional keys region_ref / flagged appear only when set).
CSV: header ``step,d1,...,dM[,truth]``, RFC-4180, UTF-8.
Config files mirror StreamConfig field names in JSON.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .fusion import decision_vector
from .rng import Pcg32


class StreamFormatError(ValueError):
    """Malformed stream file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class FusionEvent:
    """One time-step sample: expert decisions plus optional ground truth."""

    event_id: str
    step: int
    decisions: np.ndarray
    truth: int | None = None
    region_ref: str | None = None
    preset_id: str = "default"
    flagged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "decisions", decision_vector(self.decisions))
        if self.truth is not None:
            if self.truth not in (-1, 1):
                raise StreamFormatError(f"truth must be -1 or 1, got {self.truth}")
            object.__setattr__(self, "truth", int(self.truth))

    def to_json_dict(self) -> dict:
        record = {
            "event_id": self.event_id,
            "step": self.step,
            "decisions": [float(v) for v in self.decisions],
            "truth": self.truth,
            "preset_id": self.preset_id,
        }
        if self.region_ref is not None:
            record["region_ref"] = self.region_ref
        if self.flagged:
            record["flagged"] = True
        return record

    @classmethod
    def from_json_dict(cls, record: dict, line: int | None = None) -> "FusionEvent":
        try:
            return cls(
                event_id=str(record["event_id"]),
                step=int(record["step"]),
                decisions=record["decisions"],
                truth=record.get("truth"),
                region_ref=record.get("region_ref"),
                preset_id=str(record.get("preset_id", "default")),
                flagged=bool(record.get("flagged", False)),
            )
        except KeyError as exc:
            raise StreamFormatError(f"missing field {exc.args[0]}", line) from exc
        except (TypeError, ValueError) as exc:
            raise StreamFormatError(str(exc), line) from exc


@dataclass(frozen=True)
class ExpertProfile:
    """Reliability model for one simulated sub-detector.

    accuracy_schedule holds (start_step, accuracy) anchors; the value at a
    step is the last anchor's accuracy (piecewise-constant), or linearly
    interpolated toward the next anchor when ``interpolate`` is set.
    """

    id: str
    accuracy_schedule: tuple[tuple[int, float], ...] = ((0, 1.0),)
    confidence_noise: float = 0.0
    flip_episodes: tuple[tuple[int, int], ...] = ()
    interpolate: bool = False

    def __post_init__(self):
        anchors = tuple(sorted((int(s), float(a)) for s, a in self.accuracy_schedule))
        object.__setattr__(self, "accuracy_schedule", anchors)
        object.__setattr__(
            self, "flip_episodes", tuple((int(s), int(e)) for s, e in self.flip_episodes)
        )
        if not anchors or anchors[0][0] > 0:
            raise ValueError(f"expert {self.id}: schedule must cover step 0")
        if any(not 0.0 <= a <= 1.0 for _, a in anchors):
            raise ValueError(f"expert {self.id}: accuracies must lie in [0, 1]")
        if self.confidence_noise < 0.0:
            raise ValueError(f"expert {self.id}: noise sigma must be >= 0")
        if any(s >= e for s, e in self.flip_episodes):
            raise ValueError(f"expert {self.id}: flip episodes must satisfy start < end")

    def accuracy_at(self, step: int) -> float:
        anchors = self.accuracy_schedule
        idx = 0
        for i, (start, _) in enumerate(anchors):
            if start <= step:
                idx = i
            else:
                break
        start, value = anchors[idx]
        if self.interpolate and idx + 1 < len(anchors):
            nxt_start, nxt_value = anchors[idx + 1]
            frac = (step - start) / (nxt_start - start)
            return value + frac * (nxt_value - value)
        return value

    def flipped_at(self, step: int) -> bool:
        return any(s <= step < e for s, e in self.flip_episodes)


@dataclass(frozen=True)
class StreamConfig:
    experts: tuple[ExpertProfile, ...]
    length: int
    positive_rate: float = 0.5
    seed: int = 0
    preset_id: str = "default"
    drift_switch_steps: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "experts", tuple(self.experts))
        object.__setattr__(self, "drift_switch_steps", tuple(self.drift_switch_steps))
        if self.length < 1:
            raise ValueError("stream length must be >= 1")
        if not 0.0 <= self.positive_rate <= 1.0:
            raise ValueError("positive_rate must lie in [0, 1]")
        if not self.experts:
            raise ValueError("at least one expert profile is required")

    @property
    def m(self) -> int:
        return len(self.experts)


def generate_stream(cfg: StreamConfig) -> list[FusionEvent]:
    """Produce the deterministic event sequence for a config."""
    rng = Pcg32(cfg.seed)
    events = []
    for step in range(cfg.length):
        truth = 1 if rng.random() < cfg.positive_rate else -1
        decisions = np.empty(cfg.m, dtype=np.float64)
        for i, expert in enumerate(cfg.experts):
            sign = 1.0 if rng.random() < expert.accuracy_at(step) else -1.0
            magnitude = 0.5 + 0.5 * rng.random()
            noise = expert.confidence_noise * rng.normal()
            value = sign * truth * magnitude + noise
            if expert.flipped_at(step):
                value = -value
            decisions[i] = value
        events.append(
            FusionEvent(
                event_id=f"{cfg.preset_id}-{step:06d}",
                step=step,
                decisions=decisions,
                truth=truth,
                preset_id=cfg.preset_id,
            )
        )
    return events


def save_stream(events: Iterable[FusionEvent], path, fmt: str = "jsonl") -> None:
    path = Path(path)
    fmt = fmt.lower()
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for event in events:
                fh.write(json.dumps(event.to_json_dict(), separators=(",", ":")))
                fh.write("\n")
    elif fmt == "csv":
        events = list(events)
        if not events:
            raise ValueError("cannot write an empty CSV stream")
        m = events[0].decisions.size
        with_truth = all(e.truth is not None for e in events)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            header = ["step"] + [f"d{i + 1}" for i in range(m)]
            if with_truth:
                header.append("truth")
            writer.writerow(header)
            for event in events:
                row = [event.step] + [repr(float(v)) for v in event.decisions]
                if with_truth:
                    row.append(event.truth)
                writer.writerow(row)
    else:
        raise ValueError(f"unknown stream format: {fmt}")


def load_stream(path, fmt: str | None = None, preset_id: str = "default") -> list[FusionEvent]:
    """Read a stream file; raises StreamFormatError with the bad line number."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    fmt = fmt.lower()
    if fmt == "jsonl":
        return _load_jsonl(path)
    if fmt == "csv":
        return _load_csv(path, preset_id)
    raise ValueError(f"unknown stream format: {fmt}")


def _load_jsonl(path: Path) -> list[FusionEvent]:
    events = []
    m = None
    seen_ids = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamFormatError(f"invalid JSON: {exc.msg}", lineno) from exc
            event = FusionEvent.from_json_dict(record, lineno)
            if m is None:
                m = event.decisions.size
            elif event.decisions.size != m:
                raise StreamFormatError(
                    f"expected {m} decisions, got {event.decisions.size}", lineno
                )
            if event.event_id in seen_ids:
                raise StreamFormatError(f"duplicate event_id {event.event_id}", lineno)
            seen_ids.add(event.event_id)
            events.append(event)
    return events


def _load_csv(path: Path, preset_id: str) -> list[FusionEvent]:
    events = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if not header or header[0] != "step":
            raise StreamFormatError("header must start with 'step'", 1)
        has_truth = bool(header) and header[-1] == "truth"
        m = len(header) - 1 - (1 if has_truth else 0)
        if m < 1:
            raise StreamFormatError("header names no decision columns", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise StreamFormatError(
                    f"expected {len(header)} columns, got {len(row)}", lineno
                )
            try:
                step = int(row[0])
                decisions = [float(v) for v in row[1 : 1 + m]]
                truth = None
                if has_truth:
                    truth = int(float(row[-1]))
            except ValueError as exc:
                raise StreamFormatError(str(exc), lineno) from exc
            events.append(
                FusionEvent(
                    event_id=f"{preset_id}-{lineno - 2:06d}",
                    step=step,
                    decisions=decisions,
                    truth=truth,
                    preset_id=preset_id,
                )
            )
    return events


def stream_config_from_dict(data: dict) -> StreamConfig:
    experts = tuple(
        ExpertProfile(
            id=str(item["id"]),
            accuracy_schedule=tuple(
                (int(s), float(a)) for s, a in item.get("accuracy_schedule", [[0, 1.0]])
            ),
            confidence_noise=float(item.get("confidence_noise", 0.0)),
            flip_episodes=tuple((int(s), int(e)) for s, e in item.get("flip_episodes", [])),
            interpolate=bool(item.get("interpolate", False)),
        )
        for item in data["experts"]
    )
    return StreamConfig(
        experts=experts,
        length=int(data["length"]),
        positive_rate=float(data.get("positive_rate", 0.5)),
        seed=int(data.get("seed", 0)),
        preset_id=str(data.get("preset_id", "default")),
        drift_switch_steps=tuple(int(s) for s in data.get("drift_switch_steps", [])),
    )


def stream_config_to_dict(cfg: StreamConfig) -> dict:
    return {
        "experts": [
            {
                "id": p.id,
                "accuracy_schedule": [[s, a] for s, a in p.accuracy_schedule],
                "confidence_noise": p.confidence_noise,
                "flip_episodes": [[s, e] for s, e in p.flip_episodes],
                "interpolate": p.interpolate,
            }
            for p in cfg.experts
        ],
        "length": cfg.length,
        "positive_rate": cfg.positive_rate,
        "seed": cfg.seed,
        "preset_id": cfg.preset_id,
        "drift_switch_steps": list(cfg.drift_switch_steps),
    }


def load_stream_config(path) -> StreamConfig:
    with Path(path).open("r", encoding="utf-8") as fh:
        return stream_config_from_dict(json.load(fh))
