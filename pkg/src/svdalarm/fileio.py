"""Readers and writers for the on-disk formats.

* measurement CSV: ``t,y1..yM`` with optional truth columns ``x_1..x_N``
* verdict CSV: ``t,sigma1,alarm,threshold``
* simulation config JSON: ``{"gamma", "nu", "T", "seed"}``
* attack JSON: ``{"support", "norm", "t_a", "signature"}`` where signature is
  ``"step"`` or ``{"ramp": {"t_start", "t_end"}}``
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .grid import MeasurementMatrix, make_unobservable_attack
from .sim import AttackScenario, Ramp, Step

SIM_CONFIG_DEFAULTS = {"gamma": 0.0, "nu": 0.05, "T": 256, "seed": 0}


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_measurement_csv(path, frames, include_truth: bool = False) -> None:
    M = frames[0].y.shape[0]
    header = ["t"] + [f"y{i}" for i in range(1, M + 1)]
    if include_truth:
        N = frames[0].x.shape[0]
        header += [f"x_{i}" for i in range(1, N + 1)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for fr in frames:
            row = [fr.t, *map(fmt, fr.y)]
            if include_truth:
                row += list(map(fmt, fr.x))
            writer.writerow(row)


def read_measurement_csv(path):
    """Return ``(times, ys, xs)``; ``xs`` is None when no truth columns exist."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if not header or header[0] != "t":
        raise InvalidInputError(f"{path}: first column must be 't'")
    y_cols = [i for i, h in enumerate(header) if h.startswith("y")]
    x_cols = [i for i, h in enumerate(header) if h.startswith("x_")]
    if not y_cols:
        raise InvalidInputError(f"{path}: no y columns")
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    times = data[:, 0].astype(int)
    xs = data[:, x_cols] if x_cols else None
    return times, data[:, y_cols], xs


def write_verdict_csv(path, verdicts) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "sigma1", "alarm", "threshold"])
        for v in verdicts:
            writer.writerow([v.t, fmt(v.sigma1), fmt(v.alarmed), fmt(v.threshold_used)])


def write_records_csv(path, records: Sequence[dict], columns: Optional[Iterable[str]] = None) -> None:
    columns = list(columns) if columns is not None else list(records[0]) if records else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([fmt(rec.get(c)) for c in columns])


def load_json(path) -> dict:
    with open(Path(path)) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc


def load_sim_config(path) -> dict:
    doc = load_json(path)
    unknown = set(doc) - set(SIM_CONFIG_DEFAULTS)
    if unknown:
        raise InvalidInputError(f"{path}: unknown config keys {sorted(unknown)}")
    return {**SIM_CONFIG_DEFAULTS, **doc}


def parse_signature(sig):
    if sig in (None, "step"):
        return Step()
    if isinstance(sig, dict) and "ramp" in sig:
        ramp = sig["ramp"]
        return Ramp(t_start=int(ramp["t_start"]), t_end=int(ramp["t_end"]))
    raise InvalidInputError(f"unknown attack signature {sig!r}")


def signature_to_doc(sig):
    if isinstance(sig, Ramp):
        return {"ramp": {"t_start": sig.t_start, "t_end": sig.t_end}}
    return "step"


def scenario_from_doc(doc: dict, H: MeasurementMatrix) -> AttackScenario:
    try:
        attack = make_unobservable_attack(H, doc["support"], float(doc["norm"]))
        return AttackScenario(attack=attack, t_a=int(doc["t_a"]), signature=parse_signature(doc.get("signature")))
    except KeyError as exc:
        raise InvalidInputError(f"attack document is missing {exc}") from exc


def dump_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
