"""Trajectory CSV and metrics line-record files."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .metrics import EpisodeRecord

BASE_COLUMNS = (
    "slot",
    "t_s",
    "x",
    "y",
    "z",
    "speed",
    "elevation_rad",
    "azimuth_rad",
    "power_W",
    "voltage_V",
    "remaining_time_s",
    "forced_return",
)


def trajectory_header(n_nodes: int) -> list[str]:
    return [*BASE_COLUMNS, *(f"bits_gn{k}" for k in range(n_nodes))]


def trajectory_rows(record: EpisodeRecord, n_nodes: int) -> np.ndarray:
    """Numeric table of an episode; row 0 is the state before the first slot.

    Row k >= 1 holds slot k's command and power with the position and
    battery at its end; bit columns are cumulative per node.
    """
    if not record.slots:
        return np.zeros((0, len(BASE_COLUMNS) + n_nodes))
    rows = []
    bits = np.zeros(n_nodes)
    b0 = record.battery_trace[0]
    p0 = record.positions[0]
    rows.append([0, 0.0, p0.x, p0.y, p0.z, 0.0, 0.0, 0.0, 0.0, b0.voltage_V, b0.remaining_time_s, 0, *bits])
    for k, slot in enumerate(record.slots, start=1):
        p = record.positions[k]
        b = record.battery_trace[k]
        v = slot.velocity
        bits = bits + np.asarray(slot.per_node_bits, dtype=float)
        rows.append(
            [
                k,
                k * record.delta_t,
                p.x,
                p.y,
                p.z,
                v.speed,
                v.elevation,
                v.azimuth,
                slot.power,
                b.voltage_V,
                b.remaining_time_s,
                int(slot.forced),
                *bits,
            ]
        )
    return np.array(rows, dtype=float)


def export_trajectory(record: EpisodeRecord, n_nodes: int, path) -> Path:
    path = Path(path)
    rows = trajectory_rows(record, n_nodes)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(trajectory_header(n_nodes))
            for row in rows:
                # integers stay integral; floats use repr for a lossless round trip
                w.writerow([int(v) if j in (0, 11) else repr(float(v)) for j, v in enumerate(row)])
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
    return path


@dataclass
class TrajectoryTable:
    columns: list
    rows: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def read_trajectory(path) -> TrajectoryTable:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = [[float(v) for v in row] for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read trajectory {path}: {exc}") from exc
    rows = np.array(data, dtype=float).reshape(len(data), len(header))
    return TrajectoryTable(header, rows)


@dataclass(frozen=True)
class MetricsRecord:
    episode: int
    phase: str
    fee: float  # Mbit/J
    fi: float
    ee: float  # Mbit/J
    airtime: float
    steps: int
    seed: int
    scenario_hash: str

    def __post_init__(self) -> None:
        if self.phase not in ("train", "eval", "test"):
            raise ValueError(f"bad phase {self.phase!r}")
        if not 0.0 <= self.fi <= 1.0 + 1e-12:
            raise ValueError(f"fairness index {self.fi} outside [0, 1]")
        if self.airtime < 0:
            raise ValueError("negative air-time")


def export_metrics(records: Iterable[MetricsRecord], path, append: bool = False) -> Path:
    path = Path(path)
    try:
        with open(path, "a" if append else "w") as fh:
            for r in records:
                fh.write(json.dumps(asdict(r)) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc
    return path


def read_metrics(path) -> list[MetricsRecord]:
    with open(path) as fh:
        return [MetricsRecord(**json.loads(line)) for line in fh if line.strip()]
