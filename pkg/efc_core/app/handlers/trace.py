"""
Трасса прогона: одна запись на шаг, сохранение и чтение CSV.

Вещественные значения пишутся через repr, поэтому CSV -> Trace -> CSV
воспроизводит файл байт в байт.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional

import numpy as np

from efc_core.app.models.errors import InputDomainError
from efc_core.app.models.vectors import N_CHANNELS

logger = logging.getLogger(__name__)

# префикс колонки CSV -> поле записи
VECTOR_COLUMNS = {
    "i": "currents",
    "v": "coil_voltages",
    "adc": "adc_codes",
    "c": "corrected",
    "u": "pid_outputs",
    "dac": "dac_codes",
    "a": "applied",
}
INT_VECTORS = {"adc_codes", "dac_codes"}

CSV_HEADER = (
    ["step", "t"]
    + [f"{prefix}{ch}" for prefix in VECTOR_COLUMNS for ch in range(N_CHANNELS)]
    + ["frames_lost", "ovf"]
)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    time: float
    currents: np.ndarray  # А
    coil_voltages: np.ndarray  # В, выход пояса до усилителя
    adc_codes: np.ndarray
    corrected: np.ndarray  # В, шкала АЦП
    pid_outputs: np.ndarray  # В, шкала ЦАП
    dac_codes: np.ndarray
    applied: np.ndarray  # В, на катушках
    frames_lost: int
    overflow: bool

    def to_row(self) -> List[str]:
        row = [str(self.step), repr(float(self.time))]
        for attr in VECTOR_COLUMNS.values():
            values = getattr(self, attr)
            if attr in INT_VECTORS:
                row.extend(str(int(x)) for x in values)
            else:
                row.extend(repr(float(x)) for x in values)
        row.extend([str(self.frames_lost), str(int(self.overflow))])
        return row

    @classmethod
    def from_row(cls, row: List[str]) -> "TraceRecord":
        if len(row) != len(CSV_HEADER):
            raise InputDomainError(f"trace row has {len(row)} fields, expected {len(CSV_HEADER)}")
        vectors = {}
        pos = 2
        for attr in VECTOR_COLUMNS.values():
            chunk = row[pos:pos + N_CHANNELS]
            if attr in INT_VECTORS:
                vectors[attr] = np.array([int(x) for x in chunk], dtype=np.int64)
            else:
                vectors[attr] = np.array([float(x) for x in chunk], dtype=np.float64)
            pos += N_CHANNELS
        return cls(
            step=int(row[0]),
            time=float(row[1]),
            frames_lost=int(row[pos]),
            overflow=bool(int(row[pos + 1])),
            **vectors,
        )


@dataclass
class Trace:
    records: List[TraceRecord] = field(default_factory=list)
    mode: str = "fixed"
    # в режиме both: трасса плавающего тракта рядом с целочисленной
    companion: Optional["Trace"] = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __getitem__(self, idx: int) -> TraceRecord:
        return self.records[idx]

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def matrix(self, attr: str) -> np.ndarray:
        """Поле записи по всем шагам: (n_steps, 16) для векторов, (n_steps,) для скаляров."""
        if not self.records:
            return np.empty((0, N_CHANNELS))
        return np.array([getattr(r, attr) for r in self.records])

    def column(self, name: str) -> np.ndarray:
        """Колонка по имени из заголовка CSV, например "i3" или "frames_lost"."""
        if name not in CSV_HEADER:
            raise InputDomainError(f"unknown trace column {name!r}")
        if name == "step":
            return self.matrix("step")
        if name == "t":
            return self.matrix("time")
        if name == "ovf":
            return self.matrix("overflow").astype(np.int64)
        if name == "frames_lost":
            return self.matrix("frames_lost")
        prefix = name.rstrip("0123456789")
        return self.matrix(VECTOR_COLUMNS[prefix])[:, int(name[len(prefix):])]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for record in self.records:
                writer.writerow(record.to_row())
        logger.info("[LOOP] Trace with %d records written to %s", len(self.records), path)
        return path

    @classmethod
    def read_csv(cls, path: str | Path) -> "Trace":
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise InputDomainError(f"{path}: not a trace CSV (unexpected header)")
            return cls(records=[TraceRecord.from_row(row) for row in reader if row])
