"""Result rows, the fixed CSV layout and the JSON Lines failure sidecar."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

import jsonlines

from robustlab.exceptions import ConfigurationError
from robustlab.types import Regime

CSV_HEADER: tuple[str, ...] = (
    "regime",
    "d",
    "m",
    "rho",
    "lambda",
    "ensemble_seed",
    "init_seed",
    "egen_exact",
    "erob_exact",
    "egen_mc",
    "egen_mc_se",
    "erob_mc",
    "erob_mc_se",
    "egen_theory",
    "erob_theory",
    "wall_time_ms",
)
NA = "NA"

# Python attribute -> CSV column where they differ
_COLUMN_NAMES = {"ridge": "lambda"}


@dataclass(frozen=True)
class ResultRow:
    """One (regime, m, ridge, ensemble seed, init seed) evaluation.

    Missing values are None and written as NA. ``error`` is not a CSV column;
    failed rows go to the JSON Lines sidecar as well.
    """

    regime: Regime
    d: int
    m: int
    rho: float
    ridge: float | None
    ensemble_seed: int
    init_seed: int | None
    egen_exact: float | None = None
    erob_exact: float | None = None
    egen_mc: float | None = None
    egen_mc_se: float | None = None
    erob_mc: float | None = None
    erob_mc_se: float | None = None
    egen_theory: float | None = None
    erob_theory: float | None = None
    wall_time_ms: float = 0.0
    error: str | None = None
    experiment: str = ""

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def sort_key(self) -> tuple[Any, ...]:
        """Canonical order: regime, m, ridge, ensemble seed, init seed."""
        return (
            self.regime.order,
            self.m,
            -1.0 if self.ridge is None else self.ridge,
            self.ensemble_seed,
            -1 if self.init_seed is None else self.init_seed,
        )

    def csv_record(self) -> dict[str, str]:
        record = {}
        for item in fields(self):
            column = _COLUMN_NAMES.get(item.name, item.name)
            if column in CSV_HEADER:
                record[column] = format_value(getattr(self, item.name))
        return record

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["regime"] = self.regime.value
        return data


def format_value(value: Any) -> str:
    """17 significant digits for floats, NA for missing or non-finite values."""
    if value is None:
        return NA
    if isinstance(value, Regime):
        return value.value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g") if math.isfinite(value) else NA
    return str(value)


def _parse_float(text: str) -> float | None:
    return None if text == NA else float(text)


def _parse_int(text: str) -> int | None:
    return None if text == NA else int(text)


def parse_record(record: dict[str, str]) -> ResultRow:
    """Inverse of :meth:`ResultRow.csv_record`."""
    missing = set(CSV_HEADER) - set(record)
    if missing:
        raise ConfigurationError("CSV is missing columns", columns=sorted(missing))
    return ResultRow(
        regime=Regime.parse(record["regime"]),
        d=int(record["d"]),
        m=int(record["m"]),
        rho=float(record["rho"]),
        ridge=_parse_float(record["lambda"]),
        ensemble_seed=int(record["ensemble_seed"]),
        init_seed=_parse_int(record["init_seed"]),
        egen_exact=_parse_float(record["egen_exact"]),
        erob_exact=_parse_float(record["erob_exact"]),
        egen_mc=_parse_float(record["egen_mc"]),
        egen_mc_se=_parse_float(record["egen_mc_se"]),
        erob_mc=_parse_float(record["erob_mc"]),
        erob_mc_se=_parse_float(record["erob_mc_se"]),
        egen_theory=_parse_float(record["egen_theory"]),
        erob_theory=_parse_float(record["erob_theory"]),
        wall_time_ms=_parse_float(record["wall_time_ms"]) or 0.0,
    )


def sort_rows(rows: Iterable[ResultRow]) -> list[ResultRow]:
    return sorted(rows, key=lambda row: row.sort_key)


def write_csv(rows: Sequence[ResultRow], path: Path) -> Path:
    """Write rows under the fixed header in canonical order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(CSV_HEADER), lineterminator="\n")
        writer.writeheader()
        for row in sort_rows(rows):
            writer.writerow(row.csv_record())
    return path


def read_csv(path: Path) -> list[ResultRow]:
    """Parse a results CSV; rows are tagged with the experiment name from the file stem."""
    if not path.exists():
        raise ConfigurationError(f"Results not found: {path}", key="csv")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
            raise ConfigurationError("unexpected CSV header", header=reader.fieldnames)
        experiment = path.stem.rsplit("_", 1)[0]
        return [replace(parse_record(record), experiment=experiment) for record in reader]


def write_failures(rows: Sequence[ResultRow], path: Path) -> Path | None:
    """Write failed rows to a JSON Lines sidecar; None when nothing failed."""
    failed = [row for row in sort_rows(rows) if row.failed]
    if not failed:
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    with jsonlines.open(path, mode="w") as writer:
        for row in failed:
            writer.write(row.to_dict())
    return path
