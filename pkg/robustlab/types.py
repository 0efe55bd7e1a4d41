"""Shared type definitions for robustlab."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Literal, TypeAlias

import numpy as np
import numpy.typing as npt

FloatArray: TypeAlias = npt.NDArray[np.float64]


class Regime(str, Enum):
    """Learning regimes evaluated by the lab.

    The declaration order is the canonical sort order of result rows.
    """

    SGD_LIMIT = "SGD_LIMIT"
    RF = "RF"
    RF_RIDGE = "RF_RIDGE"
    RFL = "RFL"
    INIT = "INIT"
    NT = "NT"
    NTL = "NTL"

    @property
    def order(self) -> int:
        """Position in the canonical row ordering."""
        return list(Regime).index(self)

    @property
    def uses_init(self) -> bool:
        """Whether the regime draws a random output layer a⁰."""
        return self in (Regime.RFL, Regime.INIT, Regime.NTL)

    @property
    def uses_ridge(self) -> bool:
        """Whether the regime takes a ridge parameter λ."""
        return self in (Regime.RF, Regime.RF_RIDGE, Regime.RFL)

    @property
    def quadratic_only(self) -> bool:
        """NT-family regimes are only defined for σ(t) = t²−1."""
        return self in (Regime.NT, Regime.NTL)

    @classmethod
    def parse(cls, tag: str) -> Regime:
        """Parse a config tag, case-insensitive ("rf_ridge", "sgd-limit")."""
        normalized = tag.strip().upper().replace("-", "_")
        try:
            return cls(normalized)
        except ValueError as exc:
            valid = ", ".join(r.value for r in cls)
            raise ValueError(f"Unknown regime '{tag}'. Valid options: {valid}") from exc


@dataclass
class CommandResult:
    """Result of a CLI command execution."""

    command: str
    timestamp: datetime
    duration_ms: float
    status: Literal["success", "failure", "warning"]
    summary: dict[str, Any] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """Export to a JSON-compatible dictionary."""
        return {
            "command": self.command,
            "timestamp": self.timestamp.isoformat(),
            "duration_ms": self.duration_ms,
            "status": self.status,
            "summary": self.summary,
            "errors": self.errors,
            "warnings": self.warnings,
        }
