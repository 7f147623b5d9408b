"""Result records shared by the checking functions."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Report:
    """Outcome of one check.  ``status`` is ``pass``, ``fail`` or
    ``numeric-pass`` (symbolically undecided, numerically confirmed)."""

    check: str
    status: str
    residual: float = 0.0
    trials: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "numeric-pass")

    def to_json(self) -> dict:
        out = {"check": self.check, "status": self.status, "residual": self.residual, "trials": self.trials}
        if self.failures:
            out["failures"] = self.failures
        return out
