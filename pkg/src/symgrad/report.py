"""Structured experiment records shared by the probes and the command line."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: Any = None
    tolerance: float | None = None
    margin: float | None = None
    inputs: dict = field(default_factory=dict)
    asserted: bool = True


@dataclass
class ExperimentReport:
    config: dict
    checks: list[CheckResult] = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def to_json_dict(self) -> dict:
        return {"config": _plain(self.config),
                "checks": [_plain(asdict(c)) for c in self.checks],
                "timing": _plain(self.timing)}


def _plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v:
            return "nan"
        if v in (float("inf"), float("-inf")):
            return "inf" if v > 0 else "-inf"
        return v
    return obj
