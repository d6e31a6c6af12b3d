"""Check records and the JSON report shared by the CLI and the acceptance suite."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__

PASS, FAIL = "PASS", "FAIL"


def verdict(ok: bool) -> str:
    return PASS if ok else FAIL


@dataclass
class Check:
    name: str
    inputs: dict = field(default_factory=dict)
    analytic: Any = None
    empirical: Any = None
    se: Any = None
    verdict: str = PASS

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "analytic": self.analytic,
            "empirical": self.empirical,
            "se": self.se,
            "verdict": self.verdict,
        }


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class Report:
    command: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    extra: dict | None = None

    @property
    def passed(self) -> int:
        return sum(c.passed for c in self.checks)

    @property
    def failed(self) -> int:
        return len(self.checks) - self.passed

    def as_dict(self) -> dict:
        out = {
            "tool_version": __version__,
            "command": self.command,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "summary": {"passed": self.passed, "failed": self.failed},
        }
        if self.extra is not None:
            out["result"] = self.extra
        return jsonable(out)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, allow_nan=False) + "\n"

    def to_text(self) -> str:
        lines = [f"permstat {__version__} {self.command}"]
        for c in self.checks:
            lines.append(f"{c.verdict}  {c.name}  analytic={_short(c.analytic)}  "
                         f"empirical={_short(c.empirical)}  se={_short(c.se)}")
        if self.extra is not None:
            for k, v in jsonable(self.extra).items():
                lines.append(f"{k}: {_short(v)}")
        lines.append(f"passed {self.passed}, failed {self.failed}")
        return "\n".join(lines) + "\n"


def _short(v) -> str:
    v = jsonable(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list) and len(v) > 6:
        return json.dumps(v[:6])[:-1] + ", ...]"
    return json.dumps(v)
