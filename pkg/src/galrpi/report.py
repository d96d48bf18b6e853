"""Run reports and CSV/JSON writers for the command-line driver."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


def fmt(value):
    """Round-trip decimal text: 17 significant digits for floats."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    threshold: float

    def to_json(self):
        r = self.residual
        return {"name": self.name, "passed": bool(self.passed),
                "residual": r if math.isfinite(r) else str(r), "threshold": self.threshold}


@dataclass
class RunReport:
    command: str
    config_digest: str
    seed: int | None = None
    wall_time: float = 0.0
    checks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def check(self, name, residual, threshold):
        """Record ``residual < threshold`` under ``name``; names must be unique."""
        if any(c.name == name for c in self.checks):
            raise ValueError(f"check {name!r} recorded twice")
        residual = float(residual)
        self.checks.append(Check(name, bool(residual < threshold), residual, float(threshold)))
        return self.checks[-1]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def _stable(self):
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "checks": [c.to_json() for c in self.checks],
            "outputs": list(self.outputs),
            "info": self.info,
        }

    @property
    def digest(self):
        """Hash of everything except wall time."""
        text = json.dumps(self._stable(), sort_keys=True, separators=(",", ":"), default=_jsonable)
        return hashlib.sha256(text.encode()).hexdigest()

    def to_json(self):
        out = self._stable()
        out.update(wall_time=self.wall_time, passed=self.passed, digest=self.digest)
        return out

    def summary(self):
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'} ({self.wall_time:.2f} s)"]
        for c in self.checks:
            lines.append(f"  {'pass' if c.passed else 'FAIL'}  {c.name}: {c.residual:.3e} (< {c.threshold:g})")
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


class OutputDir:
    """Writes files under ``root`` and records their relative names on ``report``."""

    def __init__(self, root, report):
        self.root = root
        self.report = report
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        self.report.outputs.append(name)
        return os.path.join(self.root, name)

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])

    def matrix(self, name, mat):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in np.asarray(mat):
                w.writerow([fmt(v) for v in row])

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def write_report(self):
        # the report lists itself, so record the name before hashing
        name = "report.json"
        self.report.outputs.append(name)
        with open(os.path.join(self.root, name), "w") as fh:
            json.dump(self.report.to_json(), fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
