"""Per-iteration solver traces and their JSON-lines serialization.

Iteration records carry ``iter, obj, res, kappa, t``. AdaDROPS additionally
appends one record per outer round with ``round, kappa, added_groups, option``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DivergenceError


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def record(self, it, obj, res, kappa):
        obj = float(obj)
        if not math.isfinite(obj):
            raise DivergenceError(f"objective became {obj} at iteration {it}")
        self.records.append(
            {
                "iter": int(it),
                "obj": obj,
                "res": float(res),
                "kappa": int(kappa),
                "t": time.perf_counter() - self._t0,
            }
        )

    def add_round(self, rnd, kappa, added_groups, option, **extra):
        rec = {
            "round": int(rnd),
            "kappa": int(kappa),
            "added_groups": [int(g) + 1 for g in added_groups],
            "option": option,
        }
        rec.update(extra)
        self.rounds.append(rec)

    def extend(self, other: "SolverTrace", iter_offset=0, time_offset=0.0):
        for rec in other.records:
            rec = dict(rec)
            rec["iter"] += iter_offset
            rec["t"] += time_offset
            self.records.append(rec)

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0

    @property
    def last(self):
        return self.records[-1] if self.records else None

    def column(self, key):
        return [rec[key] for rec in self.records]

    def __len__(self):
        return len(self.records)

    def to_jsonl(self, path) -> None:
        with Path(path).open("w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec) + "\n")
            for rec in self.rounds:
                fh.write(json.dumps(rec) + "\n")


def read_jsonl(path):
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]
