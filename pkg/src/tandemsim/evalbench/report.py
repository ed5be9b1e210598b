"""Report containers and their CSV/JSON serializations.

Reports are lossless: aggregates are always recomputable from the
per-episode rows, and serialization carries no timestamps so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

REPORT_SCHEMA = "report/1"
BENCH_SCHEMA = "bench/1"


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def _std(xs):
    xs = [x for x in xs if x is not None]
    if len(xs) < 2:
        return 0.0 if xs else None
    m = sum(xs) / len(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def _stderr(xs):
    s = _std(xs)
    return None if s is None else s / math.sqrt(len(xs))


@dataclass
class MetricsReport:
    task: str
    config: dict
    rows: list = field(default_factory=list)  # per-episode dicts incl. seed/episode_id
    partner_ids: list = field(default_factory=list)  # ZSC mode ordering

    def aggregate(self, keys=None) -> dict:
        """Mean +/- std across seeds: per-seed means first, then across seeds."""
        if not self.rows:
            return {}
        if keys is None:
            keys = [k for k, v in self.rows[0].items()
                    if isinstance(v, (int, float)) and k not in ("seed",)]
        seeds = sorted({r["seed"] for r in self.rows})
        out = {}
        for k in keys:
            per_seed = []
            for s in seeds:
                vals = [r.get(k) for r in self.rows if r["seed"] == s]
                m = _mean(vals)
                if m is not None:
                    per_seed.append(m)
            out[k] = {"mean": _mean(per_seed), "std": _std(per_seed) or 0.0}
        return out

    def partner_matrix(self, keys=("SR", "RE", "CR", "RC")) -> dict:
        """ZSC layout: one column per partner plus a final average column."""
        matrix = {}
        for pid in self.partner_ids:
            sub = [r for r in self.rows if r.get("partner") == pid]
            matrix[pid] = {k: _mean([r.get(k) for r in sub]) for k in keys}
        matrix["average"] = {
            k: _mean([matrix[p][k] for p in self.partner_ids if matrix[p][k] is not None])
            for k in keys
        }
        return matrix

    def to_dict(self) -> dict:
        d = {
            "schema": REPORT_SCHEMA,
            "task": self.task,
            "config": self.config,
            "rows": self.rows,
            "aggregates": self.aggregate(),
        }
        if self.partner_ids:
            d["partner_ids"] = self.partner_ids
            d["partner_matrix"] = self.partner_matrix()
        return d

    def save_json(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)
            f.write("\n")

    def save_csv(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        if not self.rows:
            Path(path).write_text("")
            return
        cols = sorted({k for r in self.rows for k in r})
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=cols)
            w.writeheader()
            for r in self.rows:
                w.writerow(r)

    @staticmethod
    def load_json(path) -> "MetricsReport":
        with open(path) as f:
            d = json.load(f)
        rep = MetricsReport(task=d["task"], config=d["config"], rows=d["rows"],
                            partner_ids=d.get("partner_ids", []))
        return rep


@dataclass
class BenchCell:
    scene_class: str
    n_objects: int
    agents: str          # "robot" | "humanoid" | "robot-robot" | "robot-humanoid"
    n_envs: int
    runs: list = field(default_factory=list)  # steps/sec per run

    @property
    def sps_mean(self):
        return _mean(self.runs)

    @property
    def sps_stderr(self):
        return _stderr(self.runs)

    def to_dict(self) -> dict:
        return {
            "scene_class": self.scene_class,
            "n_objects": self.n_objects,
            "agents": self.agents,
            "n_envs": self.n_envs,
            "runs": self.runs,
            "sps_mean": self.sps_mean,
            "sps_stderr": self.sps_stderr,
        }


@dataclass
class BenchReport:
    config: dict
    cells: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"schema": BENCH_SCHEMA, "config": self.config,
                "cells": [c.to_dict() for c in self.cells]}

    def save_json(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)
            f.write("\n")

    def save_csv(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["scene_class", "n_objects", "agents", "n_envs",
                        "sps_mean", "sps_stderr", "runs"])
            for c in self.cells:
                w.writerow([c.scene_class, c.n_objects, c.agents, c.n_envs,
                            c.sps_mean, c.sps_stderr, len(c.runs)])

    def find(self, **kw) -> BenchCell | None:
        for c in self.cells:
            if all(getattr(c, k) == v for k, v in kw.items()):
                return c
        return None
