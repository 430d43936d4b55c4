"""Experiment configuration and seeded random substreams."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

import numpy as np


@dataclass
class ExperimentConfig:
    recipe: str = "noop"
    manifold: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)  # lists keyed by lam, eps, p, R, k, mu, ...
    ascent: dict = field(default_factory=lambda: {"restarts": 1, "iterations": 60, "tol": 1e-9})
    grid: dict = field(default_factory=dict)
    seed: int = 0
    out: Optional[str] = None
    threads: int = 1
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def merged(self, **overrides) -> "ExperimentConfig":
        data = dataclasses.asdict(self)
        for key, val in overrides.items():
            if isinstance(val, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **val}
            else:
                data[key] = val
        return ExperimentConfig.from_dict(data)


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named consumer of the config seed."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(tag,)))


def run_sweep(fn: Callable[[Any], Any], points: Iterable[Any], threads: int = 1) -> list:
    """Evaluate ``fn`` over ``points``; results keep the input order whatever the pool size."""
    points = list(points)
    if threads <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))
