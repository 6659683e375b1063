"""Experiment configuration and run manifests.

A config names the grid to sweep: methods x models x voter counts x candidate
counts x info types, plus labeling, net sizes, training settings, and seeds.
Defaults mirror the committee-election setup the workbench targets: n in
{5, 6, 10, 11, 20, 21}, m in {3, 4, 5, 6}. Config files are YAML; every field
can be overridden from the CLI, and the fully resolved config is echoed into
each run's manifest so any run can be replayed bit-exactly.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import __version__
from .information import InfoType
from .neural import TrainConfig
from .oracle import Labeling
from .samplers import ProbModel
from .voting_methods import MethodId

OUTPUT_ROOT_ENV = "MANIPBENCH_OUT"

DEFAULT_VOTERS = (5, 6, 10, 11, 20, 21)
DEFAULT_CANDIDATES = (3, 4, 5, 6)

# 26 hidden-layer configurations: one hidden layer from 4 to 2048 units, and
# two- and three-layer nets with uniform widths from 4 to 512.
DEFAULT_NET_GRID: tuple[tuple[int, ...], ...] = tuple(
    [(w,) for w in (4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048)]
    + [(w, w) for w in (4, 8, 16, 32, 64, 128, 256, 512)]
    + [(w, w, w) for w in (4, 8, 16, 32, 64, 128, 256, 512)]
)

DEFAULT_TRAIN_SIZE = 131_072


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def parse_hidden(text: str) -> tuple[int, ...]:
    """'128,128' -> (128, 128); 'x' separators also accepted."""
    parts = text.replace("x", ",").split(",")
    return tuple(int(p) for p in parts if p.strip())


def hidden_label(hidden: tuple[int, ...]) -> str:
    return "x".join(str(w) for w in hidden)


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[MethodId, ...] = tuple(MethodId)
    models: tuple[ProbModel, ...] = (
        ProbModel.uniform(),
        ProbModel.spatial2d(),
        ProbModel.mallows(),
    )
    voters: tuple[int, ...] = DEFAULT_VOTERS
    candidates: tuple[int, ...] = DEFAULT_CANDIDATES
    infos: tuple[InfoType, ...] = tuple(InfoType)
    labeling: Labeling = Labeling.OPTIMIZING
    net_grid: tuple[tuple[int, ...], ...] = DEFAULT_NET_GRID
    train: TrainConfig = TrainConfig()
    train_size: int = DEFAULT_TRAIN_SIZE
    normalize_features: bool = False
    seeds: tuple[int, ...] = (0,)
    out: Path = field(default_factory=default_output_root)
    workers: int = 1
    eval_batch: int = 512
    sample_cap: int = 1_000_000

    def __post_init__(self):
        if any(m > 6 or m < 2 for m in self.candidates):
            raise ValueError("candidate counts must be between 2 and 6")
        object.__setattr__(self, "out", Path(self.out))

    def to_dict(self) -> dict[str, Any]:
        return {
            "methods": [int(v) for v in self.methods],
            "models": [m.label for m in self.models],
            "voters": list(self.voters),
            "candidates": list(self.candidates),
            "infos": [int(v) for v in self.infos],
            "labeling": self.labeling.label,
            "net_grid": [list(h) for h in self.net_grid],
            "train": dataclasses.asdict(self.train),
            "train_size": self.train_size,
            "normalize_features": self.normalize_features,
            "seeds": list(self.seeds),
            "out": str(self.out),
            "workers": self.workers,
            "eval_batch": self.eval_batch,
            "sample_cap": self.sample_cap,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        kwargs: dict[str, Any] = {}
        if "methods" in raw:
            kwargs["methods"] = tuple(MethodId.parse(str(v)) for v in raw["methods"])
        if "models" in raw:
            kwargs["models"] = tuple(ProbModel.parse(str(v)) for v in raw["models"])
        if "voters" in raw:
            kwargs["voters"] = tuple(int(v) for v in raw["voters"])
        if "candidates" in raw:
            kwargs["candidates"] = tuple(int(v) for v in raw["candidates"])
        if "infos" in raw:
            kwargs["infos"] = tuple(InfoType.parse(str(v)) for v in raw["infos"])
        if "labeling" in raw:
            kwargs["labeling"] = Labeling.parse(str(raw["labeling"]))
        if "net_grid" in raw:
            kwargs["net_grid"] = tuple(
                parse_hidden(h) if isinstance(h, str) else tuple(int(w) for w in h)
                for h in raw["net_grid"]
            )
        if "train" in raw:
            kwargs["train"] = TrainConfig(**raw["train"])
        for key in (
            "train_size",
            "normalize_features",
            "workers",
            "eval_batch",
            "sample_cap",
        ):
            if key in raw:
                kwargs[key] = raw[key]
        if "seeds" in raw:
            kwargs["seeds"] = tuple(int(s) for s in raw["seeds"])
        if "out" in raw:
            kwargs["out"] = Path(raw["out"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValueError(f"config root must be a mapping: {path}")
        return cls.from_dict(raw)


def manifest_dict(config: ExperimentConfig, command: str, run_seeds: dict[str, int]) -> dict:
    return {
        "tool": "manipbench",
        "version": __version__,
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "config": config.to_dict(),
        "run_seeds": run_seeds,
    }


def write_manifest(path: Path, manifest: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_manifest(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)
