"""The four-stage training curriculum: what is trainable, which task kinds
are in play, and how many samples each stage sees.

Stage 1 warms up only the audio projection on the most objective tasks;
later stages unlock every non-LM parameter and progressively more open
task mixes. The full-scale sample budgets are kept as the documented
preset; scale_curriculum shrinks them for desk-size runs.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

TRAINABLE_SETS = ("projection_only", "all_non_lm")
TASK_FILTERS = ("clf_and_desc", "all_closed", "all")

# openness rank; later stages must not move left
_OPENNESS = {name: rank for rank, name in enumerate(TASK_FILTERS)}


@dataclass(frozen=True)
class StageConfig:
    stage: int
    trainable: str
    tasks: str
    n_samples: int
    lr: float
    epochs: int

    def __post_init__(self) -> None:
        if self.stage < 1:
            raise ValueError(f"stage must be >= 1, got {self.stage}")
        if self.trainable not in TRAINABLE_SETS:
            raise ValueError(f"unknown trainable set {self.trainable!r}")
        if self.tasks not in TASK_FILTERS:
            raise ValueError(f"unknown task filter {self.tasks!r}")
        if self.stage == 1 and self.trainable != "projection_only":
            raise ValueError("stage 1 trains the projection only")
        if self.stage > 1 and self.trainable != "all_non_lm":
            raise ValueError(f"stage {self.stage} must train all_non_lm")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def default_curriculum() -> list[StageConfig]:
    return [
        StageConfig(1, "projection_only", "clf_and_desc", 1_200_000, 1e-3, 2),
        StageConfig(2, "all_non_lm", "clf_and_desc", 1_200_000, 1e-4, 2),
        StageConfig(3, "all_non_lm", "all_closed", 1_900_000, 1e-4, 1),
        StageConfig(4, "all_non_lm", "all", 5_600_000, 1e-4, 1),
    ]


def scale_curriculum(stages: list[StageConfig],
                     factor: float) -> list[StageConfig]:
    """Shrink sample budgets by factor (floored, at least 1 each); every
    other field is untouched."""
    if not 0 < factor <= 1:
        raise ValueError(f"factor must be in (0, 1], got {factor}")
    return [replace(s, n_samples=max(1, math.floor(s.n_samples * factor)))
            for s in stages]


def validate_curriculum(stages: list[StageConfig]) -> None:
    if not stages:
        raise ValueError("empty curriculum")
    for i, s in enumerate(stages):
        if s.stage != i + 1:
            raise ValueError(
                f"stages must be numbered 1..{len(stages)} in order, "
                f"position {i} holds stage {s.stage}")
    for prev, cur in zip(stages, stages[1:]):
        if _OPENNESS[cur.tasks] < _OPENNESS[prev.tasks]:
            raise ValueError(
                f"task openness decreases from stage {prev.stage} "
                f"({prev.tasks}) to stage {cur.stage} ({cur.tasks})")


def filter_tasks(rows: list, s: StageConfig) -> list:
    """Rows whose task kind the stage trains on. Rows need .task and
    .closed attributes (QAPair or anything wrapping one)."""
    if s.tasks == "clf_and_desc":
        kept = [r for r in rows
                if r.task in ("classification", "acoustic_features")]
    elif s.tasks == "all_closed":
        kept = [r for r in rows if r.closed]
    else:
        kept = list(rows)
    if not kept:
        present = sorted({r.task for r in rows})
        raise ValueError(
            f"stage {s.stage} filter {s.tasks!r} matched nothing "
            f"(manifest has {len(rows)} rows with tasks {present})")
    return kept


# -- curriculum files ---------------------------------------------------------

_SECTION = re.compile(r"^stage(\d+)$")


def write_curriculum(path: str | Path, stages: list[StageConfig]) -> None:
    parser = configparser.ConfigParser()
    for s in stages:
        parser[f"stage{s.stage}"] = {
            "trainable": s.trainable,
            "tasks": s.tasks,
            "n_samples": str(s.n_samples),
            "lr": repr(s.lr),
            "epochs": str(s.epochs),
        }
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def read_curriculum(path: str | Path) -> list[StageConfig]:
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ValueError(f"cannot read curriculum file {path}")
    numbered = []
    for section in parser.sections():
        match = _SECTION.match(section)
        if not match:
            raise ValueError(f"{path}: unexpected section [{section}]")
        numbered.append(int(match.group(1)))
    stages = []
    for n in sorted(numbered):
        sec = parser[f"stage{n}"]
        try:
            stages.append(StageConfig(
                stage=n,
                trainable=sec["trainable"],
                tasks=sec["tasks"],
                n_samples=int(sec["n_samples"]),
                lr=float(sec["lr"]),
                epochs=int(sec["epochs"]),
            ))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}: bad [stage{n}]: {exc}") from exc
    validate_curriculum(stages)
    return stages
