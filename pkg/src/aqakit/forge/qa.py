"""The dataset row: one (audio, question, answer) tuple plus its task kind,
and the JSON-lines manifest format every tool in the pipeline shares."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

TASK_KINDS = ("classification", "acoustic_features", "caption", "temporal",
              "open_ended")
CLOSED_TASKS = ("classification", "acoustic_features", "caption", "temporal")

# stable field order for manifest rows
_FIELDS = ("audio_id", "question", "answer", "task", "closed", "unanswerable")


@dataclass
class QAPair:
    audio_id: str
    question: str
    answer: str
    task: str
    closed: bool
    unanswerable: bool = False

    def __post_init__(self) -> None:
        if self.task not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.task!r}")
        if not self.question or not self.answer:
            raise ValueError("question and answer must be non-empty")
        if self.closed != (self.task != "open_ended"):
            raise ValueError("closed flag must mirror task != open_ended")


def qa_to_dict(p: QAPair) -> dict:
    return {f: getattr(p, f) for f in _FIELDS}


def qa_from_dict(d: dict) -> QAPair:
    return QAPair(audio_id=d["audio_id"], question=d["question"],
                  answer=d["answer"], task=d["task"], closed=d["closed"],
                  unanswerable=d.get("unanswerable", False))


def read_manifest(path: str | Path) -> list[QAPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                pairs.append(qa_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad manifest row: {exc}") from exc
    return pairs


def write_manifest(path: str | Path, pairs: list[QAPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps(qa_to_dict(p), ensure_ascii=False) + "\n")


def validate_manifest(path: str | Path) -> list[tuple[int, str]]:
    """Schema check for a manifest file; returns (line number, problem)
    tuples, empty when the file is clean."""
    problems: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                problems.append((line_no, f"not valid JSON: {exc.msg}"))
                continue
            if not isinstance(row, dict):
                problems.append((line_no, "row is not a JSON object"))
                continue
            missing = [f for f in _FIELDS[:5] if f not in row]
            if missing:
                problems.append((line_no, f"missing fields: {', '.join(missing)}"))
                continue
            try:
                qa_from_dict(row)
            except (KeyError, ValueError) as exc:
                problems.append((line_no, str(exc)))
    return problems
