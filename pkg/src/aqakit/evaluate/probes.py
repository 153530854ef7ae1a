"""Ordering and counting probes over free-text answers.

The extraction rules are reconstructions (the originals are unpublished) and
are passed in explicitly wherever a different pattern set is needed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .providers import EmbeddingProvider, cosine

__all__ = [
    "DEFAULT_ORDER_PATTERNS",
    "ProbeReport",
    "extract_first_sound",
    "order_probe",
    "order_accuracy",
    "parse_count",
    "counting_probe",
    "pearson",
]

DEFAULT_ORDER_PATTERNS = (
    r"(?:the\s+)?([\w\s,&-]+?)\s+(?:sounds?\s+)?(?:starts?|begins?)"
    r"(?:\s+and\s+ends?)?\s+first",
    r"first\s+sound\s+is\s+(?:the\s+)?([\w\s,&-]+?)(?:[.,;!?]|$)",
    r"(?:the\s+)?([\w\s,&-]+?)\s+(?:comes?|came)\s+first",
    r"(?:the\s+)?([\w\s,&-]+?)\s+is\s+(?:the\s+)?first",
)

_ARTICLE_RE = re.compile(r"^(?:the|a|an)\s+", re.IGNORECASE)


def extract_first_sound(text: str,
                        patterns: tuple[str, ...] = DEFAULT_ORDER_PATTERNS
                        ) -> str | None:
    """The clause naming the first-starting sound, or None when absent."""
    for pat in patterns:
        m = re.search(pat, text, re.IGNORECASE)
        if m:
            clause = _ARTICLE_RE.sub("", m.group(1).strip())
            if clause:
                return clause
    return None


def order_probe(answer_text: str, first_label: str, second_label: str,
                provider: EmbeddingProvider,
                patterns: tuple[str, ...] = DEFAULT_ORDER_PATTERNS
                ) -> bool | None:
    """True/False when the answer names an order; None when it doesn't.

    The extracted clause is assigned to whichever label embeds closer by
    cosine; ties resolve to first_label, matching the lowest-index tie-break
    used for classification.
    """
    clause = extract_first_sound(answer_text, patterns)
    if clause is None:
        return None
    e = provider.embed(clause)
    if np.linalg.norm(e) == 0.0:
        return None
    sims = []
    for label in (first_label, second_label):
        lv = provider.embed(label)
        if np.linalg.norm(lv) == 0.0:
            raise ValueError(f"label {label!r} embeds to a zero vector")
        sims.append(cosine(e, lv))
    return sims[0] >= sims[1]


def order_accuracy(results: list) -> tuple[float, int, int]:
    """(accuracy over followed cases, n_followed, n_excluded)."""
    followed = [r for r in results if r is not None]
    if not followed:
        raise ValueError("no order answer followed the instruction")
    return (sum(followed) / len(followed), len(followed),
            len(results) - len(followed))


_NUMBER_WORDS = {w: i + 1 for i, w in enumerate(
    ["one", "two", "three", "four", "five",
     "six", "seven", "eight", "nine", "ten"])}

_COUNT_RE = re.compile(
    r"\b(\d+|" + "|".join(_NUMBER_WORDS) + r")\b", re.IGNORECASE)


def parse_count(text: str) -> int | None:
    """First integer or number word (one..ten) in the text."""
    m = _COUNT_RE.search(text)
    if m is None:
        return None
    token = m.group(1).lower()
    return int(token) if token.isdigit() else _NUMBER_WORDS[token]


@dataclass
class ProbeReport:
    order_accuracy: float | None = None
    pearson_r: float | None = None
    double_single_ratio: float | None = None
    excluded: tuple[int, ...] = ()
    n_used: int = 0


def counting_probe(answers: list[str], truths: list[int]) -> ProbeReport:
    """Pearson of parsed counts against truths, plus the 2-clip/1-clip ratio.

    Unparseable answers are excluded and their indices reported.
    """
    if len(answers) != len(truths):
        raise ValueError("answers and truths differ in length")
    if len(answers) < 3:
        raise ValueError("counting probe needs at least 3 samples")
    parsed = []
    kept_truths = []
    excluded = []
    for i, (a, t) in enumerate(zip(answers, truths)):
        c = parse_count(a)
        if c is None:
            excluded.append(i)
        else:
            parsed.append(c)
            kept_truths.append(t)
    if len(parsed) < 2:
        raise ValueError("fewer than 2 parseable answers")
    r = pearson(kept_truths, parsed)
    doubles = [c for c, t in zip(parsed, kept_truths) if t == 2]
    singles = [c for c, t in zip(parsed, kept_truths) if t == 1]
    ratio = None
    if doubles and singles and sum(singles) > 0:
        ratio = (sum(doubles) / len(doubles)) / (sum(singles) / len(singles))
    return ProbeReport(pearson_r=r, double_single_ratio=ratio,
                       excluded=tuple(excluded), n_used=len(parsed))


def pearson(x: list, y: list) -> float:
    """Sample Pearson correlation; zero variance is rejected."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("pearson needs two equal-length 1-d sequences")
    if xa.size < 2:
        raise ValueError("pearson needs at least 2 points")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    vx = float(np.dot(xc, xc))
    vy = float(np.dot(yc, yc))
    if vx == 0.0 or vy == 0.0:
        raise ValueError("pearson undefined under zero variance")
    return float(np.dot(xc, yc) / np.sqrt(vx * vy))
