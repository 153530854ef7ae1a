"""Class-balanced audio selection.

Every class k gets weight 1/count_k, every audio the sum of its class
weights, and the top-n audios by weight are kept. Weights are exact
rationals so ties are decided by the tie-break rule, never by float fuzz.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass
class SamplerWeights:
    class_weights: dict[str, Fraction]
    audio_weights: dict[str, Fraction]


def compute_sampler_weights(label_counts: dict[str, int],
                            labels_of: dict[str, list[str]],
                            ) -> SamplerWeights:
    for cls, count in label_counts.items():
        if count < 1:
            raise ValueError(f"class {cls!r} has non-positive count {count}")
    class_weights = {cls: Fraction(1, count)
                     for cls, count in label_counts.items()}
    audio_weights: dict[str, Fraction] = {}
    for audio_id, classes in labels_of.items():
        total = Fraction(0)
        for cls in classes:
            if cls not in class_weights:
                raise ValueError(
                    f"audio {audio_id!r} has unknown class {cls!r}")
            total += class_weights[cls]
        audio_weights[audio_id] = total
    return SamplerWeights(class_weights, audio_weights)


def sample_audioset(label_counts: dict[str, int],
                    labels_of: dict[str, list[str]], n: int) -> list[str]:
    """The n audio ids with the largest weights, ties by ascending id."""
    if n > len(labels_of):
        raise ValueError(f"asked for {n} audios, only {len(labels_of)} given")
    weights = compute_sampler_weights(label_counts, labels_of)
    ranked = sorted(weights.audio_weights.items(),
                    key=lambda item: (-item[1], item[0]))
    return [audio_id for audio_id, _ in ranked[:n]]
