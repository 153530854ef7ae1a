"""A tiny self-contained training corpus: eight "animal" sound classes,
each a pure tone with a little noise, labeled with single-event metas.

The point is trainability at desk scale, so everything is deliberately
easy: answers are three-letter class names, one event per clip, and each
class has its own tone frequency, feature string, and caption. Running
the closed-ended generators over one clip yields exactly five QA pairs
(classification, acoustic feature, caption, and two temporal questions),
so 8 classes x 5 clips x 5 pairs gives the standard 200-pair corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forge import (AudioMeta, QAPair, SoundEvent, gen_acoustic_feature_qa,
                    gen_caption_qa, gen_classification_qa, gen_temporal_qa,
                    write_manifest, write_meta_jsonl)
from .frontend import (PatchGrid, SAMPLE_RATE_HZ, Waveform, compute_fbank,
                       patchify, write_wav)
from .training.trainer import CorpusItem


@dataclass(frozen=True)
class DemoClass:
    label: str
    tone_hz: float
    feature: str
    caption: str


DEMO_CLASSES = (
    DemoClass("dog", 300.0, "low hum", "a dog barks twice"),
    DemoClass("cat", 500.0, "soft purr", "a cat purrs gently"),
    DemoClass("owl", 800.0, "deep hoot", "an owl hoots at night"),
    DemoClass("bee", 1200.0, "thin buzz", "a bee buzzes past"),
    DemoClass("fox", 1800.0, "sharp yip", "a fox yips in the dark"),
    DemoClass("jay", 2600.0, "clear chirp", "a jay chirps loudly"),
    DemoClass("ant", 3600.0, "faint tick", "an ant nest crackles"),
    DemoClass("ram", 5000.0, "gruff bleat", "a ram bleats once"),
)

CLIP_SECONDS = 2.0


def make_demo_wave(tone_hz: float, seed: int,
                   duration_s: float = CLIP_SECONDS) -> Waveform:
    n = int(round(duration_s * SAMPLE_RATE_HZ))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / SAMPLE_RATE_HZ
    phase = rng.uniform(0.0, 2.0 * np.pi)
    samples = 0.6 * np.sin(2.0 * np.pi * tone_hz * t + phase)
    samples += 0.02 * rng.standard_normal(n)
    return Waveform(np.clip(samples, -1.0, 1.0), SAMPLE_RATE_HZ)


def make_demo_meta(cls: DemoClass, clip_index: int) -> AudioMeta:
    return AudioMeta(
        audio_id=f"{cls.label}{clip_index:02d}",
        events=[SoundEvent(cls.label, cls.feature, 0.0, CLIP_SECONDS)],
        caption=cls.caption,
    )


def build_demo_corpus(clips_per_class: int = 5, seed: int = 0,
                      ) -> tuple[list[AudioMeta], dict[str, Waveform]]:
    metas = []
    waves = {}
    for c, cls in enumerate(DEMO_CLASSES):
        for k in range(clips_per_class):
            meta = make_demo_meta(cls, k)
            metas.append(meta)
            waves[meta.audio_id] = make_demo_wave(
                cls.tone_hz, seed=seed * 100_003 + c * 101 + k)
    return metas, waves


def demo_qa_manifest(metas: list[AudioMeta], seed: int = 0) -> list[QAPair]:
    """Five closed-ended pairs per clip via the regular generators."""
    pairs: list[QAPair] = []
    for i, meta in enumerate(metas):
        rng = np.random.default_rng([seed, i])
        pairs.append(gen_classification_qa(meta, None, rng))
        pairs.append(gen_acoustic_feature_qa(meta, rng))
        pairs.extend(gen_caption_qa(meta, rng))
        pairs.extend(gen_temporal_qa(meta, rng))
    return pairs


def patch_grids_for(waves: dict[str, Waveform]) -> dict[str, PatchGrid]:
    return {audio_id: patchify(compute_fbank(w))
            for audio_id, w in waves.items()}


def corpus_items(pairs: list[QAPair],
                 grids: dict[str, PatchGrid]) -> list[CorpusItem]:
    return [CorpusItem(pair=p, audio=grids[p.audio_id]) for p in pairs]


def make_demo_items(clips_per_class: int = 5, seed: int = 0,
                    ) -> list[CorpusItem]:
    """One call from corpus design to trainer-ready items."""
    metas, waves = build_demo_corpus(clips_per_class, seed)
    pairs = demo_qa_manifest(metas, seed)
    return corpus_items(pairs, patch_grids_for(waves))


def write_demo_corpus(out_dir: str | Path, clips_per_class: int = 5,
                      seed: int = 0) -> dict[str, int]:
    """Materialize the corpus on disk: WAV files, meta JSONL, QA manifest.
    Returns counts for reporting."""
    out = Path(out_dir)
    audio_dir = out / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    metas, waves = build_demo_corpus(clips_per_class, seed)
    for audio_id, wave in waves.items():
        write_wav(audio_dir / f"{audio_id}.wav", wave)
    pairs = demo_qa_manifest(metas, seed)
    write_meta_jsonl(out / "meta.jsonl", metas)
    write_manifest(out / "manifest.jsonl", pairs)
    return {"clips": len(waves), "pairs": len(pairs)}
