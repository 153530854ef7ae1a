"""Decoding loop: repetition penalty, then temperature, then top-k, then
top-p nucleus truncation, then one renormalized draw per step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tokenizer import EOS_ID


@dataclass
class GenerationConfig:
    temperature: float = 0.1
    top_k: int = 500
    top_p: float = 0.95
    repetition_penalty: float = 1.1
    max_new_tokens: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.temperature < 0.0:
            raise ValueError("temperature must be >= 0 (0 means greedy)")
        if self.repetition_penalty <= 0.0:
            raise ValueError("repetition penalty must be positive")


def apply_repetition_penalty(logits: np.ndarray, emitted_ids,
                             penalty: float) -> np.ndarray:
    """Discourage re-emission: divide positive logits of already-emitted ids
    by the penalty, multiply negative ones."""
    out = logits.astype(np.float64).copy()
    for tid in set(int(t) for t in emitted_ids):
        v = out[tid]
        out[tid] = v / penalty if v > 0 else v * penalty
    return out


def truncated_distribution(logits: np.ndarray,
                           cfg: GenerationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Temperature, top-k, then top-p, then renormalize.

    Returns (kept ids, their renormalized probabilities), highest
    probability first. Assumes the repetition penalty was already applied.
    """
    if cfg.temperature == 0.0:
        raise ValueError("no sampling distribution at temperature 0 (greedy)")
    z = np.asarray(logits, dtype=np.float64) / cfg.temperature
    z = z - z.max()
    probs = np.exp(z)
    probs /= probs.sum()

    order = np.argsort(-probs, kind="stable")
    kept = order[:min(cfg.top_k, order.size)]
    kept_probs = probs[kept]
    # nucleus: minimal prefix whose cumulative mass reaches top_p
    before = np.cumsum(kept_probs) - kept_probs
    kept = kept[before < cfg.top_p]
    kept_probs = probs[kept]
    return kept, kept_probs / kept_probs.sum()


def sample_next_id(logits: np.ndarray, emitted_ids, cfg: GenerationConfig,
                   rng: np.random.Generator) -> int:
    logits = apply_repetition_penalty(logits, emitted_ids, cfg.repetition_penalty)
    if cfg.temperature == 0.0:
        return int(np.argmax(logits))
    kept, kept_probs = truncated_distribution(logits, cfg)
    return int(rng.choice(kept, p=kept_probs))


def generate(model, audio, prompt_ids, cfg: GenerationConfig) -> np.ndarray:
    """Autoregressive decoding after the prompt; stops at EOS or the token
    budget. Returns only the newly generated ids."""
    rng = np.random.default_rng(cfg.seed)
    prompt = [int(t) for t in prompt_ids]
    if not prompt:
        raise ValueError("prompt must contain at least one token")
    generated: list[int] = []
    for _ in range(cfg.max_new_tokens):
        logits = model.forward(audio, np.array(prompt + generated, dtype=np.int64))
        next_id = sample_next_id(logits[-1], generated, cfg, rng)
        generated.append(next_id)
        if next_id == EOS_ID:
            break
    return np.array(generated, dtype=np.int64)
