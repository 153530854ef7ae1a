"""Learning-rate schedule: linear warmup to the peak, then linear decay."""

from __future__ import annotations


def warmup_steps(total_steps: int, warmup_fraction: float) -> int:
    """Warmup length clamped so both schedule segments are non-degenerate."""
    return min(max(1, round(warmup_fraction * total_steps)), total_steps - 1)


def lr_at(step: int, total_steps: int, cfg, peak: float) -> float:
    """cfg is anything with a warmup_fraction attribute (TrainerConfig)."""
    if total_steps <= 0:
        raise ValueError("total_steps must be positive")
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps})")
    if total_steps == 1:
        return peak
    w = warmup_steps(total_steps, cfg.warmup_fraction)
    if step <= w:
        return peak * step / w
    return peak * (total_steps - step) / (total_steps - w)
