"""Central-difference verification of the hand-written backward pass.

Every trainable tensor is probed at a seeded sample of coordinates (plus its
first and last entries); probing every coordinate of every tensor would take
minutes without telling us more, since a wrong partial-derivative formula
corrupts whole tensors, not isolated entries.
"""

from __future__ import annotations

import math

import numpy as np


def finite_diff_check(model, example, epsilon: float = 1e-5,
                      samples_per_tensor: int = 12, seed: int = 0) -> float:
    """Max relative error between analytic and numeric gradients.

    relative error = |num - ana| / max(1e-12, |num| + |ana|), the usual
    symmetric form. Raises on a non-finite loss.
    """
    loss, grads = model.loss_and_grads(example)
    if not math.isfinite(loss):
        raise ValueError("non-finite loss; gradient check aborted")

    rng = np.random.default_rng(seed)
    params = model.trainable_parameters()
    worst = 0.0
    for name, arr in sorted(params.items()):
        flat = arr.reshape(-1)
        n = flat.size
        picks = {0, n - 1}
        if n > 2:
            picks.update(int(i) for i in rng.integers(0, n, size=samples_per_tensor))
        ana_flat = grads[name].reshape(-1)
        for idx in sorted(picks):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            up = model.loss_only(example)
            flat[idx] = orig - epsilon
            down = model.loss_only(example)
            flat[idx] = orig
            num = (up - down) / (2.0 * epsilon)
            ana = float(ana_flat[idx])
            rel = abs(num - ana) / max(1e-12, abs(num) + abs(ana))
            worst = max(worst, rel)
    return worst
