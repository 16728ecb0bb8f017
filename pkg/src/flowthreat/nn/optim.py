from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ShapeError


@dataclass
class AdamState:
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls(0, [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params, grads, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """One bias-corrected Adam update.  Returns ``(new_params, new_state)``;
    inputs are left untouched."""
    if not state.m:
        state = AdamState.zeros_like(params)
    if not (len(params) == len(grads) == len(state.m)):
        raise ShapeError("params, grads and optimizer state differ in length")
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch: param {p.shape}, grad {g.shape}, state {m.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        new_params.append(p - learning_rate * (m / c1) / (np.sqrt(v / c2) + epsilon))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(t, new_m, new_v)
