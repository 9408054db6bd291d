"""
Adam with bias correction over a dict of named parameter arrays
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatchError

Params = dict[str, np.ndarray]


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    def ensure(self, params: Params) -> None:
        for name, p in params.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            elif self.m[name].shape != p.shape:
                raise ShapeMismatchError(
                    f"Adam moment for '{name}' has shape {self.m[name].shape}, "
                    f"parameter has {p.shape}"
                )


def adam_step(state: AdamState, params: Params, grads: Params, lr: float = 1e-3) -> Params:
    """
    Apply one Adam update in place and return ``params``.

    Every parameter needs a gradient of the same shape.
    """
    state.ensure(params)
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatchError(f"Gradient for '{name}' has shape {g.shape}, expected {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


class Adam:
    """Stateful wrapper binding a learning rate to an AdamState"""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.state = AdamState(beta1=beta1, beta2=beta2, eps=eps)

    def step(self, params: Params, grads: Params) -> Params:
        return adam_step(self.state, params, grads, self.lr)
