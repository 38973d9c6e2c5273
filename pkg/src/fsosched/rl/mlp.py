"""Small fully connected Q-network in plain numpy.

Two rectifier hidden layers and a linear two-unit head. Forward and
backward passes are written out by hand; no autodiff dependency.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MlpPolicy:
    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    @classmethod
    def init(cls, input_dim: int, hidden: int, rng: np.random.Generator, n_out: int = 2) -> "MlpPolicy":
        sizes = (input_dim, hidden, hidden, n_out)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        # Small head keeps early Q estimates near zero.
        weights[-1] *= 0.1
        return cls(sizes=sizes, weights=weights, biases=biases)

    @classmethod
    def zeros(cls, sizes) -> "MlpPolicy":
        sizes = tuple(sizes)
        return cls(sizes=sizes,
                   weights=[np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                   biases=[np.zeros(b) for b in sizes[1:]])

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    def copy(self) -> "MlpPolicy":
        return MlpPolicy(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         dict(self.meta))

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def forward(self, x: np.ndarray, keep: bool = False):
        """Q-values for a single input (1-D) or a batch (2-D)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"expected input of length {self.input_dim}, got {x.shape[-1]}")
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return (h, acts) if keep else h

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray):
        """Gradients of sum(grad_out * Q) w.r.t. weights and biases."""
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        g = np.asarray(grad_out, dtype=float)
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            if a_in.ndim == 1:
                gw[i] = np.outer(a_in, g)
                gb[i] = g.copy()
            else:
                gw[i] = a_in.T @ g
                gb[i] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i].T) * (acts[i] > 0)
        return gw, gb


def mlp_forward(policy: MlpPolicy, obs) -> tuple[float, float]:
    q = policy.forward(np.asarray(obs, dtype=float))
    return float(q[0]), float(q[1])


class Adam:
    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Sgd:
    def __init__(self, params, lr: float):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g
