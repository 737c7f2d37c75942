"""Classical discriminator: a small dense network with Leaky ReLU hidden
layers and a sigmoid output.

All weights live in one flat parameter vector so an optimizer can update
them in a single step; the per-layer matrices are views into it.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .statevector import as_generator

LEAKY_SLOPE = 0.2


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Discriminator:
    """``input_dim -> hidden[0] -> ... -> 1`` network.

    Inputs are expected in normalised units (grid values divided by the grid
    extent, see :func:`qgan.training.grid_inputs`).
    """

    def __init__(self, input_dim: int = 1, hidden: Sequence[int] = (50, 20),
                 leaky_slope: float = LEAKY_SLOPE, seed=None, params=None):
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.leaky_slope = float(leaky_slope)
        self.sizes = (self.input_dim, *self.hidden, 1)
        self._layout = []
        offset = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            self._layout.append((offset, fan_in, fan_out))
            offset += fan_in * fan_out + fan_out
        self.num_params = offset
        if params is None:
            rng = as_generator(seed)
            params = np.empty(offset)
            for start, fan_in, fan_out in self._layout:
                bound = 1.0 / np.sqrt(fan_in)
                params[start:start + fan_in * fan_out + fan_out] = rng.uniform(
                    -bound, bound, fan_in * fan_out + fan_out)
        params = np.asarray(params, dtype=float)
        if params.shape != (offset,):
            raise ValueError(f"expected {offset} parameters, got {params.shape}")
        self.params = params.copy()

    def layers(self, params=None):
        """``[(W, b), ...]`` with ``W`` of shape ``(fan_out, fan_in)``."""
        params = self.params if params is None else params
        out = []
        for start, fan_in, fan_out in self._layout:
            w = params[start:start + fan_in * fan_out].reshape(fan_out, fan_in)
            b = params[start + fan_in * fan_out:start + fan_in * fan_out + fan_out]
            out.append((w, b))
        return out

    def copy(self) -> "Discriminator":
        return Discriminator(self.input_dim, self.hidden, self.leaky_slope, params=self.params)

    def _as_batch(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.input_dim == 1:
            x = x[:, None]
        elif x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of dimension {self.input_dim}, got shape {x.shape}")
        return x

    def _forward(self, x):
        acts = [x]
        slopes = []
        a = x
        layers = self.layers()
        for w, b in layers[:-1]:
            z = a @ w.T + b
            s = (z > 0) * (1.0 - self.leaky_slope) + self.leaky_slope
            a = z * s
            acts.append(a)
            slopes.append(s)
        w, b = layers[-1]
        logit = (a @ w.T + b)[:, 0]
        return logit, acts, slopes

    def forward(self, x) -> np.ndarray:
        """Scores in ``(0, 1)`` for a batch of inputs, shape ``(m,)``."""
        logit, _, _ = self._forward(self._as_batch(x))
        return sigmoid(logit)

    __call__ = forward

    def _backprop_logit(self, acts, slopes, grad_logit) -> np.ndarray:
        """Parameter gradient of ``sum_i grad_logit[i] * logit_i``."""
        grad = np.zeros_like(self.params)
        layers = self.layers()
        gviews = self.layers(grad)
        delta = grad_logit[:, None]
        for idx in range(len(layers) - 1, -1, -1):
            gw, gb = gviews[idx]
            gw[...] = delta.T @ acts[idx]
            gb[...] = delta.sum(axis=0)
            if idx:
                delta = (delta @ layers[idx][0]) * slopes[idx - 1]
        return grad

    def backward(self, x, grad_output) -> np.ndarray:
        """Flat parameter gradient of ``sum_i grad_output[i] * D(x_i)``."""
        x = self._as_batch(x)
        logit, acts, slopes = self._forward(x)
        d = sigmoid(logit)
        return self._backprop_logit(acts, slopes, np.asarray(grad_output, dtype=float) * d * (1 - d))

    def backward_logit(self, x, grad_logit) -> np.ndarray:
        """Like :meth:`backward` but with the upstream gradient taken w.r.t. the
        pre-sigmoid output, which avoids dividing by tiny scores."""
        x = self._as_batch(x)
        _, acts, slopes = self._forward(x)
        return self._backprop_logit(acts, slopes, np.asarray(grad_logit, dtype=float))

    def input_gradient(self, x) -> np.ndarray:
        """``dD/dx`` for every input, shape ``(m, input_dim)``."""
        x = self._as_batch(x)
        logit, _, slopes = self._forward(x)
        d = sigmoid(logit)
        layers = self.layers()
        u = np.broadcast_to(layers[-1][0], (x.shape[0], layers[-1][0].shape[1]))
        for idx in range(len(layers) - 2, -1, -1):
            u = (u * slopes[idx]) @ layers[idx][0]
        return (d * (1 - d))[:, None] * u

    def gradient_penalty(self, x, weight: float = 1.0):
        """``weight * mean_i |dD/dx (x_i)|^2`` and its flat parameter gradient.

        The Leaky ReLU slopes are piecewise constant, so away from kinks the
        input gradient is ``c * h`` with ``c = D (1 - D)`` and
        ``h = W1^T (s1 * (W2^T (s2 * ... w_out)))``.  Its square norm is
        differentiated in closed form.
        """
        if weight < 0:
            raise ValueError("penalty weight must be non-negative")
        x = self._as_batch(x)
        m = x.shape[0]
        if weight == 0:
            return 0.0, np.zeros_like(self.params)
        logit, acts, slopes = self._forward(x)
        d = sigmoid(logit)
        c = d * (1 - d)
        layers = self.layers()
        nl = len(layers)
        # backward chain from the output weights: us[idx] is the upstream
        # vector entering layer idx (already multiplied by that layer's slope)
        us = [None] * nl
        u = np.broadcast_to(layers[-1][0], (m, layers[-1][0].shape[1]))
        for idx in range(nl - 2, -1, -1):
            us[idx] = u * slopes[idx]
            u = us[idx] @ layers[idx][0]
        hvec = u
        hsq = np.sum(hvec**2, axis=1)
        value = weight * np.mean(c**2 * hsq)

        # part 1: through c, which depends on the logit
        dc_dlogit = c * (1 - 2 * d)
        grad = self._backprop_logit(acts, slopes, weight / m * 2 * c * hsq * dc_dlogit)

        # part 2: through h at fixed slopes; r is d|h|^2/d(input of layer idx)
        coef = (weight / m * c**2)[:, None]
        gviews = self.layers(grad)
        r = 2 * hvec * coef
        for idx in range(nl - 1):
            gw, _ = gviews[idx]
            gw += us[idx].T @ r
            r = (r @ layers[idx][0].T) * slopes[idx]
        gw_out, _ = gviews[-1]
        gw_out += r.sum(axis=0)[None, :]
        return float(value), grad

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "leaky_slope": self.leaky_slope, "params": self.params.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Discriminator":
        sizes = data["sizes"]
        return cls(sizes[0], sizes[1:-1], data["leaky_slope"], params=np.array(data["params"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Discriminator":
        return cls.from_dict(json.loads(Path(path).read_text()))
