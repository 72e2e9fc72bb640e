"""Small dense networks in numpy: forward/backward, Adam, gradient checks, checkpoints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")
CHECKPOINT_VERSION = 1


@dataclass
class Layer:
    W: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ValueError(f"bad layer shapes {self.W.shape}, {self.b.shape}")


@dataclass
class Mlp:
    layers: list

    def __post_init__(self) -> None:
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.W.shape[1] != nxt.W.shape[0]:
                raise ValueError("adjacent layer dimensions do not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0].W.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].W.shape[1]

    @property
    def dims(self) -> list[int]:
        return [self.input_dim] + [layer.W.shape[1] for layer in self.layers]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def copy(self) -> "Mlp":
        return Mlp([Layer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)[0]


def build_mlp(
    dims: Sequence[int],
    hidden_activation: str = "relu",
    output_activation: str = "identity",
    rng: Optional[np.random.Generator] = None,
) -> Mlp:
    """Uniform(+-1/sqrt(fan_in)) initialization of weights and biases."""
    rng = rng if rng is not None else np.random.default_rng(0)
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        act = output_activation if k == len(dims) - 2 else hidden_activation
        layers.append(
            Layer(
                rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                rng.uniform(-bound, bound, size=fan_out),
                act,
            )
        )
    return Mlp(layers)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, grad: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return grad * (z > 0)
    if kind == "tanh":
        return grad * (1.0 - a * a)
    return grad


def forward(net: Mlp, x: np.ndarray):
    """Return (output, cache). ``x`` is (batch, in) or a single (in,) vector."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.input_dim:
        raise ValueError(f"input has {x.shape[1]} features, network expects {net.input_dim}")
    inputs, pre, post = [], [], []
    a = x
    for layer in net.layers:
        inputs.append(a)
        z = a @ layer.W + layer.b
        a = _activate(z, layer.activation)
        pre.append(z)
        post.append(a)
    cache = (inputs, pre, post, single)
    return (a[0] if single else a), cache


def backward(net: Mlp, cache, output_gradient: np.ndarray):
    """Reverse-mode pass. Returns ([(dW, db), ...], d_input).

    ``output_gradient`` is dL/d(output) with the same shape as the forward
    output; parameter gradients are summed over the batch.
    """
    inputs, pre, post, single = cache
    g = np.asarray(output_gradient, dtype=float)
    if single:
        g = g[None, :]
    grads = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        g = _activation_grad(pre[k], post[k], g, layer.activation)
        grads[k] = (inputs[k].T @ g, g.sum(axis=0))
        g = g @ layer.W.T
    return grads, (g[0] if single else g)


def flat_grads(grads) -> list[np.ndarray]:
    out = []
    for dW, db in grads:
        out.extend((dW, db))
    return out


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """In-place bias-corrected adaptive-moment update (descent on ``grads``)."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(grads) != len(params):
            raise ValueError("parameter and gradient lists differ in length")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def optimizer_step(net: Mlp, grads, state: Adam) -> None:
    state.step(net.params(), flat_grads(grads))


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    """Polyak blend: target <- tau * online + (1 - tau) * target, in place."""
    if target.dims != online.dims:
        raise ValueError(f"shape mismatch {target.dims} vs {online.dims}")
    for tp, op in zip(target.params(), online.params()):
        tp *= 1.0 - tau
        tp += tau * op


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    worst: tuple


def gradient_check(
    net: Mlp,
    x: np.ndarray,
    tolerance: float = 1e-4,
    h: float = 1e-5,
    seed: int = 0,
    analytic=None,
) -> GradCheckReport:
    """Compare backward() with central differences of a random projection of the output.

    ``analytic`` substitutes a different gradient list (same layout as
    ``net.params()``), which is how corrupted gradients are exercised.
    """
    rng = np.random.default_rng(seed)
    out, cache = forward(net, x)
    proj = rng.standard_normal(out.shape)

    def loss() -> float:
        return float(np.sum(forward(net, x)[0] * proj))

    if analytic is None:
        analytic = flat_grads(backward(net, cache, proj)[0])
    worst = (0.0, -1, ())
    for pi, (p, g) in enumerate(zip(net.params(), analytic)):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss()
            p[idx] = old - h
            down = loss()
            p[idx] = old
            numeric = (up - down) / (2.0 * h)
            scale = max(abs(numeric), abs(g[idx]), 1e-6)
            err = abs(numeric - g[idx]) / scale
            if err > worst[0]:
                worst = (err, pi, idx)
    return GradCheckReport(worst[0], worst[0] < tolerance, worst[1:])


def save_checkpoint(net: Mlp, path) -> None:
    """Write an .npz archive: version, layer dims, activation names and
    per-layer little-endian float64 arrays W{k} (row-major, fan_in x fan_out)
    and b{k}."""
    arrays = {
        "version": np.array([CHECKPOINT_VERSION], dtype="<i8"),
        "dims": np.array(net.dims, dtype="<i8"),
        "activations": np.array([l.activation for l in net.layers]),
    }
    for k, layer in enumerate(net.layers):
        arrays[f"W{k}"] = np.ascontiguousarray(layer.W, dtype="<f8")
        arrays[f"b{k}"] = np.ascontiguousarray(layer.b, dtype="<f8")
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> Mlp:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"][0])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        dims = [int(d) for d in data["dims"]]
        acts = [str(a) for a in data["activations"]]
        layers = []
        for k, act in enumerate(acts):
            W = data[f"W{k}"].astype(float)
            b = data[f"b{k}"].astype(float)
            if W.shape != (dims[k], dims[k + 1]):
                raise ValueError(f"{path}: layer {k} has shape {W.shape}, header says {dims[k:k+2]}")
            layers.append(Layer(W, b, act))
    return Mlp(layers)
