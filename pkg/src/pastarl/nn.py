"""Minimal dense-network core: forward/backward on float64, Adam, checkpoints.

Everything trainable in this repo is a stack of fully connected layers, so the
whole parameter set of a network maps to one flat float64 vector.  The flat
layout is layer-major: for each layer in order, weights in row-major order
followed by that layer's biases.  Gradient surgery and the optimizer operate
on these flat vectors directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from pastarl.errors import ContractViolationError, DivergenceError

ACTIVATIONS = ("tanh", "sigmoid", "identity")

CHECKPOINT_FORMAT_VERSION = 1


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _activation_grad_from_output(name: str, out: np.ndarray) -> np.ndarray:
    # Both tanh' and sigmoid' are recoverable from the post-activation value.
    if name == "tanh":
        return 1.0 - out * out
    if name == "sigmoid":
        return out * (1.0 - out)
    return np.ones_like(out)


class DenseLayer:
    """One fully connected layer: out = act(W @ x + b)."""

    def __init__(self, weights: np.ndarray, biases: np.ndarray, activation: str):
        if activation not in ACTIVATIONS:
            raise ContractViolationError(f"unknown activation {activation!r}")
        weights = np.asarray(weights, dtype=np.float64)
        biases = np.asarray(biases, dtype=np.float64)
        if weights.ndim != 2 or biases.ndim != 1 or biases.shape[0] != weights.shape[0]:
            raise ContractViolationError(
                f"layer shape mismatch: weights {weights.shape}, biases {biases.shape}"
            )
        self.weights = weights
        self.biases = biases
        self.activation = activation

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_params(self) -> int:
        return self.weights.size + self.biases.size

    @classmethod
    def random(cls, in_dim: int, out_dim: int, activation: str, rng: np.random.Generator) -> "DenseLayer":
        # Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases.
        bound = 1.0 / np.sqrt(in_dim)
        w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim), activation)

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int, activation: str) -> "DenseLayer":
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim), activation)


@dataclass
class Tape:
    """Forward-pass record used by backward(): per-layer inputs and outputs."""

    inputs: list[np.ndarray]
    outputs: list[np.ndarray]
    single: bool
    signature: tuple


class Network:
    """An ordered stack of DenseLayers with a flat-vector parameter view."""

    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ContractViolationError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ContractViolationError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def n_params(self) -> int:
        return sum(l.n_params for l in self.layers)

    def _signature(self) -> tuple:
        return tuple((l.in_dim, l.out_dim, l.activation) for l in self.layers)

    @classmethod
    def random(cls, dims: list[int], activations: list[str], rng: np.random.Generator) -> "Network":
        """dims = [in, h1, ..., out]; activations has len(dims) - 1 entries."""
        if len(activations) != len(dims) - 1:
            raise ContractViolationError("need one activation per layer")
        layers = [
            DenseLayer.random(dims[i], dims[i + 1], activations[i], rng)
            for i in range(len(activations))
        ]
        return cls(layers)

    @classmethod
    def zeros(cls, dims: list[int], activations: list[str]) -> "Network":
        if len(activations) != len(dims) - 1:
            raise ContractViolationError("need one activation per layer")
        layers = [
            DenseLayer.zeros(dims[i], dims[i + 1], activations[i])
            for i in range(len(activations))
        ]
        return cls(layers)

    def to_flat(self) -> np.ndarray:
        parts = []
        for l in self.layers:
            parts.append(l.weights.ravel())
            parts.append(l.biases)
        return np.concatenate(parts)

    def from_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ContractViolationError(
                f"flat vector has {flat.shape}, network needs ({self.n_params},)"
            )
        k = 0
        for l in self.layers:
            nw = l.weights.size
            l.weights = flat[k : k + nw].reshape(l.weights.shape).copy()
            k += nw
            nb = l.biases.size
            l.biases = flat[k : k + nb].copy()
            k += nb

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, Tape]:
        """Run the stack on one vector or a batch of row vectors.

        Returns (output, tape); the tape feeds backward() and is only valid
        for the parameter values used here.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.in_dim:
            raise ContractViolationError(
                f"input dim {h.shape[1]} != network in_dim {self.in_dim}"
            )
        inputs, outputs = [], []
        for l in self.layers:
            inputs.append(h)
            z = h @ l.weights.T + l.biases
            h = _apply_activation(l.activation, z)
            outputs.append(h)
        out = h[0] if single else h
        return out, Tape(inputs, outputs, single, self._signature())

    def backward(self, tape: Tape, output_grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Backpropagate d(sum_b output_grad[b] . output[b]) onto parameters.

        Returns (flat_grad, input_grad) where flat_grad follows the flat
        layout and input_grad has the shape of the forward input.
        """
        if tape.signature != self._signature():
            raise ContractViolationError("tape does not match this network")
        g = np.asarray(output_grad, dtype=np.float64)
        if tape.single:
            g = g[None, :]
        if g.shape != tape.outputs[-1].shape:
            raise ContractViolationError(
                f"output_grad shape {g.shape} != output shape {tape.outputs[-1].shape}"
            )
        grads = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            l = self.layers[idx]
            dz = g * _activation_grad_from_output(l.activation, tape.outputs[idx])
            gw = dz.T @ tape.inputs[idx]
            gb = dz.sum(axis=0)
            grads[idx] = (gw, gb)
            g = dz @ l.weights
        flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
        input_grad = g[0] if tape.single else g
        return flat, input_grad


@dataclass
class AdamState:
    """Per-parameter-vector Adam accumulators (bias-corrected)."""

    size: int
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_update(
    theta: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    ascent: bool = False,
    name: str = "network",
) -> np.ndarray:
    """One Adam step on a flat parameter vector; mutates state, returns new theta.

    ascent=True moves along +grad (policy objectives are maximized).  Raises
    DivergenceError naming `name` if the gradient has non-finite entries.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != theta.shape:
        raise ContractViolationError(
            f"grad shape {grad.shape} != params shape {theta.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(f"non-finite gradient in {name}")
    state.step_count += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.step_count)
    v_hat = state.v / (1.0 - state.beta2 ** state.step_count)
    step = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return theta + step if ascent else theta - step


def adam_step(
    net: Network,
    grad: np.ndarray,
    state: AdamState,
    ascent: bool = False,
    name: str = "network",
) -> None:
    """Adam step applied in place to a Network via its flat view."""
    net.from_flat(adam_update(net.to_flat(), grad, state, ascent, name))


def network_spec(net: Network) -> dict:
    return {
        "dims": [net.in_dim] + [l.out_dim for l in net.layers],
        "activations": [l.activation for l in net.layers],
    }


def network_from_spec(spec: dict) -> Network:
    return Network.zeros(spec["dims"], spec["activations"])


def save_checkpoint(path, networks: dict, vectors: dict | None = None, metadata: dict | None = None) -> None:
    """Write a versioned JSON checkpoint.

    networks maps name -> Network; vectors maps name -> 1-D float array
    (e.g. a log-std vector).  JSON float round-trips are exact in Python, so
    load_checkpoint restores bit-identical parameters.
    """
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "metadata": metadata or {},
        "networks": {
            name: {**network_spec(net), "flat": net.to_flat().tolist()}
            for name, net in networks.items()
        },
        "vectors": {name: np.asarray(v, dtype=np.float64).tolist() for name, v in (vectors or {}).items()},
    }
    with open(path, "w") as f:
        json.dump(payload, f)


def load_checkpoint(path) -> tuple[dict, dict, dict]:
    """Read a checkpoint; returns (networks, vectors, metadata)."""
    with open(path) as f:
        payload = json.load(f)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ContractViolationError(f"unsupported checkpoint format_version {version!r}")
    networks = {}
    for name, entry in payload["networks"].items():
        net = network_from_spec(entry)
        net.from_flat(np.array(entry["flat"], dtype=np.float64))
        networks[name] = net
    vectors = {name: np.array(v, dtype=np.float64) for name, v in payload["vectors"].items()}
    return networks, vectors, payload["metadata"]
