"""Preference-conditioned Gaussian actor and per-objective value critics.

The actor consumes [state, w] and emits a diagonal Gaussian over actions in
[0, 1]^d: a sigmoid mean head on a tanh backbone plus a state-independent
learnable log-std vector.  Sampled actions are clamped into the box, but
log-probabilities are always evaluated at the raw pre-clamp sample so the
density stays consistent.

Critics come in two shapes.  The branched critic shares a trunk and gives
each objective its own head, so head gradients stay isolated; the shared
critic is a single network with an m-dimensional output layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from pastarl.errors import ContractViolationError
from pastarl.nn import Network

LOG_STD_INIT = float(np.log(0.5))
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
HALF_LOG_2PI = 0.5 * float(np.log(2.0 * np.pi))
ENTROPY_CONST = 0.5 * float(np.log(2.0 * np.pi * np.e))


class ActSample(NamedTuple):
    action: np.ndarray     # clamped into [0, 1]^d
    log_prob: float        # density of the pre-clamp sample
    pre_clamp: np.ndarray


@dataclass
class ActorTape:
    backbone: object
    head: object
    means: np.ndarray


class GaussianActor:
    """Tanh backbone -> sigmoid mean head, plus a learnable log-std vector."""

    def __init__(self, backbone: Network, mean_head: Network, log_std: np.ndarray):
        if mean_head.in_dim != backbone.out_dim:
            raise ContractViolationError("mean head does not fit backbone output")
        self.backbone = backbone
        self.mean_head = mean_head
        self.log_std = np.asarray(log_std, dtype=np.float64).copy()
        self.action_dim = mean_head.out_dim

    @classmethod
    def create(
        cls, obs_dim: int, m: int, action_dim: int, rng: np.random.Generator, hidden: int = 64
    ) -> "GaussianActor":
        backbone = Network.random([obs_dim + m, hidden, hidden], ["tanh", "tanh"], rng)
        mean_head = Network.random([hidden, action_dim], ["sigmoid"], rng)
        return cls(backbone, mean_head, np.full(action_dim, LOG_STD_INIT))

    @property
    def in_dim(self) -> int:
        return self.backbone.in_dim

    @property
    def n_params(self) -> int:
        return self.backbone.n_params + self.mean_head.n_params + self.action_dim

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.backbone.to_flat(), self.mean_head.to_flat(), self.log_std])

    def from_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ContractViolationError(
                f"flat vector has {flat.shape}, actor needs ({self.n_params},)"
            )
        nb = self.backbone.n_params
        nh = self.mean_head.n_params
        self.backbone.from_flat(flat[:nb])
        self.mean_head.from_flat(flat[nb : nb + nh])
        self.log_std = flat[nb + nh :].copy()

    def clamp_log_std(self) -> None:
        # Projection step after optimizer updates keeps std in a sane range.
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    def mean_forward(self, x: np.ndarray) -> tuple[np.ndarray, ActorTape]:
        feats, tape_b = self.backbone.forward(x)
        means, tape_h = self.mean_head.forward(feats)
        return means, ActorTape(tape_b, tape_h, means)

    def log_probs(self, means: np.ndarray, pre_clamp: np.ndarray) -> np.ndarray:
        """Diagonal-Gaussian log density of raw samples; batched over rows."""
        means = np.atleast_2d(means)
        pre = np.atleast_2d(pre_clamp)
        z = (pre - means) / np.exp(self.log_std)
        return -0.5 * np.sum(z * z, axis=1) - np.sum(self.log_std) - pre.shape[1] * HALF_LOG_2PI

    def act(self, state: np.ndarray, w: np.ndarray, rng: np.random.Generator) -> ActSample:
        x = np.concatenate([np.asarray(state, dtype=np.float64), np.asarray(w, dtype=np.float64)])
        means, _ = self.mean_forward(x)
        std = np.exp(self.log_std)
        pre = means + std * rng.standard_normal(self.action_dim)
        logp = float(self.log_probs(means, pre)[0])
        return ActSample(np.clip(pre, 0.0, 1.0), logp, pre)

    def act_deterministic(self, state: np.ndarray, w: np.ndarray) -> np.ndarray:
        x = np.concatenate([np.asarray(state, dtype=np.float64), np.asarray(w, dtype=np.float64)])
        means, _ = self.mean_forward(x)
        return np.clip(means, 0.0, 1.0)

    def log_prob_and_entropy(self, state, w, pre_clamp_action) -> tuple[float, float]:
        x = np.concatenate([np.asarray(state, dtype=np.float64), np.asarray(w, dtype=np.float64)])
        means, _ = self.mean_forward(x)
        logp = float(self.log_probs(means, pre_clamp_action)[0])
        return logp, self.entropy()

    def entropy(self) -> float:
        """State-independent: sum_d (0.5 ln(2 pi e) + log_std_d)."""
        return float(self.action_dim * ENTROPY_CONST + np.sum(self.log_std))

    def entropy_grad_flat(self) -> np.ndarray:
        g = np.zeros(self.n_params)
        g[self.backbone.n_params + self.mean_head.n_params :] = 1.0
        return g

    def backward_weighted_logp(
        self, tape: ActorTape, pre_clamp: np.ndarray, coeffs: np.ndarray
    ) -> np.ndarray:
        """Gradient of sum_t coeffs[t] * log pi(pre_clamp[t] | state[t]) over flat params."""
        means = np.atleast_2d(tape.means)
        pre = np.atleast_2d(pre_clamp)
        c = np.asarray(coeffs, dtype=np.float64)
        if c.shape != (means.shape[0],):
            raise ContractViolationError(f"coeffs shape {c.shape} != ({means.shape[0]},)")
        var = np.exp(2.0 * self.log_std)
        diff = pre - means
        g_mean = c[:, None] * diff / var
        g_log_std = (c[:, None] * (diff * diff / var - 1.0)).sum(axis=0)
        head_grad_input = g_mean[0] if tape.head.single else g_mean
        head_flat, feat_grad = self.mean_head.backward(tape.head, head_grad_input)
        backbone_flat, _ = self.backbone.backward(tape.backbone, feat_grad)
        return np.concatenate([backbone_flat, head_flat, g_log_std])


class BranchedCritic:
    """Shared trunk with one independent value head per objective."""

    def __init__(self, trunk: Network, heads: list[Network]):
        for h in heads:
            if h.in_dim != trunk.out_dim or h.out_dim != 1:
                raise ContractViolationError("head shape does not fit trunk")
        self.trunk = trunk
        self.heads = heads
        self.m = len(heads)

    @classmethod
    def create(
        cls, obs_dim: int, m: int, rng: np.random.Generator, hidden: int = 64
    ) -> "BranchedCritic":
        trunk = Network.random([obs_dim + m, hidden, hidden], ["tanh", "tanh"], rng)
        heads = [Network.random([hidden, hidden, 1], ["tanh", "identity"], rng) for _ in range(m)]
        return cls(trunk, heads)

    @classmethod
    def zeros(cls, obs_dim: int, m: int, hidden: int = 64) -> "BranchedCritic":
        trunk = Network.zeros([obs_dim + m, hidden, hidden], ["tanh", "tanh"])
        heads = [Network.zeros([hidden, hidden, 1], ["tanh", "identity"]) for _ in range(m)]
        return cls(trunk, heads)

    @property
    def in_dim(self) -> int:
        return self.trunk.in_dim

    @property
    def n_params(self) -> int:
        return self.trunk.n_params + sum(h.n_params for h in self.heads)

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.trunk.to_flat()] + [h.to_flat() for h in self.heads])

    def from_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ContractViolationError(
                f"flat vector has {flat.shape}, critic needs ({self.n_params},)"
            )
        k = self.trunk.n_params
        self.trunk.from_flat(flat[:k])
        for h in self.heads:
            h.from_flat(flat[k : k + h.n_params])
            k += h.n_params

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        feats, tape_t = self.trunk.forward(x)
        outs, tapes_h = [], []
        for h in self.heads:
            v, th = h.forward(feats)
            outs.append(v)
            tapes_h.append(th)
        if tape_t.single:
            vals = np.array([float(v[0]) for v in outs])
        else:
            vals = np.concatenate(outs, axis=1)
        return vals, (tape_t, tapes_h)

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: tuple, dvals: np.ndarray) -> np.ndarray:
        """Gradient over flat params given d(loss)/d(values), shape (B, m) or (m,)."""
        tape_t, tapes_h = cache
        dv = np.atleast_2d(np.asarray(dvals, dtype=np.float64))
        feat_grad = None
        head_flats = []
        for i, h in enumerate(self.heads):
            g_out = dv[:, i : i + 1] if not tape_t.single else dv[0, i : i + 1]
            h_flat, f_grad = h.backward(tapes_h[i], g_out)
            head_flats.append(h_flat)
            feat_grad = f_grad if feat_grad is None else feat_grad + f_grad
        trunk_flat, _ = self.trunk.backward(tape_t, feat_grad)
        return np.concatenate([trunk_flat] + head_flats)


class SharedCritic:
    """Single network emitting all m values from one output layer."""

    def __init__(self, net: Network):
        self.net = net
        self.m = net.out_dim

    @classmethod
    def create(
        cls, obs_dim: int, m: int, rng: np.random.Generator, hidden: int = 64
    ) -> "SharedCritic":
        net = Network.random(
            [obs_dim + m, hidden, hidden, hidden, m], ["tanh", "tanh", "tanh", "identity"], rng
        )
        return cls(net)

    @classmethod
    def zeros(cls, obs_dim: int, m: int, hidden: int = 64) -> "SharedCritic":
        return cls(
            Network.zeros([obs_dim + m, hidden, hidden, hidden, m], ["tanh", "tanh", "tanh", "identity"])
        )

    @property
    def in_dim(self) -> int:
        return self.net.in_dim

    @property
    def n_params(self) -> int:
        return self.net.n_params

    def to_flat(self) -> np.ndarray:
        return self.net.to_flat()

    def from_flat(self, flat: np.ndarray) -> None:
        self.net.from_flat(flat)

    def forward(self, x: np.ndarray):
        return self.net.forward(x)

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.net.forward(x)[0]

    def backward(self, cache, dvals: np.ndarray) -> np.ndarray:
        flat, _ = self.net.backward(cache, dvals)
        return flat


def value_vector(critic, state: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Convenience: m-vector of values for one state under preference w."""
    x = np.concatenate([np.asarray(state, dtype=np.float64), np.asarray(w, dtype=np.float64)])
    return critic.values(x)
