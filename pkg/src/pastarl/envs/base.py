"""Environment contract plus trajectory recording for reward replay.

Every environment takes actions in [0, 1]^action_dim, returns an m-vector
reward, and computes that reward through a pure module-level function of a
flat float snapshot.  step() puts the snapshot in info["reward_snapshot"],
so a recorded trajectory can be replayed through the same pure function and
must reproduce the reward vectors bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from pastarl.errors import ConfigError

# name -> pure snapshot -> reward function; populated by the env modules.
REWARD_FUNCTIONS: dict = {}


def register_reward_fn(name: str, fn) -> None:
    REWARD_FUNCTIONS[name] = fn


class MomdpEnv:
    """Interface: reset(rng) -> obs; step(action) -> (obs, reward, done, info)."""

    name: str = "base"
    observation_dim: int
    action_dim: int
    m: int

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool, dict]:
        raise NotImplementedError


class TrajectoryRecorder:
    """Collects (env, snapshot, reward) triples; serializes to JSON lines."""

    def __init__(self):
        self.records: list[dict] = []

    def on_step(self, env_name: str, snapshot: dict, reward: np.ndarray) -> None:
        self.records.append(
            {"env": env_name, "snapshot": snapshot, "reward": np.asarray(reward).tolist()}
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            for rec in self.records:
                f.write(json.dumps(rec) + "\n")

    @staticmethod
    def load(path) -> list[dict]:
        with open(path) as f:
            return [json.loads(line) for line in f if line.strip()]


def replay_rewards(records: list[dict]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Recompute each record's reward from its snapshot; returns (logged, replayed)."""
    out = []
    for rec in records:
        fn = REWARD_FUNCTIONS.get(rec["env"])
        if fn is None:
            raise ConfigError(f"no reward function registered for env {rec['env']!r}")
        out.append((np.array(rec["reward"], dtype=np.float64), fn(rec["snapshot"])))
    return out
