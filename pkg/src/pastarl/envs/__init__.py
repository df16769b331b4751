"""Simulated multi-objective environments and the shared MOMDP interface."""

from pastarl.envs.base import (
    MomdpEnv,
    REWARD_FUNCTIONS,
    TrajectoryRecorder,
    replay_rewards,
)
from pastarl.envs.crazyflie import FormationEnv, FroggerEnv, PatrolOpponent, opponent_step
from pastarl.envs.stealth import StealthWorld
from pastarl.envs.stub import StubEnv
from pastarl.errors import ConfigError

ENV_CLASSES = {
    "stealth": StealthWorld,
    "frogger": FroggerEnv,
    "formation": FormationEnv,
    "stub": StubEnv,
}


def make_env(name: str, **params) -> MomdpEnv:
    cls = ENV_CLASSES.get(name)
    if cls is None:
        raise ConfigError(f"unknown environment {name!r}; choose from {sorted(ENV_CLASSES)}")
    try:
        return cls(**params)
    except TypeError as e:
        raise ConfigError(f"bad parameters for environment {name!r}: {e}") from e


__all__ = [
    "MomdpEnv",
    "REWARD_FUNCTIONS",
    "TrajectoryRecorder",
    "replay_rewards",
    "FormationEnv",
    "FroggerEnv",
    "PatrolOpponent",
    "opponent_step",
    "StealthWorld",
    "StubEnv",
    "ENV_CLASSES",
    "make_env",
]
