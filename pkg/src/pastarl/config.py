"""Sectioned key-value config files, overrides, and run manifests.

Config files are INI-style with five sections: environment, algorithm,
controller, ppo, output.  Every key has a declared type and default; unknown
sections or keys are hard errors so programmatic sweeps cannot silently
misspell a knob.  A RunManifest snapshots the fully resolved config plus
seed and build id; re-running from a manifest reproduces the metrics CSV
byte for byte.
"""

from __future__ import annotations

import configparser
import json
import subprocess
from pathlib import Path

from pastarl import __version__
from pastarl.errors import ConfigError
from pastarl.trainer import TrainConfig

MANIFEST_FORMAT_VERSION = 1

# The eight-preference evaluation set used throughout the experiments (m=3).
DEFAULT_PREFERENCES_M3 = (
    (0.1, 0.7, 0.2),
    (0.2, 0.2, 0.6),
    (0.2, 0.6, 0.2),
    (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
    (0.4, 0.4, 0.2),
    (0.5, 0.3, 0.2),
    (0.6, 0.3, 0.1),
    (0.8, 0.1, 0.1),
)

FIXED_MU_GRID = (0.01, 0.1, 0.5, 1.0, 5.0, 10.0)


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _parse_floats(s: str) -> tuple:
    try:
        return tuple(float(tok) for tok in s.split(",") if tok.strip())
    except ValueError as e:
        raise ConfigError(f"expected comma-separated floats, got {s!r}") from e


# section -> key -> (converter, default)
CONFIG_SCHEMA = {
    "environment": {
        "name": (str, "stub"),
        "episode_cap": (int, None),
        "n_targets": (int, None),
        "n_circles": (int, None),
        "n_rects": (int, None),
        "scan_range": (float, None),
        "safe_frac": (float, None),
    },
    "algorithm": {
        "name": (str, "pasta"),
        "preference": (_parse_floats, (0.5, 0.5)),
        "fixed_mu": (float, 1.0),
        "no_pcgrad": (_parse_bool, False),
        "weighted_pcgrad": (_parse_bool, False),
        "critic": (str, "branched_weighted"),
        "tch_per_minibatch": (_parse_bool, False),
    },
    "controller": {
        "mode": (str, "full"),
        "mu_start": (float, 10.0),
        "mu_min": (float, 0.05),
        "mu_max": (float, 10.0),
        "tau": (float, 0.4),
        "lambda_ema": (float, 0.05),
        "rho": (float, 0.15),
        "zeta": (float, 1.05),
    },
    "ppo": {
        "horizon": (int, 2048),
        "epochs": (int, 10),
        "minibatch": (int, 64),
        "clip_eps": (float, 0.2),
        "c1": (float, 0.5),
        "c2": (float, 0.01),
        "gamma": (float, 0.99),
        "lambda_gae": (float, 0.95),
        "lr": (float, 3e-4),
        "total_iterations": (int, 100),
        "seed": (int, 0),
        "hidden": (int, 64),
    },
    "output": {
        "dir": (str, "runs/run"),
        "eval_every": (int, 10),
        "eval_episodes": (int, 8),
        "checkpoint_every": (int, 0),
    },
}

# Environment-parameter keys are only passed through when set.
ENV_PARAM_KEYS = ("episode_cap", "n_targets", "n_circles", "n_rects", "scan_range", "safe_frac")


def default_config() -> dict:
    return {
        section: {key: default for key, (_, default) in keys.items()}
        for section, keys in CONFIG_SCHEMA.items()
    }


def _convert(section: str, key: str, raw) -> object:
    if section not in CONFIG_SCHEMA:
        raise ConfigError(f"unknown config section [{section}]")
    if key not in CONFIG_SCHEMA[section]:
        known = ", ".join(sorted(CONFIG_SCHEMA[section]))
        raise ConfigError(f"unknown key {key!r} in section [{section}] (known: {known})")
    conv, _ = CONFIG_SCHEMA[section][key]
    if isinstance(raw, str):
        try:
            return conv(raw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({e})") from e
    return raw


def load_config(path) -> dict:
    """Parse and validate a config file; unknown sections/keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case as written
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"could not parse config {path}: {e}") from e
    cfg = default_config()
    unknown = []
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            unknown.append(f"[{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in CONFIG_SCHEMA[section]:
                known = ", ".join(sorted(CONFIG_SCHEMA[section]))
                unknown.append(f"{section}.{key} (known: {known})")
                continue
            cfg[section][key] = _convert(section, key, raw)
    if unknown:
        raise ConfigError(f"unknown config entries: {'; '.join(unknown)}")
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply --override section.key=value pairs onto a resolved config."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        cfg.setdefault(section, {})
        cfg[section][key] = _convert(section, key, value)
    return cfg


def build_train_config(cfg: dict) -> TrainConfig:
    env = cfg["environment"]
    alg = cfg["algorithm"]
    ctl = cfg["controller"]
    ppo = cfg["ppo"]
    out = cfg["output"]
    env_params = {k: env[k] for k in ENV_PARAM_KEYS if env.get(k) is not None}
    return TrainConfig(
        algorithm=alg["name"],
        env_name=env["name"],
        env_params=env_params,
        preference=tuple(alg["preference"]),
        fixed_mu=alg["fixed_mu"],
        no_pcgrad=alg["no_pcgrad"],
        weighted_pcgrad=alg["weighted_pcgrad"],
        critic=alg["critic"],
        tch_per_minibatch=alg["tch_per_minibatch"],
        controller_mode=ctl["mode"],
        mu_start=ctl["mu_start"],
        mu_min=ctl["mu_min"],
        mu_max=ctl["mu_max"],
        tau=ctl["tau"],
        lambda_ema=ctl["lambda_ema"],
        rho=ctl["rho"],
        zeta=ctl["zeta"],
        horizon=ppo["horizon"],
        epochs=ppo["epochs"],
        minibatch=ppo["minibatch"],
        clip_eps=ppo["clip_eps"],
        c1=ppo["c1"],
        c2=ppo["c2"],
        gamma=ppo["gamma"],
        lambda_gae=ppo["lambda_gae"],
        lr=ppo["lr"],
        total_iterations=ppo["total_iterations"],
        seed=ppo["seed"],
        hidden=ppo["hidden"],
        eval_every=out["eval_every"],
        eval_episodes=out["eval_episodes"],
    ).validate()


def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return f"pastarl-{__version__}"


def write_manifest(out_dir: Path, cfg: dict) -> dict:
    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "build_id": build_id(),
        "seed": cfg["ppo"]["seed"],
        "environment": cfg["environment"]["name"],
        "algorithm": cfg["algorithm"]["name"],
        "preference": list(cfg["algorithm"]["preference"]),
        "config": cfg,
        "outputs": {
            "metrics_csv": "metrics.csv",
            "eval_csv": "eval.csv",
            "checkpoint": "checkpoint_final.json",
        },
    }
    with open(Path(out_dir) / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
    return manifest


def load_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    with open(path) as f:
        manifest = json.load(f)
    version = manifest.get("format_version")
    if version != MANIFEST_FORMAT_VERSION:
        raise ConfigError(f"unsupported manifest format_version {version!r}")
    cfg = manifest["config"]
    # JSON round-trips preference tuples as lists; restore tuples for equality.
    cfg["algorithm"]["preference"] = tuple(cfg["algorithm"]["preference"])
    return manifest
