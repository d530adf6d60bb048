"""Run configuration: a flat TOML file of documented keys, overridable by
CLI flags. Unknown keys are rejected by name."""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields

from .losses import LossWeights
from .solver import SolveConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration (unknown key or bad value)."""


# key -> (type, validator description, default)
_FLOAT_KEYS = {
    "lambda_iiw": (0.0, None), "lambda_saw": (0.0, None),
    "lambda_ord": (0.0, None), "lambda_rec": (0.0, None),
    "lambda_rs": (0.0, None), "lambda_ss": (0.0, None),
    "lambda_sns": (0.0, None), "margin": (0.0, None),
    "sigma_p": (None, 0.0), "delta": (None, 0.0),
    "slic_compactness": (None, 0.0), "initial_step": (None, 0.0),
    "tolerance": (None, 0.0), "dilation_radius": (0.0, None),
}
_INT_KEYS = {
    "pyramid_levels": 1, "sinkhorn_iters": 1, "slic_k": 1, "max_iters": 1,
}
_FREE_INT_KEYS = {"seed"}


@dataclass
class RunConfig:
    lambda_iiw: float = 1.0
    lambda_saw: float = 1.0
    lambda_ord: float = 0.1
    lambda_rec: float = 1.0
    lambda_rs: float = 1.0
    lambda_ss: float = 0.5
    lambda_sns: float = 1.0
    margin: float = 0.12
    pyramid_levels: int = 4
    sigma_p: float = 8.0
    sinkhorn_iters: int = 20
    delta: float = 0.10
    slic_k: int = 64
    slic_compactness: float = 0.1
    max_iters: int = 100
    initial_step: float = 1.0
    tolerance: float = 1e-6
    seed: int = 0
    dilation_radius: float = 5.0

    def loss_weights(self) -> LossWeights:
        return LossWeights(
            lambda_iiw=self.lambda_iiw, lambda_saw=self.lambda_saw,
            lambda_ord=self.lambda_ord, lambda_rec=self.lambda_rec,
            lambda_rs=self.lambda_rs, lambda_ss=self.lambda_ss,
            lambda_sns=self.lambda_sns, margin=self.margin,
            pyramid_levels=self.pyramid_levels,
        )

    def solve_config(self, judgments=None, saw=None) -> SolveConfig:
        return SolveConfig(
            weights=self.loss_weights(), max_iters=self.max_iters,
            initial_step=self.initial_step, rel_tol=self.tolerance,
            judgments=judgments, saw=saw, sigma_p=self.sigma_p,
            sinkhorn_iters=self.sinkhorn_iters,
            dilation_radius=self.dilation_radius, seed=self.seed,
        )


_KNOWN = {f.name for f in fields(RunConfig)}


def _validate(key: str, value):
    if key in _FREE_INT_KEYS:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"config key '{key}' must be an integer")
        return value
    if key in _INT_KEYS:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"config key '{key}' must be an integer")
        if value < _INT_KEYS[key]:
            raise ConfigError(f"config key '{key}' must be >= {_INT_KEYS[key]}")
        return value
    lo_incl, lo_excl = _FLOAT_KEYS[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{key}' must be a number")
    value = float(value)
    if lo_incl is not None and value < lo_incl:
        raise ConfigError(f"config key '{key}' must be >= {lo_incl}")
    if lo_excl is not None and value <= lo_excl:
        raise ConfigError(f"config key '{key}' must be > {lo_excl}")
    return value


def apply_settings(cfg: RunConfig, settings: dict) -> RunConfig:
    for key, value in settings.items():
        if key not in _KNOWN:
            raise ConfigError(f"unknown config key '{key}'")
        setattr(cfg, key, _validate(key, value))
    return cfg


def load_config(path=None, overrides: dict = None) -> RunConfig:
    """Build a RunConfig from an optional TOML file and override dict."""
    cfg = RunConfig()
    if path is not None:
        with open(path, "rb") as f:
            try:
                settings = tomllib.load(f)
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"cannot parse config: {e}") from e
        apply_settings(cfg, settings)
    if overrides:
        apply_settings(cfg, overrides)
    return cfg
