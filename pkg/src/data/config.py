"""
Run configuration: numerical controls and JSON loading with flag overrides
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from data.entities import BaseEntity, FluxLimiter, ModelParams
from data.errors import ConfigurationError

PARAM_KEYS = {'a': 'a', 'sigma': 'sigma', 'gamma': 'gamma', 'lambda': 'lambda_'}
LIMITER_KEYS = ('kind', 'mu', 'c', 'p')


@dataclass
class Controls(BaseEntity):
    """
    Numerical thresholds shared by every integration
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    v_max: float = 1e6
    w_min: float = 1e-12
    eq_tol: float = 1e-9
    dwell: float = 5.0
    boundary_eps: float = 1e-9
    denom_eps: float = 1e-10
    s_max: float = 1e3
    max_step: float = math.inf
    max_steps: int = 2_000_000
    seed_offset: float = 1e-7
    graph_samples: int = 2001
    bracket_expansions: int = 12
    bisection_rtol: float = 1e-10
    bounded_box: float | None = None

    def validate(self) -> None:
        for name in ('rtol', 'atol', 'v_max', 'eq_tol', 's_max', 'max_step', 'seed_offset'):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f'control {name} must be positive, got {value}')
        for name in ('w_min', 'dwell', 'boundary_eps', 'denom_eps'):
            value = getattr(self, name)
            if value < 0:
                raise ConfigurationError(f'control {name} must be non-negative, got {value}')
        if self.graph_samples < 3:
            raise ConfigurationError(f'graph_samples must be at least 3, got {self.graph_samples}')
        if self.max_steps < 1 or self.bracket_expansions < 0:
            raise ConfigurationError('max_steps and bracket_expansions must be positive counts')
        if not 0 < self.bisection_rtol < 1:
            raise ConfigurationError(f'bisection_rtol must lie in (0, 1): {self.bisection_rtol}')


@dataclass
class RunConfig(BaseEntity):
    """
    Parameters, controls and command options of a single invocation
    """

    params: ModelParams = field(default_factory=ModelParams)
    controls: Controls = field(default_factory=Controls)
    options: dict = field(default_factory=dict)
    seed: int = 0
    out: Path = field(default_factory=lambda: Path(os.getenv('WAVE_SOLVER_OUT', 'output')))


def _build_params_(section: dict, overrides: dict) -> ModelParams:
    """
    Merges the params section of a config file with command-line values
    :param section: params section of the file
    :param overrides: flag values, None for flags not given
    :return: Model parameters
    """
    unknown = set(section) - set(PARAM_KEYS) - {'limiter'}
    if unknown:
        raise ConfigurationError(f'unknown params keys: {", ".join(sorted(unknown))}')

    values = {PARAM_KEYS[k]: v for k, v in section.items() if k in PARAM_KEYS}
    values.update({PARAM_KEYS[k]: overrides[k] for k in PARAM_KEYS if overrides.get(k) is not None})

    limiter = dict(section.get('limiter', {}))
    unknown = set(limiter) - set(LIMITER_KEYS)
    if unknown:
        raise ConfigurationError(f'unknown limiter keys: {", ".join(sorted(unknown))}')
    if overrides.get('limiter') is not None:
        limiter['kind'] = overrides['limiter']
    limiter.update({k: overrides[k] for k in ('mu', 'c', 'p') if overrides.get(k) is not None})

    try:
        values = {k: float(v) for k, v in values.items()}
        limiter = {k: (v if k == 'kind' else float(v)) for k, v in limiter.items()}
        return ModelParams(**values, limiter=FluxLimiter(**limiter))
    except (TypeError, ValueError) as ex:
        raise ConfigurationError(f'invalid model parameters: {ex}') from ex


def _build_controls_(section: dict, overrides: dict) -> Controls:
    """
    Merges the controls section of a config file with command-line tolerances
    :param section: controls section of the file
    :param overrides: flag values
    :return: Controls
    """
    names = {f.name for f in fields(Controls)}
    unknown = set(section) - names
    if unknown:
        raise ConfigurationError(f'unknown controls keys: {", ".join(sorted(unknown))}')
    values = dict(section)
    values.update({k: overrides[k] for k in ('rtol', 'atol') if overrides.get(k) is not None})
    try:
        return Controls(**values)
    except TypeError as ex:
        raise ConfigurationError(f'invalid controls: {ex}') from ex


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """
    Reads a JSON run configuration and applies command-line overrides; flags win
    :param path: Optional JSON file with sections params, controls, options and seed
    :param overrides: Flat dictionary of flag values
    :return: Validated run configuration
    """
    overrides = overrides or {}
    content: dict = {}
    if path:
        try:
            with open(path) as source:
                content = json.load(source)
        except (OSError, json.JSONDecodeError) as ex:
            raise ConfigurationError(f'cannot read config {path}: {ex}') from ex
        if not isinstance(content, dict):
            raise ConfigurationError(f'config {path} must hold a JSON object')
        logging.debug('Loaded config %s', path)

    unknown = set(content) - {'params', 'controls', 'options', 'seed', 'out'}
    if unknown:
        raise ConfigurationError(f'unknown config sections: {", ".join(sorted(unknown))}')

    params = _build_params_(content.get('params', {}), overrides)
    controls = _build_controls_(content.get('controls', {}), overrides)

    options = dict(content.get('options', {}))
    options.update({k: v for k, v in overrides.get('options', {}).items() if v is not None})

    seed = overrides.get('seed')
    if seed is None:
        seed = content.get('seed', 0)

    out = overrides.get('out') or content.get('out') or os.getenv('WAVE_SOLVER_OUT', 'output')
    return RunConfig(
        params=params, controls=controls, options=options, seed=int(seed), out=Path(out)
    )
