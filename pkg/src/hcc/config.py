"""
Run configuration.

Precedence for overridable settings: command-line flag > environment
(CC_SEED, CC_REMOTE_URL, CC_REMOTE_API_KEY) > config file > default.
"""
import json
import logging
import os
from pathlib import Path
from typing import Mapping

from pydantic import BaseModel, ValidationError

from hcc.errors import ConfigParseError, ConfigSchemaError, ConfigTypeError, DataError
from hcc.schemas.config import RunConfig
from hcc.schemas.remote import RemoteBackend


logger = logging.getLogger(__name__)

ENV_SEED = "CC_SEED"
ENV_REMOTE_URL = "CC_REMOTE_URL"
ENV_REMOTE_API_KEY = "CC_REMOTE_API_KEY"


def _key_path(loc: tuple) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_config(data: object) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        key = _key_path(error["loc"])
        if error["type"] == "extra_forbidden":
            raise ConfigSchemaError(key) from e
        raise ConfigTypeError(key, error["msg"]) from e


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read config {path}: {e.strerror}") from e

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"{path}: line {e.lineno}: cannot parse JSON ({e.msg})") from e

    config = parse_config(data)
    logger.debug("loaded config %s", path)
    return config


class EffectiveSettings(BaseModel):
    seed: int
    remote: RemoteBackend


def _env_seed(env: Mapping[str, str]) -> int | None:
    raw = env.get(ENV_SEED)
    if raw is None or raw == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigTypeError(ENV_SEED, f"expected an integer, got '{raw}'") from None
    if seed < 0:
        raise ConfigTypeError(ENV_SEED, f"expected a nonnegative integer, got {seed}")
    return seed


def resolve_environment(
        config: RunConfig,
        env: Mapping[str, str] | None = None,
        seed: int | None = None,
        remote_url: str | None = None,
) -> EffectiveSettings:
    env = os.environ if env is None else env

    effective_seed = config.seed
    env_seed = _env_seed(env)
    if env_seed is not None:
        effective_seed = env_seed
    if seed is not None:
        if seed < 0:
            raise ConfigTypeError("--seed", f"expected a nonnegative integer, got {seed}")
        effective_seed = seed

    url = remote_url or env.get(ENV_REMOTE_URL) or config.remote.url
    api_key = env.get(ENV_REMOTE_API_KEY) or config.remote.api_key
    backend = RemoteBackend.new(url, api_key, config.remote.timeout_ms)

    logger.debug("effective seed %d, remote backend mode %s", effective_seed, backend.mode)
    return EffectiveSettings(seed=effective_seed, remote=backend)
