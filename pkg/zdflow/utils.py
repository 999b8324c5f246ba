# -*- coding: utf-8 -*-
"""
This module contains utility functions for the package: environment variables, settings, json files and timing.
"""
import copy
import functools
import hashlib
import json
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, TypeVar, Union

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

# Generic type, used for static type checking
T = TypeVar("T", str, bool, int, float)

PACKAGE_ROOT = Path(__file__).parent.parent
DEFAULT_SETTINGS_FILE = PACKAGE_ROOT / "configs" / "settings.json"

DEFAULT_SETTINGS = {
    "gfp": {"max_modulus": 97},
    "finder": {"batched": True},
    "meas": {"reference_shift": 0},
    "oracle": {
        "max_vertices": 6,
        "max_modulus": 5,
        "parallel_threshold": 512,
        "scheduler": "threads",
    },
    "sim": {
        "seed": 0,
        "draws": 20,
        "input_states": 5,
        "max_branches": 729,
        "max_lowersets": 64,
        "tolerance": 1e-9,
        "unitary_tolerance": 1e-10,
        "parallel": False,
    },
}


def get_env_variable(var_name: str, default: T = None, allow_empty: bool = False, cast_to: T = str) -> T:
    """
    Reads an environment variable, with settings to allow defaults, empty values, and type casting
    To read a boolean EXAMPLE_ENV_VAR=False use get_env_variable("EXAMPLE_ENV_VAR", cast_to=bool)

    :param var_name: The name of the environment variable to retrieve.
    :param default: Default return value if the environment variable does not exist.
    :param allow_empty: If False then a KeyError will be raised if the environment variable is empty.
    :param cast_to: The type to cast to eg. str, int, or bool
    :return: The environment variable, or default if it does not exist, as type T.
    :raises: KeyError if allow_empty is False and the environment variable is empty string or None
    :raises: ValueError if cast_to is not compatible with the value stored.
    """
    env_var = os.getenv(var_name, default)
    if not allow_empty and env_var in (None, ""):
        raise KeyError(f"Environment variable {var_name} not set, and allow_empty is False")
    if env_var is None:
        return None
    return _cast_str(env_var, cast_to)


def _cast_str(str_to_cast: Union[str, T], cast_to: T) -> T:
    """
    Casts a string to int, float or bool. Bool accepts the case-insensitive sets {"true", "t", "1"}
    and {"false", "f", "0"}, anything else is a ValueError. Non-string values pass through the cast unchanged.
    """
    if not isinstance(str_to_cast, str):
        return cast_to(str_to_cast)
    if cast_to == bool:
        truth_values = {"true", "t", "1"}
        false_values = {"false", "f", "0"}
        if str_to_cast.lower() in truth_values:
            return True
        elif str_to_cast.lower() in false_values:
            return False
        raise ValueError(f"{str_to_cast} being casted to bool but is not in {truth_values} or {false_values}")
    return cast_to(str_to_cast)


def _merge(base: dict, update: dict) -> dict:
    """recursively overlay update onto a copy of base."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@functools.lru_cache(maxsize=8)
def _load_settings_file(path: str) -> dict:
    with open(path, "r") as f:
        settings = json.load(f)
    logger.debug(f"Loaded settings from {path}")
    return settings.get("default", settings)


def settings_path(path: Union[str, Path] = None) -> Union[Path, None]:
    """
    Resolve the settings file: the explicit path, else SETTINGS_FILE, else configs/settings.json if present.
    """
    if path is not None:
        return Path(path)
    env_path = get_env_variable("SETTINGS_FILE", allow_empty=True)
    if env_path:
        return Path(env_path)
    if DEFAULT_SETTINGS_FILE.exists():
        return DEFAULT_SETTINGS_FILE
    return None


def load_settings(path: Union[str, Path] = None) -> dict:
    """
    Built-in defaults overlaid with the "default" block of the settings file.

    :param path: settings json file; see settings_path for the fallback chain.
    :return: nested settings dictionary, a fresh copy on every call.
    """
    resolved = settings_path(path)
    if resolved is None:
        return copy.deepcopy(DEFAULT_SETTINGS)
    if not resolved.exists():
        raise FileNotFoundError(f"Settings file {resolved} does not exist.")
    return _merge(DEFAULT_SETTINGS, _load_settings_file(str(resolved.absolute())))


def get_setting(section: str, key: str, path: Union[str, Path] = None) -> Any:
    """read a single setting, e.g. get_setting("sim", "draws")."""
    settings = load_settings(path)
    try:
        return settings[section][key]
    except KeyError:
        raise KeyError(f"Unknown setting {section}.{key}")


def read_json(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_json(data: Any, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)


def file_digest(paths: Iterable[Union[str, Path]]) -> str:
    """sha256 over the bytes of the given files, in order."""
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def timeit(f):
    """timer decorator"""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        start = datetime.now()
        result = f(*args, **kwargs)
        span = datetime.now() - start
        logger.info(f"{f.__name__} runtime: {span}")
        return result

    return wrapper
