"""
    Package wide settings.

    Settings are module globals changed through setters, the same way API
    keys are usually handled. The output root can also be given through the
    ODFLOW_OUT environment variable, which wins over the built-in default
    but not over an explicit command-line value.
"""
import json
import logging
import os

from .odflowerrors import ConfigError

logger = logging.getLogger(__name__)

OUTPUT_ENV = "ODFLOW_OUT"
DEFAULT_OUTPUT_ROOT = "odflow-out"

# feasibility tolerances of C1-C5
EQUALITY_TOL = 1e-8
INEQUALITY_TOL = 1e-8

_OUTPUT_ROOT = None


def set_output_root(path):
    global _OUTPUT_ROOT
    _OUTPUT_ROOT = path


def get_output_root():
    """ Output root directory.

    An explicit set_output_root() value wins, then ODFLOW_OUT, then the
    default.
    """
    if _OUTPUT_ROOT is not None:
        return _OUTPUT_ROOT
    return os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_ROOT


def set_tolerances(equality=None, inequality=None):
    global EQUALITY_TOL, INEQUALITY_TOL
    if equality is not None:
        if equality <= 0:
            raise ConfigError("equality tolerance must be > 0")
        EQUALITY_TOL = float(equality)
    if inequality is not None:
        if inequality <= 0:
            raise ConfigError("inequality tolerance must be > 0")
        INEQUALITY_TOL = float(inequality)


def get_tolerances():
    return EQUALITY_TOL, INEQUALITY_TOL


def load_config_file(path):
    """ Reads a JSON experiment configuration.

    Parameters:
    -----------
    path: str
        Path of a JSON document whose top level is an object.

    Returns:
    --------
    dict of the decoded settings.
    """
    try:
        with open(path, "r") as f:
            content = json.load(f)
    except IOError as e:
        raise ConfigError("cannot read config file %s: %s" % (path, e))
    except ValueError as e:
        raise ConfigError("config file %s is not valid JSON: %s" % (path, e))
    if not isinstance(content, dict):
        raise ConfigError("config file %s must hold a JSON object" % path)
    logger.debug("loaded config file %s with keys %s", path, sorted(content))
    return content


def merge_settings(defaults, *layers):
    """ Layers setting dictionaries.

    Later layers win; None values in a layer mean "not given" and never
    override. Nested dictionaries are merged key by key.
    """
    merged = dict(defaults)
    for layer in layers:
        if not layer:
            continue
        for key, value in layer.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = merge_settings(merged[key], value)
            else:
                merged[key] = value
    return merged
