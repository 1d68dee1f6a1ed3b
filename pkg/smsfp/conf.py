"""
Reconstruction settings: project defaults from ``settings.SMSFP`` with a JSON
overlay, validated by the DRF configuration serializers.
"""

import copy
from pathlib import Path

from django.conf import settings

from .exceptions import InvalidInputError
from .imageio import read_json
from .serializers import ReconstructionConfigSerializer


def default_config_data():
    return copy.deepcopy(settings.SMSFP["RECONSTRUCTION"])


def merge(base, overlay):
    """Recursively overlay ``overlay`` onto a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def build_config(overrides=None):
    serializer = ReconstructionConfigSerializer(data=merge(default_config_data(), overrides or {}))
    if not serializer.is_valid():
        raise InvalidInputError(f"invalid configuration: {dict(serializer.errors)}")
    return serializer.config


def load_config(path=None, **overrides):
    """Config from the defaults, an optional JSON file and keyword overrides."""
    data = {}
    if path:
        if not Path(path).is_file():
            raise InvalidInputError(f"config file {path} does not exist")
        data = read_json(path)
        if not isinstance(data, dict):
            raise InvalidInputError(f"{path} must hold a JSON object")
    return build_config(merge(data, overrides))


def cli_defaults():
    return dict(settings.SMSFP["CLI"])
