"""Python bindings for the edit-suggest C++ core."""

import json

from ._core import (
    CheckpointError,
    DatasetError,
    ImageEditRecord,
    UserRecordSet,
    align_proposals,
    checkpoint_kind,
    default_output_dir,
    generate,
    jsd_bits,
    load_dataset,
    oracle_loglik,
    preset_config,
    preset_names,
    run_cli,
    save_dataset,
)


def preset(name, seed=0):
    """Preset generator config as a dict."""
    return json.loads(preset_config(name, seed))


def generate_users(config):
    """Generate users from a config dict or JSON string."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return generate(config)


__all__ = [
    "CheckpointError",
    "DatasetError",
    "ImageEditRecord",
    "UserRecordSet",
    "align_proposals",
    "checkpoint_kind",
    "default_output_dir",
    "generate",
    "generate_users",
    "jsd_bits",
    "load_dataset",
    "oracle_loglik",
    "preset",
    "preset_config",
    "preset_names",
    "run_cli",
    "save_dataset",
]
