"""Random sparse ergodic averages on groups of polynomial growth."""

import json

from ._ergolab import (
    ConfigError,
    Error,
    Group,
    OutOfRangeError,
    Profile,
    ResourceError,
    UndefinedError,
    UsageError,
    ball,
    banach_density,
    beta_interval,
    block_probability,
    block_sequence,
    cz_check,
    moment_exact,
    partition_count,
    random_average,
    run_cli,
    sample_sequence,
    selftest,
    sphere_sizes,
)


def run(*args):
    """Runs an ergolab subcommand and returns (exit code, parsed report or None, stderr)."""
    code, out, err = run_cli([str(a) for a in args])
    report = json.loads(out) if out.lstrip().startswith("{") else None
    return code, report, err


__all__ = [
    "ConfigError",
    "Error",
    "Group",
    "OutOfRangeError",
    "Profile",
    "ResourceError",
    "UndefinedError",
    "UsageError",
    "ball",
    "banach_density",
    "beta_interval",
    "block_probability",
    "block_sequence",
    "cz_check",
    "moment_exact",
    "partition_count",
    "random_average",
    "run",
    "run_cli",
    "sample_sequence",
    "selftest",
    "sphere_sizes",
]
