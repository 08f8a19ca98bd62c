"""Exception types shared across the package.

Argument and shape problems raise plain ``ValueError``; re-running a
consumed backward pass raises ``RuntimeError``. Only the two error kinds
that the CLI maps to dedicated exit codes get their own classes.
"""


class ConfigError(Exception):
    """Invalid configuration value, key, or regime/parameter combination."""


class DataFormatError(Exception):
    """Corrupt or mismatched on-disk dataset/checkpoint content."""
