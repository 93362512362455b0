"""Exception types shared across the package.

The CLI maps these onto process exit codes, so the split matters:
ConfigError -> 1 (usage / configuration), HardwareError -> 2 (machine
prerequisites), ValidationError -> 3 (accuracy threshold exceeded).
"""


class ConfigError(ValueError):
    """Invalid configuration, grid, or input file."""


class HardwareError(RuntimeError):
    """The machine cannot run the requested measurement (cores, pinning, timer)."""


class ValidationError(RuntimeError):
    """Measured data disagrees with predictions beyond the allowed threshold."""
