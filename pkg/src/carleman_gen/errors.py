"""Exception types shared across the package."""

from __future__ import annotations


class CarlemanError(Exception):
    """Base class for all package errors."""


class DivergenceError(CarlemanError):
    """A series failed to settle: the sequence does not grow fast enough at this argument."""


class IndexExhaustedError(CarlemanError):
    """A custom log-table ran out before the requested computation could finish."""


class UnsupportedPresetError(CarlemanError):
    """No closed-form proxy is available for the sequence."""


class OrbitOverflowError(CarlemanError):
    """An orbit coordinate exceeds the double-precision exponent range."""


class MissingWitnessError(CarlemanError):
    """An inequality check was requested without the constants it needs."""


class NoDivergenceError(CarlemanError):
    """A conclusion was requested from a demonstration that did not diverge."""


class ConfigError(CarlemanError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
