"""Exception types raised across the pipeline."""

from __future__ import annotations


class TMDError(Exception):
    """Base class for every error raised by this package."""


class EmptyFile(TMDError):
    pass


class MalformedRecord(TMDError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvalidDuration(TMDError, ValueError):
    pass


class SchemaMismatch(TMDError, ValueError):
    pass


class UnknownSensor(TMDError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class EmptyClass(TMDError):
    pass


class DegenerateSplit(TMDError):
    pass


class UnknownUser(TMDError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class EmptyNode(TMDError, ValueError):
    pass


class EmptyTrainingSet(TMDError, ValueError):
    pass


class NonFiniteFeature(TMDError, ValueError):
    pass


class TooFewSamples(TMDError, ValueError):
    pass


class EmptyTestSet(TMDError, ValueError):
    pass


class MissingClass(TMDError):
    pass


class UnknownWindowId(TMDError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class ConfigError(TMDError):
    pass
