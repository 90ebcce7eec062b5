"""Exceptions shared across the package."""


class TrainingDivergedError(RuntimeError):
    """A loss went non-finite mid-training; carries where and what."""


class MalformedFileError(ValueError):
    """A dataset, embedding, or curve file does not parse."""
