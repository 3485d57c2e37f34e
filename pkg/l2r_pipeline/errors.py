# -*- coding: utf-8 -*-
"""Exception hierarchy shared by every stage of the pipeline."""


class PipelineError(Exception):
    """Base class of all errors raised by l2r_pipeline."""


class ContractViolation(PipelineError, ValueError):
    """A caller broke a documented precondition (shape, range, finiteness)."""


class ConfigError(PipelineError):
    """The configuration file or an override could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TrackGenerationError(PipelineError):
    """No valid track could be produced inside the rejection budget."""

    def __init__(self, seed, attempts, reason=''):
        super().__init__(
            f"track generation failed for seed={seed} after {attempts} attempts"
            + (f" (last rejection: {reason})" if reason else '')
        )
        self.seed = seed
        self.attempts = attempts


class InsufficientDataError(PipelineError):
    """A collection stage produced fewer samples than the next stage needs."""


class DegenerateDataError(InsufficientDataError):
    """Collected samples carry no variation to learn from."""


class CollectionError(PipelineError):
    """A rollout collection produced no usable episode."""


class ExplorationFailure(PipelineError):
    """Correction exploration ended without a single good transition."""


class TrainingFailure(PipelineError):
    """A model did not reach its quality floor within the epoch budget."""

    def __init__(self, message, loss_curve=()):
        super().__init__(message)
        self.loss_curve = list(loss_curve)


class NumericalFailure(PipelineError):
    """A loss or gradient became non-finite."""

    def __init__(self, message, batch_index=None):
        if batch_index is not None:
            message = f"{message} (batch {batch_index})"
        super().__init__(message)
        self.batch_index = batch_index


class AdaptationError(PipelineError):
    """Speed adaptation finished without completing a single run."""

    def __init__(self, message, telemetry=()):
        super().__init__(message)
        self.telemetry = list(telemetry)


class ChecksumMismatch(PipelineError):
    """An artifact's stored checksum does not match its content."""

    def __init__(self, path, expected=None, actual=None):
        message = f"checksum mismatch for {path}"
        if expected is not None:
            message += f" (expected {expected[:12]}…, got {actual[:12] if actual else None}…)"
        super().__init__(message)
        self.path = path


class MissingArtifactError(PipelineError):
    """An artifact needed by a command has not been produced yet."""

    def __init__(self, stage, path):
        super().__init__(f"missing artifact {path}: run the '{stage}' stage first")
        self.stage = stage
        self.path = path


class StageError(PipelineError):
    """A pipeline stage failed; wraps the original cause."""

    def __init__(self, stage, cause, telemetry_path=None):
        message = f"stage '{stage}' failed: {type(cause).__name__}: {cause}"
        if telemetry_path:
            message += f" (telemetry: {telemetry_path})"
        super().__init__(message)
        self.stage = stage
        self.cause = cause
        self.telemetry_path = telemetry_path
