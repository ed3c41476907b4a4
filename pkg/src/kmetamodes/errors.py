"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class KMetamodesError(Exception):
    exit_code = 1


class ConfigError(KMetamodesError):
    exit_code = 2


class SchemaError(KMetamodesError):
    exit_code = 3


class RowError(KMetamodesError):
    exit_code = 4


class ModelError(KMetamodesError):
    exit_code = 5


class DistanceError(KMetamodesError):
    exit_code = 6


class InitError(KMetamodesError):
    exit_code = 7


class SamplingError(KMetamodesError):
    exit_code = 8


class ScoringError(KMetamodesError):
    exit_code = 9


class MetricError(KMetamodesError):
    exit_code = 10


class IngestError(KMetamodesError):
    exit_code = 11


class PipelineError(KMetamodesError):
    """Wraps a failure in one pipeline stage; keeps the original exit code."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
