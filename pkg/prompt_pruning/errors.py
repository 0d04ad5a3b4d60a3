"""
Exception hierarchy for the prompt pruning toolkit.

Every error carries the process exit code the command-line interface uses
when it reaches the top level.
"""

from typing import Optional


class PromptPipelineError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1

    def __init__(self, message: str, phase: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.phase = phase

    def with_phase(self, phase: str) -> "PromptPipelineError":
        """Tag the error with the pipeline phase it escaped from"""
        if self.phase is None:
            self.phase = phase
        return self

    def __str__(self) -> str:
        if self.phase:
            return f"[{self.phase}] {self.message}"
        return self.message


# Validation family (exit code 2)

class ValidationError(PromptPipelineError, ValueError):
    exit_code = 2


class GraphParseError(ValidationError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class GraphValidationError(ValidationError):
    pass


class HeterogeneityError(GraphValidationError):
    pass


class DimensionError(ValidationError):
    pass


class ContractError(ValidationError):
    pass


class EmptyReadoutError(ValidationError):
    pass


class MissingClassError(ValidationError):
    pass


class PartitionError(ValidationError):
    pass


class NoNegativeError(ValidationError):
    pass


class TaskConstructionError(ValidationError):
    pass


class SpecError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NodeIndexError(ValidationError, IndexError):
    pass


class CheckpointError(ValidationError):
    """Checkpoint file that reads fine but is not a usable encoder"""


# Numeric / training family (exit code 3)

class NumericError(PromptPipelineError, ArithmeticError):
    exit_code = 3

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class DegenerateVectorError(NumericError):
    pass


class TrainingError(PromptPipelineError):
    exit_code = 3

    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message if epoch is None else f"epoch {epoch}: {message}")
        self.epoch = epoch


# I/O family (exit code 4)

class PipelineIOError(PromptPipelineError, OSError):
    exit_code = 4
