from typing import Optional


class LossySyncError(Exception):
    """Base class for every error raised by the simulator"""


class ShardLayoutError(LossySyncError, ValueError):
    pass


class ConfigError(LossySyncError, ValueError):

    def __init__(self, message: str, fields: Optional[list] = None):
        super().__init__(message)
        self.fields = fields or []


class MessageError(LossySyncError, ValueError):
    pass


class ComparisonError(LossySyncError, ValueError):
    pass


class NonFiniteError(LossySyncError, ArithmeticError):

    def __init__(self, message: str, iteration: Optional[int] = None, worker: Optional[int] = None):
        context = []
        if iteration is not None:
            context.append(f"iteration={iteration}")
        if worker is not None:
            context.append(f"worker={worker}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)
        self.iteration = iteration
        self.worker = worker


class IterationError(LossySyncError, RuntimeError):

    def __init__(self, message: str, iteration: int, phase: str):
        super().__init__(f"Iteration {iteration} [{phase}]: {message}")
        self.iteration = iteration
        self.phase = phase
