"""Exception hierarchy shared by every module."""


class RobustcorError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class InvalidInputError(RobustcorError, ValueError):
    pass


class ValidationError(InvalidInputError):
    """A file or table failed validation.

    ``problems`` holds one human-readable message per offending row so that
    callers can report all of them at once.
    """

    def __init__(self, message, problems=()):
        self.problems = list(problems)
        if self.problems:
            message = message + "\n" + "\n".join("  " + p for p in self.problems)
        super().__init__(message)


class LoadError(ValidationError):
    pass


class StratificationError(InvalidInputError):
    pass


class NoWitnessError(RobustcorError):
    """The runner-up class has zero mass, so no finite perturbation ties it."""


class NoFlipPossibleError(RobustcorError):
    """Only one class carries mass in the column; no finite perturbation flips it."""


class ExperimentError(RobustcorError):
    def __init__(self, message, split_index=None, stage=None):
        self.split_index = split_index
        self.stage = stage
        prefix = []
        if split_index is not None:
            prefix.append(f"split {split_index}")
        if stage is not None:
            prefix.append(f"stage {stage}")
        if prefix:
            message = f"[{', '.join(prefix)}] {message}"
        super().__init__(message)
