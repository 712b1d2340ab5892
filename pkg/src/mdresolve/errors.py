"""Exception hierarchy shared by every stage of the resolver."""


class ResolveError(Exception):
    """Base class for all errors raised by mdresolve."""


class SchemaError(ResolveError):
    pass


class IngestError(ResolveError):
    pass


class SimilarityError(ResolveError):
    pass


class MDSyntaxError(ResolveError):
    """Raised by the rule parser; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class MDValidationError(ResolveError):
    pass


class ClassifierError(ResolveError):
    pass


class DegenerateTrainingError(ClassifierError):
    """Training data cannot define a separating hyperplane (e.g. identical vectors, both labels)."""


class MatchingFunctionError(ResolveError):
    pass


class PipelineError(ResolveError):
    """Stage failure; ``stage`` names the pipeline step that aborted."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class MergeError(ResolveError):
    pass
