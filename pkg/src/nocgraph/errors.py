"""Exception types raised across the toolkit."""


class NocGraphError(Exception):
    """Base class for all toolkit errors."""


class MalformedEdgeList(NocGraphError):
    def __init__(self, path, line_number, message):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {message}")


class MissingWeight(MalformedEdgeList):
    pass


class InsufficientSupport(NocGraphError):
    pass


class NonPositiveSlope(NocGraphError):
    pass


class EmptyGraph(NocGraphError):
    pass


class NegativeWeight(NocGraphError):
    pass


class InvalidSource(NocGraphError):
    pass


class UnmappedEdge(NocGraphError):
    pass


class UnmappedVertex(NocGraphError):
    pass


class ZeroClusters(NocGraphError):
    pass


class CapacityTooSmall(NocGraphError):
    pass


class TraceMismatch(NocGraphError):
    pass


class Infeasible(NocGraphError):
    pass


class UnplacedShard(NocGraphError):
    pass


class ConfigError(NocGraphError):
    """Config could not be read or parsed at all."""


class PipelineError(NocGraphError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
