"""Exception hierarchy shared across the package."""


class ParetoConsensusError(Exception):
    """Base class for every error raised by this package."""


class GraphError(ParetoConsensusError, ValueError):
    pass


class SelfLoopError(GraphError):
    pass


class AgentIndexError(GraphError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class DimensionError(ParetoConsensusError, ValueError):
    pass


class PriorityError(ParetoConsensusError, ValueError):
    pass


class ConsensusGainError(ParetoConsensusError, ValueError):
    def __init__(self, c, max_degree):
        self.c = c
        self.upper = 1.0 / max_degree
        super().__init__(
            f"consensus gain c={c!r} outside the open interval (0, {self.upper!r}) = (0, 1/max_degree)"
        )


class ObjectiveError(ParetoConsensusError, ValueError):
    pass


class NotConvexError(ObjectiveError):
    pass


class NotQuadraticError(ObjectiveError):
    pass


class SingularProblemError(ObjectiveError):
    pass


class IterationCapError(ParetoConsensusError, RuntimeError):
    """Raised by iterative oracles that stop before reaching tolerance."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SpanMismatchError(ParetoConsensusError, ValueError):
    pass


class EngineError(ParetoConsensusError, RuntimeError):
    pass


class NonFiniteError(EngineError):
    def __init__(self, agent, coord, k):
        self.agent, self.coord, self.k = agent, coord, k
        super().__init__(f"non-finite iterate for agent {agent}, coordinate {coord} at k={k}")


class StepCapError(EngineError):
    def __init__(self, agent, k, norm, cap):
        self.agent, self.k, self.norm, self.cap = agent, k, norm, cap
        super().__init__(f"agent {agent} gradient step norm {norm:.6g} exceeds L1={cap:.6g} at k={k}")


class ConfigError(ParetoConsensusError, ValueError):
    pass


class ScenarioError(ConfigError):
    """Scenario file problem, anchored to a field path and optionally a line."""

    def __init__(self, message, field=None, line=None):
        self.field, self.line = field, line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
