"""Exception hierarchy shared by all modules."""


class DistOptError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(DistOptError, ValueError):
    """Invalid parameters, incompatible inputs or malformed files."""


class NoContractionError(DistOptError):
    """Consensus weights do not contract disagreement (disconnected graph)."""


class SolverError(DistOptError):
    """A numerical solver failed where the theory guarantees success."""

    def __init__(self, message: str, round_index: int | None = None, agent: int | None = None):
        where = []
        if round_index is not None:
            where.append(f"round {round_index}")
        if agent is not None:
            where.append(f"agent {agent}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.round_index = round_index
        self.agent = agent


class InfeasibleError(SolverError):
    """A problem that must be feasible turned out infeasible."""
