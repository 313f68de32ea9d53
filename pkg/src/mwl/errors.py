"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class MWLError(Exception):
    exit_code = 1


class CoverageError(MWLError):
    """The vertex set could not be certified as an epsilon-cover."""

    exit_code = 2


class DisconnectedGraphError(MWLError):
    """The approximation graph has more than one component or an isolated vertex."""

    exit_code = 3

    def __init__(self, message, component_sizes=()):
        super().__init__(message)
        self.component_sizes = list(component_sizes)


class StorageError(MWLError):
    exit_code = 4


class ParseError(MWLError):
    exit_code = 5


class PreconditionError(MWLError, ValueError):
    exit_code = 6


class MeasureError(PreconditionError):
    """A Voronoi cell received no Monte Carlo samples."""

    def __init__(self, message, empty_vertices=()):
        super().__init__(message)
        self.empty_vertices = list(empty_vertices)
