"""Exception hierarchy shared by all subpackages."""


class BohmlabError(Exception):
    """Base class for library errors."""


class ValidationError(BohmlabError, ValueError):
    """Bad arguments or inconsistent configuration."""


class ResourceError(BohmlabError):
    """Requested grid or permutation sum exceeds the compute budget."""


class ResolutionError(ValidationError):
    """The grid or time step cannot resolve the requested state."""


class ZeroStateError(ValidationError):
    """A recipe produced the zero wavefunction."""


class OutOfDomainError(BohmlabError):
    """A particle position left the simulation box."""

    def __init__(self, message, position=None, time=None):
        super().__init__(message)
        self.position = position
        self.time = time


class NodeProximityError(BohmlabError):
    """Velocity denominator fell below the node floor."""

    def __init__(self, message, position=None, time=None):
        super().__init__(message)
        self.position = position
        self.time = time


class CoincidenceError(ValidationError):
    """Two points of an unordered configuration coincide."""


class TrajectoryAbort(BohmlabError):
    """Integration could not continue past a node or the box edge."""

    def __init__(self, message, time=None, reason=None):
        super().__init__(message)
        self.time = time
        self.reason = reason
