"""Exception hierarchy shared by all modules."""


class NavError(Exception):
    """Base class for every error raised by homotopy_nav."""


class CyclicAdjacency(NavError):
    """An obstacle group's overlap graph contains a cycle."""


class IndexOutOfRange(NavError, IndexError):
    pass


class InvalidForest(NavError):
    pass


class OutsideFreeSpace(NavError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularPoint(NavError):
    pass


class SingularStart(SingularPoint):
    pass


class InfeasibleWeights(NavError):
    pass


class InfeasiblePerturbation(InfeasibleWeights):
    pass


class InfeasibleInit(InfeasibleWeights):
    pass


class ObstacleOnLoop(NavError):
    pass


class MarkerOnPath(NavError):
    pass


class EndpointMismatch(NavError):
    pass


class NotRealizable(NavError):
    """The requested sign vector was not attained by the optimized potential."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
