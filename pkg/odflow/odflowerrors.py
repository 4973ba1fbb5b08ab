""" Base Exception classes

"""


class OdflowError(Exception):
    """Base Exception class
    """
    pass


class NetworkError(OdflowError):
    """ Exception for invalid topologies and malformed edge lists

    Parameters:
    -----------
    message: str
        Error message
    line: int, optional
        Line of the edge-list document the error was found on
    """
    def __init__(self, message, line=None):
        if line is None:
            OdflowError.__init__(self, message)
        else:
            OdflowError.__init__(self, "line %i : %s" % (line, message))
        self.line = line
        self.message = message


class FlowError(OdflowError):
    """ Inconsistent flow series, tensors or conversion inputs
    """
    pass


class ConfigError(OdflowError):
    """ Invalid generator, solver or experiment configuration
    """
    pass


class SolverError(OdflowError):
    """ Solver failures
    """
    pass


class PreconditionError(SolverError):
    """ Solver inputs that cannot be solved as given: shapes, horizons,
    supports or initial values that do not match the path set
    """
    pass


class ProjectionError(SolverError):
    """ Exception for assignment polytopes that cannot be projected on

    Parameters:
    -----------
    origin: int
        0-based node id of the offending origin, None if global
    message: str
        Error message
    """
    def __init__(self, message, origin=None):
        if origin is None:
            SolverError.__init__(self, message)
        else:
            SolverError.__init__(self,
                                 "origin %i : %s" % (origin + 1, message))
        self.origin = origin
        self.message = message


class MetricsError(OdflowError):
    pass


class InputError(OdflowError):
    """ Missing or unreadable input files and directories
    """
    pass
