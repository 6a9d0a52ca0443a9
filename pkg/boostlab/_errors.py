#####################################
# ERRORS : boostlab exception types #
#####################################
__all__ = [
    'BoostLabError',
    'ParameterDomainError',
    'ConfigError',
    'NoEquilibriumError',
    'ControlDomainError',
    'NotApplicableError',
    'NotHurwitzError',
    'DegenerateDoaError',
    'StiffnessError',
]


class BoostLabError(Exception):
    """
    Base class of every error raised by this package.

    Note:
        The ``exit_code`` attribute is what the command line returns when the error reaches it.
    """
    exit_code = 3


class ParameterDomainError(BoostLabError, ValueError):
    """ A parameter is non-finite or violates its invariants (eg. L <= 0, alpha outside (0,1)). """
    exit_code = 2


class ConfigError(BoostLabError):
    """ An experiment configuration could not be parsed or validated. """
    exit_code = 2


class NoEquilibriumError(BoostLabError):
    """
    The existence condition d1*d2 < 1/(4y*^2) does not hold.

    Args:
        message (str):
            Error message
        margin (float, optional):
            Value of 1/(4y*^2) - d1*d2, which is non-positive when this error is raised
    """
    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class ControlDomainError(BoostLabError, ValueError):
    """ A control law was evaluated outside of the states where it is defined. """


class NotApplicableError(BoostLabError):
    """ An analysis was requested for a regime it does not cover (eg. gain conditions with d1 = 0). """


class NotHurwitzError(BoostLabError):
    """
    A linearization is not Hurwitz, so no quadratic Lyapunov function exists for it.

    Args:
        message (str):
            Error message
        report (StabilityReport, optional):
            Routh-Hurwitz report explaining which condition failed
    """
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateDoaError(BoostLabError):
    """ No level set above the search floor passed the sampled decrease test. """


class StiffnessError(BoostLabError):
    """
    The adaptive integrator could not make progress (step size underflow or non-finite state).

    Args:
        message (str):
            Error message
        partial (Trajectory, optional):
            Samples that were computed before the failure
    """
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
