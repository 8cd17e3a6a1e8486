"""Exception and warning types raised by mbcsmooth."""


class DegenerateDesignError(ValueError):
    """The local linear normal equations are numerically singular.

    Raised when, at scale ``h``, effectively all kernel mass sits on a single
    abscissa around the evaluation point. Enlarging the bandwidth usually
    resolves it.
    """

    def __init__(self, message, eval_point=None, bandwidth=None):
        super().__init__(message)
        self.eval_point = eval_point
        self.bandwidth = bandwidth


class AllDegenerateError(RuntimeError):
    """Every candidate bandwidth in a cross-validation grid scored +inf."""


class ClampEngagedWarning(UserWarning):
    """The pilot estimate came within the clamp threshold of zero at some data points."""


class GridTooCoarseError(ValueError):
    """A fitted curve does not sample the integration interval densely enough."""


class StudyFailedError(RuntimeError):
    """Too many Monte-Carlo replicates were dropped as degenerate."""


class SpectrumParseError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptySpectrumError(ValueError):
    pass
