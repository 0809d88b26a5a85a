"""Exception types shared across the package."""


class HubLabelError(Exception):
    pass


class GraphError(HubLabelError, ValueError):
    """Bad graph input (parse failures carry the offending line number)."""

    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class LengthOverflowError(GraphError):
    pass


class PerturbationError(HubLabelError):
    pass


class NonUniquePathsError(HubLabelError, ValueError):
    pass


class LabelingError(HubLabelError, ValueError):
    pass


class IntegrityError(LabelingError):
    """A stored hub distance disagrees with the true distance."""


class InfeasibleLabelingError(LabelingError):
    pass


class SolverStallError(HubLabelError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class InfeasibleSolutionError(HubLabelError, ValueError):
    pass


class KExhaustedError(HubLabelError):
    def __init__(self, k):
        super().__init__(f"boundary cap k={k} too small for this tree; retry with a larger k")
        self.k = k


class CertificateError(HubLabelError):
    """Raised if a constructed dual solution violates a constraint (a bug)."""


class SizeGuardError(HubLabelError, ValueError):
    pass
