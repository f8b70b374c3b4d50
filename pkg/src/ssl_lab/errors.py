"""Exception types raised across the package."""


class SSLError(Exception):
    """Base class for all package errors."""


class OutlierNode(SSLError, ValueError):
    """A node has zero degree, so the normalized Laplacian is undefined."""

    def __init__(self, nodes):
        self.nodes = list(nodes)
        super().__init__(f"nodes with zero degree: {self.nodes[:10]}"
                         + (" ..." if len(self.nodes) > 10 else ""))


class ContractViolation(SSLError, ValueError):
    """An input breaks a documented precondition (symmetry, orthonormality, ...)."""


class ParameterError(SSLError, ValueError):
    pass


class ConvergenceError(SSLError, RuntimeError):
    """Newton iteration hit its iteration cap.

    The last iterate and its gradient norm are kept for inspection.
    """

    def __init__(self, message, x=None, grad_norm=None, iterations=None):
        super().__init__(message)
        self.x = x
        self.grad_norm = grad_norm
        self.iterations = iterations


class IllConditioned(SSLError, RuntimeError):
    """The labelled covariance submatrix is numerically singular.

    Solving with a rank-truncated covariance (``solve_truncated``) is the
    usual way out.
    """


class SizeError(SSLError, ValueError):
    pass
