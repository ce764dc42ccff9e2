"""Exception types shared across the package.

The CLI maps these to distinct exit codes, so keep the hierarchy flat and
stable: one class per failure category.
"""


class QkdPlanError(Exception):
    """Base class for all package-specific failures."""


class InfeasibleDistanceError(QkdPlanError):
    """A link distance where the secret-key rate is zero (or a scenario
    that requires such a distance)."""


class NumericalFailureError(QkdPlanError):
    """Quadrature, minimization or fixed-point iteration did not converge.

    Carries the best estimate obtained so far in ``best_estimate`` (may be
    None when no meaningful partial result exists).
    """

    def __init__(self, message: str, best_estimate: float | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate


class UnsupportedModelError(QkdPlanError):
    """Operation requires a link-model variant it does not support."""


class ConfigError(QkdPlanError):
    """Scenario configuration file is malformed or violates an invariant.

    ``path`` is the dotted field path (e.g. "link.lambda_qkd") when known.
    """

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path
