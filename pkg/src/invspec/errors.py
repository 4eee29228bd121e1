"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration/domain problems are
usage errors (64), admissibility failures are validation errors (2),
everything numerical is a runtime failure (1).
"""


class ConfigError(ValueError):
    """A parameter is outside its documented range or files are malformed."""


class DomainError(ValueError):
    """An evaluation point lies outside the function's domain."""


class NumericsError(RuntimeError):
    """An iterative procedure failed to converge or a root was missed."""


class AdmissibilityError(RuntimeError):
    """Spectral data failed a hard admissibility requirement."""


class DataConsistencyError(RuntimeError):
    """Downstream quantities disagree beyond tolerance, so the input data
    cannot all come from a single boundary problem."""
