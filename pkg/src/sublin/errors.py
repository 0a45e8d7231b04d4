"""Exception taxonomy shared across the package.

The CLI maps these onto its exit-code contract: configuration/domain
problems exit with 2, numeric-hypothesis failures with 3.
"""

from __future__ import annotations


class SublinError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SublinError):
    """Invalid configuration: bad parameters, unusable grids, unsupported combos."""


class DomainError(ConfigError):
    """An operation was called outside its mathematical domain."""


class NumericsError(SublinError):
    """A numeric procedure failed or a quantitative hypothesis does not hold.

    Examples: threshold scan does not stabilize, quadrature divergence,
    covariance embedding produces negative eigenvalues, noise-condition
    checks fail for the requested kernel.
    """
