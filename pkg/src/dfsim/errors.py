"""Exception types shared across the package."""


class DfsimError(Exception):
    """Base class for all package-specific errors."""


class NonDiagonalizableError(DfsimError):
    """Raised for eigenbasis queries at mu = 0, where the single-particle
    jump matrix is defective and no biorthogonal eigenbasis exists."""


class RankDeficiencyError(DfsimError):
    """Raised when orthogonalization encounters (numerically) dependent input."""


class NumericalError(DfsimError):
    """Raised when a numerical invariant is violated (e.g. trace drift or
    negative eigenvalues during integration, usually a sign that dt is too
    large), or when a closed-form evaluation leaves the representable range."""


class ConfigError(DfsimError):
    """Raised for malformed or inconsistent experiment configuration."""
