"""Exception types shared across the package."""


class IsoflowError(Exception):
    """Base class for all isoflow-specific failures."""


class InvalidProfile(IsoflowError):
    """A profile curve violates its structural invariants."""


class ImmersionLost(IsoflowError):
    """Discrete immersion condition failed (degenerate node or spacing collapse)."""


class DegenerateDenominator(IsoflowError):
    """Multiplier denominator fell below its floor (mean curvature nearly constant)."""


class ZeroVolume(IsoflowError):
    """Enclosed volume vanished; the constraint direction is undefined."""


class ConstantMeanCurvature(IsoflowError):
    """Initial datum has (numerically) constant mean curvature and is rejected."""


class ProjectionFailed(IsoflowError):
    """Isoperimetric projection could not bracket a root within the drift bound."""


class BracketingFailed(IsoflowError):
    """Scalar root bracketing failed."""


class ConfigError(IsoflowError):
    """Run-configuration file is malformed."""


class CoefficientMismatch(IsoflowError):
    """Expanded certificate polynomial disagrees with the published coefficients."""


class OddTermPresent(IsoflowError):
    """Polynomial expected to be even has a nonzero odd-degree coefficient."""


class ZeroPolynomial(IsoflowError):
    """Operation undefined for the zero polynomial."""
