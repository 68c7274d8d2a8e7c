"""Exception hierarchy shared across the package."""


class FrmRiskError(Exception):
    """Base class for all errors raised by frm_risk."""


class ConfigError(FrmRiskError):
    """Malformed configuration (unknown keys, bad types, bad schema)."""


class InvalidParameter(FrmRiskError):
    """Parameter outside its admissible range."""


class DimensionMismatch(FrmRiskError):
    """Operands have incompatible shapes."""


class NonSquare(FrmRiskError):
    """Square matrix required."""


class NotConverged(FrmRiskError):
    """Iterative routine exhausted its budget."""


class NotPsd(FrmRiskError):
    """Matrix is not positive semidefinite within tolerance."""


class SingularResolvent(FrmRiskError):
    """Resolvent denominator hit zero or went negative."""


class NoBracket(FrmRiskError):
    """Root finder could not straddle the target after interval expansion."""


class NotMonotone(FrmRiskError):
    """Root finder observed contradictory signs for a supposedly monotone map."""


class DivisionByZero(FrmRiskError):
    """Denominator is exactly zero."""


class RegimeError(FrmRiskError):
    """Estimator invoked outside its dimensional regime."""


class InterpolationSingularity(FrmRiskError):
    """Risk denominator vanished: the configuration sits at the interpolation threshold."""


class IllConditioned(FrmRiskError):
    """Linear system solve failed or left an unacceptable residual."""
