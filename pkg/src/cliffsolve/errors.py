"""Exception hierarchy shared by every module."""


class CliffsolveError(Exception):
    """Base class for all library errors."""


class SignatureError(CliffsolveError, ValueError):
    """Incompatible or unsupported metric signature."""


class ParseError(CliffsolveError, ValueError):
    """Malformed multivector literal."""


class TetradError(CliffsolveError, ValueError):
    """Tetrad fails to preserve the metric, or has the wrong shape."""


class ParityError(CliffsolveError, ValueError):
    """Operator or system breaks the requested even/odd grading."""


class MembershipError(CliffsolveError, ValueError):
    """Element is not in the required set (ideal, Lie algebra, ...)."""


class FriedrichsError(CliffsolveError):
    """System is not symmetric hyperbolic in the Friedrichs sense."""


class CFLError(CliffsolveError):
    """Time step exceeds the CFL bound."""


class NonFiniteError(CliffsolveError, FloatingPointError):
    """Evolution produced NaN or inf."""


class ConfigError(CliffsolveError, ValueError):
    """Run configuration is invalid or references unknown names."""
