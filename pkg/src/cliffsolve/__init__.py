"""Clifford-algebra genforms, Friedrichs symmetric hyperbolic systems and
finite-difference Cauchy solvers for model Dirac and Dirac-Hestenes equations."""

from cliffsolve.clifford_core import Multivector, Signature, parse_multivector

__version__ = "0.1.0"

__all__ = ["Multivector", "Signature", "parse_multivector", "__version__"]
