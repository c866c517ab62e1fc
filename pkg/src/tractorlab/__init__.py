"""tractorlab: exact Killing tensors and commuting symmetries of the Laplacian
on constant-curvature model spaces, built on tractor calculus.

All computations are carried out in exact rational-function arithmetic; every
claimed identity is verified as an identity of canonical forms, never
numerically.
"""

__version__ = "0.1.0"

from .exactfield import Rat, Poly, RatFun, FieldError, PoleError  # noqa: F401
