"""Multi-time observable correlation functions in chaotic quantum systems.

Exact dense-matrix dynamics for spin chains and random-matrix models,
coarse-grained eigenstate profiles with Lorentzian/Gaussian fits, and the
analytic decay predictions built from powers of the profile's Fourier
transform.
"""

__version__ = "0.1.0"

from chaoscorr.errors import NumericError, ValidationError

__all__ = ["NumericError", "ValidationError", "__version__"]
