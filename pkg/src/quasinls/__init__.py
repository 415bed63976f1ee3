"""Wave-packet (NLS) approximation toolkit for quasilinear dispersive systems.

The modelled system is ``d_t u = -i omega v``, ``d_t v = -i omega u - i rho u^2``
with odd real Fourier symbols ``omega`` and ``rho``.
"""

from .analysis import NLSCoefficients, check_conditions, nls_coefficients, scan_resonances
from .spectral import FieldPair, SpectralField, SpectralGrid, make_grid, sobolev_norm
from .symbols import DispersionSymbol, builtin, eval_derivative, verify_hypotheses

__version__ = "0.1.0"
