"""Numerical reconstruction of an archimedean positivity certificate.

Prolate spheroidal spectra at bandwidth 2*pi, the trace densities built from
them, a Toeplitz discretization of the resulting compact operator, a
finite-rank spectral model and the scalar certificate constants.
"""

__version__ = "0.1.0"

LOG2 = 0.6931471805599453
HALF_LOG2 = 0.5 * LOG2
