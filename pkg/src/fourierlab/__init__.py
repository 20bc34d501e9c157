"""Numerical checks of cyclic derivations on Fourier algebras.

Modules: ``funcexpr`` (test vectors), ``quadrature`` (integration with error
certificates), ``axb``, ``heis`` and ``su2`` (coefficient functions and
derivations on each group), ``decomp`` (decomposition identities),
``corpus`` (seeded inputs), ``suites`` and ``cli`` (the verification tool).
"""

__version__ = "0.1.0"
