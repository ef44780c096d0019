"""Numerical laboratory for the unitary almost Mathieu operator.

The operator is the quasi-periodic quantum walk ``W = S_{l1} Q_{l2,omega,theta}``
written in extended CMV form ``W = L M``.  Submodules:

``model``         Verblunsky coefficients, finite windows, walk application
``cocycles``      Szego / Gesztesy-Zinchenko / standard cocycles, Lyapunov exponents
``determinants``  box determinants, sine-polynomial structure, Green's functions
``arithmetic``    continued fractions, Diophantine and resonance diagnostics
``spectral``      truncated spectra, eigenfunction decay, localization certificates
``harness``       command line interface and CSV/JSON tables
"""

from uamo.model import ModelParams, build_window, verblunsky_pair

__all__ = ["ModelParams", "build_window", "verblunsky_pair"]
__version__ = "0.1.0"
