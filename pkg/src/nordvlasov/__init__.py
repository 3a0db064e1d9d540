"""Numerical toolkit for the Nordstrom-Vlasov system.

1D coupled solver with conservation diagnostics, a 3D homogeneous blow-up
integrator and the 3D lightcone-representation kernels.
"""
__version__ = "0.1.0"
