"""Time-resolved diffraction from laser-driven graphene.

Dirac and Fock algebra kernels, stationary elastic cross sections, a
two-band tight-binding graphene model with real-space matrix elements,
moving-frame density-matrix dynamics, and channel-decomposed Bragg-spot
intensities.
"""
from .units import ALPHA, UNITS

__version__ = "0.1.0"

__all__ = ["ALPHA", "UNITS", "__version__"]
