"""
Free-electron scattering scales and form factors
================================================

The building blocks: Rutherford and Thomson prefactors, the form factor
of a sampled density, and the photon-number factor of x-ray scattering.
"""

import numpy as np

from trdiff.fock import xray_transition_element
from trdiff.units import ALPHA
from trdiff.xsec import DensityGrid, ProbeGeometry, form_factor, rutherford_prefactor, thomson_prefactor

# Rutherford: 1 / (16 E^2 sin^4(theta/2))
for theta in [0.1, 0.5, 1.0, np.pi]:
    print("theta = %.2f   Rutherford = %.4e" % (theta, rutherford_prefactor(0.5, theta)))

# Thomson: vanishes along the incoming polarization
z = [0.0, 0.0, 1.0]
for ks in [[0, 0, 1], [1, 0, 0], [0, 1, 0]]:
    g = ProbeGeometry(z, ks, 1.0, [1, 0, 0])
    print("k_s = %s   Thomson / alpha^4 = %.3f" % (ks, thomson_prefactor(g) / ALPHA**4))

# a Gaussian charge cloud of width 1 bohr on a 32^3 grid
n, L = 32, 12.0
x = (np.arange(n) - n // 2) * (L / n)
X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
rho = np.exp(-(X**2 + Y**2 + Z**2) / 2) / (2 * np.pi) ** 1.5
grid = DensityGrid(rho, np.eye(3) * L, [x[0]] * 3)
for s in [0.0, 1.0, 2.0]:
    print("|s| = %.1f   F = %.6f   exact %.6f" % (s, form_factor(grid, [0, 0, s]).real, np.exp(-s * s / 2)))

# stimulated x-ray scattering grows like sqrt(n) with photon number
for n_in in [1, 4, 9]:
    print("n = %d   element = %.4f" % (n_in, xray_transition_element(n_in)))
