"""
Graphene bands and the interband coupling
=========================================

Nearest-neighbour tight binding with the C-C bond along x. We walk the
Gamma-K-M-Gamma path, check the Dirac cone, and watch the interband
coupling blow up as we approach K.
"""

import numpy as np

from trdiff import graphene as gr
from trdiff.units import UNITS

lat = gr.Lattice(UNITS.length_to_au(2.46))
t_hop = -UNITS.energy_to_au(2.7)

# band energies along the high-symmetry path, in eV
pts, dist = gr.bz_path(lat, 40)
eps, _ = gr.band_states(lat, t_hop, pts)
eps_eV = UNITS.energy_from_au(eps)
print("bandwidth at Gamma: %.3f eV" % (eps_eV[0, 1] - eps_eV[0, 0]))
print("smallest gap on the path: %.2e eV" % np.min(eps_eV[:, 1] - eps_eV[:, 0]))

# the two Bragg spots used for diffraction
for hk in [(1, 1), (1, -1)]:
    S = gr.bragg_vector(lat, *hk)
    print("spot %s: S = (%.4f, %.4f) 1/bohr" % (hk, S[0], S[1]))

# Dirac cone: the interband coupling grows like 1/|p - K|
K = lat.dirac_points()[0]
for q in [0.1, 0.03, 0.01, 0.003]:
    d = gr.interband_coupling(lat, t_hop, K + [q, 0.0])
    print("|p-K| = %6.3f   |d_cv| = %8.3f   q|d_cv| = %.4f" % (q, np.linalg.norm(d), q * np.linalg.norm(d)))
