"""
Density and current channels in the Bragg signal
================================================

A 1 MeV electron beam at 45 degrees probes the pumped sample. At the
[1,1] spot only the density channel survives. At [1,-1] the
density-current cross term appears and follows the field, while the
density term oscillates at twice the carrier frequency.
"""

import numpy as np

from trdiff import diffraction as df
from trdiff import graphene as gr
from trdiff import sbe
from trdiff.units import UNITS

lat = gr.Lattice(UNITS.length_to_au(2.46))
t_hop = -UNITS.energy_to_au(2.7)
pulse = sbe.LaserPulse(UNITS.field_to_au(2.5), UNITS.energy_to_au(1.55), UNITS.time_to_au(21.0))
traj = sbe.propagate(lat, t_hop, gr.make_kgrid(lat, 24), pulse,
                     sbe.PropagatorConfig(0.1, UNITS.time_to_au(10.0), 10), threads=2)

model = gr.FormFactorModel(lat, t_hop, gr.GaussianOrbital(0.45))
beam = df.BeamConfig(kinetic_eV=1e6)
print("beta = %.4f" % beam.beta)

for spot in [(1, 1), (1, -1)]:
    tr = df.diffraction_trace(traj, model, spot, beam, "general", threads=2)
    print("spot", spot)
    for ch in ["dd", "dj", "jj"]:
        v = tr.channel(ch)
        print("  %s: mean %+.4e  peak-to-peak %.3e" % (ch, v.mean(), np.ptp(v)))
    if spot == (1, -1):
        for ch in ["dd", "dj"]:
            sc = df.spectral_content(tr.times, tr.channel(ch), pulse.omega, pulse.tau / 4, 3 * pulse.tau / 4)
            print("  %s: amp(w) = %.3e  amp(2w) = %.3e" % (ch, sc.amp_omega, sc.amp_2omega))

# a finite probe washes out the carrier oscillation
dt_fs = UNITS.time_from_au(tr.times[1] - tr.times[0])
smooth = df.convolve_probe_envelope(tr.I_dj, dt_fs, 10.0)
print("dj peak-to-peak with a 10 fs probe: %.3e" % np.ptp(smooth))
