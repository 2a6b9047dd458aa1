"""
Pumping graphene with a few-cycle pulse
=======================================

A 2.5 V/nm, 1.55 eV, 21 fs pulse polarized along the C-C bond drives the
two-band density matrix on a 24 x 24 zone grid. We print the conduction
population during the pulse and the net in-cell current near peak field.
"""

import numpy as np

from trdiff import graphene as gr
from trdiff import sbe
from trdiff.units import UNITS

lat = gr.Lattice(UNITS.length_to_au(2.46))
t_hop = -UNITS.energy_to_au(2.7)
pulse = sbe.LaserPulse(UNITS.field_to_au(2.5), UNITS.energy_to_au(1.55), UNITS.time_to_au(21.0))
cfg = sbe.PropagatorConfig(dt=0.1, T2=UNITS.time_to_au(10.0), store_every=10)

kgrid = gr.make_kgrid(lat, 24)
traj = sbe.propagate(lat, t_hop, kgrid, pulse, cfg, threads=2)
nc = sbe.conduction_population(traj)

t_fs = UNITS.time_from_au(traj.times)
for t in [2.5, 5, 7.5, 10, 12.5, 15, 17.5, 21]:
    i = np.argmin(abs(t_fs - t))
    print("t = %5.1f fs   N_c = %.5f" % (t_fs[i], nc[i]))

# real-space picture at the field maximum closest to the pulse centre
grid = gr.CellGrid(lat, 32, 1)
orbital = gr.GaussianOrbital(0.45)
near = np.abs(traj.times - pulse.tau / 2) < 2 * np.pi / pulse.omega
t_peak = traj.times[near][np.argmax(np.abs(pulse.amplitude(traj.times[near])))]
snap = sbe.realspace_snapshot(traj, t_peak, grid, orbital)
print("snapshot at %.2f fs" % UNITS.time_from_au(snap.t))
print("  integrated difference density: %.2e" % grid.integrate(snap.d_rho))
print("  integrated current (jx, jy):   (%.3e, %.3e)" % (grid.integrate(snap.jx), grid.integrate(snap.jy)))
