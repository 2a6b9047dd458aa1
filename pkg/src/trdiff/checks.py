"""Invariant suite behind ``trdiff validate``.

Each check returns a CheckResult with the measured worst-case value and
the tolerance it is held to. Dynamics checks run on a reduced k-grid so
the whole suite stays quick.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dirac, fock, graphene, sbe, xsec
from .config import RunConfig
from .diffraction import diffraction_trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def _dirac_checks(cfg, rng):
    g = dirac.gamma_matrices()
    anti = max(np.abs(g[m] @ g[n] + g[n] @ g[m] - 2 * dirac.METRIC[m, n] * np.eye(4)).max()
               for m in range(4) for n in range(4))
    yield CheckResult("dirac_algebra", "gamma anticommutation", anti, 1e-14)
    worst = 0.0
    for _ in range(20):
        k = dirac.FourVector.on_shell(*rng.normal(scale=2.0, size=3))
        comp = sum(np.outer(u.c, u.bar) for u in (dirac.dirac_spinor(k, s) for s in (0.5, -0.5)))
        worst = max(worst, np.abs(comp - g.slash(k) - np.eye(4)).max())
    yield CheckResult("dirac_algebra", "spinor completeness", worst, 1e-12)
    k = dirac.FourVector.on_shell(0.3, -0.2, 0.5)
    dev = max(abs(dirac.contraction_sum(k, 0.5, 0.5, k, n, a) - dirac.contraction_small_q(k, 0.5, 0.5, n, a))
              for n in range(4) for a in range(4))
    yield CheckResult("dirac_algebra", "contraction exact at Q=0", dev, 1e-12)


def _fock_checks(cfg, rng):
    basis = fock.ModeBasis(2, 6)
    yield CheckResult("fock_algebra", "boson commutator interior",
                      max(fock.commutator_check(basis, i, j).interior for i in range(2) for j in range(2)), 1e-14)
    fb = fock.ModeBasis(3, 1, "fermion")
    yield CheckResult("fock_algebra", "fermion anticommutators",
                      max(max(fock.anticommutator_check(fb, i, j)) for i in range(3) for j in range(3)), 1e-14)
    yield CheckResult("fock_algebra", "x-ray element 2 sqrt(n)",
                      max(abs(fock.xray_transition_element(n) - 2 * math.sqrt(n)) for n in range(1, 6)), 1e-12)


def _xsec_checks(cfg, rng):
    worst = 0.0
    for _ in range(200):
        E, th = rng.uniform(0.1, 100), rng.uniform(0.05, np.pi)
        k = math.sqrt(2 * E)
        dk = k * np.array([math.sin(th), 0.0, 1 - math.cos(th)])
        worst = max(worst, abs(xsec.rutherford_prefactor(E, th) / xsec.rutherford_from_transfer(dk) - 1))
    yield CheckResult("stationary_xsec", "Rutherford closed form", worst, 1e-12)
    geom = xsec.ProbeGeometry([0, 0, 1], [1, 0, 0], 1.0, [1, 0, 0])
    yield CheckResult("stationary_xsec", "Thomson zero along polarization", xsec.thomson_prefactor(geom), 1e-30)
    n, L, sig = 48, 16.0, 1.0
    x = (np.arange(n) - n // 2) * (L / n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    rho = np.exp(-(X**2 + Y**2 + Z**2) / (2 * sig**2)) / (2 * np.pi * sig**2) ** 1.5
    grid = xsec.DensityGrid(rho, np.eye(3) * L, [x[0]] * 3)
    s = np.array([0.0, 0.0, 2.5])
    err = abs(xsec.form_factor(grid, s) / math.exp(-(s @ s) * sig**2 / 2) - 1)
    yield CheckResult("stationary_xsec", "Gaussian form factor", err, 1e-4)


def _graphene_checks(cfg: RunConfig, rng):
    lat, t = cfg.make_lattice(), cfg.t_hop_au
    recip = np.abs(lat.recip @ lat.direct.T - 2 * np.pi * np.eye(2)).max()
    yield CheckResult("graphene_model", "reciprocity b.a = 2 pi delta", recip, 1e-12)
    p = rng.normal(size=(50, 2))
    c6 = np.array([[0.5, -math.sqrt(3) / 2], [math.sqrt(3) / 2, 0.5]])
    e1, _ = graphene.band_states(lat, t, p)
    e2, _ = graphene.band_states(lat, t, p @ c6.T)
    yield CheckResult("graphene_model", "C6 symmetric spectrum", np.abs(e1 - e2).max(), 1e-10)
    yield CheckResult("graphene_model", "particle-hole symmetry", np.abs(e1[:, 0] + e1[:, 1]).max(), 1e-12)
    orb = cfg.make_orbital()
    grid = graphene.CellGrid(lat, max(cfg.grid.cell_grid_n, 48), cfg.grid.halo)
    spots = [tuple(s) for s in cfg.spots]
    pk = rng.normal(size=(4, 2))
    model = cfg.make_form_factor_model()
    fast = model.table(pk, spots)
    slow = graphene.build_form_factor_table(lat, t, pk, spots, grid, orb, cfg.lattice.current_model)
    diff = max(np.abs(getattr(fast, n) - getattr(slow, n)).max() for n in ("Q", "Jx", "Jy"))
    yield CheckResult("graphene_model", "analytic vs grid form factors", diff, 1e-6)
    neg = model.table(pk, [(-h, -k) for h, k in spots])
    herm = np.abs(fast.Q - np.conj(np.swapaxes(neg.Q, -1, -2))).max()
    yield CheckResult("graphene_model", "form-factor Hermiticity", herm, 1e-12)


def _dynamics_checks(cfg: RunConfig, rng, threads):
    lat, t = cfg.make_lattice(), cfg.t_hop_au
    pulse = cfg.make_pulse()
    kg = graphene.make_kgrid(lat, min(cfg.grid.nk, 12))
    prop = cfg.make_propagator()
    traj = sbe.propagate(lat, t, kg, pulse, prop, threads=threads)
    r = traj.rho_sub
    tr = np.abs(np.trace(r, axis1=-2, axis2=-1) - 1).max()
    herm = np.abs(r - np.conj(np.swapaxes(r, -1, -2))).max()
    yield CheckResult("sbe_dynamics", "trace preserved", tr, 1e-10)
    yield CheckResult("sbe_dynamics", "Hermiticity preserved", herm, 1e-10)
    nc = sbe.conduction_population(traj)
    yield CheckResult("sbe_dynamics", "N_c within [0, 1]", max(-nc.min(), nc.max() - 1, 0.0), 1e-12)
    free = sbe.propagate(lat, t, kg, pulse, sbe.PropagatorConfig(prop.dt, math.inf, prop.store_every),
                         threads=threads)
    ev = np.linalg.eigvalsh(free.rho_sub)
    yield CheckResult("sbe_dynamics", "unitary evolution at T2=inf", np.abs(ev - ev[0]).max(), 1e-8)

    model = cfg.make_form_factor_model()
    beam = cfg.make_beam()
    for spot in cfg.spots:
        a = diffraction_trace(traj, model, spot, beam, "general")
        closure = np.abs(a.I_total - (a.I_dd + a.I_dj + a.I_jj)).max()
        yield CheckResult("diffraction_signal", f"closure at {spot}", closure, 1e-12)
        S = graphene.bragg_vector(lat, *spot)
        if abs(S[1]) < 1e-9 * np.linalg.norm(S) or (abs(S[0]) < 1e-9 * np.linalg.norm(S)
                                                    and cfg.beam.incidence_deg == 45.0):
            b = diffraction_trace(traj, model, spot, beam, "specialized")
            scale = np.abs(a.I_total).max()
            agree = max(np.abs(a.channel(c) - b.channel(c)).max() for c in ("dd", "dj", "jj")) / scale
            yield CheckResult("diffraction_signal", f"specialized vs general at {spot}", agree, 1e-10)
        if abs(S[1]) < 1e-9 * np.linalg.norm(S):
            sel = max(np.abs(a.I_dj).max(), np.abs(a.I_jj).max()) / np.abs(a.I_dd).max()
            yield CheckResult("diffraction_signal", f"x-spot selection rule at {spot}", sel, 1e-12)


def run_suite(cfg: RunConfig, threads: int = 1, seed: int = 20240607) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    groups: list[Callable] = [_dirac_checks, _fock_checks, _xsec_checks, _graphene_checks]
    results = []
    for group in groups:
        results.extend(group(cfg, rng))
    results.extend(_dynamics_checks(cfg, rng, threads))
    return results
