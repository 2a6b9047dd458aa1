"""Two-band density-matrix dynamics of pumped graphene in the moving frame.

Each k-point follows p_t = p + A(t) with A = -int E dt. The 2x2 density
matrix is propagated in the sublattice basis with H(p_t), which is the
Houston band-basis equation rotated by U(p_t) and stays regular where a
trajectory crosses a Dirac point. Dephasing acts on the instantaneous
band coherences only.

The integrator works on real and imaginary parts as separate float arrays
using only +, -, *, / and sqrt, so the result of every k-point is
bit-identical no matter how k-points are chunked across threads.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson

from .graphene import (CellGrid, GaussianOrbital, KGrid, Lattice, _bloch_orbitals,
                       _bond_fields, band_states, berry_connection, lowdin)

logger = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class LaserPulse:
    """E(t) = pol E0 sin^4(pi t / tau) cos(omega t) on [0, tau]."""

    E0: float
    omega: float
    tau: float
    pol: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.E0 < 0 or self.omega <= 0 or self.tau <= 0:
            raise ValueError("pulse needs E0 >= 0, omega > 0, tau > 0")
        pol = np.asarray(self.pol, dtype=float)
        if pol.shape != (2,) or abs(np.linalg.norm(pol) - 1) > 1e-12:
            raise ValueError("pump polarization must be a unit 2-vector")
        object.__setattr__(self, "pol", (float(pol[0]), float(pol[1])))

    def amplitude(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.tau)
        env = np.sin(np.pi * np.clip(t, 0, self.tau) / self.tau) ** 4
        return np.where(inside, self.E0 * env * np.cos(self.omega * t), 0.0)

    def field(self, t) -> np.ndarray:
        return self.amplitude(t)[..., None] * np.asarray(self.pol)


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    T2: float = math.inf
    store_every: int = 10
    order: int = 4

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if not self.T2 > 0:
            raise ValueError("T2 must be positive (inf disables dephasing)")
        if self.store_every < 1:
            raise ValueError("store_every must be >= 1")
        if self.order != 4:
            raise ValueError("only the classical 4th-order integrator is implemented")

    def check_resolution(self, pulse: LaserPulse) -> None:
        limit = 2 * np.pi / (40 * pulse.omega)
        if self.dt > limit:
            raise ValueError(f"dt={self.dt:.4g} does not resolve the carrier; need dt <= {limit:.4g}")


@dataclass(frozen=True)
class TimeAxis:
    """Integration steps and the quarter-step grid the potential lives on."""

    dt: float
    nsteps: int

    @property
    def fine(self) -> np.ndarray:
        return np.arange(4 * self.nsteps + 1) * (self.dt / 4)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(self.nsteps + 1) * self.dt


def time_axis(pulse: LaserPulse, dt: float, t_end: float | None = None) -> TimeAxis:
    t_end = pulse.tau if t_end is None else t_end
    return TimeAxis(dt, int(math.ceil(t_end / dt - 1e-9)))


@lru_cache(maxsize=16)
def _potential_table(pulse: LaserPulse, dt: float, nsteps: int) -> np.ndarray:
    tf = np.arange(4 * nsteps + 1) * (dt / 4)
    amp = -cumulative_simpson(pulse.amplitude(tf), x=tf, initial=0.0)
    out = amp[:, None] * np.asarray(pulse.pol)
    out.setflags(write=False)
    return out


def vector_potential(pulse: LaserPulse, t, dt: float = 0.1) -> np.ndarray:
    """A(t) = -int_0^t E, composite Simpson on a dt/4 grid, linearly
    interpolated between grid nodes."""
    t = np.asarray(t, dtype=float)
    t_end = max(float(np.max(t, initial=0.0)), pulse.tau)
    ax = time_axis(pulse, dt, t_end)
    table = _potential_table(pulse, dt, ax.nsteps)
    tf = ax.fine
    tc = np.clip(t, 0, tf[-1])
    return np.stack([np.interp(tc, tf, table[:, i]) for i in range(2)], axis=-1)


@dataclass(frozen=True)
class DensityMatrixTrajectory:
    """Sublattice-basis density matrices rho[t, k, s, s'] at stored times,
    with the momentum shift A(t) that defines p_t = p + A(t)."""

    times: np.ndarray
    kgrid: KGrid
    A: np.ndarray
    rho_sub: np.ndarray
    lat: Lattice
    t_hop: float

    def p_t(self, i: int) -> np.ndarray:
        return self.kgrid.points + self.A[i]

    def band_rho(self, i: int) -> np.ndarray:
        """rho in the instantaneous band basis U(p_t)^dag rho U(p_t)."""
        _, U = band_states(self.lat, self.t_hop, self.p_t(i))
        return np.swapaxes(U.conj(), -1, -2) @ self.rho_sub[i] @ U


def _cmul(ar, ai, br, bi):
    return ar * br - ai * bi, ar * bi + ai * br


class _SublatticeRHS:
    """d rho/dt = -i[H(p_t), rho] - D(rho)/T2 on real component arrays.

    State layout (8, nk): Re/Im of r00, r01, r10, r11.
    """

    def __init__(self, er, ei, t_hop, inv_T2):
        self.er, self.ei = er, ei
        self.t = t_hop
        self.g = inv_T2

    def __call__(self, y, ph):
        er, ei, t = self.er, self.ei, self.t
        hr = er[0] * ph[0, 0] - ei[0] * ph[0, 1]
        hi = er[0] * ph[0, 1] + ei[0] * ph[0, 0]
        for j in (1, 2):
            hr = hr + (er[j] * ph[j, 0] - ei[j] * ph[j, 1])
            hi = hi + (er[j] * ph[j, 1] + ei[j] * ph[j, 0])
        hr = t * hr
        hi = t * hi
        ar, ai, br, bi, cr, ci, dr, di = y
        # commutator [H, rho]
        x1r, x1i = _cmul(hr, hi, cr, ci)
        x2r, x2i = _cmul(hr, -hi, br, bi)
        c00r, c00i = x1r - x2r, x1i - x2i
        c01r, c01i = _cmul(hr, hi, dr - ar, di - ai)
        c10r, c10i = _cmul(hr, -hi, ar - dr, ai - di)
        out = np.empty_like(y)
        # -i * (X + iY) = Y - iX
        out[0], out[1] = c00i, -c00r
        out[2], out[3] = c01i, -c01r
        out[4], out[5] = c10i, -c10r
        out[6], out[7] = -c00i, c00r
        if self.g:
            mag = np.sqrt(hr * hr + hi * hi)
            zero = mag == 0
            safe = np.where(zero, 1.0, mag)
            zr = np.where(zero, 1.0, hr / safe)
            zi = np.where(zero, 0.0, hi / safe)
            z2r, z2i = zr * zr - zi * zi, 2.0 * zr * zi
            g = self.g
            d00r, d00i = 0.5 * (ar - dr), 0.5 * (ai - di)
            tr, ti = _cmul(z2r, z2i, cr, ci)
            d01r, d01i = 0.5 * (br - tr), 0.5 * (bi - ti)
            tr, ti = _cmul(z2r, -z2i, br, bi)
            d10r, d10i = 0.5 * (cr - tr), 0.5 * (ci - ti)
            out[0] -= g * d00r
            out[1] -= g * d00i
            out[2] -= g * d01r
            out[3] -= g * d01i
            out[4] -= g * d10r
            out[5] -= g * d10i
            out[6] += g * d00r
            out[7] += g * d00i
        return out


def _run_chunk(y, er, ei, t_hop, inv_T2, phases, dt, nsteps, store_every, offset=0):
    rhs = _SublatticeRHS(er, ei, t_hop, inv_T2)
    stored = [y.copy()]
    h2, h6 = dt / 2, dt / 6
    for n in range(nsteps):
        f = 4 * n
        k1 = rhs(y, phases[f])
        k2 = rhs(y + h2 * k1, phases[f + 2])
        k3 = rhs(y + h2 * k2, phases[f + 2])
        k4 = rhs(y + dt * k3, phases[f + 4])
        y = y + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (n + 1) % store_every == 0 or n + 1 == nsteps:
            if not np.all(np.isfinite(y)):
                bad = int(np.nonzero(~np.all(np.isfinite(y), axis=0))[0][0])
                raise NumericalError(f"non-finite density matrix at step {n + 1}, k-point index {offset + bad}")
            stored.append(y.copy())
    return stored


def stored_steps(nsteps: int, store_every: int) -> np.ndarray:
    idx = list(range(0, nsteps + 1, store_every))
    if idx[-1] != nsteps:
        idx.append(nsteps)
    return np.array(idx)


def propagate(lat: Lattice, t_hop: float, kgrid: KGrid, pulse: LaserPulse,
              cfg: PropagatorConfig, t_end: float | None = None,
              threads: int = 1) -> DensityMatrixTrajectory:
    """Fixed-step RK4 from the filled valence band at every k-point."""
    cfg.check_resolution(pulse)
    ax = time_axis(pulse, cfg.dt, t_end)
    A_fine = _potential_table(pulse, cfg.dt, ax.nsteps)
    # all transcendental work happens here, once, on full arrays
    phases = np.exp(1j * (A_fine @ lat.nn.T))
    phases = np.stack([phases.real, phases.imag], axis=-1)
    e = np.exp(1j * (kgrid.points @ lat.nn.T)).T
    er, ei = np.ascontiguousarray(e.real), np.ascontiguousarray(e.imag)
    _, U0 = band_states(lat, t_hop, kgrid.points)
    rho0 = np.einsum("ks,kt->kst", U0[:, :, 0], U0[:, :, 0].conj())
    y0 = np.empty((8, kgrid.size))
    for i, (s, sp) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        y0[2 * i] = rho0[:, s, sp].real
        y0[2 * i + 1] = rho0[:, s, sp].imag
    inv_T2 = 0.0 if math.isinf(cfg.T2) else 1.0 / cfg.T2

    threads = max(1, int(threads))
    bounds = np.linspace(0, kgrid.size, min(threads, kgrid.size) + 1).astype(int)
    jobs = [(y0[:, lo:hi].copy(), er[:, lo:hi], ei[:, lo:hi], t_hop, inv_T2, phases,
             cfg.dt, ax.nsteps, cfg.store_every, lo) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if len(jobs) == 1:
        results = [_run_chunk(*jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(lambda j: _run_chunk(*j), jobs))
    steps = stored_steps(ax.nsteps, cfg.store_every)
    stacked = np.concatenate([np.stack(res) for res in results], axis=-1)  # (nt, 8, nk)
    rho = (stacked[:, 0::2] + 1j * stacked[:, 1::2]).reshape(len(steps), 2, 2, kgrid.size)
    rho = np.moveaxis(rho, -1, 1)
    times = steps * cfg.dt
    A = A_fine[4 * steps]
    return DensityMatrixTrajectory(times, kgrid, A, rho, lat, t_hop)


def conduction_population(traj: DensityMatrixTrajectory) -> np.ndarray:
    """N_c(t) = mean over the k-grid of the conduction-band occupation."""
    out = np.empty(len(traj.times))
    for i in range(len(traj.times)):
        out[i] = np.mean(traj.band_rho(i)[:, 1, 1].real)
    return out


def houston_rhs(lat: Lattice, t_hop: float, p_t, E, rho_b, T2: float = math.inf,
                dp: float = 1e-5) -> np.ndarray:
    """Band-basis moving-frame equation, used as an independent cross-check:
    d rho_b/dt = -i[diag(eps) + E.A(p_t), rho_b] - offdiag(rho_b)/T2,
    with A the full finite-difference Berry connection."""
    eps, _ = band_states(lat, t_hop, p_t)
    conn = berry_connection(lat, t_hop, p_t, dp)
    H = np.einsum("...a,...anm->...nm", np.asarray(E, dtype=float), conn)
    H = H + eps[..., None] * np.eye(2)
    d = -1j * (H @ rho_b - rho_b @ H)
    if not math.isinf(T2):
        off = rho_b.copy()
        off[..., 0, 0] = 0
        off[..., 1, 1] = 0
        d -= off / T2
    return d


@dataclass(frozen=True)
class Snapshot:
    t: float
    points: np.ndarray
    d_rho: np.ndarray
    jx: np.ndarray
    jy: np.ndarray


def _realspace_fields(traj: DensityMatrixTrajectory, i: int, grid: CellGrid,
                      orbital: GaussianOrbital, current_model: str, chunk: int):
    lat, t_hop = traj.lat, traj.t_hop
    pts = traj.p_t(i)
    rho_sub = traj.rho_sub[i]
    dens = np.zeros(grid.n**2)
    jx = np.zeros(grid.n**2)
    jy = np.zeros(grid.n**2)
    for lo in range(0, len(pts), chunk):
        p = pts[lo:lo + chunk]
        r_sub = rho_sub[lo:lo + chunk]
        phi = _bloch_orbitals(lat, grid, orbital, p)
        overlap = grid.integrate(phi.conj()[:, :, None, :] * phi[:, None, :, :])
        X = lowdin(overlap)
        R = X @ r_sub @ X  # coefficients on the raw orbitals
        dens += np.einsum("kst,ksr,ktr->r", R, phi, phi.conj()).real
        if current_model == "bond":
            f = _bond_fields(lat, grid, orbital, t_hop, p)
            jx += np.einsum("kts,kstr->r", r_sub, f[:, 0]).real
            jy += np.einsum("kts,kstr->r", r_sub, f[:, 1]).real
        else:
            bloch = np.exp(1j * (grid.points @ p.T)).T[:, None, :]
            u = phi / bloch
            for acc, ax, grad in ((jx, 0, grid.gradient_x), (jy, 1, grid.gradient_y)):
                dphi = bloch * (1j * p[:, ax, None, None] * u + grad(u))
                val = np.einsum("kst,ktr,ksr->r", R, phi.conj(), dphi)
                acc += val.imag  # (1/2i)(z - z*) = Im z
    n = len(pts)
    return dens / n, jx / n, jy / n


def realspace_snapshot(traj: DensityMatrixTrajectory, t: float, grid: CellGrid,
                       orbital: GaussianOrbital, current_model: str = "bond",
                       chunk: int = 64) -> Snapshot:
    """Difference density and current in the unit cell at the stored time
    closest to ``t``."""
    grid.check_resolves(orbital)
    i = int(np.argmin(np.abs(traj.times - t)))
    d1, jx, jy = _realspace_fields(traj, i, grid, orbital, current_model, chunk)
    d0, _, _ = _realspace_fields(traj, 0, grid, orbital, current_model, chunk)
    return Snapshot(float(traj.times[i]), grid.points, d1 - d0, jx, jy)
