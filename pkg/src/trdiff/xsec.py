"""Stationary elastic scattering: free-electron prefactors, target form
factors and the probability <-> cross-section conversion.

Atomic units throughout (areas in bohr^2 per steradian).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .units import ALPHA

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-12


def _unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector (|v| = {np.linalg.norm(v)!r})")
    return v


@dataclass(frozen=True)
class ProbeGeometry:
    """Elastic scattering geometry: |k_in| = |k_s| = k."""

    k_in_dir: np.ndarray
    k_s_dir: np.ndarray
    k: float
    pol_in: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "k_in_dir", _unit(self.k_in_dir, "k_in_dir"))
        object.__setattr__(self, "k_s_dir", _unit(self.k_s_dir, "k_s_dir"))
        if self.k <= 0:
            raise ValueError("momentum magnitude must be positive")
        if self.pol_in is not None:
            pol = _unit(self.pol_in, "pol_in")
            if abs(pol @ self.k_in_dir) > _UNIT_TOL:
                raise ValueError("incident polarization must be transverse to k_in")
            object.__setattr__(self, "pol_in", pol)

    @property
    def k_in(self) -> np.ndarray:
        return self.k * self.k_in_dir

    @property
    def k_s(self) -> np.ndarray:
        return self.k * self.k_s_dir

    @property
    def transfer(self) -> np.ndarray:
        """Momentum transfer k_in - k_s."""
        return self.k_in - self.k_s

    @property
    def theta(self) -> float:
        return float(np.arccos(np.clip(self.k_in_dir @ self.k_s_dir, -1.0, 1.0)))


def transverse_basis(direction, angle: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal vectors perpendicular to ``direction``, rotated by ``angle``."""
    d = _unit(direction, "direction")
    trial = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - (trial @ d) * d
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    c, s = np.cos(angle), np.sin(angle)
    return c * e1 + s * e2, -s * e1 + c * e2


def thomson_prefactor(geom: ProbeGeometry, basis_angle: float = 0.0) -> float:
    """alpha^4 * sum over the two scattered polarizations of |eps_s* . eps_in|^2."""
    if geom.pol_in is None:
        raise ValueError("x-ray geometry needs an incident polarization")
    return ALPHA**4 * sum(
        abs(np.vdot(e, geom.pol_in)) ** 2 for e in transverse_basis(geom.k_s_dir, basis_angle)
    )


def rutherford_prefactor(energy: float, theta: float) -> float:
    """1 / (16 E^2 sin^4(theta/2)) for kinetic energy E (hartree)."""
    if energy <= 0:
        raise ValueError("kinetic energy must be positive")
    if not (0.0 < theta <= np.pi):
        raise ValueError("scattering angle must lie in (0, pi]")
    s = np.sin(theta / 2.0)
    if s < 1e-6:
        raise ValueError(f"theta={theta!r} too close to the divergent forward direction")
    return 1.0 / (16.0 * energy**2 * s**4)


def rutherford_from_transfer(transfer) -> float:
    """4 / |k_in - k_s|^4."""
    q = float(np.linalg.norm(transfer))
    if q == 0.0:
        raise ValueError("zero momentum transfer: Rutherford cross section diverges")
    return 4.0 / q**4


@dataclass(frozen=True)
class DensityGrid:
    """Electron density sampled on a uniform (possibly skewed) 3D grid.

    ``cell`` rows are the vectors spanning the whole grid; sample (i, j, k)
    sits at origin + i*cell[0]/nx + j*cell[1]/ny + k*cell[2]/nz.
    """

    values: np.ndarray
    cell: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise ValueError("density values must be a 3D array")
        cell = np.asarray(self.cell, dtype=float).reshape(3, 3)
        if abs(np.linalg.det(cell)) == 0.0:
            raise ValueError("degenerate grid cell")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))

    @property
    def steps(self) -> np.ndarray:
        return self.cell / np.array(self.values.shape)[:, None]

    @property
    def voxel_volume(self) -> float:
        return abs(np.linalg.det(self.cell)) / self.values.size

    def positions(self) -> np.ndarray:
        idx = np.indices(self.values.shape).reshape(3, -1).T
        return self.origin + idx @ self.steps

    def electron_count(self) -> float:
        return float(self.values.sum() * self.voxel_volume)


def read_density_grid(path) -> DensityGrid:
    """Read the plain-text grid format.

    Header (``#`` comments ignored): ``nx ny nz``, three lines of cell
    vectors, one origin line; then nx*ny*nz values, x fastest.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if len(rows) < 5:
        raise ValueError(f"{path}: truncated grid header")
    dims = tuple(int(v) for v in rows[0].split())
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"{path}: bad grid dimensions {rows[0]!r}")
    cell = np.array([[float(v) for v in rows[i].split()] for i in (1, 2, 3)])
    origin = np.array([float(v) for v in rows[4].split()])
    data = np.array([float(v) for row in rows[5:] for v in row.split()])
    if data.size != np.prod(dims):
        raise ValueError(f"{path}: expected {np.prod(dims)} values, found {data.size}")
    values = data.reshape(dims[::-1]).transpose(2, 1, 0)
    return DensityGrid(values, cell, origin)


def write_density_grid(path, grid: DensityGrid) -> None:
    lines = ["# density grid: dims, cell vectors, origin, values (x fastest)",
             " ".join(str(n) for n in grid.values.shape)]
    lines += [" ".join(f"{v:.17e}" for v in row) for row in grid.cell]
    lines.append(" ".join(f"{v:.17e}" for v in grid.origin))
    lines += [f"{v:.17e}" for v in grid.values.transpose(2, 1, 0).ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def form_factor(rho: DensityGrid, s) -> complex:
    """Riemann-sum estimate of integral rho(r) exp(i s.r) dV."""
    s = np.asarray(s, dtype=float)
    phase_per_step = rho.steps @ s
    bad = np.abs(phase_per_step) >= np.pi
    if bad.any():
        axis = int(np.argmax(bad))
        needed = int(np.ceil(abs(s @ rho.cell[axis]) / np.pi)) + 1
        raise ValueError(
            f"grid does not resolve |s|={np.linalg.norm(s):.6g} along axis {axis}: "
            f"need more than {needed} points (have {rho.values.shape[axis]})"
        )
    # separable phase: exp(i s.origin) * prod_axis exp(i n_a phase_a)
    f = rho.values.astype(complex)
    for axis, n in enumerate(rho.values.shape):
        ph = np.exp(1j * phase_per_step[axis] * np.arange(n))
        f = np.tensordot(ph, f, axes=([0], [0]))
    return complex(np.exp(1j * (s @ rho.origin)) * f * rho.voxel_volume)


def elastic_dsigma(probe: Literal["xray", "electron"], geom: ProbeGeometry,
                   rho: DensityGrid) -> float:
    if probe == "xray":
        pref = thomson_prefactor(geom)
    elif probe == "electron":
        pref = rutherford_prefactor(0.5 * geom.k**2, geom.theta)
    else:
        raise ValueError(f"unknown probe {probe!r}")
    return pref * abs(form_factor(rho, geom.transfer)) ** 2


def probability_to_dsigma(dp_domega: float, fluence_factor: float) -> float:
    """dsigma/dOmega = dP/dOmega * N_in / integral(F dt)."""
    if fluence_factor <= 0:
        raise ValueError("fluence factor N_in / integral(F dt) must be positive")
    return dp_domega * fluence_factor


def xray_fluence_factor(n_photons: float, volume: float, duration: float) -> float:
    """N_in / (F T) for a single-mode beam with flux n / (alpha V)."""
    flux = n_photons / (ALPHA * volume)
    return n_photons / (flux * duration)


def electron_fluence_factor(k: float, volume: float, duration: float) -> float:
    """N_in / (F T) for one plane-wave electron with flux |k| / V."""
    return 1.0 / (k / volume * duration)


def xray_dp_domega(geom: ProbeGeometry, f_target: complex, volume: float, duration: float) -> float:
    """Polarization-summed differential probability for a stationary target."""
    pol_sum = thomson_prefactor(geom) / ALPHA**4
    return ALPHA**3 / volume * duration * pol_sum * abs(f_target) ** 2


def electron_dp_domega(geom: ProbeGeometry, f_target: complex, volume: float, duration: float) -> float:
    q = float(np.linalg.norm(geom.transfer))
    return 4.0 / volume * duration * geom.k / q**4 * abs(f_target) ** 2
