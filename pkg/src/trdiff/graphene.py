"""Nearest-neighbour tight-binding graphene.

Geometry: a1 = a(sqrt3/2, 1/2), a2 = a(sqrt3/2, -1/2). The B atom sits at
(a1 + a2)/3 from A, so the first C-C bond points along +x. The Bragg
vector b1 + b2 is along x and b1 - b2 along y.

Sublattice-basis Bloch sums carry the atomic-position phase
exp(i p.(L + tau_s)), so the Hamiltonian off-diagonal is t f(p) with
f(p) = sum_j exp(i p.delta_j).

Real-space matrix elements use a pluggable orbital profile (isotropic 2D
Gaussian by default). Two evaluation routes exist: quadrature on a
CellGrid and closed-form pair sums (FormFactorModel). They agree to
quadrature accuracy and are checked against each other in the tests.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CurrentModel = Literal["bond", "kinetic"]

_SQ3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Lattice:
    a: float
    origin: tuple[float, float] = (0.0, 0.0)
    a1: np.ndarray = field(init=False, repr=False, compare=False)
    a2: np.ndarray = field(init=False, repr=False, compare=False)
    b1: np.ndarray = field(init=False, repr=False, compare=False)
    b2: np.ndarray = field(init=False, repr=False, compare=False)
    tau: np.ndarray = field(init=False, repr=False, compare=False)
    nn: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("lattice constant must be positive")
        a = self.a
        a1 = a * np.array([_SQ3 / 2, 0.5])
        a2 = a * np.array([_SQ3 / 2, -0.5])
        b1 = 2 * np.pi / a * np.array([1 / _SQ3, 1.0])
        b2 = 2 * np.pi / a * np.array([1 / _SQ3, -1.0])
        o = np.asarray(self.origin, dtype=float)
        tau = np.array([o, o + (a1 + a2) / 3.0])
        d = tau[1] - tau[0]
        nn = np.array([d, d - a1, d - a2])
        for name, v in dict(a1=a1, a2=a2, b1=b1, b2=b2, tau=tau, nn=nn).items():
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def r_A(self) -> np.ndarray:
        return self.tau[0]

    @property
    def r_B(self) -> np.ndarray:
        return self.tau[1]

    @property
    def cell_area(self) -> float:
        return float(abs(self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0]))

    @property
    def bond_length(self) -> float:
        return self.a / _SQ3

    @property
    def recip(self) -> np.ndarray:
        """Rows b1, b2."""
        return np.array([self.b1, self.b2])

    @property
    def direct(self) -> np.ndarray:
        return np.array([self.a1, self.a2])

    def dirac_points(self) -> np.ndarray:
        """K and K' in the first zone."""
        return np.array([[0.0, 4 * np.pi / (3 * self.a)], [0.0, -4 * np.pi / (3 * self.a)]])

    def shifted(self, origin) -> "Lattice":
        return Lattice(self.a, tuple(float(v) for v in origin))


def bragg_vector(lat: Lattice, h: int, k: int) -> np.ndarray:
    if h == 0 and k == 0:
        raise ValueError("Miller pair [0,0] is the forward beam, not a Bragg spot")
    return h * lat.b1 + k * lat.b2


def distance_to_dirac(lat: Lattice, p) -> np.ndarray:
    """Distance from p (..., 2) to the nearest K or K' point."""
    p = np.asarray(p, dtype=float)
    frac = p @ np.linalg.inv(lat.recip)
    best = np.full(p.shape[:-1], np.inf)
    for kf in ((1 / 3, 2 / 3), (2 / 3, 1 / 3)):
        delta = frac - np.array(kf)
        delta -= np.round(delta)
        for s1 in (-1, 0, 1):
            for s2 in (-1, 0, 1):
                cart = (delta + np.array([s1, s2])) @ lat.recip
                best = np.minimum(best, np.linalg.norm(cart, axis=-1))
    return best


@dataclass(frozen=True)
class KGrid:
    """Uniform Monkhorst-Pack style sampling of the zone, equal weights."""

    n: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.points)


def make_kgrid(lat: Lattice, n: int, shift=(0, 0)) -> KGrid:
    """n x n grid at fractional coordinates (i + 1/2)/n - 1/2.

    ``shift`` is an integer reciprocal-lattice translation applied to every
    point (physics must not change).
    """
    if n < 2 or n % 2:
        raise ValueError(f"k-grid subdivision must be even and >= 2, got {n}")
    f = (np.arange(n) + 0.5) / n - 0.5
    f1, f2 = np.meshgrid(f, f, indexing="ij")
    frac = np.stack([f1.ravel() + shift[0], f2.ravel() + shift[1]], axis=-1)
    pts = frac @ lat.recip
    w = np.full(len(pts), 1.0 / len(pts))
    return KGrid(n, pts, w)


def structure_sum(lat: Lattice, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.exp(1j * (p @ lat.nn.T)).sum(axis=-1)


def hamiltonian_k(lat: Lattice, t_hop: float, p) -> np.ndarray:
    h = t_hop * structure_sum(lat, p)
    out = np.zeros(np.shape(h) + (2, 2), dtype=complex)
    out[..., 0, 1] = h
    out[..., 1, 0] = np.conj(h)
    return out


@dataclass(frozen=True)
class BandState:
    p: np.ndarray | None
    eps_v: float
    eps_c: float
    evec_v: np.ndarray
    evec_c: np.ndarray


def _fix_gauge(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    for c in v:
        if abs(c) > tol:
            return v * (abs(c) / c)
    return v


def eigensystem(H, p=None) -> BandState:
    """Ordered eigenpairs of a 2x2 Hermitian matrix, first nonzero component
    of each eigenvector made real and non-negative."""
    H = np.asarray(H, dtype=complex)
    if H.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if np.abs(H - H.conj().T).max() > 1e-12 * max(1.0, np.abs(H).max()):
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh(H)
    if abs(w[1] - w[0]) < 1e-14:
        logger.debug("degenerate 2x2 eigensystem (Dirac point); eigenvectors are arbitrary")
    return BandState(None if p is None else np.asarray(p, dtype=float),
                     float(w[0]), float(w[1]), _fix_gauge(v[:, 0]), _fix_gauge(v[:, 1]))


def phase_of(h) -> np.ndarray:
    """h/|h|, set to 1 where h vanishes."""
    h = np.asarray(h, dtype=complex)
    mag = np.abs(h)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, h / safe, 1.0 + 0j)


def band_states(lat: Lattice, t_hop: float, p) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized bands: energies (..., 2) and amplitudes U (..., s, n).

    With z = h/|h|: u_v = (1, -z*)/sqrt2 at -|h|, u_c = (1, z*)/sqrt2 at +|h|.
    This matches the gauge of ``eigensystem`` and is smooth away from K.
    """
    h = t_hop * structure_sum(lat, p)
    zc = np.conj(phase_of(h))
    e = np.abs(h)
    U = np.empty(np.shape(h) + (2, 2), dtype=complex)
    U[..., 0, 0] = U[..., 0, 1] = 1 / np.sqrt(2)
    U[..., 1, 0] = -zc / np.sqrt(2)
    U[..., 1, 1] = zc / np.sqrt(2)
    return np.stack([-e, e], axis=-1), U


def berry_connection(lat: Lattice, t_hop: float, p, dp: float = 1e-5) -> np.ndarray:
    """A_nm = i <u_n | d/dp u_m>, shape (..., 2 [x,y], 2, 2), central differences.

    Neighbouring eigenvectors are phase-aligned to the centre point before
    differencing.
    """
    p = np.asarray(p, dtype=float)
    _, U0 = band_states(lat, t_hop, p)
    out = []
    for axis in range(2):
        step = np.zeros(2)
        step[axis] = dp
        _, Up = band_states(lat, t_hop, p + step)
        _, Um = band_states(lat, t_hop, p - step)
        for Ux in (Up, Um):
            ov = np.einsum("...sn,...sn->...n", U0.conj(), Ux)
            Ux *= (np.abs(ov) / np.where(ov == 0, 1, ov))[..., None, :]
        dU = (Up - Um) / (2 * dp)
        out.append(1j * np.einsum("...sn,...sm->...nm", U0.conj(), dU))
    return np.stack(out, axis=-3)


def interband_coupling(lat: Lattice, t_hop: float, p, dp: float = 1e-5,
                       min_distance: float = 1e-4) -> np.ndarray:
    """d_cv(p) = i <u_c | grad_p u_v>, complex 2-vector."""
    p = np.asarray(p, dtype=float)
    dist = distance_to_dirac(lat, p)
    if np.any(dist < max(min_distance, 10 * dp)):
        raise ValueError(
            f"interband coupling is singular at the Dirac point (|p-K| = {np.min(dist):.3g})"
        )
    return berry_connection(lat, t_hop, p, dp)[..., 1, 0]


def bz_path(lat: Lattice, n_per_segment: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Gamma-K-M-Gamma path: (points, cumulative length)."""
    gamma = np.zeros(2)
    K = lat.dirac_points()[0]
    M = 0.5 * lat.b1
    corners = [gamma, K, M, gamma]
    pts = []
    for i in range(3):
        s = np.linspace(0, 1, n_per_segment, endpoint=(i == 2))
        pts.append(corners[i] + s[:, None] * (corners[i + 1] - corners[i]))
    pts = np.concatenate(pts)
    dist = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    return pts, dist


# --------------------------------------------------------------------------
# orbital profile and real-space grid


@dataclass(frozen=True)
class GaussianOrbital:
    """phi(r) = exp(-r^2 / 2 w^2) / sqrt(pi w^2), normalized in 2D."""

    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("orbital width must be positive")

    def __call__(self, dx, dy) -> np.ndarray:
        w2 = self.width**2
        return np.exp(-(dx * dx + dy * dy) / (2 * w2)) / np.sqrt(np.pi * w2)

    def overlap(self, d) -> np.ndarray:
        """<phi(r) | phi(r - d)>."""
        d = np.asarray(d, dtype=float)
        return np.exp(-(d**2).sum(-1) / (4 * self.width**2))

    def pair_transform(self, S) -> float:
        """Fourier transform of the normalized pair product about its centre."""
        S = np.asarray(S, dtype=float)
        return float(np.exp(-(S @ S) * self.width**2 / 4))

    def pair_density(self, dx, dy) -> np.ndarray:
        """Normalized pair-product profile exp(-r^2/w^2)/(pi w^2) about the centre."""
        w2 = self.width**2
        return np.exp(-(dx * dx + dy * dy) / w2) / (np.pi * w2)


def _translations(halo: int) -> np.ndarray:
    r = np.arange(-halo, halo + 1)
    return np.array([(i, j) for i in r for j in r], dtype=float)


@dataclass(frozen=True)
class CellGrid:
    """Uniform n x n sampling of one unit cell (fractional coordinates i/n).

    Orbital tails from neighbouring cells are included through ``halo``
    rings of lattice translations.
    """

    lat: Lattice
    n: int
    halo: int = 1

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("cell grid needs at least 4 points per axis")
        if self.halo < 1:
            raise ValueError("halo must include at least one ring of neighbouring cells")

    @property
    def spacing(self) -> float:
        return self.lat.a / self.n

    @property
    def weight(self) -> float:
        return self.lat.cell_area / self.n**2

    @property
    def frac(self) -> np.ndarray:
        f = np.arange(self.n) / self.n
        f1, f2 = np.meshgrid(f, f, indexing="ij")
        return np.stack([f1.ravel(), f2.ravel()], axis=-1)

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.lat.origin) + self.frac @ self.lat.direct

    def check_resolves(self, orbital: GaussianOrbital) -> None:
        if self.spacing > orbital.width / 2:
            raise ValueError(
                f"cell grid spacing {self.spacing:.4g} too coarse for orbital width "
                f"{orbital.width:.4g}; need n >= {int(np.ceil(2 * self.lat.a / orbital.width))}"
            )

    def check_nyquist(self, S) -> None:
        S = np.asarray(S, dtype=float)
        steps = np.abs(self.lat.direct @ S) / self.n
        if np.any(steps >= np.pi):
            need = int(np.ceil(np.max(np.abs(self.lat.direct @ S)) / np.pi)) + 1
            raise ValueError(f"cell grid n={self.n} does not resolve |S|={np.linalg.norm(S):.4g}; need n > {need}")

    def integrate(self, values) -> np.ndarray:
        return np.asarray(values).sum(axis=-1) * self.weight

    def gradient_x(self, periodic: np.ndarray) -> np.ndarray:
        """Spectral x-derivative of cell-periodic samples (last axis flattened n*n)."""
        shape = periodic.shape[:-1]
        u = periodic.reshape(shape + (self.n, self.n))
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        kx = m[:, None] * self.lat.b1[0] + m[None, :] * self.lat.b2[0]
        if self.n % 2 == 0:
            kx = kx.copy()
            kx[self.n // 2, :] = 0.0
            kx[:, self.n // 2] = 0.0
        du = np.fft.ifft2(1j * kx * np.fft.fft2(u, axes=(-2, -1)), axes=(-2, -1))
        return du.reshape(shape + (self.n * self.n,))

    def gradient_y(self, periodic: np.ndarray) -> np.ndarray:
        shape = periodic.shape[:-1]
        u = periodic.reshape(shape + (self.n, self.n))
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        ky = m[:, None] * self.lat.b1[1] + m[None, :] * self.lat.b2[1]
        if self.n % 2 == 0:
            ky = ky.copy()
            ky[self.n // 2, :] = 0.0
            ky[:, self.n // 2] = 0.0
        du = np.fft.ifft2(1j * ky * np.fft.fft2(u, axes=(-2, -1)), axes=(-2, -1))
        return du.reshape(shape + (self.n * self.n,))


def fourier_at_bragg(grid: CellGrid, values, S) -> np.ndarray:
    """Cell quadrature of values(r) exp(-i S.r); last axis runs over grid points."""
    grid.check_nyquist(S)
    phase = np.exp(-1j * (grid.points @ np.asarray(S, dtype=float)))
    return np.asarray(values) @ phase * grid.weight


def _bloch_orbitals(lat: Lattice, grid: CellGrid, orbital: GaussianOrbital, p) -> np.ndarray:
    """phi_s(p, r) = sum_L exp(i p.(L + tau_s)) phi(r - L - tau_s); shape (nk, 2, npts)."""
    p = np.atleast_2d(p)
    shifts = _translations(grid.halo + 1) @ lat.direct
    r = grid.points
    out = np.zeros((len(p), 2, len(r)), dtype=complex)
    for s in range(2):
        centres = shifts + lat.tau[s]
        prof = np.stack([orbital(r[:, 0] - c[0], r[:, 1] - c[1]) for c in centres])
        out[:, s] = np.exp(1j * (p @ centres.T)) @ prof
    return out


def _bond_pairs(lat: Lattice):
    """Nearest-neighbour (s, s', d) triples, both orientations."""
    return [(0, 1, d) for d in lat.nn] + [(1, 0, -d) for d in lat.nn]


def _bond_fields(lat: Lattice, grid: CellGrid, orbital: GaussianOrbital, t_hop: float, p) -> np.ndarray:
    """Sublattice-pair bond current fields, shape (nk, 2 [x,y], 2, 2, npts)."""
    p = np.atleast_2d(p)
    shifts = _translations(grid.halo + 1) @ lat.direct
    r = grid.points
    out = np.zeros((len(p), 2, 2, 2, len(r)), dtype=complex)
    for s, sp, d in _bond_pairs(lat):
        centres = shifts + lat.tau[s] + d / 2
        prof = sum(orbital.pair_density(r[:, 0] - c[0], r[:, 1] - c[1]) for c in centres)
        amp = 1j * t_hop * np.exp(1j * (p @ d))
        for ax in range(2):
            out[:, ax, s, sp] += (amp * d[ax])[:, None] * prof[None, :]
    return out


def lowdin(overlap: np.ndarray) -> np.ndarray:
    """S^{-1/2} for a stack of Hermitian positive-definite matrices."""
    w, v = np.linalg.eigh(overlap)
    if np.any(w <= 0):
        raise ValueError("orbital overlap matrix is not positive definite")
    return (v * (w**-0.5)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


@dataclass(frozen=True)
class CellFields:
    """Band-resolved fields on a CellGrid, indexed [f, n, point] (per k if batched)."""

    Q: np.ndarray
    Jx: np.ndarray
    Jy: np.ndarray


def cell_matrix_elements(lat: Lattice, t_hop: float, p, grid: CellGrid,
                         orbital: GaussianOrbital, current_model: CurrentModel = "bond") -> CellFields:
    """Q_fn(r) = psi_f* psi_n and the current fields on the cell grid.

    Band states are Loewdin-orthonormalized Bloch sums. ``kinetic`` uses
    (1/2i)[psi_f* d psi_n - (d psi_f*) psi_n] with spectral derivatives;
    ``bond`` places the tight-binding bond current i t d exp(i p.d) on a
    normalized pair profile at each bond midpoint.
    """
    grid.check_resolves(orbital)
    p = np.atleast_2d(np.asarray(p, dtype=float))
    phi = _bloch_orbitals(lat, grid, orbital, p)
    overlap = grid.integrate(phi.conj()[:, :, None, :] * phi[:, None, :, :])
    _, U = band_states(lat, t_hop, p)
    C = lowdin(overlap) @ U
    psi = np.einsum("ksn,ksr->knr", C, phi)
    Q = psi.conj()[:, :, None, :] * psi[:, None, :, :]
    if current_model == "kinetic":
        bloch = np.exp(1j * (grid.points @ p.T)).T[:, None, :]
        u = psi / bloch
        grads = []
        for ax, grad in enumerate((grid.gradient_x, grid.gradient_y)):
            dpsi = bloch * (1j * p[:, ax, None, None] * u + grad(u))
            grads.append((psi.conj()[:, :, None, :] * dpsi[:, None, :, :]
                          - dpsi.conj()[:, :, None, :] * psi[:, None, :, :]) / 2j)
        Jx, Jy = grads
    elif current_model == "bond":
        fields = _bond_fields(lat, grid, orbital, t_hop, p)
        Jx = np.einsum("ksf,kstr,ktn->kfnr", U.conj(), fields[:, 0], U)
        Jy = np.einsum("ksf,kstr,ktn->kfnr", U.conj(), fields[:, 1], U)
    else:
        raise ValueError(f"unknown current model {current_model!r}")
    if p.shape[0] == 1:
        return CellFields(Q[0], Jx[0], Jy[0])
    return CellFields(Q, Jx, Jy)


# --------------------------------------------------------------------------
# form-factor tables


@dataclass(frozen=True)
class FormFactorTable:
    """F_S[X_fn] = integral over the cell of X_fn(r) exp(-i S.r).

    Arrays are indexed [spot, k, f, n] with band index 0 = v, 1 = c.
    """

    spots: tuple[tuple[int, int], ...]
    S: np.ndarray
    p: np.ndarray
    Q: np.ndarray
    Jx: np.ndarray
    Jy: np.ndarray

    def spot_index(self, spot) -> int:
        return self.spots.index(tuple(int(v) for v in spot))

    def to_csv(self, path, header: str = "") -> None:
        labels = ("v", "c")
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["spot", "quantity", "band_pair", "kx", "ky", "re", "im"])
            for i, spot in enumerate(self.spots):
                tag = f"{spot[0]}_{spot[1]}"
                for name, arr in (("Q", self.Q), ("Jx", self.Jx), ("Jy", self.Jy)):
                    for k, p in enumerate(self.p):
                        for f in range(2):
                            for n in range(2):
                                z = arr[i, k, f, n]
                                w.writerow([tag, name, labels[f] + labels[n], f"{p[0]:.16e}",
                                            f"{p[1]:.16e}", f"{z.real:.16e}", f"{z.imag:.16e}"])


def build_form_factor_table(lat: Lattice, t_hop: float, p, spots: Sequence, grid: CellGrid,
                            orbital: GaussianOrbital, current_model: CurrentModel = "bond",
                            chunk: int = 16) -> FormFactorTable:
    """Grid-quadrature route: fields from ``cell_matrix_elements`` transformed
    at each Bragg vector."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    spots = tuple((int(h), int(k)) for h, k in spots)
    S = np.array([bragg_vector(lat, h, k) for h, k in spots])
    for s in S:
        grid.check_nyquist(s)
    phases = np.exp(-1j * (grid.points @ S.T)) * grid.weight
    out = {name: np.zeros((len(S), len(p), 2, 2), dtype=complex) for name in ("Q", "Jx", "Jy")}
    for lo in range(0, len(p), chunk):
        fields = cell_matrix_elements(lat, t_hop, p[lo:lo + chunk], grid, orbital, current_model)
        for name in out:
            arr = getattr(fields, name)
            if arr.ndim == 3:
                arr = arr[None]
            out[name][:, lo:lo + chunk] = np.einsum("kfnr,rs->skfn", arr, phases)
    return FormFactorTable(spots, S, p, out["Q"], out["Jx"], out["Jy"])


@dataclass(frozen=True)
class FormFactorModel:
    """Closed-form pair sums for the Bragg transforms of the band-resolved
    density and current.

    For orbitals centred at R1 (sublattice s) and R2 = R1 + d (sublattice
    s'), the pair product transforms to
    overlap(d) * exp(-i S.(R1 + d/2)) * pair_transform(S).
    """

    lat: Lattice
    t_hop: float
    orbital: GaussianOrbital
    current_model: CurrentModel = "bond"
    halo: int = 2
    pairs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.current_model not in ("bond", "kinetic"):
            raise ValueError(f"unknown current model {self.current_model!r}")
        shifts = _translations(self.halo) @ self.lat.direct
        s_idx, sp_idx, ds = [], [], []
        for s in range(2):
            for sp in range(2):
                for L in shifts:
                    d = L + self.lat.tau[sp] - self.lat.tau[s]
                    if self.orbital.overlap(d) > 1e-18:
                        s_idx.append(s)
                        sp_idx.append(sp)
                        ds.append(d)
        ds = np.array(ds)
        ov = self.orbital.overlap(ds)
        centre = self.lat.tau[np.array(s_idx)] + ds / 2
        nn = np.isclose(np.linalg.norm(ds, axis=1), self.lat.bond_length, rtol=1e-9)
        object.__setattr__(self, "pairs", (np.array(s_idx), np.array(sp_idx), ds, ov, centre, nn))

    def _assemble(self, phase: np.ndarray, coef: np.ndarray, mask=None) -> np.ndarray:
        s_idx, sp_idx = self.pairs[0], self.pairs[1]
        out = np.zeros(phase.shape[:-1] + (2, 2), dtype=complex)
        for s in range(2):
            for sp in range(2):
                sel = (s_idx == s) & (sp_idx == sp)
                if mask is not None:
                    sel &= mask
                if sel.any():
                    out[..., s, sp] = phase[..., sel] @ coef[sel]
        return out

    def overlap_matrix(self, p) -> np.ndarray:
        _, _, ds, ov, _, _ = self.pairs
        return self._assemble(np.exp(1j * (np.asarray(p) @ ds.T)), ov.astype(complex))

    def orbital_matrices(self, p, S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sublattice-pair transforms (MQ, MJx, MJy), each (..., 2, 2)."""
        _, _, ds, ov, centre, nn = self.pairs
        S = np.asarray(S, dtype=float)
        phase = np.exp(1j * (np.asarray(p, dtype=float) @ ds.T))
        geo = np.exp(-1j * (centre @ S)) * self.orbital.pair_transform(S)
        MQ = self._assemble(phase, ov * geo)
        if self.current_model == "kinetic":
            w2 = self.orbital.width**2
            MJ = [self._assemble(phase, ov * geo * ds[:, ax] / (2j * w2)) for ax in range(2)]
        else:
            MJ = [self._assemble(phase, 1j * self.t_hop * ds[:, ax] * geo, mask=nn) for ax in range(2)]
        return MQ, MJ[0], MJ[1]

    def band_transforms(self, p, S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """F_S[Q], F_S[Jx], F_S[Jy] in the band basis, each (..., f, n)."""
        p = np.asarray(p, dtype=float)
        _, U = band_states(self.lat, self.t_hop, p)
        C = lowdin(self.overlap_matrix(p)) @ U
        Ch = np.swapaxes(C.conj(), -1, -2)
        MQ, MJx, MJy = self.orbital_matrices(p, S)
        FQ = Ch @ MQ @ C
        if self.current_model == "kinetic":
            return FQ, Ch @ MJx @ C, Ch @ MJy @ C
        Uh = np.swapaxes(U.conj(), -1, -2)
        return FQ, Uh @ MJx @ U, Uh @ MJy @ U

    def table(self, p, spots: Sequence) -> FormFactorTable:
        p = np.atleast_2d(np.asarray(p, dtype=float))
        spots = tuple((int(h), int(k)) for h, k in spots)
        S = np.array([bragg_vector(self.lat, h, k) for h, k in spots])
        parts = [self.band_transforms(p, s) for s in S]
        return FormFactorTable(spots, S, p, *(np.stack([x[i] for x in parts]) for i in range(3)))
