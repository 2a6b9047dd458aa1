"""Channel-decomposed time-resolved diffraction at Bragg spots.

Intensities are in the instantaneous-probe limit and in units of
scattering from one free electron per active electron (the probe
prefactor and 1/V factors are divided out; I(S -> 0) of a filled band
would be 1).

With band-basis density matrix rho_nm(p, t) and transforms F^mu_fn at
p_t, the four-current channel matrix is

    c[mu2, mu1] = mean_p sum_{n,m,f} rho_nm conj(F^mu2_fm) F^mu1_fn

and the intensity is sum w[mu1] w[mu2] c[mu2, mu1] with weights
w_mu = Dtilde_{mu nu}(S) u^nu, u = k_in / E_in = (1, beta k_hat). Spatial
weights carry the coupling alpha. dd is the (0, 0) term, dj the mixed
terms, jj the spatial-spatial block.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .dirac import dtilde
from .graphene import FormFactorModel, bragg_vector
from .sbe import DensityMatrixTrajectory
from .units import ALPHA, ELECTRON_REST_EV

logger = logging.getLogger(__name__)

Probe = Literal["xray", "electron_nonrel", "electron_rel"]

_ALIGN_TOL = 1e-9


def incidence_direction(angle_deg: float = 45.0) -> tuple[float, float, float]:
    """k_in in the xz-plane, ``angle_deg`` below the sample plane, in-plane part along +x."""
    th = np.deg2rad(angle_deg)
    return (float(np.cos(th)), 0.0, float(-np.sin(th)))


@dataclass(frozen=True)
class Kinematics:
    gamma: float
    beta: float
    k: float
    energy: float


def beam_kinematics(kinetic_eV: float) -> Kinematics:
    """gamma, beta, |k| and total energy E (atomic units) of the probe electron."""
    if kinetic_eV < 0:
        raise ValueError("kinetic energy must be non-negative")
    gamma = 1.0 + kinetic_eV / ELECTRON_REST_EV
    beta = float(np.sqrt(1.0 - 1.0 / gamma**2))
    c = 1.0 / ALPHA
    return Kinematics(gamma, beta, gamma * beta * c, gamma * c * c)


@dataclass(frozen=True)
class BeamConfig:
    kinetic_eV: float = 1.0e6
    incidence: tuple[float, float, float] = incidence_direction(45.0)
    probe: Probe = "electron_rel"

    def __post_init__(self):
        if self.probe not in ("xray", "electron_nonrel", "electron_rel"):
            raise ValueError(f"unknown probe {self.probe!r}")
        v = np.asarray(self.incidence, dtype=float)
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > 1e-12:
            raise ValueError("incidence must be a unit 3-vector")
        object.__setattr__(self, "incidence", tuple(float(x) for x in v))
        if self.kinetic_eV < 0:
            raise ValueError("kinetic energy must be non-negative")

    @property
    def kinematics(self) -> Kinematics:
        return beam_kinematics(self.kinetic_eV)

    @property
    def beta(self) -> float:
        return self.kinematics.beta

    @property
    def currents_enabled(self) -> bool:
        return self.probe == "electron_rel"

    def with_beta(self, beta: float) -> "BeamConfig":
        """Same geometry with the kinetic energy that gives velocity ``beta``."""
        if not 0 <= beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        gamma = 1.0 / np.sqrt(1.0 - beta * beta)
        return BeamConfig((gamma - 1.0) * ELECTRON_REST_EV, self.incidence, self.probe)


@dataclass(frozen=True)
class DiffractionTrace:
    times: np.ndarray
    spot: tuple[int, int]
    I_dd: np.ndarray
    I_dj: np.ndarray
    I_jj: np.ndarray
    I_total: np.ndarray
    imag_residue: float = 0.0

    def channel(self, name: str) -> np.ndarray:
        return {"dd": self.I_dd, "dj": self.I_dj, "jj": self.I_jj, "total": self.I_total}[name]


def channel_weights(beam: BeamConfig, S) -> np.ndarray:
    """w_mu = Dtilde_{mu nu}(S) u^nu for mu = 0, x, y, z; spatial entries include alpha."""
    S = np.asarray(S, dtype=float)
    S3 = np.array([S[0], S[1], 0.0]) if S.shape == (2,) else S
    D = dtilde(S3).entries
    u = np.concatenate([[1.0], beam.beta * np.asarray(beam.incidence)])
    w = D @ u
    w[1:] *= ALPHA if beam.currents_enabled else 0.0
    return w


def channel_matrix(rho_b: np.ndarray, F: list[np.ndarray]) -> np.ndarray:
    """c[a, b] = mean_p tr(rho F_a^dag F_b) for a list of (nk, 2, 2) transforms."""
    n = len(F)
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        Fa_h = np.swapaxes(F[a].conj(), -1, -2)
        for b in range(n):
            prod = Fa_h @ F[b]
            out[a, b] = np.mean(np.einsum("knm,kmn->k", rho_b, prod))
    return out


def _contract(c: np.ndarray, w: np.ndarray) -> tuple[complex, complex, complex]:
    ww = np.outer(w, w)
    dd = ww[0, 0] * c[0, 0]
    dj = np.sum(ww[0, 1:] * c[0, 1:]) + np.sum(ww[1:, 0] * c[1:, 0])
    jj = np.sum(ww[1:, 1:] * c[1:, 1:])
    return dd, dj, jj


def _check_axis(S, axis: int) -> None:
    S = np.asarray(S, dtype=float)
    angle = np.arctan2(abs(S[1 - axis]), abs(S[axis]))
    if angle > _ALIGN_TOL:
        raise ValueError(f"Bragg vector {S} is misaligned by {angle:.3g} rad from the {'xy'[axis]} axis")


def _check_45(beam: BeamConfig) -> None:
    ref = np.array(incidence_direction(45.0))
    if np.abs(np.asarray(beam.incidence) - ref).max() > 1e-12:
        raise ValueError("y-spot evaluator assumes k_in in the xz-plane at 45 deg with +x in-plane projection")


def spot_x_sample(rho_b, FQ) -> tuple[float, float, float, float]:
    """One time sample at a spot along x: density channel only."""
    dd = np.mean(np.einsum("knm,kfm,kfn->k", rho_b, FQ.conj(), FQ))
    return dd.real, 0.0, 0.0, abs(dd.imag)


def spot_y_sample(rho_b, FQ, FJx, beta: float) -> tuple[float, float, float, float]:
    """One time sample at a spot along y for the 45 deg beam."""
    def ch(Fa, Fb):
        return np.mean(np.einsum("knm,kfm,kfn->k", rho_b, Fa.conj(), Fb))

    dd = ch(FQ, FQ)
    dj = -(np.sqrt(2.0) / 2.0) * beta * ALPHA * (ch(FQ, FJx) + ch(FJx, FQ))
    jj = beta**2 * ALPHA**2 / 2.0 * ch(FJx, FJx)
    resid = max(abs(dd.imag), abs(dj.imag), abs(jj.imag))
    return dd.real, dj.real, jj.real, resid


def general_sample(rho_b, FQ, FJx, FJy, w) -> tuple[float, float, float, float]:
    zero = np.zeros_like(FQ)
    c = channel_matrix(rho_b, [FQ, FJx, FJy, zero])
    dd, dj, jj = _contract(c, w)
    resid = max(abs(dd.imag), abs(dj.imag), abs(jj.imag))
    return dd.real, dj.real, jj.real, resid


Evaluator = Literal["specialized", "general"]


def diffraction_trace(traj: DensityMatrixTrajectory, model: FormFactorModel,
                      spot, beam: BeamConfig, evaluator: Evaluator = "specialized",
                      threads: int = 1) -> DiffractionTrace:
    """Evaluate a spot at every stored time; transforms are taken at p_t.

    ``specialized`` requires a spot along x or y (45 deg beam for y);
    ``general`` contracts the full Dtilde kernel for any spot and beam.
    """
    spot = (int(spot[0]), int(spot[1]))
    S = bragg_vector(model.lat, *spot)
    beta = beam.beta if beam.currents_enabled else 0.0
    if evaluator == "specialized":
        if abs(S[1]) <= _ALIGN_TOL * np.linalg.norm(S):
            _check_axis(S, 0)
            kind = "x"
        else:
            _check_axis(S, 1)
            _check_45(beam)
            kind = "y"
    elif evaluator == "general":
        kind = "general"
        w = channel_weights(beam, S)
    else:
        raise ValueError(f"unknown evaluator {evaluator!r}")

    def sample(i):
        p = traj.p_t(i)
        rho_b = traj.band_rho(i)
        FQ, FJx, FJy = model.band_transforms(p, S)
        if kind == "x":
            return spot_x_sample(rho_b, FQ)
        if kind == "y":
            return spot_y_sample(rho_b, FQ, FJx, beta)
        return general_sample(rho_b, FQ, FJx, FJy, w)

    idx = range(len(traj.times))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(sample, idx))
    else:
        rows = [sample(i) for i in idx]
    arr = np.array(rows)
    dd, dj, jj = arr[:, 0], arr[:, 1], arr[:, 2]
    return DiffractionTrace(np.asarray(traj.times), spot, dd, dj, jj, dd + dj + jj,
                            float(arr[:, 3].max(initial=0.0)))


@dataclass(frozen=True)
class SpectralContent:
    amp_omega: float
    amp_2omega: float

    @property
    def ratio(self) -> float:
        """amp(2 omega) / amp(omega)."""
        return self.amp_2omega / self.amp_omega if self.amp_omega > 0 else np.inf


def spectral_content(times, values, omega: float, t_start: float, t_stop: float) -> SpectralContent:
    """Hann-windowed Fourier amplitudes of the mean-subtracted signal on
    [t_start, t_stop] at omega and 2 omega."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    period = 2 * np.pi / omega
    if times[-1] - times[0] < 4 * period:
        raise ValueError("trace shorter than four carrier periods")
    sel = (times >= t_start) & (times <= t_stop)
    if sel.sum() < 16:
        raise ValueError("too few samples inside the analysis window")
    t = times[sel]
    win = np.hanning(sel.sum())
    y = values[sel]
    y = y - np.sum(win * y) / np.sum(win)
    norm = 2.0 / np.sum(win)
    amp1 = abs(np.sum(win * y * np.exp(-1j * omega * t))) * norm
    amp2 = abs(np.sum(win * y * np.exp(-2j * omega * t))) * norm
    return SpectralContent(float(amp1), float(amp2))


def convolve_probe_envelope(values, dt_fs: float, fwhm_fs: float) -> np.ndarray:
    """Gaussian smoothing of a uniformly sampled trace (reflective edges)."""
    if fwhm_fs < 0:
        raise ValueError("probe FWHM must be non-negative")
    values = np.asarray(values, dtype=float)
    if fwhm_fs == 0:
        return values.copy()
    sigma = fwhm_fs / (2 * np.sqrt(2 * np.log(2))) / dt_fs
    return gaussian_filter1d(values, sigma, mode="reflect")
