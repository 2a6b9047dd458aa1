"""Dirac algebra for the electron sector: gamma matrices, on-shell spinors,
bilinears, the spin-summed contraction and the transverse interaction tensor.

Natural units with the electron mass set to one; metric diag(+, -, -, -).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MASS = 1.0
METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class FourVector:
    """Contravariant four-momentum (E, kx, ky, kz)."""

    e: float
    kx: float
    ky: float
    kz: float

    @classmethod
    def on_shell(cls, kx: float, ky: float, kz: float, m: float = MASS) -> "FourVector":
        return cls(float(np.sqrt(kx * kx + ky * ky + kz * kz + m * m)), kx, ky, kz)

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.kx, self.ky, self.kz])

    @property
    def contravariant(self) -> np.ndarray:
        return np.array([self.e, self.kx, self.ky, self.kz])

    @property
    def covariant(self) -> np.ndarray:
        return METRIC @ self.contravariant

    def is_on_shell(self, m: float = MASS, rtol: float = 1e-12) -> bool:
        expected = np.sqrt(self.kx**2 + self.ky**2 + self.kz**2 + m * m)
        return abs(self.e - expected) <= rtol * expected

    def __sub__(self, other: "FourVector") -> "FourVector":
        return FourVector(self.e - other.e, self.kx - other.kx,
                          self.ky - other.ky, self.kz - other.kz)


@dataclass(frozen=True)
class GammaSet:
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray

    def __getitem__(self, mu: int) -> np.ndarray:
        return (self.g0, self.g1, self.g2, self.g3)[mu]

    def __iter__(self):
        return iter((self.g0, self.g1, self.g2, self.g3))

    def slash(self, k: FourVector) -> np.ndarray:
        """gamma^mu k_mu."""
        kl = k.covariant
        return sum(kl[mu] * self[mu] for mu in range(4))


@lru_cache(maxsize=1)
def gamma_matrices() -> GammaSet:
    """Dirac-representation gamma matrices."""
    eye = np.eye(2, dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)
    g0 = np.block([[eye, zero], [zero, -eye]])
    gs = [np.block([[zero, s], [-s, zero]]) for s in _PAULI]
    for g in (g0, *gs):
        g.setflags(write=False)
    return GammaSet(g0, *gs)


@dataclass(frozen=True)
class DiracSpinor:
    c: np.ndarray
    momentum: FourVector
    spin: float

    @property
    def bar(self) -> np.ndarray:
        return self.c.conj() @ gamma_matrices().g0


def _check_spin(sigma: float) -> int:
    if sigma not in (0.5, -0.5):
        raise ValueError(f"spin projection must be +1/2 or -1/2, got {sigma!r}")
    return 0 if sigma > 0 else 1


def dirac_spinor(k: FourVector, sigma: float) -> DiracSpinor:
    """Positive-energy spinor u(k, sigma) with u-bar u = 2m.

    The spin is quantised along z in the rest frame and boosted along k.
    """
    if not k.is_on_shell():
        raise ValueError(
            f"four-momentum is off shell: E={k.e!r} but sqrt(|k|^2+m^2)="
            f"{np.sqrt(k.kx**2 + k.ky**2 + k.kz**2 + MASS**2)!r}"
        )
    chi = np.zeros(2, dtype=complex)
    chi[_check_spin(sigma)] = 1.0
    sigma_p = sum(p * s for p, s in zip(k.spatial, _PAULI))
    norm = np.sqrt(k.e + MASS)
    c = np.concatenate([norm * chi, (sigma_p @ chi) / norm])
    return DiracSpinor(c, k, sigma)


def spinor_bilinear(k2: FourVector, s2: float, nu: int, k1: FourVector, s1: float) -> complex:
    """u-bar(k2, s2) gamma^nu u(k1, s1)."""
    u2 = dirac_spinor(k2, s2)
    u1 = dirac_spinor(k1, s1)
    return complex(u2.bar @ gamma_matrices()[nu] @ u1.c)


def contraction_sum(k_in: FourVector, s1: float, s2: float, k_s: FourVector,
                    nu: int, alpha: int) -> complex:
    """Exact spin sum over the intermediate state, evaluated from spinors.

    sum_{sigma_s} u-bar(k_in,s2) g^nu u(k_s,sigma_s) u-bar(k_s,sigma_s) g^alpha u(k_in,s1)
    """
    g = gamma_matrices()
    left = dirac_spinor(k_in, s2).bar @ g[nu]
    right = g[alpha] @ dirac_spinor(k_in, s1).c
    total = 0j
    for sigma_s in (0.5, -0.5):
        u = dirac_spinor(k_s, sigma_s)
        total += (left @ u.c) * (u.bar @ right)
    return complex(total)


def contraction_small_q(k_in: FourVector, s1: float, s2: float, nu: int, alpha: int) -> float:
    """Leading small-momentum-transfer value 4 k^nu k^alpha delta_{s1 s2}."""
    if s1 != s2:
        return 0.0
    k = k_in.contravariant
    return float(4.0 * k[nu] * k[alpha])


@dataclass(frozen=True)
class DTildeKernel:
    s: np.ndarray
    entries: np.ndarray


def dtilde(s) -> DTildeKernel:
    """Transverse interaction tensor for momentum transfer ``s`` (3-vector).

    Entry (0, 0) is 1, the spatial block is s_i s_j / |s|^2 - delta_ij and
    mixed time-space entries vanish.
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError("momentum transfer must be a 3-vector")
    s2 = float(s @ s)
    if s2 < 1e-24:
        raise ValueError("dtilde is singular at zero momentum transfer (forward scattering)")
    entries = np.zeros((4, 4))
    entries[0, 0] = 1.0
    entries[1:, 1:] = np.outer(s, s) / s2 - np.eye(3)
    entries.setflags(write=False)
    return DTildeKernel(s.copy(), entries)
