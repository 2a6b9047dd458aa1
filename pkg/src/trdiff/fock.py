"""Creation/annihilation operators on truncated number-state bases.

States are enumerated lexicographically with mode 0 varying slowest, so a
basis of ``num_modes`` modes with cap ``max_occ`` has (max_occ+1)**num_modes
states. Fermionic operators carry the Jordan-Wigner sign
(-1)**(sum of occupations of the modes preceding the acted-on mode).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
import scipy.sparse as sp

Statistics = Literal["boson", "fermion"]


@dataclass(frozen=True)
class ModeBasis:
    num_modes: int
    max_occ: int
    statistics: Statistics = "boson"
    states: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.statistics not in ("boson", "fermion"):
            raise ValueError(f"unknown statistics {self.statistics!r}")
        if self.statistics == "fermion" and self.max_occ != 1:
            raise ValueError("fermionic modes hold at most one particle (max_occ=1)")
        if self.num_modes < 1 or self.max_occ < 1:
            raise ValueError("need at least one mode and max_occ >= 1")
        states = np.array(
            list(itertools.product(range(self.max_occ + 1), repeat=self.num_modes)),
            dtype=np.int64,
        )
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return (self.max_occ + 1) ** self.num_modes

    def index(self, occupations) -> int:
        occ = tuple(int(n) for n in occupations)
        if len(occ) != self.num_modes or min(occ) < 0 or max(occ) > self.max_occ:
            raise ValueError(f"occupations {occ} not in basis")
        idx = 0
        for n in occ:
            idx = idx * (self.max_occ + 1) + n
        return idx

    def ket(self, occupations) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(occupations)] = 1.0
        return v


@dataclass(frozen=True)
class LadderOperator:
    mode: int
    kind: Literal["create", "annihilate"]
    matrix: sp.csr_matrix

    def __matmul__(self, other):
        if isinstance(other, LadderOperator):
            return self.matrix @ other.matrix
        return self.matrix @ other

    @property
    def dagger(self) -> sp.csr_matrix:
        return self.matrix.conj().T.tocsr()


def build_ladder(basis: ModeBasis, mode: int, kind: str) -> LadderOperator:
    if not 0 <= mode < basis.num_modes:
        raise ValueError(f"mode {mode} outside basis of {basis.num_modes} modes")
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    step = 1 if kind == "create" else -1
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        n = occ[mode]
        new = n + step
        if new < 0 or new > basis.max_occ:
            continue
        if basis.statistics == "boson":
            amp = np.sqrt(n + 1) if step > 0 else np.sqrt(n)
        else:
            amp = (-1.0) ** int(occ[:mode].sum())
        target = occ.copy()
        target[mode] = new
        rows.append(basis.index(target))
        cols.append(col)
        vals.append(amp)
    mat = sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)),
                        shape=(basis.dim, basis.dim))
    return LadderOperator(mode, kind, mat)


class CommutatorResidual(NamedTuple):
    interior: float
    boundary: float


def _max_abs(m) -> float:
    m = sp.csr_matrix(m)
    return float(np.abs(m.data).max()) if m.nnz else 0.0


def commutator_check(basis: ModeBasis, i: int, j: int) -> CommutatorResidual:
    """max |[a_i, a_j^dagger] - delta_ij| on states below the truncation cap.

    Columns with n_i or n_j at the cap are reported separately as the
    truncation artefact.
    """
    if basis.statistics != "boson":
        raise ValueError("commutator_check needs a bosonic basis")
    a_i = build_ladder(basis, i, "annihilate").matrix
    ad_j = build_ladder(basis, j, "create").matrix
    resid = (a_i @ ad_j - ad_j @ a_i).toarray()
    if i == j:
        resid -= np.eye(basis.dim)
    at_cap = (basis.states[:, i] == basis.max_occ) | (basis.states[:, j] == basis.max_occ)
    interior = float(np.abs(resid[:, ~at_cap]).max()) if (~at_cap).any() else 0.0
    boundary = float(np.abs(resid[:, at_cap]).max()) if at_cap.any() else 0.0
    return CommutatorResidual(interior, boundary)


def anticommutator_check(basis: ModeBasis, i: int, j: int) -> tuple[float, float]:
    """(max |{b_i, b_j^dagger} - delta_ij|, max |{b_i, b_j}|) over the full basis."""
    if basis.statistics != "fermion":
        raise ValueError("anticommutator_check needs a fermionic basis")
    b_i = build_ladder(basis, i, "annihilate").matrix
    b_j = build_ladder(basis, j, "annihilate").matrix
    bd_j = build_ladder(basis, j, "create").matrix
    mixed = b_i @ bd_j + bd_j @ b_i
    if i == j:
        mixed = mixed - sp.identity(basis.dim, format="csr")
    return _max_abs(mixed), _max_abs(b_i @ b_j + b_j @ b_i)


def xray_transition_element(n_in: int, max_occ: int | None = None) -> float:
    """<n_in - 1, 1_s| a_in a_s^dagger + a_s^dagger a_in |n_in, 0_s>.

    Evaluated by sparse application on a two-mode bosonic basis (in, s).
    """
    if n_in < 1:
        raise ValueError("n_in must be >= 1: cannot remove a photon from the vacuum")
    cap = n_in if max_occ is None else max_occ
    if n_in > cap:
        raise ValueError(f"n_in={n_in} exceeds the truncation cap {cap}")
    basis = ModeBasis(2, cap, "boson")
    a_in = build_ladder(basis, 0, "annihilate").matrix
    ad_s = build_ladder(basis, 1, "create").matrix
    op = a_in @ ad_s + ad_s @ a_in
    initial = basis.ket((n_in, 0))
    final = basis.ket((n_in - 1, 1))
    return float(np.real(final.conj() @ (op @ initial)))
