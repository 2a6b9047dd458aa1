import numpy as np
import pytest

from trdiff import graphene as gr
from trdiff import sbe
from trdiff.units import UNITS

A_LAT = UNITS.length_to_au(2.46)
T_HOP = -UNITS.energy_to_au(2.7)
E0 = UNITS.field_to_au(2.5)
OMEGA = UNITS.energy_to_au(1.55)
TAU = UNITS.time_to_au(21.0)
T2 = UNITS.time_to_au(10.0)
WIDTH = 0.45


def default_pulse(scale=1.0):
    return sbe.LaserPulse(E0 * scale, OMEGA, TAU)


def run(nk, scale=1.0, T2_au=T2, dt=0.1, store_every=10, threads=1, shift=(0, 0)):
    lat = gr.Lattice(A_LAT)
    kg = gr.make_kgrid(lat, nk, shift)
    cfg = sbe.PropagatorConfig(dt, T2_au, store_every)
    return sbe.propagate(lat, T_HOP, kg, default_pulse(scale), cfg, threads=threads)


@pytest.fixture(scope="session")
def lattice():
    return gr.Lattice(A_LAT)


@pytest.fixture(scope="session")
def small_traj():
    """Paper pulse on a 12 x 12 grid, T2 = 10 fs."""
    return run(12)


@pytest.fixture(scope="session")
def ff_model(lattice):
    return gr.FormFactorModel(lattice, T_HOP, gr.GaussianOrbital(WIDTH))


def rho_checks(traj):
    """(trace error, Hermiticity error) over the whole trajectory."""
    r = traj.rho_sub
    tr = np.abs(np.trace(r, axis1=-2, axis2=-1) - 1).max()
    herm = np.abs(r - np.conj(np.swapaxes(r, -1, -2))).max()
    return tr, herm


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, name: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((name, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        summary = "; ".join(f"{name} {'ok' if ok else 'FAILED'} ({detail})" for name, ok, detail in checks)
        tr.write_line(f"criterion {n}: {status} | {summary}")
