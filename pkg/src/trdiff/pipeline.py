"""Subcommand orchestration and file output.

Every file starts with comment lines carrying the subcommand and the
SHA-256 of the resolved configuration. Numbers are written with 17
significant digits so outputs are bit-exact and reproducible.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import graphene, sbe
from .config import RunConfig
from .diffraction import DiffractionTrace, convolve_probe_envelope, diffraction_trace, spectral_content
from .units import UNITS

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("bands", "propagate", "diffract", "spectrum", "validate")


class PipelineError(RuntimeError):
    """Numerical failure inside a compute module."""

    def __init__(self, module: str, message: str):
        super().__init__(f"[{module}] {message}")
        self.module = module


@dataclass
class PipelineResult:
    files: list[Path] = field(default_factory=list)
    ok: bool = True
    report: list[str] = field(default_factory=list)


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def write_csv(path: Path, cfg: RunConfig, subcommand: str, columns, rows, notes=()) -> Path:
    buf = io.StringIO()
    buf.write(f"# trdiff {subcommand}\n# config_sha256 {cfg.sha256()}\n")
    for n in notes:
        buf.write(f"# {n}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(float(v)) for v in row])
    path.write_text(buf.getvalue())
    return path


def _guard(module: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError, sbe.NumericalError) as exc:
        raise PipelineError(module, str(exc)) from exc


def spot_tag(spot) -> str:
    return f"{int(spot[0])}_{int(spot[1])}"


def run_bands(cfg: RunConfig, out: Path) -> list[Path]:
    lat, t = cfg.make_lattice(), cfg.t_hop_au
    pts, dist = graphene.bz_path(lat)
    eps, _ = graphene.band_states(lat, t, pts)
    rows = np.column_stack([dist, pts, UNITS.energy_from_au(eps)])
    return [write_csv(out / "bands.csv", cfg, "bands", ["s_per_bohr", "kx", "ky", "eps_v_eV", "eps_c_eV"], rows,
                      ["path Gamma-K-M-Gamma; momenta in 1/bohr"])]


def propagate_config(cfg: RunConfig, threads: int = 1) -> sbe.DensityMatrixTrajectory:
    lat = cfg.make_lattice()
    kg = graphene.make_kgrid(lat, cfg.grid.nk)
    return _guard("sbe_dynamics", sbe.propagate, lat, cfg.t_hop_au, kg, cfg.make_pulse(),
                  cfg.make_propagator(), threads=threads)


def run_propagate(cfg: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    traj = propagate_config(cfg, threads)
    nc = sbe.conduction_population(traj)
    files = [write_csv(out / "population.csv", cfg, "propagate", ["t_fs", "N_c"],
                       np.column_stack([UNITS.time_from_au(traj.times), nc]))]
    lat = cfg.make_lattice()
    grid = graphene.CellGrid(lat, cfg.grid.cell_grid_n, cfg.grid.halo)
    orb = cfg.make_orbital()
    for t_fs in cfg.snapshot_times_fs:
        snap = _guard("sbe_dynamics", sbe.realspace_snapshot, traj, UNITS.time_to_au(t_fs), grid, orb,
                      cfg.lattice.current_model)
        rows = np.column_stack([snap.points, snap.d_rho, snap.jx, snap.jy])
        files.append(write_csv(out / f"snapshot_{t_fs:g}.csv", cfg, "propagate", ["x", "y", "d_rho", "jx", "jy"], rows,
                               [f"stored time {UNITS.time_from_au(snap.t):.6f} fs; positions in bohr"]))
    return files


def compute_traces(cfg: RunConfig, threads: int = 1) -> dict[tuple[int, int], DiffractionTrace]:
    traj = propagate_config(cfg, threads)
    model = cfg.make_form_factor_model()
    beam = cfg.make_beam()
    traces = {}
    for spot in cfg.spots:
        tr = _guard("diffraction_signal", diffraction_trace, traj, model, spot, beam, "general", threads)
        if cfg.beam.probe_fwhm_fs > 0:
            dt_fs = UNITS.time_from_au(tr.times[1] - tr.times[0])
            ch = {c: convolve_probe_envelope(tr.channel(c), dt_fs, cfg.beam.probe_fwhm_fs)
                  for c in ("dd", "dj", "jj")}
            tr = DiffractionTrace(tr.times, tr.spot, ch["dd"], ch["dj"], ch["jj"],
                                  ch["dd"] + ch["dj"] + ch["jj"], tr.imag_residue)
        traces[tuple(spot)] = tr
    return traces


def run_diffract(cfg: RunConfig, out: Path, threads: int = 1, traces=None) -> list[Path]:
    traces = compute_traces(cfg, threads) if traces is None else traces
    files = []
    for spot, tr in traces.items():
        rows = np.column_stack([UNITS.time_from_au(tr.times), tr.I_dd, tr.I_dj, tr.I_jj, tr.I_total])
        files.append(write_csv(out / f"diffraction_{spot_tag(spot)}.csv", cfg, "diffract",
                               ["t_fs", "I_dd", "I_dj", "I_jj", "I_total"], rows,
                               ["intensities per active electron in free-electron scattering units"]))
    return files


def run_spectrum(cfg: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    traces = compute_traces(cfg, threads)
    pulse = cfg.make_pulse()
    files = []
    for spot, tr in traces.items():
        rows = []
        for ch in ("dd", "dj", "jj", "total"):
            sc = _guard("diffraction_signal", spectral_content, tr.times, tr.channel(ch), pulse.omega,
                        pulse.tau / 4, 3 * pulse.tau / 4)
            rows.append([ch, sc.amp_omega, sc.amp_2omega, sc.ratio])
        files.append(write_csv(out / f"spectrum_{spot_tag(spot)}.csv", cfg, "spectrum",
                               ["channel", "amp_omega", "amp_2omega", "ratio"], rows,
                               ["Hann window over the central half of the pulse; ratio = amp_2omega / amp_omega"]))
    return files


def run_validate(cfg: RunConfig, out: Path, threads: int = 1) -> tuple[list[Path], bool, list[str]]:
    from .checks import run_suite

    results = _guard("validate", run_suite, cfg, threads)
    report = [f"{'PASS' if r.passed else 'FAIL'} [{r.module}] {r.name}: {r.value:.3e} (tol {r.tolerance:.1e})"
              for r in results]
    rows = [[r.module, r.name, "pass" if r.passed else "fail", _fmt(r.value), _fmt(r.tolerance)] for r in results]
    path = write_csv(out / "validate.csv", cfg, "validate", ["module", "check", "status", "value", "tolerance"], rows)
    return [path], all(r.passed for r in results), report


def run_pipeline(cfg: RunConfig, subcommand: str, threads: int = 1) -> PipelineResult:
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = PipelineResult()
    if subcommand == "bands":
        result.files = run_bands(cfg, out)
    elif subcommand == "propagate":
        result.files = run_propagate(cfg, out, threads)
    elif subcommand == "diffract":
        result.files = run_diffract(cfg, out, threads)
    elif subcommand == "spectrum":
        result.files = run_spectrum(cfg, out, threads)
    else:
        result.files, result.ok, result.report = run_validate(cfg, out, threads)
    return result
