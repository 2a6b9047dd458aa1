"""Run configuration: JSON parsing, validation, defaults and unit conversion."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .units import UNITS


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class LatticeSection:
    a_angstrom: float = 2.46
    t_hop_eV: float = 2.7
    orbital_width_au: float = 0.45
    current_model: str = "bond"


@dataclass
class PumpSection:
    E0_V_per_nm: float = 2.5
    photon_eV: float = 1.55
    tau_fs: float = 21.0
    pol: list = field(default_factory=lambda: [1.0, 0.0])


@dataclass
class GridSection:
    nk: int = 48
    cell_grid_n: int = 48
    halo: int = 1


@dataclass
class PropagationSection:
    dt_au: float = 0.1
    T2_fs: Any = 10.0
    store_every: int = 10


@dataclass
class BeamSection:
    kinetic_eV: float = 1.0e6
    incidence_deg: float = 45.0
    probe: str = "electron_rel"
    probe_fwhm_fs: float = 0.0


@dataclass
class RunConfig:
    lattice: LatticeSection = field(default_factory=LatticeSection)
    pump: PumpSection = field(default_factory=PumpSection)
    grid: GridSection = field(default_factory=GridSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    beam: BeamSection = field(default_factory=BeamSection)
    spots: list = field(default_factory=lambda: [[1, 1], [1, -1]])
    snapshot_times_fs: list = field(default_factory=lambda: [9.8, 11.2, 11.8, 20.0])
    output_dir: str = "trdiff_out"

    # ---- derived physical objects (atomic units) ----
    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        t2 = d["propagation"]["T2_fs"]
        if isinstance(t2, float) and math.isinf(t2):
            d["propagation"]["T2_fs"] = "inf"
        return d

    def sha256(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def T2_au(self) -> float:
        t2 = self.propagation.T2_fs
        return math.inf if t2 == "inf" or math.isinf(t2) else UNITS.time_to_au(t2)

    def make_lattice(self):
        from .graphene import Lattice
        return Lattice(UNITS.length_to_au(self.lattice.a_angstrom))

    @property
    def t_hop_au(self) -> float:
        # signed so that the lower band is the bonding combination
        return -abs(UNITS.energy_to_au(self.lattice.t_hop_eV))

    def make_orbital(self):
        from .graphene import GaussianOrbital
        return GaussianOrbital(self.lattice.orbital_width_au)

    def make_pulse(self):
        from .sbe import LaserPulse
        return LaserPulse(UNITS.field_to_au(self.pump.E0_V_per_nm),
                          UNITS.energy_to_au(self.pump.photon_eV),
                          UNITS.time_to_au(self.pump.tau_fs),
                          tuple(self.pump.pol))

    def make_propagator(self):
        from .sbe import PropagatorConfig
        return PropagatorConfig(self.propagation.dt_au, self.T2_au, self.propagation.store_every)

    def make_beam(self):
        from .diffraction import BeamConfig, incidence_direction
        return BeamConfig(self.beam.kinetic_eV, incidence_direction(self.beam.incidence_deg),
                          self.beam.probe)

    def make_form_factor_model(self):
        from .graphene import FormFactorModel
        return FormFactorModel(self.make_lattice(), self.t_hop_au, self.make_orbital(),
                               self.lattice.current_model)


_SECTIONS = {
    "lattice": LatticeSection,
    "pump": PumpSection,
    "grid": GridSection,
    "propagation": PropagationSection,
    "beam": BeamSection,
}


def _number(key, v, positive=True, allow_zero=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    if positive and (v < 0 or (v == 0 and not allow_zero)):
        raise ConfigError(f"{key}: must be {'non-negative' if allow_zero else 'positive'}, got {v}")
    return v


def _integer(key, v, minimum=1):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {type(v).__name__}")
    if v < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {v}")
    return v


def _choice(key, v, options):
    if v not in options:
        raise ConfigError(f"{key}: expected one of {sorted(options)}, got {v!r}")
    return v


def _validate(cfg: RunConfig) -> None:
    L, P, G, R, B = cfg.lattice, cfg.pump, cfg.grid, cfg.propagation, cfg.beam
    L.a_angstrom = _number("lattice.a_angstrom", L.a_angstrom)
    L.t_hop_eV = _number("lattice.t_hop_eV", L.t_hop_eV)
    L.orbital_width_au = _number("lattice.orbital_width_au", L.orbital_width_au)
    _choice("lattice.current_model", L.current_model, {"bond", "kinetic"})
    P.E0_V_per_nm = _number("pump.E0_V_per_nm", P.E0_V_per_nm, allow_zero=True)
    P.photon_eV = _number("pump.photon_eV", P.photon_eV)
    P.tau_fs = _number("pump.tau_fs", P.tau_fs)
    if not isinstance(P.pol, list) or len(P.pol) != 2:
        raise ConfigError("pump.pol: expected a list of two numbers")
    P.pol = [_number("pump.pol", v, positive=False) for v in P.pol]
    norm = math.hypot(*P.pol)
    if norm == 0:
        raise ConfigError("pump.pol: zero vector")
    P.pol = [v / norm for v in P.pol]
    _integer("grid.nk", G.nk, 2)
    if G.nk % 2:
        raise ConfigError(f"grid.nk: must be even, got {G.nk}")
    _integer("grid.cell_grid_n", G.cell_grid_n, 4)
    _integer("grid.halo", G.halo, 1)
    R.dt_au = _number("propagation.dt_au", R.dt_au)
    if R.T2_fs == "inf":
        R.T2_fs = math.inf
    else:
        R.T2_fs = _number("propagation.T2_fs", R.T2_fs)
    _integer("propagation.store_every", R.store_every, 1)
    B.kinetic_eV = _number("beam.kinetic_eV", B.kinetic_eV, allow_zero=True)
    B.incidence_deg = _number("beam.incidence_deg", B.incidence_deg, positive=False)
    if not 0 < B.incidence_deg < 90:
        raise ConfigError("beam.incidence_deg: must lie strictly between 0 and 90")
    _choice("beam.probe", B.probe, {"xray", "electron_nonrel", "electron_rel"})
    B.probe_fwhm_fs = _number("beam.probe_fwhm_fs", B.probe_fwhm_fs, allow_zero=True)
    if not isinstance(cfg.spots, list) or not cfg.spots:
        raise ConfigError("spots: expected a non-empty list of [h, k] pairs")
    for s in cfg.spots:
        if (not isinstance(s, list) or len(s) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in s)):
            raise ConfigError(f"spots: entry {s!r} is not an integer pair [h, k]")
        if s == [0, 0]:
            raise ConfigError("spots: [0, 0] is the undiffracted beam")
    if not isinstance(cfg.snapshot_times_fs, list):
        raise ConfigError("snapshot_times_fs: expected a list of times")
    cfg.snapshot_times_fs = [_number("snapshot_times_fs", t, allow_zero=True) for t in cfg.snapshot_times_fs]
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        raise ConfigError("output_dir: expected a non-empty string")
    try:
        cfg.make_propagator().check_resolution(cfg.make_pulse())
    except ValueError as exc:
        raise ConfigError(f"propagation.dt_au: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    top = {f.name for f in dataclasses.fields(RunConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in top:
            raise ConfigError(f"{key}: unknown key")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected an object")
            cls = _SECTIONS[key]
            names = {f.name for f in dataclasses.fields(cls)}
            for sub in value:
                if sub not in names:
                    raise ConfigError(f"{key}.{sub}: unknown key")
            kwargs[key] = cls(**value)
        else:
            kwargs[key] = value
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def parse_config(path, echo: bool = True) -> RunConfig:
    """Load a JSON config, fill defaults, validate, and (optionally) write the
    resolved config to ``output_dir/config_resolved.json``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    cfg = config_from_dict(data)
    if echo:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config_resolved.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return cfg
