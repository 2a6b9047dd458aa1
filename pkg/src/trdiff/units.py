"""Atomic-unit conversion constants (CODATA 2018) and helpers.

Everything inside the package works in Hartree atomic units; conversion
happens only at the configuration / file boundary.
"""
from dataclasses import dataclass

HARTREE_EV = 27.211386245988
AU_TIME_FS = 0.024188843265857
AU_FIELD_V_PER_NM = 514.220674763
BOHR_ANGSTROM = 0.529177210903
ALPHA = 1.0 / 137.035999084
ELECTRON_REST_EV = 510998.95
SPEED_OF_LIGHT_AU = 1.0 / ALPHA


@dataclass(frozen=True)
class UnitTable:
    energy_ev: float = HARTREE_EV
    time_fs: float = AU_TIME_FS
    field_v_per_nm: float = AU_FIELD_V_PER_NM
    length_angstrom: float = BOHR_ANGSTROM

    def energy_to_au(self, ev):
        return ev / self.energy_ev

    def energy_from_au(self, au):
        return au * self.energy_ev

    def time_to_au(self, fs):
        return fs / self.time_fs

    def time_from_au(self, au):
        return au * self.time_fs

    def field_to_au(self, v_per_nm):
        return v_per_nm / self.field_v_per_nm

    def field_from_au(self, au):
        return au * self.field_v_per_nm

    def length_to_au(self, angstrom):
        return angstrom / self.length_angstrom

    def length_from_au(self, au):
        return au * self.length_angstrom


UNITS = UnitTable()
