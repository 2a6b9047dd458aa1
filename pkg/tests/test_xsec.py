import numpy as np
import pytest

from trdiff.units import ALPHA
from trdiff.xsec import (DensityGrid, ProbeGeometry, electron_dp_domega, electron_fluence_factor,
                         elastic_dsigma, form_factor, probability_to_dsigma, read_density_grid,
                         rutherford_from_transfer, rutherford_prefactor, thomson_prefactor,
                         write_density_grid, xray_dp_domega, xray_fluence_factor)

Z = [0.0, 0.0, 1.0]


def point_grid(charge=1.0, n=8, L=8.0):
    vals = np.zeros((n, n, n))
    vals[0, 0, 0] = charge / (L / n) ** 3
    return DensityGrid(vals, np.eye(3) * L, [0, 0, 0])


def gaussian_grid(sig=1.0, n=48, L=16.0):
    x = (np.arange(n) - n // 2) * (L / n)
    X, Y, Zz = np.meshgrid(x, x, x, indexing="ij")
    rho = np.exp(-(X**2 + Y**2 + Zz**2) / (2 * sig**2)) / (2 * np.pi * sig**2) ** 1.5
    return DensityGrid(rho, np.eye(3) * L, [x[0]] * 3)


def test_thomson_geometry():
    assert thomson_prefactor(ProbeGeometry(Z, Z, 1.0, [1, 0, 0])) == pytest.approx(ALPHA**4, rel=1e-14)
    assert thomson_prefactor(ProbeGeometry(Z, [1, 0, 0], 1.0, [1, 0, 0])) < 1e-30
    assert thomson_prefactor(ProbeGeometry(Z, [0, 1, 0], 1.0, [1, 0, 0])) == pytest.approx(ALPHA**4, rel=1e-14)


def test_thomson_closed_form_and_basis_rotation():
    rng = np.random.default_rng(0)
    for _ in range(10):
        ks = rng.normal(size=3)
        ks /= np.linalg.norm(ks)
        geom = ProbeGeometry(Z, ks, 2.0, [1, 0, 0])
        ref = ALPHA**4 * (1 - ks[0] ** 2)
        for ang in rng.uniform(0, 2 * np.pi, size=10):
            assert abs(thomson_prefactor(geom, ang) - ref) <= 1e-12 * ALPHA**4


def test_non_transverse_polarization_rejected():
    with pytest.raises(ValueError, match="transverse"):
        ProbeGeometry(Z, Z, 1.0, [0, 0, 1])
    with pytest.raises(ValueError):
        thomson_prefactor(ProbeGeometry(Z, Z, 1.0))


def test_unit_vectors_enforced():
    with pytest.raises(ValueError):
        ProbeGeometry([0, 0, 2], Z, 1.0)


def test_rutherford_backscatter():
    assert rutherford_prefactor(0.5, np.pi) == pytest.approx(0.25, rel=1e-15)


def test_rutherford_identity():
    E, th = 100.0, np.pi / 3
    k = np.sqrt(2 * E)
    dk = k * np.array([np.sin(th), 0, 1 - np.cos(th)])
    assert abs(rutherford_prefactor(E, th) / rutherford_from_transfer(dk) - 1) < 1e-12


def test_rutherford_algebraic_identity_random():
    rng = np.random.default_rng(1)
    for E, th in zip(rng.uniform(1e-2, 1e3, 1000), rng.uniform(1e-3, np.pi, 1000)):
        assert abs(rutherford_prefactor(E, th) * 16 * E**2 * np.sin(th / 2) ** 4 - 1) < 1e-12


def test_rutherford_forward_rejected():
    with pytest.raises(ValueError):
        rutherford_prefactor(1.0, 1e-9)
    with pytest.raises(ValueError):
        rutherford_prefactor(-1.0, 1.0)


def test_point_density_form_factor():
    g = point_grid()
    for s in ([0.1, 0.2, 0.3], [0, 0, 0], [-1.0, 0.5, 0.2]):
        assert abs(form_factor(g, s)) == pytest.approx(1.0, abs=1e-12)


def test_zero_frequency_is_electron_count():
    g = gaussian_grid()
    assert form_factor(g, [0, 0, 0]).real == pytest.approx(g.electron_count(), rel=1e-14)
    assert g.electron_count() == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("smag", [0.5, 1.5, 3.0])
def test_gaussian_form_factor(smag):
    g = gaussian_grid()
    s = smag * np.array([1.0, 2.0, -0.5]) / np.linalg.norm([1.0, 2.0, -0.5])
    f = form_factor(g, s)
    assert abs(f / np.exp(-smag**2 / 2) - 1) < 1e-4


def test_nyquist_violation_reports_resolution():
    g = point_grid(n=8, L=8.0)
    with pytest.raises(ValueError, match="need more than"):
        form_factor(g, [4.0, 0, 0])


def test_form_factor_linearity():
    rng = np.random.default_rng(2)
    cell = np.eye(3) * 5
    a, b = rng.normal(size=(2, 6, 6, 6))
    ga, gb = DensityGrid(a, cell, [0, 0, 0]), DensityGrid(b, cell, [0, 0, 0])
    gab = DensityGrid(2 * a - 3 * b, cell, [0, 0, 0])
    s = [0.4, -0.3, 0.9]
    assert abs(form_factor(gab, s) - (2 * form_factor(ga, s) - 3 * form_factor(gb, s))) < 1e-12


def test_form_factor_skewed_cell_matches_direct_sum():
    rng = np.random.default_rng(3)
    cell = np.array([[4.0, 0, 0], [1.0, 3.0, 0], [0.2, 0.5, 5.0]])
    grid = DensityGrid(rng.random((5, 4, 6)), cell, [0.3, -0.2, 0.1])
    s = np.array([0.5, 0.7, -0.4])
    direct = np.sum(grid.values.ravel() * np.exp(1j * grid.positions() @ s)) * grid.voxel_volume
    assert abs(form_factor(grid, s) - direct) < 1e-12


def test_elastic_dsigma_point_electron():
    g = point_grid()
    k = 1.0
    kin, ks = np.array(Z), np.array([np.sin(0.5), 0, np.cos(0.5)])
    geom = ProbeGeometry(kin, ks, k, [1, 0, 0])
    assert elastic_dsigma("electron", geom, g) == pytest.approx(rutherford_prefactor(0.5, 0.5), rel=1e-12)
    assert elastic_dsigma("xray", geom, g) == pytest.approx(thomson_prefactor(geom), rel=1e-12)
    with pytest.raises(ValueError):
        elastic_dsigma("neutron", geom, g)


def test_two_point_constructive_interference():
    n, L = 16, 8.0
    vals = np.zeros((n, n, n))
    vals[0, 0, 0] = vals[0, 0, 4] = 1 / (L / n) ** 3
    g = DensityGrid(vals, np.eye(3) * L, [0, 0, 0])
    d = 4 * L / n
    smag = 2 * np.pi / d
    k = 4.0
    theta = 2 * np.arcsin(smag / (2 * k))
    ks = np.array([0.0, 0.0, 1.0])
    kin = np.array([0.0, np.sin(theta), np.cos(theta)])
    # rotate so that the transfer points along z
    t = ProbeGeometry(kin, ks, k).transfer
    R = _rotation_onto(t / np.linalg.norm(t), np.array([0, 0, 1.0]))
    geom = ProbeGeometry(R @ kin, R @ ks, k)
    assert np.allclose(geom.transfer, [0, 0, smag], atol=1e-12)
    single = elastic_dsigma("electron", geom, point_grid(n=n, L=L))
    assert elastic_dsigma("electron", geom, g) == pytest.approx(4 * single, rel=1e-10)


def _rotation_onto(a, b):
    v = np.cross(a, b)
    c = a @ b
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


def test_friedel_symmetry():
    rng = np.random.default_rng(4)
    grid = DensityGrid(rng.random((8, 8, 8)), np.eye(3) * 6, [0, 0, 0])
    s = np.array([0.3, -0.5, 0.2])
    assert abs(abs(form_factor(grid, s)) ** 2 - abs(form_factor(grid, -s)) ** 2) < 1e-12


def test_probability_conversion():
    assert probability_to_dsigma(0.0, 3.0) == 0.0
    with pytest.raises(ValueError):
        probability_to_dsigma(1.0, 0.0)


def test_xray_chain_reproduces_thomson():
    geom = ProbeGeometry(Z, [0, np.sin(1.0), np.cos(1.0)], 1.0, [1, 0, 0])
    V = T = n = 1.0
    f = 0.7 - 0.2j
    dp = xray_dp_domega(geom, f, V, T)
    dsig = probability_to_dsigma(dp, xray_fluence_factor(n, V, T))
    assert dsig == pytest.approx(thomson_prefactor(geom) * abs(f) ** 2, rel=1e-14)


def test_electron_chain_reproduces_rutherford():
    th = 0.8
    geom = ProbeGeometry(Z, [np.sin(th), 0, np.cos(th)], 1.0)
    V = T = 1.0
    f = 0.3 + 0.4j
    dp = electron_dp_domega(geom, f, V, T)
    dsig = probability_to_dsigma(dp, electron_fluence_factor(1.0, V, T))
    assert dsig == pytest.approx(rutherford_prefactor(0.5, th) * abs(f) ** 2, rel=1e-12)


def test_grid_file_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    cell = np.array([[3.0, 0, 0], [0.5, 2.0, 0], [0, 0, 4.0]])
    grid = DensityGrid(rng.random((3, 4, 5)), cell, [0.1, 0.2, 0.3])
    path = tmp_path / "rho.txt"
    write_density_grid(path, grid)
    back = read_density_grid(path)
    assert np.array_equal(back.values, grid.values)
    assert np.array_equal(back.cell, grid.cell) and np.array_equal(back.origin, grid.origin)


def test_grid_file_x_fastest(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# comment\n2 1 1\n2 0 0\n0 1 0\n0 0 1\n0 0 0\n1.0  # x=0\n2.0\n")
    g = read_density_grid(path)
    assert g.values[0, 0, 0] == 1.0 and g.values[1, 0, 0] == 2.0


def test_grid_file_errors(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2 2\n1 0 0\n0 1 0\n0 0 1\n0 0 0\n1\n2\n")
    with pytest.raises(ValueError, match="expected 8 values"):
        read_density_grid(path)
