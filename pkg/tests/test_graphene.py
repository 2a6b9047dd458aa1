import numpy as np
import pytest

from trdiff import graphene as gr
from trdiff.units import UNITS

A = UNITS.length_to_au(2.46)
T = -UNITS.energy_to_au(2.7)


@pytest.fixture(scope="module")
def lat():
    return gr.Lattice(A)


@pytest.fixture(scope="module")
def orb():
    return gr.GaussianOrbital(0.45)


@pytest.fixture(scope="module")
def grid(lat):
    return gr.CellGrid(lat, 48, 1)


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def path_avoiding_k(lat, n=25):
    pts, _ = gr.bz_path(lat, n)
    return pts[gr.distance_to_dirac(lat, pts) > 0.05]


# ---------------------------------------------------------------- lattice


def test_reciprocity(lat):
    assert np.abs(lat.recip @ lat.direct.T - 2 * np.pi * np.eye(2)).max() < 1e-12


def test_bond_along_x(lat):
    d1 = lat.nn[0]
    assert abs(d1[1]) < 1e-14 and d1[0] > 0
    assert np.allclose(np.linalg.norm(lat.nn, axis=1), lat.bond_length, rtol=1e-14)
    assert np.allclose(lat.r_B - lat.r_A, d1)


def test_bragg_spot_directions(lat):
    s11, s1m = gr.bragg_vector(lat, 1, 1), gr.bragg_vector(lat, 1, -1)
    assert abs(s11[1]) < 1e-12 * np.linalg.norm(s11)
    assert abs(s1m[0]) < 1e-12 * np.linalg.norm(s1m)
    assert np.linalg.norm(s11) / np.linalg.norm(s1m) == pytest.approx(1 / np.sqrt(3), rel=1e-12)


def test_bragg_zero_rejected(lat):
    with pytest.raises(ValueError):
        gr.bragg_vector(lat, 0, 0)


def test_dirac_points_are_zone_corners(lat):
    K = lat.dirac_points()[0]
    frac = K @ np.linalg.inv(lat.recip)
    assert np.allclose(np.sort(frac % 1), [1 / 3, 2 / 3], atol=1e-12)


# ------------------------------------------------------------ Hamiltonian


def test_hamiltonian_dirac_and_gamma(lat):
    for K in lat.dirac_points():
        assert abs(gr.structure_sum(lat, K)) < 1e-12
    w = np.linalg.eigvalsh(gr.hamiltonian_k(lat, T, [0.0, 0.0]))
    assert np.allclose(w, [-3 * abs(T), 3 * abs(T)], atol=1e-14)


def test_hamiltonian_hermitian_zero_diagonal(lat):
    rng = np.random.default_rng(0)
    H = gr.hamiltonian_k(lat, T, rng.normal(size=(100, 2)))
    assert np.array_equal(H, np.conj(np.swapaxes(H, -1, -2)))
    assert np.all(H[:, 0, 0] == 0) and np.all(H[:, 1, 1] == 0)


def test_eigensystem_diagonal():
    st = gr.eigensystem(np.diag([-1.0, 1.0]))
    assert (st.eps_v, st.eps_c) == (-1.0, 1.0)
    assert np.array_equal(st.evec_v, [1, 0]) and np.array_equal(st.evec_c, [0, 1])


def test_eigensystem_random_hermitian():
    rng = np.random.default_rng(1)
    for _ in range(50):
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        H = M + M.conj().T
        st = gr.eigensystem(H)
        assert st.eps_v <= st.eps_c
        for e, v in ((st.eps_v, st.evec_v), (st.eps_c, st.evec_c)):
            assert np.abs(H @ v - e * v).max() < 1e-12
            first = v[np.argmax(np.abs(v) > 1e-12)]
            assert abs(first.imag) < 1e-15 and first.real >= 0
        V = np.stack([st.evec_v, st.evec_c], axis=1)
        assert np.abs(V.conj().T @ V - np.eye(2)).max() < 1e-12


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        gr.eigensystem(np.array([[0, 1], [0, 0]]))


def test_band_states_match_eigensystem(lat):
    rng = np.random.default_rng(2)
    p = rng.normal(size=(30, 2))
    eps, U = gr.band_states(lat, T, p)
    for i in range(len(p)):
        st = gr.eigensystem(gr.hamiltonian_k(lat, T, p[i]))
        assert eps[i] == pytest.approx([st.eps_v, st.eps_c], abs=1e-13)
        assert np.abs(U[i, :, 0] - st.evec_v).max() < 1e-12
        assert np.abs(U[i, :, 1] - st.evec_c).max() < 1e-12


def test_spectrum_symmetries(lat):
    rng = np.random.default_rng(3)
    p = rng.normal(size=(100, 2))
    eps, _ = gr.band_states(lat, T, p)
    assert np.abs(eps[:, 0] + eps[:, 1]).max() < 1e-12
    for shift in (lat.b1, lat.b2):
        assert np.abs(gr.band_states(lat, T, p + shift)[0] - eps).max() < 1e-12
    for n in range(1, 6):
        rot = p @ rotation(n * np.pi / 3).T
        assert np.abs(gr.band_states(lat, T, rot)[0] - eps).max() < 1e-10


def test_kgrid(lat):
    kg = gr.make_kgrid(lat, 12)
    assert kg.size == 144
    assert kg.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert gr.distance_to_dirac(lat, kg.points).min() > 1e-3
    shifted = gr.make_kgrid(lat, 12, shift=(1, -2))
    assert np.abs(gr.band_states(lat, T, shifted.points)[0] - gr.band_states(lat, T, kg.points)[0]).max() < 1e-12
    with pytest.raises(ValueError):
        gr.make_kgrid(lat, 7)


def test_bz_path_passes_k(lat):
    pts, dist = gr.bz_path(lat)
    assert np.all(np.diff(dist) >= 0)
    assert gr.distance_to_dirac(lat, pts).min() < 1e-12
    assert np.allclose(pts[0], 0) and np.allclose(pts[-1], 0)


# ---------------------------------------------------------- interband d_cv


def test_dcv_time_reversal(lat):
    rng = np.random.default_rng(4)
    for p in rng.normal(scale=0.4, size=(20, 2)):
        if gr.distance_to_dirac(lat, p) < 0.02:
            continue
        d = gr.interband_coupling(lat, T, p)
        dm = gr.interband_coupling(lat, T, -p)
        assert np.abs(dm - np.conj(d)).max() < 1e-6 * max(1.0, np.abs(d).max())


def test_dcv_finite_difference_order(lat):
    p = np.array([0.21, 0.37])
    d = [gr.interband_coupling(lat, T, p, dp=h) for h in (4e-3, 2e-3, 1e-3)]
    e1, e2 = np.abs(d[0] - d[1]).max(), np.abs(d[1] - d[2]).max()
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_dcv_diverges_near_k(lat):
    K = lat.dirac_points()[0]
    direction = np.array([np.cos(0.3), np.sin(0.3)])
    q = np.logspace(-3, -1.5, 6)
    mags = [np.linalg.norm(gr.interband_coupling(lat, T, K + qi * direction, dp=1e-5)) for qi in q]
    slope = np.polyfit(np.log(q), np.log(mags), 1)[0]
    assert abs(slope + 1) < 0.1


def test_dcv_rejects_dirac_point(lat):
    with pytest.raises(ValueError, match="Dirac"):
        gr.interband_coupling(lat, T, lat.dirac_points()[1])


def test_berry_connection_is_hermitian(lat):
    rng = np.random.default_rng(5)
    conn = gr.berry_connection(lat, T, rng.normal(scale=0.3, size=(10, 2)))
    assert np.abs(conn - np.conj(np.swapaxes(conn, -1, -2))).max() < 1e-8


# ---------------------------------------------------------- real space


def test_grid_rejects_coarse_spacing(lat, orb):
    with pytest.raises(ValueError, match="too coarse"):
        gr.CellGrid(lat, 16, 1).check_resolves(orb)


def test_cell_fields_normalized_and_hermitian(lat, orb, grid):
    rng = np.random.default_rng(6)
    p = rng.normal(scale=0.3, size=(4, 2))
    f = gr.cell_matrix_elements(lat, T, p, grid, orb)
    norms = grid.integrate(f.Q)
    assert np.abs(norms - np.eye(2)).max() < 1e-3
    assert np.abs(f.Q[:, 1, 0] - np.conj(f.Q[:, 0, 1])).max() < 1e-14


def test_bloch_orbital_norm(lat, orb, grid):
    phi = gr._bloch_orbitals(lat, grid, orb, np.array([[0.1, -0.2]]))
    assert np.abs(grid.integrate(np.abs(phi) ** 2) - 1).max() < 1e-4


def test_bond_current_matches_band_velocity(lat, orb, grid):
    p = path_avoiding_k(lat, 12)[::3]
    f = gr.cell_matrix_elements(lat, T, p, grid, orb, "bond")
    h = 1e-5
    for ax, J in enumerate((f.Jx, f.Jy)):
        step = np.zeros(2)
        step[ax] = h
        v = (gr.band_states(lat, T, p + step)[0] - gr.band_states(lat, T, p - step)[0]) / (2 * h)
        integrated = np.stack([grid.integrate(J[:, n, n]).real for n in range(2)], axis=-1)
        scale = np.abs(v).max()
        assert np.abs(integrated - v).max() < 0.05 * scale


def test_kinetic_current_misses_tight_binding_velocity(lat, orb, grid):
    """The canonical (1/2i)(psi* d psi - c.c.) current of well-localized
    Gaussians does not carry the hopping-driven band velocity: the hopping
    amplitude is a model parameter, not a kinetic-energy matrix element of
    the orbital basis. This is why the bond current is the default."""
    p = np.array([[0.3, 0.1]])
    f = gr.cell_matrix_elements(lat, T, p, grid, orb, "kinetic")
    h = 1e-5
    v = (gr.band_states(lat, T, p + [h, 0])[0] - gr.band_states(lat, T, p - [h, 0])[0]) / (2 * h)
    got = grid.integrate(f.Jx[0, 1, 1]).real
    assert abs(got / v[0, 1]) < 0.05


def test_kinetic_current_is_grid_consistent(lat, orb):
    """Kinetic route: grid quadrature equals the closed-form pair sum."""
    p = np.array([[0.2, -0.15], [-0.4, 0.25]])
    S = gr.bragg_vector(lat, 1, -1)
    g = gr.CellGrid(lat, 48, 1)
    tab = gr.build_form_factor_table(lat, T, p, [(1, -1)], g, orb, "kinetic")
    FQ, FJx, FJy = gr.FormFactorModel(lat, T, orb, "kinetic").band_transforms(p, S)
    assert np.abs(tab.Jx[0] - FJx).max() < 1e-10
    assert np.abs(tab.Q[0] - FQ).max() < 1e-10


def test_fourier_at_bragg_oracles(lat, grid):
    S = gr.bragg_vector(lat, 1, -1)
    assert abs(gr.fourier_at_bragg(grid, np.ones(grid.n**2), S)) < 1e-10
    plane = np.exp(1j * (grid.points @ S))
    assert gr.fourier_at_bragg(grid, plane, S) == pytest.approx(lat.cell_area, rel=1e-12)


def test_fourier_gaussian_density_on_a(lat, grid, orb):
    S = gr.bragg_vector(lat, 2, 1)
    shifts = gr._translations(2) @ lat.direct
    r = grid.points
    dens = sum(orb(r[:, 0] - c[0], r[:, 1] - c[1]) ** 2 for c in shifts + lat.r_A)
    expected = np.exp(-1j * (S @ lat.r_A)) * np.exp(-(S @ S) * orb.width**2 / 4)
    assert abs(gr.fourier_at_bragg(grid, dens, S) - expected) < 1e-4


def test_fourier_nyquist_rejected(lat):
    g = gr.CellGrid(lat, 8, 1)
    with pytest.raises(ValueError, match="does not resolve"):
        gr.fourier_at_bragg(g, np.ones(64), gr.bragg_vector(lat, 5, 0))


# ---------------------------------------------------------- tables


@pytest.fixture(scope="module")
def model(lat, orb):
    return gr.FormFactorModel(lat, T, orb)


def test_grid_and_closed_form_tables_agree(lat, orb, grid, model):
    rng = np.random.default_rng(7)
    p = rng.normal(scale=0.3, size=(6, 2))
    spots = [(1, 1), (1, -1), (2, 0)]
    a = gr.build_form_factor_table(lat, T, p, spots, grid, orb)
    b = model.table(p, spots)
    for name in ("Q", "Jx", "Jy"):
        x, y = getattr(a, name), getattr(b, name)
        assert np.abs(x - y).max() < 1e-10 * max(1.0, np.abs(y).max())


def test_table_hermiticity(model):
    rng = np.random.default_rng(8)
    p = rng.normal(scale=0.3, size=(10, 2))
    tab = model.table(p, [(1, -1), (-1, 1), (1, 1), (-1, -1)])
    for s, ms in (((1, -1), (-1, 1)), ((1, 1), (-1, -1))):
        for name in ("Q", "Jx", "Jy"):
            arr = getattr(tab, name)
            a, b = arr[tab.spot_index(s)], arr[tab.spot_index(ms)]
            assert np.abs(a - np.conj(np.swapaxes(b, -1, -2))).max() < 1e-14


def test_bond_current_transform_at_zero_is_velocity(lat, model):
    p = path_avoiding_k(lat, 15)
    _, FJx, FJy = model.band_transforms(p, np.zeros(2))
    h = 1e-6
    for ax, F in enumerate((FJx, FJy)):
        step = np.zeros(2)
        step[ax] = h
        v = (gr.band_states(lat, T, p + step)[0] - gr.band_states(lat, T, p - step)[0]) / (2 * h)
        assert np.abs(np.einsum("knn->kn", F).real - v).max() < 1e-8


def test_atomic_limit_is_momentum_independent(lat):
    narrow = gr.FormFactorModel(lat, 0.0, gr.GaussianOrbital(0.25))
    rng = np.random.default_rng(9)
    FQ, _, _ = narrow.band_transforms(rng.normal(scale=0.5, size=(20, 2)), gr.bragg_vector(lat, 1, -1))
    assert np.abs(FQ[:, 0, 0] - FQ[0, 0, 0]).max() < 1e-10


def test_origin_shift_is_a_common_phase(lat, orb, model):
    o = np.array([0.37, -1.1])
    moved = gr.FormFactorModel(lat.shifted(o), T, orb)
    rng = np.random.default_rng(10)
    p = rng.normal(scale=0.3, size=(5, 2))
    S = gr.bragg_vector(lat, 1, -1)
    phase = np.exp(-1j * (S @ o))
    for a, b in zip(model.band_transforms(p, S), moved.band_transforms(p, S)):
        assert np.abs(b - phase * a).max() < 1e-12


def test_table_csv(tmp_path, model):
    tab = model.table(np.array([[0.1, 0.2]]), [(1, 1)])
    path = tmp_path / "t.csv"
    tab.to_csv(path, header="# test\n")
    lines = path.read_text().splitlines()
    assert lines[1] == "spot,quantity,band_pair,kx,ky,re,im"
    assert len(lines) == 2 + 3 * 4
    assert lines[2].startswith("1_1,Q,vv,")
