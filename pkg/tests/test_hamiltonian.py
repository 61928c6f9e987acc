import numpy as np
import pytest

from holstein_kpm.hamiltonian import (
    assemble,
    dump_binary,
    extremal_eigenvalues,
    load_binary,
    matvec,
)
from holstein_kpm.hilbert import all_k_sectors, enumerate_basis, make_sector
from holstein_kpm.oracle import real_space_hamiltonian
from holstein_kpm.params import EffectiveParams

NU_D = 75e6


def make_params(t_dimensionless, g_h, n_sites, max_phonons):
    return EffectiveParams(
        t_e_over_2pi=t_dimensionless * NU_D,
        g_h=g_h,
        omega_delta_over_2pi=NU_D,
        n_sites=n_sites,
        max_phonons=max_phonons,
    )


def test_vacuum_diagonal_reproduces_tight_binding_dispersion():
    params = make_params(2.0, 1.0, 4, 2)
    basis = enumerate_basis(4, 2)
    for sector in all_k_sectors(basis):
        h = assemble(sector, basis, params).to_dense()
        assert h[0, 0] == pytest.approx(-2 * 2.0 * np.cos(sector.k_value), abs=1e-14)


def test_coupling_element_between_vacuum_and_one_phonon():
    params = make_params(0.7, 1.3, 4, 2)
    basis = enumerate_basis(4, 2)
    h = assemble(make_sector(1, basis), basis, params).to_dense()
    one = basis.rank([1, 0, 0, 0])
    assert h[0, one] == pytest.approx(1.3)
    assert h[one, 0] == pytest.approx(1.3)


def test_free_phonon_hamiltonian_is_diagonal():
    params = make_params(0.0, 0.0, 4, 3)
    basis = enumerate_basis(4, 3)
    h = assemble(make_sector(2, basis), basis, params).to_dense()
    occ = basis.occupations_array()
    assert np.abs(h - np.diag(occ.sum(axis=1))).max() == 0.0


def test_hermiticity_exact_over_stored_entries():
    params = make_params(1.2, 0.8, 4, 3)
    basis = enumerate_basis(4, 3)
    for sector in all_k_sectors(basis):
        h = assemble(sector, basis, params).to_dense()
        assert np.abs(h - h.conj().T).max() == 0.0


def test_nonzeros_per_row_bounded_by_five():
    params = make_params(1.2, 0.8, 6, 4)
    basis = enumerate_basis(6, 4)
    h = assemble(make_sector(1, basis), basis, params)
    assert np.diff(h.row_offsets).max() <= 5


def test_matvec_zero_and_eigenvector():
    params = make_params(1.5, 0.0, 4, 2)
    basis = enumerate_basis(4, 2)
    sector = make_sector(1, basis)
    h = assemble(sector, basis, params)
    zero = np.zeros(h.dim, dtype=np.complex128)
    assert np.all(matvec(h, zero) == 0.0)
    unit = np.zeros(h.dim, dtype=np.complex128)
    unit[0] = 1.0
    out = matvec(h, unit)
    expected = -2 * 1.5 * np.cos(sector.k_value)
    assert out[0] == pytest.approx(expected, abs=1e-14)
    assert np.abs(out[1:]).max() == 0.0


def test_matvec_hermiticity_probes():
    params = make_params(0.9, 1.1, 4, 3)
    basis = enumerate_basis(4, 3)
    h = assemble(make_sector(-1, basis), basis, params)
    rng = np.random.default_rng(17)
    for _ in range(100):
        x = rng.standard_normal(h.dim) + 1j * rng.standard_normal(h.dim)
        y = rng.standard_normal(h.dim) + 1j * rng.standard_normal(h.dim)
        lhs = np.vdot(x, matvec(h, y))
        rhs = np.conj(np.vdot(y, matvec(h, x)))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_matvec_matches_scipy_and_scaled_variant():
    params = make_params(1.2, 0.8, 6, 3)
    basis = enumerate_basis(6, 3)
    h = assemble(make_sector(2, basis), basis, params)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(h.dim) + 1j * rng.standard_normal(h.dim)
    assert np.abs(matvec(h, x) - h.to_scipy() @ x).max() < 1e-12
    got = matvec(h, x, scale=0.25, shift=1.5)
    want = 0.25 * (h.to_scipy() @ x - 1.5 * x)
    assert np.abs(got - want).max() < 1e-12


def test_matvec_rejects_dimension_mismatch():
    params = make_params(1.0, 1.0, 4, 1)
    basis = enumerate_basis(4, 1)
    h = assemble(make_sector(0, basis), basis, params)
    with pytest.raises(ValueError):
        matvec(h, np.zeros(h.dim + 1, dtype=np.complex128))


def test_extremal_eigenvalues_free_phonons():
    params = make_params(0.0, 0.0, 6, 6)
    basis = enumerate_basis(6, 6)
    bounds = extremal_eigenvalues(assemble(make_sector(0, basis), basis, params))
    assert bounds.e_min == pytest.approx(0.0, abs=1e-8)
    assert bounds.e_max == pytest.approx(6.0, abs=1e-8)


def test_extremal_eigenvalues_single_state_sector():
    params = make_params(1.7, 1.0, 4, 0)
    basis = enumerate_basis(4, 0)
    sector = make_sector(1, basis)
    bounds = extremal_eigenvalues(assemble(sector, basis, params))
    expected = -2 * 1.7 * np.cos(sector.k_value)
    assert bounds.e_min == pytest.approx(expected, abs=1e-12)
    assert bounds.e_min == bounds.e_max


def test_extremal_eigenvalues_match_dense():
    params = make_params(1.0, 1.0, 4, 2)
    basis = enumerate_basis(4, 2)
    h = assemble(make_sector(1, basis), basis, params)
    dense = np.linalg.eigvalsh(h.to_dense())
    bounds = extremal_eigenvalues(h, tol=1e-10)
    assert bounds.e_min == pytest.approx(dense[0], abs=1e-8)
    assert bounds.e_max == pytest.approx(dense[-1], abs=1e-8)


def test_extremal_eigenvalues_lanczos_path_brackets_dense():
    # dimension above the dense cutoff exercises the Lanczos branch
    params = make_params(1.0, 2.0, 6, 6)
    basis = enumerate_basis(6, 6)
    h = assemble(make_sector(1, basis), basis, params)
    assert h.dim > 128
    dense = np.linalg.eigvalsh(h.to_dense())
    bounds = extremal_eigenvalues(h, tol=1e-9, max_iter=600)
    spread = dense[-1] - dense[0]
    assert bounds.e_min <= dense[0] + 1e-9 * spread
    assert bounds.e_max >= dense[-1] - 1e-9 * spread
    assert abs(bounds.e_min - dense[0]) < 1e-7 * spread
    assert abs(bounds.e_max - dense[-1]) < 1e-7 * spread
    assert bounds.residual < 1e-8


def test_sector_eigenvalues_tile_full_spectrum():
    # operational check of momentum conservation: the union of sector spectra
    # equals the spectrum of the full real-space Hamiltonian
    params = make_params(1.2, 1.3, 4, 3)
    basis = enumerate_basis(4, 3)
    full = real_space_hamiltonian(basis, params)
    ev_full = np.sort(np.linalg.eigvalsh(full))
    ev_sectors = np.sort(
        np.concatenate(
            [
                np.linalg.eigvalsh(assemble(s, basis, params).to_dense())
                for s in all_k_sectors(basis)
            ]
        )
    )
    assert np.abs(ev_full - ev_sectors).max() < 1e-10


def test_ground_state_energy_variational_bounds():
    params = make_params(1.1, 1.4, 4, 4)
    basis = enumerate_basis(4, 4)
    h = assemble(make_sector(0, basis), basis, params)
    e0 = np.linalg.eigvalsh(h.to_dense())[0]
    t, g = params.t_dimensionless, params.g_h
    assert -2 * t - g**2 <= e0 <= -2 * t + 1e-12


def test_reflection_symmetry_of_sector_spectra():
    params = make_params(0.8, 1.0, 6, 2)
    basis = enumerate_basis(6, 2)
    for k in (1, 2):
        ev_plus = np.linalg.eigvalsh(assemble(make_sector(k, basis), basis, params).to_dense())
        ev_minus = np.linalg.eigvalsh(assemble(make_sector(-k, basis), basis, params).to_dense())
        assert np.abs(ev_plus - ev_minus).max() < 1e-12


def test_truncation_shell_weight_diagnostic():
    # free phonons: the ground state is the vacuum, nothing on the M shell
    params = make_params(0.0, 0.0, 4, 3)
    basis = enumerate_basis(4, 3)
    bounds = extremal_eigenvalues(assemble(make_sector(0, basis), basis, params))
    assert bounds.shell_weight == pytest.approx(0.0, abs=1e-20)
    # coupled ground state leaks onto the shell, less so for larger M
    weights = []
    for max_phonons in (2, 6):
        params = make_params(1.0, 1.0, 4, max_phonons)
        basis = enumerate_basis(4, max_phonons)
        h = assemble(make_sector(0, basis), basis, params)
        weights.append(extremal_eigenvalues(h).shell_weight)
    assert weights[0] > weights[1] > 0.0


def test_binary_dump_round_trip(tmp_path):
    params = make_params(1.0, 0.9, 4, 2)
    basis = enumerate_basis(4, 2)
    sector = make_sector(1, basis)
    h = assemble(sector, basis, params)
    path = tmp_path / "sector.bin"
    dump_binary(h, path)
    back = load_binary(path, sector, params.omega_delta_over_2pi)
    assert np.array_equal(back.row_offsets, h.row_offsets)
    assert np.array_equal(back.column_indices, h.column_indices)
    assert np.array_equal(back.values, h.values)
    assert back.dim == h.dim
