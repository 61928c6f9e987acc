import math

import numpy as np
import pytest

from holstein_kpm.errors import CapacityError
from holstein_kpm.hilbert import (
    PhononBasis,
    all_k_sectors,
    bloch_start_vector,
    enumerate_basis,
    make_sector,
    translate_config,
)


def test_size_single_site_vacuum():
    assert enumerate_basis(1, 0).size == 1


def test_enumeration_order_n2_m2():
    basis = enumerate_basis(2, 2)
    assert basis.size == 6
    listed = [tuple(c) for c in basis.configs()]
    assert listed == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_size_matches_binomial_formula():
    for n, m in [(2, 2), (3, 3), (4, 5), (6, 8), (10, 18), (10, 8)]:
        basis = PhononBasis(n, m, max_states=2**31)
        assert basis.size == math.comb(m + n, n)
    assert PhononBasis(10, 18).size == 13_123_110
    assert PhononBasis(10, 8).size == 43_758


def test_rank_unrank_bijection_exhaustive():
    basis = enumerate_basis(3, 3)
    assert basis.size == 20
    for i in range(basis.size):
        assert basis.rank(basis.unrank(i)) == i
    for i, config in enumerate(basis.configs()):
        assert basis.rank(config) == i


def test_vacuum_ranks_first():
    for n, m in [(2, 3), (4, 2), (6, 4)]:
        assert enumerate_basis(n, m).rank([0] * n) == 0


def test_rank_rejects_invalid_configs():
    basis = enumerate_basis(3, 2)
    with pytest.raises(ValueError):
        basis.rank([1, 1, 1])  # total = M + 1
    with pytest.raises(ValueError):
        basis.rank([1, -1, 0])
    with pytest.raises(ValueError):
        basis.rank([1, 0])  # wrong length


def test_rank_many_matches_scalar_rank():
    basis = enumerate_basis(5, 4)
    occ = basis.occupations_array()
    assert np.array_equal(basis.rank_many(occ), np.arange(basis.size))


def test_capacity_guard():
    with pytest.raises(CapacityError):
        PhononBasis(10, 18, max_states=1_000_000)


def test_translate_identity_and_example():
    config = [3, 0, 1, 0]
    assert tuple(translate_config(config, 0)) == (3, 0, 1, 0)
    assert tuple(translate_config(config, 1)) == (0, 3, 0, 1)


def test_translate_cyclic_group_order():
    rng = np.random.default_rng(2)
    config = rng.integers(0, 3, size=6)
    out = config.copy()
    for _ in range(6):
        out = translate_config(out, 1)
    assert np.array_equal(out, config)


def test_translate_preserves_total():
    rng = np.random.default_rng(3)
    for _ in range(20):
        config = rng.integers(0, 4, size=5)
        n = int(rng.integers(0, 5))
        assert translate_config(config, n).sum() == config.sum()


def test_k_sector_grid():
    basis = enumerate_basis(10, 1)
    sectors = all_k_sectors(basis)
    assert len(sectors) == 10
    values = np.array([s.k_value for s in sectors])
    assert np.all(values > -np.pi) and np.all(values <= np.pi + 1e-15)
    # permitted quasimomenta are multiples of pi/5 for N=10
    assert np.allclose(sorted(values), np.arange(-4, 6) * np.pi / 5)


def test_k_index_wraps_and_requires_even():
    basis = enumerate_basis(4, 1)
    assert make_sector(3, basis).k_index == -1
    assert make_sector(-2, basis).k_index == 2
    with pytest.raises(ValueError):
        make_sector(0, enumerate_basis(3, 1))


def test_completeness_of_sector_dimensions():
    basis = enumerate_basis(4, 3)
    sectors = all_k_sectors(basis)
    assert sum(s.dim for s in sectors) == basis.n_sites * basis.size


def _explicit_bloch_matrix(k_value, basis):
    """|K,m> built literally in the N*D product space (electron site, phonons)."""
    n, d = basis.n_sites, basis.size
    occ = basis.occupations_array()
    mat = np.zeros((n * d, d), dtype=complex)
    for m in range(d):
        for p in range(n):
            shifted = np.roll(occ[m], p)
            mat[p * d + basis.rank(shifted), m] += np.exp(1j * k_value * (p + 1)) / np.sqrt(n)
    return mat


def test_symmetry_adapted_states_orthonormal():
    basis = enumerate_basis(4, 2)
    for sector in all_k_sectors(basis):
        mat = _explicit_bloch_matrix(sector.k_value, basis)
        gram = mat.conj().T @ mat
        assert np.abs(gram - np.eye(basis.size)).max() < 1e-12


def test_bloch_start_vector_matches_dense_construction():
    basis = enumerate_basis(4, 2)
    sector = make_sector(1, basis)
    start = bloch_start_vector(sector, basis)
    assert np.linalg.norm(start) == pytest.approx(1.0)
    assert start[0] == 1.0 and np.count_nonzero(start) == 1
    # overlap with N^{-1/2} sum_n e^{ikn} |n> x |0_ph> equals 1 in modulus
    mat = _explicit_bloch_matrix(sector.k_value, basis)
    dense_start = mat @ start
    n, d = basis.n_sites, basis.size
    reference = np.zeros(n * d, dtype=complex)
    for p in range(n):
        reference[p * d + 0] = np.exp(1j * sector.k_value * (p + 1)) / np.sqrt(n)
    assert abs(np.vdot(reference, dense_start)) == pytest.approx(1.0, abs=1e-12)


def test_start_vector_lands_on_vacuum_rank():
    basis = enumerate_basis(2, 1)
    start = bloch_start_vector(make_sector(0, basis), basis)
    assert start[basis.rank([0, 0])] == 1.0
