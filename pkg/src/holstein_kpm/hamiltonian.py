"""Sparse Holstein Hamiltonian in one momentum sector.

Matrix elements in the symmetry-adapted (co-moving frame) basis |k, m>,
with all energies in units of hbar*omega_delta and t = t_e/(hbar*omega_delta):

* diagonal:   sum(m)                      (phonon energy)
* coupling:   g_H * sqrt(m_1), g_H * sqrt(m_1 + 1)
              between m and m -/+ e_1     (phonons at the excitation's site)
* hopping:    row m gains -t * e^{+ik} at column T^{-1} m
              and        -t * e^{-ik} at column T m,
              where T is the single-site cyclic translation.

Raising out of the truncated space (sum(m) = M) is projected out, which is
variational.  The hopping phase convention is pinned operationally by the
dense-oracle equivalence test: projecting the full real-space Hamiltonian
onto explicitly constructed symmetry-adapted vectors reproduces these
matrices to machine precision.

``matvec`` runs a numba kernel that accumulates each row sequentially in
column order; results are therefore independent of the number of worker
threads used at higher levels (parallelism here is over sectors, never
inside a row reduction).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError
from .hilbert import KSector, PhononBasis
from .params import EffectiveParams

_LANCZOS_DENSE_CUTOFF = 128


@dataclass(frozen=True)
class SparseHamiltonian:
    """CSR storage of one k-sector Hamiltonian (complex, Hermitian).

    ``truncation_shell_start`` is the first basis index of the sum(m) = M
    shell; the weight a state carries at or beyond this index diagnoses how
    hard the variational truncation bites.
    """

    sector: KSector
    row_offsets: np.ndarray
    column_indices: np.ndarray
    values: np.ndarray
    dim: int
    omega_delta_over_2pi: float
    truncation_shell_start: int = 0

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.column_indices, self.row_offsets),
            shape=(self.dim, self.dim),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()


@dataclass(frozen=True)
class SpectralBounds:
    """Extremal eigenvalues (units hbar*omega_delta) with solver diagnostics.

    ``shell_weight`` is the lowest eigenvector's probability weight on the
    maximal-total-phonon shell, the truncation convergence diagnostic.
    """

    e_min: float
    e_max: float
    lanczos_iterations: int
    residual: float
    shell_weight: float = 0.0

    @property
    def spread(self) -> float:
        return self.e_max - self.e_min


def assemble(sector: KSector, basis: PhononBasis, params: EffectiveParams) -> SparseHamiltonian:
    """Build the sector Hamiltonian from the ranked configuration table."""
    if sector.dim != basis.size:
        raise ValueError("sector and basis do not match")
    t = params.t_dimensionless
    g = params.g_h
    k = sector.k_value
    dim = basis.size

    occ = basis.occupations_array()
    total = occ.sum(axis=1)
    rows_all = np.arange(dim, dtype=np.int64)

    rows = [rows_all]
    cols = [rows_all]
    vals = [total.astype(np.complex128)]

    if g != 0.0:
        down = occ[:, 0] > 0
        if np.any(down):
            shifted = occ[down].copy()
            shifted[:, 0] -= 1
            rows.append(rows_all[down])
            cols.append(basis.rank_many(shifted))
            vals.append(g * np.sqrt(occ[down, 0]).astype(np.complex128))
        up = total < basis.max_total
        if np.any(up):
            shifted = occ[up].copy()
            shifted[:, 0] += 1
            rows.append(rows_all[up])
            cols.append(basis.rank_many(shifted))
            vals.append(g * np.sqrt(occ[up, 0] + 1.0).astype(np.complex128))

    if t != 0.0:
        phase_fwd = -t * np.exp(1j * k)
        phase_bwd = -t * np.exp(-1j * k)
        cols_bwd = basis.rank_many(np.roll(occ, -1, axis=1))  # T^{-1} m
        cols_fwd = basis.rank_many(np.roll(occ, 1, axis=1))  # T m
        rows.append(rows_all)
        cols.append(cols_bwd)
        vals.append(np.full(dim, phase_fwd, dtype=np.complex128))
        rows.append(rows_all)
        cols.append(cols_fwd)
        vals.append(np.full(dim, phase_bwd, dtype=np.complex128))

    coo = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    csr = coo.tocsr()
    csr.sum_duplicates()
    csr.sort_indices()
    return SparseHamiltonian(
        sector=sector,
        row_offsets=csr.indptr.astype(np.int64),
        column_indices=csr.indices.astype(np.int64),
        values=csr.data.astype(np.complex128),
        dim=dim,
        omega_delta_over_2pi=params.omega_delta_over_2pi,
        truncation_shell_start=basis.first_index_of_grade(basis.max_total),
    )


@njit(nogil=True, cache=True)
def _csr_matvec(indptr, indices, data, x, out, scale, shift):  # pragma: no cover
    for i in range(out.size):
        acc = 0.0 + 0.0j
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        out[i] = scale * (acc - shift * x[i])


def matvec(
    h: SparseHamiltonian,
    x: np.ndarray,
    out: np.ndarray | None = None,
    *,
    scale: float = 1.0,
    shift: float = 0.0,
) -> np.ndarray:
    """out = scale * (H x - shift x); allocation-free when ``out`` is given."""
    if x.shape != (h.dim,):
        raise ValueError(f"vector has shape {x.shape}, expected ({h.dim},)")
    if x.dtype != np.complex128:
        x = x.astype(np.complex128)
    if out is None:
        out = np.empty(h.dim, dtype=np.complex128)
    elif out.shape != (h.dim,) or out.dtype != np.complex128:
        raise ValueError("out must be a complex128 vector of the sector dimension")
    _csr_matvec(h.row_offsets, h.column_indices, h.values, x, out, scale, shift)
    return out


def extremal_eigenvalues(
    h: SparseHamiltonian,
    tol: float = 1e-9,
    max_iter: int = 800,
    *,
    seed: int = 7,
) -> SpectralBounds:
    """Smallest and largest eigenvalue via plain Lanczos (no reorthogonalization).

    A second pass rebuilds the two extremal Ritz vectors so the reported
    residuals are true ||H v - theta v||/||v|| values; the returned bounds
    are widened by those residuals.  Loss of orthogonality produces ghost
    copies of converged eigenvalues, which cannot move the extremes.
    Dimensions up to 128 take an exact dense path.
    """
    dim = h.dim
    if dim == 1:
        e = float(h.values[h.row_offsets[0] : h.row_offsets[1]].sum().real)
        return SpectralBounds(e, e, 0, 0.0, _shell_weight(h, np.ones(1)))
    if dim <= _LANCZOS_DENSE_CUTOFF:
        evals, evecs = np.linalg.eigh(h.to_dense())
        return SpectralBounds(
            float(evals[0]), float(evals[-1]), 0, 0.0, _shell_weight(h, evecs[:, 0])
        )

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v0 /= np.linalg.norm(v0)

    alphas: list[float] = []
    betas: list[float] = []
    q_prev = np.zeros(dim, dtype=np.complex128)
    q = v0.copy()
    w = np.empty(dim, dtype=np.complex128)
    beta = 0.0
    exhausted = False

    for it in range(1, max_iter + 1):
        matvec(h, q, w)
        alpha = float(np.vdot(q, w).real)
        alphas.append(alpha)
        w -= alpha * q
        if beta != 0.0:
            w -= beta * q_prev
        beta = float(np.linalg.norm(w))
        if beta < 1e-13 * max(abs(alpha), beta, 1.0):
            exhausted = True
            break
        if it % 8 == 0 or it == max_iter:
            theta, vecs = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
            spread = max(theta[-1] - theta[0], 1e-300)
            res_lo = beta * abs(vecs[-1, 0])
            res_hi = beta * abs(vecs[-1, -1])
            if max(res_lo, res_hi) <= tol * spread:
                break
        if it < max_iter:
            betas.append(beta)
            w /= beta
            q_prev, q, w = q, w, q_prev  # rotate; old q_prev becomes scratch

    theta, vecs = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas[: len(alphas) - 1]))
    n_it = len(alphas)
    spread = max(theta[-1] - theta[0], 1e-300)

    # second pass: rebuild the same Krylov vectors from the stored recurrence
    # coefficients and accumulate the two extremal Ritz vectors
    s_min = vecs[:, 0]
    s_max = vecs[:, -1]
    v_min = np.zeros(dim, dtype=np.complex128)
    v_max = np.zeros(dim, dtype=np.complex128)
    q_prev = np.zeros(dim, dtype=np.complex128)
    q = v0.copy()
    w = np.empty(dim, dtype=np.complex128)
    for i in range(n_it):
        v_min += s_min[i] * q
        v_max += s_max[i] * q
        if i == n_it - 1:
            break
        matvec(h, q, w)
        w -= alphas[i] * q
        if i > 0:
            w -= betas[i - 1] * q_prev
        w /= betas[i]
        q_prev, q, w = q, w, q_prev

    residuals = []
    for vec, th in ((v_min, theta[0]), (v_max, theta[-1])):
        nrm = np.linalg.norm(vec)
        if nrm == 0.0:
            residuals.append(np.inf)
            continue
        r = matvec(h, vec) - th * vec
        residuals.append(float(np.linalg.norm(r) / nrm))
    res = max(residuals)

    bounds = SpectralBounds(
        e_min=float(theta[0] - residuals[0]),
        e_max=float(theta[-1] + residuals[1]),
        lanczos_iterations=n_it,
        residual=res / spread,
        shell_weight=_shell_weight(h, v_min),
    )
    if not exhausted and res > 10.0 * tol * spread and n_it >= max_iter:
        raise ConvergenceError(
            f"Lanczos did not reach residual {tol:g} within {max_iter} iterations "
            f"(best relative residual {res / spread:.3e})",
            best_estimate=bounds,
        )
    return bounds


def _shell_weight(h: SparseHamiltonian, state: np.ndarray) -> float:
    """Probability weight of a state on the maximal-total-phonon shell."""
    norm_sq = float(np.vdot(state, state).real)
    if norm_sq == 0.0:
        return 0.0
    tail = state[h.truncation_shell_start :]
    return float(np.vdot(tail, tail).real / norm_sq)


def dump_binary(h: SparseHamiltonian, path) -> None:
    """Debug dump, little-endian: int64 dim, int64 nnz, then offsets
    (int64[dim+1]), column indices (int64[nnz]) and values as interleaved
    float64 re/im pairs."""
    with open(path, "wb") as f:
        f.write(struct.pack("<qq", h.dim, h.nnz))
        f.write(h.row_offsets.astype("<i8").tobytes())
        f.write(h.column_indices.astype("<i8").tobytes())
        inter = np.empty(2 * h.nnz, dtype="<f8")
        inter[0::2] = h.values.real
        inter[1::2] = h.values.imag
        f.write(inter.tobytes())


def load_binary(path, sector: KSector, omega_delta_over_2pi: float) -> SparseHamiltonian:
    """Inverse of :func:`dump_binary` (sector metadata is not serialized)."""
    with open(path, "rb") as f:
        dim, nnz = struct.unpack("<qq", f.read(16))
        offsets = np.frombuffer(f.read(8 * (dim + 1)), dtype="<i8").astype(np.int64)
        indices = np.frombuffer(f.read(8 * nnz), dtype="<i8").astype(np.int64)
        inter = np.frombuffer(f.read(16 * nnz), dtype="<f8")
    values = inter[0::2] + 1j * inter[1::2]
    return SparseHamiltonian(
        sector=sector,
        row_offsets=offsets,
        column_indices=indices,
        values=values.astype(np.complex128),
        dim=int(dim),
        omega_delta_over_2pi=omega_delta_over_2pi,
    )
