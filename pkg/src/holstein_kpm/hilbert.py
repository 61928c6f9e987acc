"""Truncated phonon occupation space and momentum-sector bookkeeping.

A configuration is a vector of occupation numbers (m_1, ..., m_N) with
sum(m) <= M.  The basis ordering is graded: configurations are sorted by
total phonon number first, and descending-lexicographically within each
grade, so the vacuum has index 0 and grade m opens with (m, 0, ..., 0).

Indexing uses the combinatorial number system (binomial tables) in both
directions; no hash maps are kept, so the memory overhead beyond the
configurations themselves is O(N*M).  This is what makes basis sizes of
order 10^7 practical.

Momentum sectors: for an even number of sites N there are exactly N
quasimomenta 2*pi*n/N with n in {-N/2+1, ..., N/2}, covering (-pi, pi].
Each sector has the same dimension as the phonon basis: the symmetry-adapted
states carry one phonon configuration label per sector basis vector, with
the configuration measured in the frame co-moving with the excitation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError

_BINOM_CAP = np.int64(1) << 61


class PhononBasis:
    """Enumeration of all occupation configurations with sum(m) <= max_total.

    The basis never materializes its configurations unless asked to
    (``occupations_array``); ``rank``/``unrank`` work from binomial tables.
    """

    def __init__(self, n_sites: int, max_total: int, *, max_states: int = 2**31):
        if n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if max_total < 0:
            raise ValueError("max_total must be >= 0")
        size = math.comb(max_total + n_sites, n_sites)
        if size > max_states:
            raise CapacityError(
                f"basis size {size} for (N={n_sites}, M={max_total}) exceeds "
                f"the guard of {max_states} states"
            )
        n_rows = max_total + n_sites + 1
        n_cols = n_sites + 1
        if n_rows * n_cols > 64_000_000:
            raise CapacityError(
                f"binomial table of {n_rows}x{n_cols} entries exceeds the memory guard"
            )
        self.n_sites = int(n_sites)
        self.max_total = int(max_total)
        self.size = int(size)
        self._binom = _binomial_table(n_rows, n_cols)
        # cumulative count of states through grade m: C(m + N, N)
        grades = np.arange(max_total + 1)
        self._cumulative = self._binom[grades + n_sites, n_sites]

    # -- ranking ---------------------------------------------------------

    def rank(self, config: Sequence[int]) -> int:
        """Index of a configuration; inverse of :meth:`unrank`."""
        c = np.asarray(config, dtype=np.int64)
        if c.shape != (self.n_sites,):
            raise ValueError(
                f"config has {c.size} sites, basis expects {self.n_sites}"
            )
        if np.any(c < 0):
            raise ValueError("occupation numbers must be non-negative")
        total = int(c.sum())
        if total > self.max_total:
            raise ValueError(
                f"total phonon number {total} violates the truncation M={self.max_total}"
            )
        return int(self._rank_unchecked(c, total))

    def _rank_unchecked(self, c: np.ndarray, total: int) -> int:
        binom = self._binom
        n = self.n_sites
        base = int(binom[total - 1 + n, n]) if total > 0 else 0
        r = 0
        rem = total
        for l in range(n - 1):
            parts_after = n - 1 - l
            a = rem - int(c[l]) - 1 + parts_after
            if a >= parts_after:
                r += int(binom[a, parts_after])
            rem -= int(c[l])
        return base + r

    def rank_many(self, configs: np.ndarray) -> np.ndarray:
        """Vectorized rank of a (batch, n_sites) int array of valid configs."""
        occ = np.asarray(configs, dtype=np.int64)
        n = self.n_sites
        total = occ.sum(axis=1)
        base = np.where(total > 0, self._binom[total - 1 + n, n], 0)
        # remaining total before choosing position l
        rem = total[:, None] - np.cumsum(occ, axis=1) + occ
        parts_after = n - 1 - np.arange(n)
        a = rem - occ - 1 + parts_after[None, :]
        contrib = np.where(a >= parts_after[None, :], self._binom[a, parts_after[None, :]], 0)
        return base + contrib[:, : n - 1].sum(axis=1)

    def unrank(self, index: int) -> np.ndarray:
        """Configuration at a given basis index."""
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} out of range [0, {self.size})")
        total = int(np.searchsorted(self._cumulative, index, side="right"))
        j = index - (int(self._cumulative[total - 1]) if total > 0 else 0)
        c = np.zeros(self.n_sites, dtype=np.int64)
        rem = total
        for l in range(self.n_sites - 1):
            parts_after = self.n_sites - 1 - l
            # largest v with C(rem - v - 1 + parts_after, parts_after) <= j
            v = rem
            while v > 0:
                a = rem - v + parts_after  # = (rem - (v-1) - 1) + parts_after
                if int(self._binom[a, parts_after]) > j:
                    break
                v -= 1
            a = rem - v - 1 + parts_after
            if a >= parts_after:
                j -= int(self._binom[a, parts_after])
            c[l] = v
            rem -= v
        c[self.n_sites - 1] = rem
        return c

    # -- enumeration -----------------------------------------------------

    def configs(self) -> Iterator[np.ndarray]:
        """Yield all configurations in basis order (copies)."""
        c = np.zeros(self.n_sites, dtype=np.int64)
        grade = 0
        while True:
            yield c.copy()
            if not _advance(c, self.n_sites):
                grade += 1
                if grade > self.max_total:
                    return
                c[:] = 0
                c[0] = grade

    def first_index_of_grade(self, total: int) -> int:
        """Index of the first configuration with the given total phonon number."""
        if not 0 <= total <= self.max_total:
            raise ValueError(f"grade {total} out of range [0, {self.max_total}]")
        return 0 if total == 0 else int(self._cumulative[total - 1])

    def occupations_array(self, *, max_entries: int = 200_000_000) -> np.ndarray:
        """Materialize all configurations as a (size, n_sites) int64 array."""
        if self.size * self.n_sites > max_entries:
            raise CapacityError(
                f"occupation table with {self.size}x{self.n_sites} entries "
                "exceeds the memory guard"
            )
        out = np.empty((self.size, self.n_sites), dtype=np.int64)
        for i, c in enumerate(self.configs()):
            out[i] = c
        return out


def _advance(c: np.ndarray, n: int) -> bool:
    """In-place successor within a grade (descending lex). False at grade end."""
    for j in range(n - 2, -1, -1):
        if c[j] > 0:
            s = int(c[j + 1 :].sum()) + 1
            c[j] -= 1
            c[j + 1 :] = 0
            c[j + 1] = s
            return True
    return False


def _binomial_table(n_rows: int, n_cols: int) -> np.ndarray:
    """Pascal triangle C(a, b), capped at 2^61 to avoid int64 overflow.

    Capped entries are never consulted: every lookup made by rank/unrank
    has excess a - b <= max_total, so its value is bounded by the basis
    size, which the constructor guards.
    """
    table = np.zeros((n_rows, n_cols), dtype=np.int64)
    table[:, 0] = 1
    for a in range(1, n_rows):
        upper = min(a, n_cols - 1)
        prev = table[a - 1]
        table[a, 1 : upper + 1] = np.minimum(
            prev[0:upper] + prev[1 : upper + 1], _BINOM_CAP
        )
    return table


def enumerate_basis(n_sites: int, max_total: int, *, max_states: int = 2**31) -> PhononBasis:
    """Construct the truncated phonon basis; see :class:`PhononBasis`."""
    return PhononBasis(n_sites, max_total, max_states=max_states)


def translate_config(config: Sequence[int], n: int) -> np.ndarray:
    """Cyclic translation by n sites: output site l holds the input's site l-n."""
    c = np.asarray(config, dtype=np.int64)
    if not 0 <= n < c.size:
        raise ValueError(f"translation offset {n} out of range [0, {c.size})")
    return np.roll(c, n)


@dataclass(frozen=True)
class KSector:
    """One total-quasimomentum sector, k = 2*pi*k_index/n_sites in (-pi, pi]."""

    k_index: int
    k_value: float
    n_sites: int
    dim: int


def make_sector(k_index: int, basis: PhononBasis) -> KSector:
    """Sector for a (wrapped) integer momentum index.

    Requires an even number of sites; indices are reduced mod N into
    {-N/2+1, ..., N/2}.
    """
    n = basis.n_sites
    if n % 2 != 0 or n < 2:
        raise ValueError("momentum sectors require an even n_sites >= 2")
    lo = -(n // 2) + 1
    idx = (int(k_index) - lo) % n + lo
    return KSector(
        k_index=idx,
        k_value=2.0 * math.pi * idx / n,
        n_sites=n,
        dim=basis.size,
    )


def all_k_sectors(basis: PhononBasis) -> list[KSector]:
    """All N sectors, ordered by k_index from -N/2+1 to N/2."""
    n = basis.n_sites
    return [make_sector(i, basis) for i in range(-(n // 2) + 1, n // 2 + 1)]


def bloch_start_vector(sector: KSector, basis: PhononBasis) -> np.ndarray:
    """Bare-excitation Bloch state in sector coordinates.

    In the symmetry-adapted basis this state is exactly the zero-phonon
    basis vector, so the vector has a single unit amplitude at index 0
    (the vacuum configuration ranks first).
    """
    if sector.dim != basis.size or sector.n_sites != basis.n_sites:
        raise ValueError("sector and basis do not match")
    v = np.zeros(basis.size, dtype=np.complex128)
    v[0] = 1.0
    return v
