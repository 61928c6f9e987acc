"""Independent ground-truth paths used to validate the KPM engine.

Three routes to the same physics:

* dense diagonalization of a momentum sector (eigenvalues plus overlap
  weights with the bare Bloch state);
* displaced-oscillator analytics for the zero-hopping (atomic) limit,
  where the peaks sit at (m - g_H^2)*hbar*omega_delta with Poisson
  weights exp(-g_H^2) g_H^(2m) / m!;
* a simulated many-body Ramsey interference protocol on the direct-sum
  space of zero and one excitation, from which the retarded Green's
  function is reconstructed exactly as an experiment would.

Green's function convention: values are reported in units with hbar = 1,
i.e. G_+(k, t) = -i theta(t) sum_j w_j exp(-i 2 pi nu_j t) with nu_j the
eigenfrequencies in Hz and t in seconds, so |G(0+)| = 1.  The commutator
variant is its negative.

Ramsey conventions: a pi/2 pulse with phase phi acts as
R_n(phi) = [1 + i (e^{i phi} sigma_n^+ + e^{-i phi} sigma_n^-)] / sqrt(2).
The protocol (pulse at n, evolve, pulse at n', measure sigma_{n'}^z)
yields  M = Re[ e^{i (phi1 - phi2)} <n',0| U(t) |n,0> ],  so the scans at
phase differences 0 and -pi/2 recover the full transition amplitude.  The
second pulse is folded into the measured observable
R^dagger sigma^z R = -sin(phi2) sigma^x - cos(phi2) sigma^y, which is
exact and never leaves the zero-plus-one-excitation space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .hamiltonian import assemble
from .hilbert import KSector, PhononBasis
from .params import EffectiveParams

DENSE_GUARD = 20_000


@dataclass(frozen=True)
class DenseSpectrum:
    """Eigenvalues of one sector with bare-Bloch-state overlap weights."""

    sector: KSector
    energies_hz: np.ndarray
    weights: np.ndarray
    omega_delta_over_2pi: float

    @property
    def energies_dimensionless(self) -> np.ndarray:
        return self.energies_hz / self.omega_delta_over_2pi


@dataclass(frozen=True)
class SampledDensity:
    freqs_hz: np.ndarray
    density_per_hz: np.ndarray
    spectrum: DenseSpectrum


@dataclass(frozen=True)
class PeakList:
    """Delta peaks: positions (Hz) and weights."""

    positions_hz: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class GreensSeries:
    """Retarded Green's function samples; values are zero for t < 0."""

    times_s: np.ndarray
    values: np.ndarray
    k_index: int | None = None
    k_value: float | None = None
    pair: tuple[int, int] | None = None
    eta_hz: float = 0.0


@dataclass(frozen=True)
class RamseyOutcome:
    """sigma^z record of one Ramsey scan over a common time grid."""

    n: int
    nprime: int
    phi1: float
    phi2: float
    times_s: np.ndarray
    measured: np.ndarray


def _check_guard(dim: int, guard: int, what: str) -> None:
    if dim > guard:
        raise CapacityError(f"{what} dimension {dim} exceeds the dense guard {guard}")


def dense_spectrum(
    sector: KSector,
    basis: PhononBasis,
    params: EffectiveParams,
    *,
    guard: int = DENSE_GUARD,
) -> DenseSpectrum:
    """Full Hermitian eigendecomposition of one sector.

    Weights are overlaps with the zero-phonon basis state (the bare Bloch
    state); they are non-negative and sum to one by completeness.
    """
    _check_guard(basis.size, guard, "sector")
    h = assemble(sector, basis, params)
    evals, evecs = np.linalg.eigh(h.to_dense())
    weights = np.abs(evecs[0, :]) ** 2
    return DenseSpectrum(
        sector=sector,
        energies_hz=evals * params.omega_delta_over_2pi,
        weights=weights,
        omega_delta_over_2pi=params.omega_delta_over_2pi,
    )


def gaussian_broadened(
    positions_hz: np.ndarray,
    weights: np.ndarray,
    freqs_hz: np.ndarray,
    sigma_hz,
) -> np.ndarray:
    """Sum of unit-area Gaussians; ``sigma_hz`` may be scalar or per-peak."""
    sigma = np.broadcast_to(np.asarray(sigma_hz, dtype=float), positions_hz.shape)
    delta = freqs_hz[:, None] - positions_hz[None, :]
    gauss = np.exp(-0.5 * (delta / sigma[None, :]) ** 2) / (np.sqrt(2.0 * np.pi) * sigma[None, :])
    return gauss @ weights


def dense_spectral_function(
    sector: KSector,
    basis: PhononBasis,
    params: EffectiveParams,
    broadening_hz: float,
    freqs_hz: np.ndarray | None = None,
    *,
    guard: int = DENSE_GUARD,
) -> SampledDensity:
    """Dense-path spectral function with Gaussian-broadened delta peaks."""
    spectrum = dense_spectrum(sector, basis, params, guard=guard)
    if freqs_hz is None:
        lo = spectrum.energies_hz[0] - 5.0 * broadening_hz
        hi = spectrum.energies_hz[-1] + 5.0 * broadening_hz
        freqs_hz = np.linspace(lo, hi, 2049)
    density = gaussian_broadened(spectrum.energies_hz, spectrum.weights, freqs_hz, broadening_hz)
    return SampledDensity(freqs_hz=freqs_hz, density_per_hz=density, spectrum=spectrum)


def atomic_limit_spectrum(g_h: float, omega_delta_over_2pi: float, n_peaks: int) -> PeakList:
    """Zero-hopping peaks: positions (m - g_H^2)*nu_Delta, Poisson weights."""
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    m = np.arange(n_peaks, dtype=np.float64)
    positions = (m - g_h**2) * omega_delta_over_2pi
    # exp(-g^2) g^(2m) / m! evaluated in log space for numerical range
    if g_h == 0.0:
        weights = np.zeros(n_peaks)
        weights[0] = 1.0
    else:
        log_w = -g_h**2 + 2.0 * m * math.log(g_h) - np.array(
            [math.lgamma(v + 1.0) for v in m]
        )
        weights = np.exp(log_w)
    return PeakList(positions_hz=positions, weights=weights)


def single_site_spectrum(g_h: float, max_phonons: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense solve of the one-site problem with the excitation present.

    H/(hbar*omega_delta) is tridiagonal: diag(m) with off-diagonal
    g_H*sqrt(m+1).  Returns (dimensionless energies, vacuum weights).
    """
    m = np.arange(max_phonons + 1, dtype=np.float64)
    h = np.diag(m) + np.diag(g_h * np.sqrt(m[1:]), 1) + np.diag(g_h * np.sqrt(m[1:]), -1)
    evals, evecs = np.linalg.eigh(h)
    return evals, np.abs(evecs[0, :]) ** 2


def real_space_hamiltonian(basis: PhononBasis, params: EffectiveParams) -> np.ndarray:
    """One-excitation Hamiltonian in the lab frame, dimension N * D_ph.

    Index layout: (electron site p, phonon rank r) -> p * D_ph + r.
    Real symmetric; units hbar*omega_delta.
    """
    n, d = basis.n_sites, basis.size
    t, g = params.t_dimensionless, params.g_h
    occ = basis.occupations_array()
    total = occ.sum(axis=1)
    dim = n * d
    h = np.zeros((dim, dim))
    rows = np.arange(d)
    h[np.arange(dim), np.arange(dim)] = np.tile(total, n)
    for p in range(n):
        base = p * d
        if g != 0.0:
            down = occ[:, p] > 0
            if np.any(down):
                shifted = occ[down].copy()
                shifted[:, p] -= 1
                cols = basis.rank_many(shifted)
                h[base + rows[down], base + cols] += g * np.sqrt(occ[down, p])
                h[base + cols, base + rows[down]] += g * np.sqrt(occ[down, p])
        if t != 0.0:
            nxt = ((p + 1) % n) * d
            h[base + rows, nxt + rows] += -t
            h[nxt + rows, base + rows] += -t
    return h


def evolve_greens(
    sector: KSector,
    basis: PhononBasis,
    params: EffectiveParams,
    times_s: np.ndarray,
    *,
    guard: int = DENSE_GUARD,
) -> GreensSeries:
    """G_+(k, t) = -i theta(t) sum_j w_j exp(-i 2 pi nu_j t) from the dense solve."""
    spectrum = dense_spectrum(sector, basis, params, guard=guard)
    times = np.asarray(times_s, dtype=np.float64)
    phases = np.exp(-2j * np.pi * np.outer(times, spectrum.energies_hz))
    values = -1j * (phases @ spectrum.weights)
    values[times < 0.0] = 0.0
    return GreensSeries(
        times_s=times,
        values=values,
        k_index=sector.k_index,
        k_value=sector.k_value,
    )


def greens_to_spectral(
    series: GreensSeries,
    freqs_hz: np.ndarray,
    *,
    sigma_hz: float | None = None,
    eta_hz: float | None = None,
) -> np.ndarray:
    """Damped Fourier transform of a retarded series to a spectral density.

    A Gaussian window exp(-(2 pi sigma t)^2 / 2) reproduces Gaussian
    broadening of width sigma (Hz); an exponential window exp(-2 pi eta t)
    gives a Lorentzian of half-width eta.  Integration is trapezoidal over
    the stored (non-negative) time grid, so the grid must resolve the
    fastest phase and extend until the window has decayed.
    """
    if (sigma_hz is None) == (eta_hz is None):
        raise ValueError("specify exactly one of sigma_hz, eta_hz")
    mask = series.times_s >= 0.0
    t = series.times_s[mask]
    vals = series.values[mask]
    if sigma_hz is not None:
        window = np.exp(-0.5 * (2.0 * np.pi * sigma_hz * t) ** 2)
    else:
        window = np.exp(-2.0 * np.pi * eta_hz * t)
    damped = vals * window
    density = np.empty(freqs_hz.size)
    chunk = 512
    for start in range(0, freqs_hz.size, chunk):
        nu = freqs_hz[start : start + chunk]
        kernel = np.exp(2j * np.pi * np.outer(nu, t))
        density[start : start + chunk] = -2.0 * np.imag(
            np.trapezoid(kernel * damped[None, :], t, axis=1)
        )
    return density


class ExcitationSpace:
    """Zero- plus one-excitation state space with its exact propagator.

    The vacuum block is diagonal (phonon energy only); the one-excitation
    block is the real-space Holstein Hamiltonian, eigendecomposed once.
    """

    def __init__(self, basis: PhononBasis, params: EffectiveParams, *, guard: int = DENSE_GUARD):
        _check_guard((basis.n_sites + 1) * basis.size, guard, "excitation space")
        self.basis = basis
        self.params = params
        self.n_sites = basis.n_sites
        self.d_ph = basis.size
        occ = basis.occupations_array()
        self.vacuum_freqs_hz = occ.sum(axis=1) * params.omega_delta_over_2pi
        h1 = real_space_hamiltonian(basis, params)
        evals, evecs = np.linalg.eigh(h1)
        self.one_exc_freqs_hz = evals * params.omega_delta_over_2pi
        self.one_exc_vectors = evecs

    def propagate_one_exc(self, psi: np.ndarray, t_s: float) -> np.ndarray:
        coeff = self.one_exc_vectors.conj().T @ psi
        coeff *= np.exp(-2j * np.pi * self.one_exc_freqs_hz * t_s)
        return self.one_exc_vectors @ coeff

    def transition_amplitudes(self, n_detect: int, n_create: int, times_s: np.ndarray) -> np.ndarray:
        """<n_detect, 0| U(t) |n_create, 0> for every t (vectorized)."""
        row = self.one_exc_vectors[n_detect * self.d_ph, :]
        col = self.one_exc_vectors[n_create * self.d_ph, :].conj()
        phases = np.exp(-2j * np.pi * np.outer(times_s, self.one_exc_freqs_hz))
        return phases @ (row * col)


def build_excitation_space(
    basis: PhononBasis, params: EffectiveParams, *, guard: int = DENSE_GUARD
) -> ExcitationSpace:
    return ExcitationSpace(basis, params, guard=guard)


def ramsey_measure(
    space: ExcitationSpace,
    n: int,
    nprime: int,
    phi1: float,
    phi2: float,
    t_s: float,
) -> float:
    """One protocol run: pulse at n, evolve for t, pulse at n', read sigma^z_{n'}."""
    if not (0 <= n < space.n_sites and 0 <= nprime < space.n_sites):
        raise ValueError("site indices out of range")
    d = space.d_ph
    # R_n(phi1) on the vacuum: equal superposition of |GS> and |n, 0_ph>
    psi0 = np.zeros(d, dtype=np.complex128)
    psi0[0] = 1.0 / math.sqrt(2.0)
    psi1 = np.zeros(space.n_sites * d, dtype=np.complex128)
    psi1[n * d] = 1j * np.exp(1j * phi1) / math.sqrt(2.0)
    # exact evolution of both blocks
    psi0 *= np.exp(-2j * np.pi * space.vacuum_freqs_hz * t_s)
    psi1 = space.propagate_one_exc(psi1, t_s)
    # second pulse folded into the observable:
    # R^dag sigma^z R = -sin(phi2) sigma^x - cos(phi2) sigma^y
    overlap = np.vdot(psi0, psi1[nprime * d : (nprime + 1) * d])
    return float(2.0 * (-1j * np.exp(-1j * phi2) * overlap).real)


def ramsey_scan(
    space: ExcitationSpace,
    n: int,
    nprime: int,
    phi1: float,
    phi2: float,
    times_s: np.ndarray,
) -> RamseyOutcome:
    """Repeat the protocol over a time grid (one run per point)."""
    times = np.asarray(times_s, dtype=np.float64)
    measured = np.array(
        [ramsey_measure(space, n, nprime, phi1, phi2, t) for t in times]
    )
    return RamseyOutcome(
        n=n, nprime=nprime, phi1=phi1, phi2=phi2, times_s=times, measured=measured
    )


def _classify_phase(delta_phi: float) -> str | None:
    for target, name in ((0.0, "cos"), (math.pi / 2, "plus"), (-math.pi / 2, "minus")):
        if abs(delta_phi - target) < 1e-9:
            return name
    return None


def ramsey_reconstruct_greens(
    outcomes: list[RamseyOutcome],
    sector: KSector,
) -> GreensSeries:
    """Assemble G_+(k, t) from protocol outcomes.

    Requires, for every displacement d = (n' - n) mod N, scans at phase
    difference 0 and at +pi/2 or -pi/2 (or both) on one common time grid:
    the quadratures give  amp_d(t) = M(0) - i M(+pi/2) = M(0) + i M(-pi/2),
    and the spatial Fourier transform over displacements yields
    G_+(k, t) = -i theta(t) sum_d exp(-i k d) amp_d(t).
    """
    if not outcomes:
        raise ValueError("no outcomes given")
    times = outcomes[0].times_s
    n_sites = sector.n_sites
    by_disp: dict[int, dict[str, np.ndarray]] = {}
    for out in outcomes:
        if out.times_s.shape != times.shape or not np.array_equal(out.times_s, times):
            raise ValueError("all outcomes must share one time grid")
        name = _classify_phase(out.phi1 - out.phi2)
        if name is None:
            raise ValueError(
                f"phase difference {out.phi1 - out.phi2} is not in {{0, +pi/2, -pi/2}}"
            )
        disp = (out.nprime - out.n) % n_sites
        by_disp.setdefault(disp, {})[name] = out.measured

    amps = np.zeros((n_sites, times.size), dtype=np.complex128)
    for disp in range(n_sites):
        if disp not in by_disp or "cos" not in by_disp[disp]:
            raise ValueError(f"missing phase-difference-0 scan for displacement {disp}")
        rec = by_disp[disp]
        real = rec["cos"]
        if "minus" in rec and "plus" in rec:
            imag = 0.5 * (rec["minus"] - rec["plus"])
        elif "minus" in rec:
            imag = rec["minus"]
        elif "plus" in rec:
            imag = -rec["plus"]
        else:
            raise ValueError(f"missing +/-pi/2 scan for displacement {disp}")
        amps[disp] = real + 1j * imag

    disp = np.arange(n_sites)
    kernel = np.exp(-1j * sector.k_value * disp)
    values = -1j * (kernel @ amps)
    values[times < 0.0] = 0.0
    return GreensSeries(
        times_s=times,
        values=values,
        k_index=sector.k_index,
        k_value=sector.k_value,
    )
