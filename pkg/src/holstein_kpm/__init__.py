"""Momentum-resolved spectral functions of the 1D Holstein polaron.

Circuit-QED parameter mapping, momentum-sector sparse Hamiltonians, a
kernel-polynomial spectral engine with Jackson damping, and independent
validation oracles (dense diagonalization, displaced-oscillator analytics,
simulated Ramsey interferometry).
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    DegenerateSpectrumError,
    HolsteinKPMError,
    NumericalBlowupError,
)
from .hamiltonian import (
    SparseHamiltonian,
    SpectralBounds,
    assemble,
    extremal_eigenvalues,
    matvec,
)
from .hilbert import (
    KSector,
    PhononBasis,
    all_k_sectors,
    bloch_start_vector,
    enumerate_basis,
    make_sector,
    translate_config,
)
from .kpm import (
    MomentSeries,
    RescaledOperator,
    SpectralResult,
    compute_moments,
    jackson_factors,
    reconstruct,
    rescale,
    spectral_function,
)
from .oracle import (
    DenseSpectrum,
    GreensSeries,
    PeakList,
    RamseyOutcome,
    atomic_limit_spectrum,
    build_excitation_space,
    dense_spectral_function,
    dense_spectrum,
    evolve_greens,
    gaussian_broadened,
    greens_to_spectral,
    ramsey_measure,
    ramsey_reconstruct_greens,
    ramsey_scan,
    real_space_hamiltonian,
    single_site_spectrum,
)
from .params import (
    CircuitParams,
    EffectiveParams,
    circuit_to_effective,
    dimensionless_coupling,
    effective_coupling,
    from_adiabaticity,
    hopping_amplitude,
    small_polaron_regime,
    stark_shift,
)

__all__ = [name for name in dir() if not name.startswith("_")]
