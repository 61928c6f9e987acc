"""Circuit-QED to Holstein parameter mapping.

Unit conventions used throughout the package:

* All user-facing frequencies are *linear* frequencies nu = omega/(2*pi),
  in Hz.  Field names carry an ``_over_2pi`` suffix to make this explicit
  (an energy E is reported as E/(2*pi*hbar), likewise in Hz).
* Internal Hamiltonian energies are dimensionless, measured in units of
  hbar*omega_delta.  All hbar and 2*pi bookkeeping cancels in this
  convention; e.g. the dimensionless hopping is simply
  ``t_e_over_2pi / omega_delta_over_2pi``.

The mapping itself is closed-form:

* Stark shift          chi   = g^2 / Delta
* hopping amplitude    t_e   = 2 * E_J0 * zeta0^2 * cos(pi * Phi_S/Phi_0)
* local coupling       g_H   = 2 * xi_d * chi / (hbar * omega_delta^2)
* effective coupling   lambda_H = g_H^2 * omega_delta / (2 * t_e)

The small-polaron regime requires both g_H > 1 and lambda_H > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _require_finite_nonneg(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite")
    if value < 0.0:
        raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CircuitParams:
    """Physical knobs of the transmon/resonator array, in the nu-convention (Hz).

    ``omega_c_over_2pi``, ``omega_z_over_2pi`` and ``omega_d_over_2pi`` are
    recorded for provenance only; they enter the rotating-frame construction
    but drop out of the effective model.
    """

    g_over_2pi: float
    delta_over_2pi: float
    xi_d_over_2pi: float
    omega_delta_over_2pi: float
    ej0_over_2pi: float | None = None
    zeta0_sq: float = 0.15
    flux_ratio: float | None = None
    omega_c_over_2pi: float | None = None
    omega_z_over_2pi: float | None = None
    omega_d_over_2pi: float | None = None

    def __post_init__(self) -> None:
        _require_finite_nonneg(self.g_over_2pi, "g_over_2pi")
        _require_finite_nonneg(self.xi_d_over_2pi, "xi_d_over_2pi")
        _require_finite_nonneg(self.omega_delta_over_2pi, "omega_delta_over_2pi")
        if not math.isfinite(self.delta_over_2pi) or self.delta_over_2pi <= 0.0:
            raise ValueError("delta_over_2pi must be finite and positive")
        if self.ej0_over_2pi is not None:
            _require_finite_nonneg(self.ej0_over_2pi, "ej0_over_2pi")
        if self.zeta0_sq <= 0.0:
            raise ValueError("zeta0_sq must be positive")

    @property
    def dispersive_ratio(self) -> float:
        """|Delta|/g; the dispersive regime requires this to be large."""
        if self.g_over_2pi == 0.0:
            return math.inf
        return abs(self.delta_over_2pi) / self.g_over_2pi

    @property
    def drive_ratio(self) -> float:
        """xi_d/(hbar*omega_delta); recorded, not enforced."""
        if self.omega_delta_over_2pi == 0.0:
            return math.inf
        return self.xi_d_over_2pi / self.omega_delta_over_2pi


@dataclass(frozen=True)
class EffectiveParams:
    """Derived Holstein-model parameters plus the lattice truncation.

    ``lambda_h`` is derived from the other fields; passing it explicitly is
    only allowed when consistent to 1e-12 relative.
    """

    t_e_over_2pi: float
    g_h: float
    omega_delta_over_2pi: float
    n_sites: int
    max_phonons: int
    lambda_h: float = field(default=math.nan)
    chi_over_2pi: float | None = None

    def __post_init__(self) -> None:
        _require_finite_nonneg(self.t_e_over_2pi, "t_e_over_2pi")
        _require_finite_nonneg(self.g_h, "g_h")
        if self.omega_delta_over_2pi <= 0.0 or not math.isfinite(self.omega_delta_over_2pi):
            raise ValueError("omega_delta_over_2pi must be finite and positive")
        if self.n_sites < 2 or self.n_sites % 2 != 0:
            raise ValueError("n_sites must be even and >= 2")
        if self.max_phonons < 0:
            raise ValueError("max_phonons must be >= 0")
        derived = _lambda_h(self.g_h, self.omega_delta_over_2pi, self.t_e_over_2pi)
        if math.isnan(self.lambda_h):
            object.__setattr__(self, "lambda_h", derived)
        elif not _close(self.lambda_h, derived, 1e-12):
            raise ValueError(
                f"lambda_h={self.lambda_h} inconsistent with derived value {derived}"
            )

    @property
    def t_dimensionless(self) -> float:
        """Hopping in units of hbar*omega_delta."""
        return self.t_e_over_2pi / self.omega_delta_over_2pi

    @property
    def adiabaticity_ratio(self) -> float:
        """hbar*omega_delta / t_e."""
        if self.t_e_over_2pi == 0.0:
            return math.inf
        return self.omega_delta_over_2pi / self.t_e_over_2pi


def _close(a: float, b: float, rtol: float) -> bool:
    if math.isinf(a) and math.isinf(b):
        return True
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def _lambda_h(g_h: float, omega_delta: float, t_e: float) -> float:
    if t_e == 0.0:
        return 0.0 if g_h == 0.0 else math.inf
    return g_h * g_h * omega_delta / (2.0 * t_e)


def stark_shift(circuit: CircuitParams) -> float:
    """chi = g^2/Delta, returned as chi/(2*pi) in Hz."""
    if circuit.delta_over_2pi == 0.0:
        raise ValueError("zero detuning: Stark shift undefined")
    return circuit.g_over_2pi ** 2 / circuit.delta_over_2pi


def hopping_amplitude(ej0: float, zeta0_sq: float, flux_ratio: float) -> float:
    """Flux-tunable hopping 2*E_J0*zeta0^2*cos(pi*Phi_S/Phi_0).

    May be negative for flux_ratio in (1/2, 3/2); sign handling is the
    caller's decision.  Units follow ``ej0`` (nu-convention Hz here).
    """
    if ej0 < 0.0:
        raise ValueError("ej0 must be non-negative")
    if zeta0_sq <= 0.0:
        raise ValueError("zeta0_sq must be positive")
    return 2.0 * ej0 * zeta0_sq * math.cos(math.pi * flux_ratio)


def dimensionless_coupling(circuit: CircuitParams) -> float:
    """g_H = 2*xi_d*chi/(hbar*omega_delta^2), evaluated in the nu-convention."""
    if circuit.omega_delta_over_2pi <= 0.0:
        raise ValueError("omega_delta_over_2pi must be positive")
    chi = stark_shift(circuit)
    return 2.0 * circuit.xi_d_over_2pi * chi / circuit.omega_delta_over_2pi ** 2


def effective_coupling(g_h: float, omega_delta: float, t_e: float) -> float:
    """lambda_H = g_H^2 * omega_delta / (2*t_e); all frequencies in Hz."""
    if t_e <= 0.0:
        raise ValueError(
            "t_e must be positive: at t_e=0 (atomic limit) lambda_H is undefined/infinite"
        )
    return _lambda_h(g_h, omega_delta, t_e)


def from_adiabaticity(
    ratio: float,
    omega_delta_over_2pi: float,
    g_h: float,
    *,
    n_sites: int,
    max_phonons: int,
    chi_over_2pi: float | None = None,
) -> EffectiveParams:
    """Build EffectiveParams from the adiabaticity ratio hbar*omega_delta/t_e."""
    if not ratio > 0.0:
        raise ValueError("adiabaticity ratio must be positive")
    t_e = omega_delta_over_2pi / ratio
    return EffectiveParams(
        t_e_over_2pi=t_e,
        g_h=g_h,
        omega_delta_over_2pi=omega_delta_over_2pi,
        n_sites=n_sites,
        max_phonons=max_phonons,
        chi_over_2pi=chi_over_2pi,
    )


def circuit_to_effective(
    circuit: CircuitParams,
    *,
    n_sites: int,
    max_phonons: int,
    t_e_over_2pi: float | None = None,
    adiabaticity_ratio: float | None = None,
) -> EffectiveParams:
    """Map circuit knobs to effective model parameters.

    The hopping can come from (in order of precedence) an explicit
    ``t_e_over_2pi``, an ``adiabaticity_ratio``, or the flux through the
    SQUID loops (``circuit.ej0_over_2pi`` + ``circuit.flux_ratio``).
    """
    g_h = dimensionless_coupling(circuit)
    chi = stark_shift(circuit)
    if t_e_over_2pi is None:
        if adiabaticity_ratio is not None:
            if not adiabaticity_ratio > 0.0:
                raise ValueError("adiabaticity ratio must be positive")
            t_e_over_2pi = circuit.omega_delta_over_2pi / adiabaticity_ratio
        elif circuit.ej0_over_2pi is not None and circuit.flux_ratio is not None:
            t_e_over_2pi = hopping_amplitude(
                circuit.ej0_over_2pi, circuit.zeta0_sq, circuit.flux_ratio
            )
            if t_e_over_2pi < 0.0:
                raise ValueError(
                    "flux_ratio yields a negative hopping amplitude; "
                    "choose a flux with cos(pi*flux_ratio) >= 0"
                )
        else:
            raise ValueError(
                "no hopping specified: provide t_e_over_2pi, adiabaticity_ratio, "
                "or ej0_over_2pi with flux_ratio"
            )
    return EffectiveParams(
        t_e_over_2pi=t_e_over_2pi,
        g_h=g_h,
        omega_delta_over_2pi=circuit.omega_delta_over_2pi,
        n_sites=n_sites,
        max_phonons=max_phonons,
        chi_over_2pi=chi,
    )


def small_polaron_regime(params: EffectiveParams) -> bool:
    """True iff g_H > 1 and lambda_H > 1 (both conditions simultaneously)."""
    return params.g_h > 1.0 and params.lambda_h > 1.0
