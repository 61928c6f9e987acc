"""Configuration ingestion, sweep orchestration, and result serialization.

Config files are flat ``key = value`` text (``#`` starts a comment; values
are scalars or comma-separated lists).  A JSON object with the same keys is
accepted as an alternative.  Unknown keys are rejected by name.

Exit codes: 0 success, 2 config, 3 capacity, 4 convergence, 5 numerical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    HolsteinKPMError,
    NumericalBlowupError,
)
from .hilbert import all_k_sectors, enumerate_basis, make_sector
from .kpm import SpectralResult, spectral_function
from .oracle import (
    build_excitation_space,
    dense_spectral_function,
    ramsey_reconstruct_greens,
    ramsey_scan,
)
from .params import (
    CircuitParams,
    EffectiveParams,
    circuit_to_effective,
    small_polaron_regime,
)

EXIT_CODES = {
    ConfigError: 2,
    CapacityError: 3,
    ConvergenceError: 4,
    NumericalBlowupError: 5,
}

THREADS_ENV_VAR = "HOLSTEIN_KPM_THREADS"

DEFAULT_SWEEP_RATIOS = (0.125, 0.25, 0.5, 1.0, 2.0)

_MODES = ("params", "spectrum", "oracle", "ramsey", "sweep")
_FORMATS = ("csv", "json")

_CIRCUIT_KEYS = (
    "g_over_2pi",
    "delta_over_2pi",
    "xi_d_over_2pi",
    "ej0_over_2pi",
    "zeta0_sq",
    "flux_ratio",
    "omega_c_over_2pi",
    "omega_z_over_2pi",
    "omega_d_over_2pi",
)

_SCHEMA = {
    "mode": str,
    "n_sites": int,
    "max_phonons": int,
    "n_moments": int,
    "epsilon": float,
    "k_list": str,
    "omega_delta_over_2pi": float,
    "t_e_over_2pi": float,
    "g_h": float,
    "adiabaticity_ratio": float,
    "sweep_ratios": str,
    "output": str,
    "format": str,
    "threads": int,
    "seed": int,
    "lanczos_tol": float,
    "lanczos_max_iter": int,
    "broadening_over_omega": float,
    "time_span_periods": float,
    "n_times": int,
    **{key: float for key in _CIRCUIT_KEYS},
}

PRESETS = {
    # circuit-QED working point: g=250 MHz, Delta=5 GHz, xi_d=600 MHz,
    # omega_delta=75 MHz; hopping set through the adiabaticity ratio
    "qed-chain": {
        "mode": "params",
        "g_over_2pi": 250e6,
        "delta_over_2pi": 5e9,
        "xi_d_over_2pi": 600e6,
        "omega_delta_over_2pi": 75e6,
        "zeta0_sq": 0.15,
        "adiabaticity_ratio": 0.125,
        "n_sites": 10,
        "max_phonons": 8,
    },
    # reduced-scale sweep that runs in minutes on a laptop
    "ci-small": {
        "mode": "spectrum",
        "g_over_2pi": 250e6,
        "delta_over_2pi": 5e9,
        "xi_d_over_2pi": 600e6,
        "omega_delta_over_2pi": 75e6,
        "adiabaticity_ratio": 1.0,
        "n_sites": 6,
        "max_phonons": 8,
        "n_moments": 2048,
        "k_list": "positive",
    },
    # full-resolution sweep; expect tens of hours and tens of GB of RAM
    "workstation-scale": {
        "mode": "sweep",
        "g_over_2pi": 250e6,
        "delta_over_2pi": 5e9,
        "xi_d_over_2pi": 600e6,
        "omega_delta_over_2pi": 75e6,
        "adiabaticity_ratio": 0.125,
        "n_sites": 10,
        "max_phonons": 18,
        "n_moments": 80000,
        "k_list": "positive",
        "threads": 0,
    },
}


@dataclass
class RunConfig:
    """Validated run configuration with defaults resolved."""

    mode: str
    effective: EffectiveParams
    circuit: CircuitParams | None
    n_moments: int = 4096
    epsilon: float = 0.01
    k_list: list[int] = field(default_factory=list)
    sweep_ratios: list[float] = field(default_factory=lambda: list(DEFAULT_SWEEP_RATIOS))
    output: Path = Path(".")
    format: str = "csv"
    threads: int = 1
    seed: int = 7
    lanczos_tol: float = 1e-9
    lanczos_max_iter: int = 800
    broadening_over_omega: float = 0.02
    time_span_periods: float = 8.0
    n_times: int = 256
    raw: dict = field(default_factory=dict)


def _coerce(key: str, value) -> object:
    kind = _SCHEMA[key]
    try:
        if kind is float:
            return float(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"key '{key}': cannot interpret {value!r} as {kind.__name__}")


def parse_config_text(text: str) -> dict:
    """Parse flat key-value text or a JSON object into a raw config dict."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        raw = dict(data)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
    for key in raw:
        if key not in _SCHEMA:
            raise ConfigError(f"key '{key}': unknown configuration key")
    return raw


def _parse_k_list(value: str, n_sites: int) -> list[int]:
    lo = -(n_sites // 2) + 1
    hi = n_sites // 2
    if value == "all":
        return list(range(lo, hi + 1))
    if value == "positive":
        return list(range(0, hi + 1))
    try:
        ks = [int(part) for part in str(value).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"key 'k_list': expected 'all', 'positive' or integers, got {value!r}")
    for k in ks:
        if not lo <= k <= hi:
            raise ConfigError(f"key 'k_list': index {k} outside [{lo}, {hi}]")
    return ks


def resolve_config(raw: dict) -> RunConfig:
    """Validate a raw dict, derive effective parameters, apply defaults."""
    values = {}
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"key '{key}': unknown configuration key")
        values[key] = _coerce(key, value)

    mode = values.get("mode", "spectrum")
    if mode not in _MODES:
        raise ConfigError(f"key 'mode': {mode!r} is not one of {_MODES}")
    for key in ("n_sites", "max_phonons", "omega_delta_over_2pi"):
        if key not in values:
            raise ConfigError(f"key '{key}': required but missing")

    circuit = None
    has_circuit = any(k in values for k in ("g_over_2pi", "delta_over_2pi", "xi_d_over_2pi"))
    if has_circuit:
        for key in ("g_over_2pi", "delta_over_2pi", "xi_d_over_2pi"):
            if key not in values:
                raise ConfigError(f"key '{key}': required with circuit parameters")
        try:
            circuit = CircuitParams(
                g_over_2pi=values["g_over_2pi"],
                delta_over_2pi=values["delta_over_2pi"],
                xi_d_over_2pi=values["xi_d_over_2pi"],
                omega_delta_over_2pi=values["omega_delta_over_2pi"],
                ej0_over_2pi=values.get("ej0_over_2pi"),
                zeta0_sq=values.get("zeta0_sq", 0.15),
                flux_ratio=values.get("flux_ratio"),
                omega_c_over_2pi=values.get("omega_c_over_2pi"),
                omega_z_over_2pi=values.get("omega_z_over_2pi"),
                omega_d_over_2pi=values.get("omega_d_over_2pi"),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e

    try:
        if circuit is not None:
            effective = circuit_to_effective(
                circuit,
                n_sites=values["n_sites"],
                max_phonons=values["max_phonons"],
                t_e_over_2pi=values.get("t_e_over_2pi"),
                adiabaticity_ratio=values.get("adiabaticity_ratio"),
            )
            if "g_h" in values:
                derived = effective.g_h
                if abs(values["g_h"] - derived) > 1e-9 * max(abs(derived), 1e-300):
                    raise ConfigError(
                        f"key 'g_h': value {values['g_h']} inconsistent with the "
                        f"circuit-derived {derived} beyond 1e-9 relative"
                    )
        else:
            if "g_h" not in values:
                raise ConfigError("key 'g_h': required without circuit parameters")
            t_e = values.get("t_e_over_2pi")
            if t_e is None:
                ratio = values.get("adiabaticity_ratio")
                if ratio is None:
                    raise ConfigError(
                        "key 't_e_over_2pi': required (or provide adiabaticity_ratio)"
                    )
                t_e = values["omega_delta_over_2pi"] / ratio
            elif "adiabaticity_ratio" in values:
                implied = values["omega_delta_over_2pi"] / values["adiabaticity_ratio"]
                if abs(implied - t_e) > 1e-9 * max(abs(t_e), 1e-300):
                    raise ConfigError(
                        "key 'adiabaticity_ratio': inconsistent with t_e_over_2pi "
                        "beyond 1e-9 relative"
                    )
            effective = EffectiveParams(
                t_e_over_2pi=t_e,
                g_h=values["g_h"],
                omega_delta_over_2pi=values["omega_delta_over_2pi"],
                n_sites=values["n_sites"],
                max_phonons=values["max_phonons"],
            )
    except ValueError as e:
        raise ConfigError(str(e)) from e

    n_moments = values.get("n_moments", 4096)
    if n_moments < 2 or n_moments % 2 != 0:
        raise ConfigError("key 'n_moments': must be even and >= 2")
    epsilon = values.get("epsilon", 0.01)
    if not 0.0 < epsilon < 1.0:
        raise ConfigError("key 'epsilon': must lie in (0, 1)")
    fmt = values.get("format", "csv")
    if fmt not in _FORMATS:
        raise ConfigError(f"key 'format': {fmt!r} is not one of {_FORMATS}")

    threads = values.get("threads", int(os.environ.get(THREADS_ENV_VAR, "1") or 1))
    if threads <= 0:
        threads = os.cpu_count() or 1

    if "sweep_ratios" in values:
        try:
            ratios = [float(p) for p in str(values["sweep_ratios"]).split(",") if p.strip()]
        except ValueError:
            raise ConfigError("key 'sweep_ratios': expected comma-separated numbers")
        if not ratios or any(r <= 0 for r in ratios):
            raise ConfigError("key 'sweep_ratios': ratios must be positive")
    else:
        ratios = list(DEFAULT_SWEEP_RATIOS)

    return RunConfig(
        mode=mode,
        effective=effective,
        circuit=circuit,
        n_moments=n_moments,
        epsilon=epsilon,
        k_list=_parse_k_list(values.get("k_list", "all"), values["n_sites"]),
        sweep_ratios=ratios,
        output=Path(values.get("output", ".")),
        format=fmt,
        threads=threads,
        seed=values.get("seed", 7),
        lanczos_tol=values.get("lanczos_tol", 1e-9),
        lanczos_max_iter=values.get("lanczos_max_iter", 800),
        broadening_over_omega=values.get("broadening_over_omega", 0.02),
        time_span_periods=values.get("time_span_periods", 8.0),
        n_times=values.get("n_times", 256),
        raw=values,
    )


def _fmt(value: float) -> str:
    return format(value, ".17g")


CSV_HEADER = "k_index,k_value,omega_hz,omega_dimensionless,spectral_density"


def emit_csv(results, path) -> None:
    """Write spectral results: one row per (k, node), deterministic formatting."""
    if isinstance(results, SpectralResult):
        results = [results]
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        for r in results:
            for i in range(r.n_nodes):
                f.write(
                    ",".join(
                        (
                            str(r.k_index),
                            _fmt(r.k_value),
                            _fmt(r.nodes_hz[i]),
                            _fmt(r.nodes_dimensionless[i]),
                            _fmt(r.density_per_hz[i]),
                        )
                    )
                    + "\n"
                )


def emit_json(results, path) -> None:
    if isinstance(results, SpectralResult):
        results = [results]
    payload = {
        "columns": CSV_HEADER.split(","),
        "rows": [
            [
                r.k_index,
                r.k_value,
                float(r.nodes_hz[i]),
                float(r.nodes_dimensionless[i]),
                float(r.density_per_hz[i]),
            ]
            for r in results
            for i in range(r.n_nodes)
        ],
    }
    with open(path, "w", newline="") as f:
        json.dump(payload, f, indent=None, separators=(",", ":"))
        f.write("\n")


def _config_echo(config: RunConfig) -> dict:
    eff = config.effective
    return {
        "mode": config.mode,
        "n_sites": eff.n_sites,
        "max_phonons": eff.max_phonons,
        "t_e_over_2pi": eff.t_e_over_2pi,
        "g_h": eff.g_h,
        "lambda_h": eff.lambda_h if math.isfinite(eff.lambda_h) else "inf",
        "omega_delta_over_2pi": eff.omega_delta_over_2pi,
        "n_moments": config.n_moments,
        "epsilon": config.epsilon,
        "k_list": config.k_list,
        "format": config.format,
        "threads": config.threads,
        "seed": config.seed,
        "lanczos_tol": config.lanczos_tol,
        "lanczos_max_iter": config.lanczos_max_iter,
        "raw": {k: (str(v) if isinstance(v, Path) else v) for k, v in config.raw.items()},
        "library_version": __version__,
    }


def _write_metadata(path: Path, config: RunConfig, records: list[dict], wall_s: float) -> None:
    payload = {
        "config": _config_echo(config),
        "results": records,
        "wall_time_s": wall_s,
    }
    with open(path, "w", newline="") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _spectrum_results(config: RunConfig, effective: EffectiveParams):
    basis = enumerate_basis(effective.n_sites, effective.max_phonons)
    sectors = [make_sector(k, basis) for k in config.k_list]

    def one(sector):
        return spectral_function(
            sector,
            effective,
            config.n_moments,
            config.epsilon,
            basis=basis,
            lanczos_tol=config.lanczos_tol,
            lanczos_max_iter=config.lanczos_max_iter,
            seed=config.seed,
        )

    if config.threads > 1 and len(sectors) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one, sectors))
    else:
        results = [one(s) for s in sectors]
    return results


def _result_record(r: SpectralResult) -> dict:
    rec = {
        "k_index": r.k_index,
        "k_value": r.k_value,
        "integrated_weight": r.integrated_weight(),
    }
    for key in ("e_min", "e_max", "n_moments", "epsilon", "lanczos_iterations",
                "lanczos_residual", "ground_state_shell_weight", "runtime_s",
                "exact_delta"):
        if key in r.metadata:
            rec[key] = r.metadata[key]
    return rec


def _run_params(config: RunConfig) -> None:
    eff = config.effective
    lines = []
    if config.circuit is not None:
        chi = eff.chi_over_2pi
        lines.append(f"chi_over_2pi_hz = {chi:.6g}")
        lines.append(f"dispersive_ratio = {config.circuit.dispersive_ratio:.6g}")
        lines.append(f"drive_ratio = {config.circuit.drive_ratio:.6g}")
    lines.append(f"g_H = {eff.g_h:.4g}")
    lines.append(f"lambda_H = {eff.lambda_h:.4g}")
    lines.append(f"t_e_over_2pi_hz = {eff.t_e_over_2pi:.6g}")
    lines.append(f"omega_delta_over_2pi_hz = {eff.omega_delta_over_2pi:.6g}")
    lines.append(f"adiabaticity_ratio = {eff.adiabaticity_ratio:.6g}")
    lines.append(f"small_polaron_regime = {small_polaron_regime(eff)}")
    print("\n".join(lines))
    if config.raw.get("output"):
        config.output.mkdir(parents=True, exist_ok=True)
        _write_metadata(config.output / "params.json", config, [], 0.0)


def _run_spectrum(config: RunConfig) -> None:
    started = time.perf_counter()
    results = _spectrum_results(config, config.effective)
    config.output.mkdir(parents=True, exist_ok=True)
    out = config.output / f"spectrum.{config.format}"
    (emit_csv if config.format == "csv" else emit_json)(results, out)
    _write_metadata(
        config.output / "metadata.json",
        config,
        [_result_record(r) for r in results],
        time.perf_counter() - started,
    )
    print(f"wrote {out}")


def _run_sweep(config: RunConfig) -> None:
    started = time.perf_counter()
    config.output.mkdir(parents=True, exist_ok=True)
    records = []
    for ratio in config.sweep_ratios:
        eff = EffectiveParams(
            t_e_over_2pi=config.effective.omega_delta_over_2pi / ratio,
            g_h=config.effective.g_h,
            omega_delta_over_2pi=config.effective.omega_delta_over_2pi,
            n_sites=config.effective.n_sites,
            max_phonons=config.effective.max_phonons,
            chi_over_2pi=config.effective.chi_over_2pi,
        )
        results = _spectrum_results(config, eff)
        out = config.output / f"sweep_ratio_{ratio:g}.{config.format}"
        (emit_csv if config.format == "csv" else emit_json)(results, out)
        records.append(
            {
                "adiabaticity_ratio": ratio,
                "lambda_h": eff.lambda_h,
                "file": out.name,
                "results": [_result_record(r) for r in results],
            }
        )
        print(f"wrote {out}")
    _write_metadata(
        config.output / "metadata.json", config, records, time.perf_counter() - started
    )


def _run_oracle(config: RunConfig) -> None:
    started = time.perf_counter()
    eff = config.effective
    basis = enumerate_basis(eff.n_sites, eff.max_phonons)
    sigma = config.broadening_over_omega * eff.omega_delta_over_2pi
    results = []
    records = []
    for k in config.k_list:
        sector = make_sector(k, basis)
        sampled = dense_spectral_function(sector, basis, eff, sigma)
        results.append(
            SpectralResult(
                k_index=sector.k_index,
                k_value=sector.k_value,
                nodes_hz=sampled.freqs_hz,
                nodes_dimensionless=sampled.freqs_hz / eff.omega_delta_over_2pi,
                nodes_scaled=np.zeros_like(sampled.freqs_hz),
                density_per_hz=sampled.density_per_hz,
                density_scaled=sampled.density_per_hz * eff.omega_delta_over_2pi,
                metadata={"broadening_hz": sigma, "dense_dimension": basis.size},
            )
        )
        records.append(
            {
                "k_index": sector.k_index,
                "e_min": float(sampled.spectrum.energies_dimensionless[0]),
                "e_max": float(sampled.spectrum.energies_dimensionless[-1]),
                "weight_sum": float(sampled.spectrum.weights.sum()),
            }
        )
    config.output.mkdir(parents=True, exist_ok=True)
    out = config.output / f"oracle.{config.format}"
    (emit_csv if config.format == "csv" else emit_json)(results, out)
    _write_metadata(
        config.output / "metadata.json", config, records, time.perf_counter() - started
    )
    print(f"wrote {out}")


def _run_ramsey(config: RunConfig) -> None:
    started = time.perf_counter()
    eff = config.effective
    basis = enumerate_basis(eff.n_sites, eff.max_phonons)
    space = build_excitation_space(basis, eff)
    t_max = config.time_span_periods / eff.omega_delta_over_2pi
    times = np.linspace(0.0, t_max, config.n_times)
    outcomes = []
    for d in range(eff.n_sites):
        outcomes.append(ramsey_scan(space, 0, d, 0.0, 0.0, times))
        outcomes.append(ramsey_scan(space, 0, d, 0.0, math.pi / 2, times))
    config.output.mkdir(parents=True, exist_ok=True)
    out = config.output / "greens.csv"
    with open(out, "w", newline="") as f:
        f.write("k_index,k_value,time_s,greens_real,greens_imag\n")
        for k in config.k_list:
            sector = make_sector(k, basis)
            series = ramsey_reconstruct_greens(outcomes, sector)
            for t, v in zip(series.times_s, series.values):
                f.write(
                    f"{sector.k_index},{_fmt(sector.k_value)},{_fmt(t)},"
                    f"{_fmt(v.real)},{_fmt(v.imag)}\n"
                )
    _write_metadata(
        config.output / "metadata.json",
        config,
        [{"n_times": config.n_times, "t_max_s": t_max}],
        time.perf_counter() - started,
    )
    print(f"wrote {out}")


def run(config: RunConfig) -> int:
    """Execute one mode; returns the process exit code."""
    try:
        if config.mode == "params":
            _run_params(config)
        elif config.mode == "spectrum":
            _run_spectrum(config)
        elif config.mode == "sweep":
            _run_sweep(config)
        elif config.mode == "oracle":
            _run_oracle(config)
        elif config.mode == "ramsey":
            _run_ramsey(config)
        else:  # unreachable; resolve_config validates
            raise ConfigError(f"key 'mode': unknown mode {config.mode!r}")
    except HolsteinKPMError as e:
        print(f"error: {e}", file=sys.stderr)
        for cls, code in EXIT_CODES.items():
            if isinstance(e, cls):
                return code
        return 1
    return 0


def load_run_config(
    config_path: str | None = None,
    preset: str | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    raw: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"key 'preset': unknown preset {preset!r}; choose from {sorted(PRESETS)}"
            )
        raw.update(PRESETS[preset])
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file {config_path!r} does not exist")
        raw.update(parse_config_text(path.read_text()))
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    if not raw:
        raise ConfigError("no configuration given: use --config and/or --preset")
    return resolve_config(raw)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="holstein-kpm",
        description="Holstein-polaron spectral functions via the kernel polynomial method",
    )
    parser.add_argument("--config", help="flat key-value or JSON config file")
    parser.add_argument("--preset", help=f"named preset: {', '.join(sorted(PRESETS))}")
    parser.add_argument("--mode", help="override the run mode")
    parser.add_argument("--threads", type=int, help="worker threads over k-sectors")
    parser.add_argument("--output", help="output directory")
    args = parser.parse_args(argv)

    overrides = {
        "mode": args.mode,
        "threads": args.threads,
        "output": args.output,
    }
    try:
        config = load_run_config(args.config, args.preset, overrides)
    except HolsteinKPMError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES.get(type(e), 2)
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
