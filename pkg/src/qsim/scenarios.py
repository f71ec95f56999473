"""Protocol orchestration: configs, runners, sweeps, reports, convergence gates.

Each runner consumes a validated :class:`ScenarioConfig`, drives the model and
solver layers, and returns a :class:`Report`.  Curves are emitted as CSV
tables (the single source of truth for plots); scalars, derived constants and
the convergence-gate record go to ``report.json``.  Everything in the core
path is deterministic: identical configs produce bit-identical CSV bodies.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, NamedTuple

import numpy as np

from .analysis import (
    PhaseSpaceGrid,
    default_grid,
    fidelity,
    nonclassical_volume,
    phonon_distribution,
    reflection_coefficient,
    state_fidelity,
    trace_distance,
    wigner,
)
from .fockspace import (
    EVOLVED_POSITIVITY_ATOL,
    DensityMatrix,
    Ket,
    Operator,
    StateSpec,
    composite_tag,
    identity,
    ladder_operators,
    number_operator,
    oscillator_tag,
    partial_trace_qubit,
    prepare_state,
    qubit_operators,
    qubit_tag,
    tensor,
    thermal_state,
)
from .lindblad import DissipatorSpec, build_liouvillian, evolve, steady_state
from .model import (
    LAMBDA_MAX,
    DeviceParams,
    build_cat_effective,
    build_cooling_jc,
    build_polaron_expanded,
    build_squeeze_effective,
    derive_coupling,
    flux_sensitivity_from_ghz_per_mphi0,
    predicted_cooling_limit,
    shifted_frequencies,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "ScenarioConfig",
    "Table",
    "ConvergenceRecord",
    "Report",
    "PROTOCOLS",
    "run_cool",
    "run_squeeze",
    "run_cat",
    "run_detect",
    "sweep_detuning",
    "sweep_gamma",
    "sweep_amplitude",
    "validate_expansion",
    "run_protocol",
    "write_report",
]

TWO_PI = 2.0 * math.pi

# Convergence gate: refine the cutoff by +10 levels and the integrator
# tolerance by x0.1; every headline scalar must move by less than this.
GATE_DRIFT_TOL = 1e-3
GATE_CUTOFF_STEP = 10
GATE_RTOL_FACTOR = 0.1

DEFAULT_RTOL = 1e-8
# r is read off as a time average over the trailing fraction of the window,
# where the trapped state is quasi-stationary.
REFLECTION_AVG_FRACTION = 0.1
# Amplitude sweeps auto-size their window from the baseline trapping run
# (t_max 27.5 us at a 72 kHz resonant drive), inversely in the drive.
AMPLITUDE_WINDOW_T_BASE = 27.5e-6
AMPLITUDE_WINDOW_EPS_BASE = TWO_PI * 72e3
AMPLITUDE_WINDOW_BOUNDS = (5e-6, 2e-4)
AMPLITUDE_WINDOW_FACTOR = 3.0
AMPLITUDE_SAMPLES = 150


class ConfigError(ValueError):
    """The configuration document does not satisfy the protocol's contract."""


class ConvergenceError(RuntimeError):
    """A headline scalar moved by more than the gate tolerance under refinement."""


# --------------------------------------------------------------------------
# tables and reports

class Table(NamedTuple):
    """One CSV-destined curve: a header row plus float rows."""

    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match the header")
            lines.append(",".join("%.17g" % v for v in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ConvergenceRecord:
    """Headline scalars at base and refined resolution, and their drift."""

    cutoff_base: int
    cutoff_refined: int
    rtol_base: float
    rtol_refined: float
    headline_base: dict[str, float]
    headline_refined: dict[str, float]
    drift: dict[str, float]
    tolerance: float = GATE_DRIFT_TOL

    @property
    def passed(self) -> bool:
        return all(d < self.tolerance for d in self.drift.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "cutoff_base": self.cutoff_base,
            "cutoff_refined": self.cutoff_refined,
            "rtol_base": self.rtol_base,
            "rtol_refined": self.rtol_refined,
            "headline_base": dict(self.headline_base),
            "headline_refined": dict(self.headline_refined),
            "drift": dict(self.drift),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class Report:
    """Everything one protocol run produced.

    ``headline`` holds the gated scalars; ``tables`` the CSV curves, each
    observable row carrying its sampling time or sweep coordinate; ``notes``
    records run choices (windows, frames) that are config-derived but not
    config-stated.
    """

    protocol: str
    config_echo: dict[str, Any]
    derived_constants: dict[str, float | None]
    headline: dict[str, float]
    tables: dict[str, Table]
    convergence: ConvergenceRecord | None
    wallclock_s: float
    notes: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "protocol": self.protocol,
            "config": self.config_echo,
            "derived_constants": dict(self.derived_constants),
            "headline": dict(self.headline),
            "notes": dict(self.notes),
            "convergence_gate": None if self.convergence is None else self.convergence.as_dict(),
            "csv_files": {name: f"{name}.csv" for name in sorted(self.tables)},
            "wallclock_s": self.wallclock_s,
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }


def write_report(report: Report, out_dir: str | Path) -> list[Path]:
    """Write report.json plus one CSV per table; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.json"]
    paths[0].write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    for name in sorted(report.tables):
        p = out / f"{name}.csv"
        p.write_text(report.tables[name].to_csv())
        paths.append(p)
    return paths


# --------------------------------------------------------------------------
# configuration

PROTOCOLS = (
    "cool",
    "squeeze",
    "cat",
    "detect",
    "sweep_amplitude",
    "sweep_detuning",
    "sweep_gamma",
    "validate_expansion",
)


@dataclass(frozen=True)
class _Rules:
    """Which fields a protocol demands; everything else is rejected."""

    drives_required: frozenset[str]
    drives_optional: frozenset[str] = frozenset()
    needs_duration: bool = True
    duration_optional: bool = False
    allows_detuning: bool = False
    allows_grid: bool = False
    allows_stride: bool = False
    default_stride: int = 1
    sweep_key: str | None = None
    needs_omega_m: bool = False
    gamma_in_rates: bool = True
    max_cutoff: int | None = None
    allows_off_shift: bool = False


_RULES: dict[str, _Rules] = {
    "cool": _Rules(frozenset({"eps_minus"}), drives_optional=frozenset({"eps_plus"}),
                   needs_duration=False, duration_optional=True),
    "squeeze": _Rules(frozenset({"eps_minus", "eps_plus"})),
    "cat": _Rules(frozenset({"eps1", "eps2"}), allows_detuning=True,
                  allows_grid=True, allows_stride=True),
    "detect": _Rules(frozenset({"eps1", "eps2"}), allows_detuning=True),
    "sweep_detuning": _Rules(frozenset({"eps1", "eps2"}),
                             sweep_key="delta_d_over_2pi_hz"),
    "sweep_gamma": _Rules(frozenset({"eps1", "eps2"}), allows_detuning=True,
                          sweep_key="gamma_over_2pi_hz", gamma_in_rates=False),
    "sweep_amplitude": _Rules(frozenset({"eps1"}), needs_duration=False,
                              allows_grid=True, allows_stride=True, default_stride=10,
                              sweep_key="eps_res_over_2pi_hz"),
    "validate_expansion": _Rules(frozenset({"eps1", "eps2"}), needs_omega_m=True,
                                 max_cutoff=15, allows_off_shift=True),
}

_DEVICE_KEYS = {
    "beam_current_a", "beam_length_m", "squid_width_m", "squid_length_m",
    "beam_mass_kg", "omega_m_over_2pi_hz", "flux_sensitivity_ghz_per_mphi0",
    "temperature_k",
}


def _num(raw: Mapping[str, Any], key: str, where: str) -> float:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: {key} must be a number, got {value!r}")
    return float(value)


def _reject_unknown(raw: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}; allowed: {sorted(allowed)}")


def _require(raw: Mapping[str, Any], keys: set[str], where: str) -> None:
    missing = sorted(keys - set(raw))
    if missing:
        raise ConfigError(f"{where}: missing required keys {missing}")


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated protocol configuration, all frequencies in rad/s.

    Built from a JSON document in which every frequency or rate is given in
    Hz through a ``*_over_2pi_hz`` key; durations are in seconds.  Exactly
    the fields the chosen protocol demands may appear.
    """

    protocol: str
    lam: float
    g: float | None
    omega_m: float | None
    drives: dict[str, float]
    big_gamma: float
    gamma: float | None
    n_th: float
    detuning_delta_d: float
    fock_cutoff: int
    duration: float | None
    sample_step: float | None
    rtol: float
    grid_halfwidth: float | None
    grid_step: float | None
    delta_n_stride: int
    sweep_values: tuple[float, ...] | None
    off_resonance_shift: float | None
    output_dir: str | None
    gate: bool
    raw: dict[str, Any]

    # -- construction ------------------------------------------------------

    @classmethod
    def from_json_file(cls, path: str | Path,
                       overrides: Mapping[str, Any] | None = None) -> "ScenarioConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a JSON object")
        if overrides:
            raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ScenarioConfig":
        if not isinstance(raw, Mapping):
            raise ConfigError("config must be a mapping")
        if "protocol" not in raw:
            raise ConfigError("config: missing required keys ['protocol']")
        protocol = raw["protocol"]
        if protocol not in _RULES:
            raise ConfigError(
                f"unknown protocol {protocol!r}; choose one of {sorted(_RULES)}")
        rules = _RULES[protocol]
        where = f"{protocol} config"

        allowed = {"protocol", "fock_cutoff", "rates", "drives", "output_dir",
                   "convergence_gate", "integrator_rtol",
                   "lambda", "g_over_2pi_hz", "device", "omega_m_over_2pi_hz"}
        if rules.needs_duration or rules.duration_optional:
            allowed |= {"duration_s", "sample_step_s"}
        if rules.allows_detuning:
            allowed.add("detuning_delta_d_over_2pi_hz")
        if rules.allows_grid:
            allowed.add("grid")
        if rules.allows_stride:
            allowed.add("delta_n_stride")
        if rules.sweep_key:
            allowed.add("sweep")
        if rules.allows_off_shift:
            allowed.add("off_resonance_shift_over_2pi_hz")
        _reject_unknown(raw, allowed, where)
        _require(raw, {"fock_cutoff", "rates", "drives"}, where)

        # coupling: exactly one of lambda / g / device
        given = [k for k in ("lambda", "g_over_2pi_hz", "device") if k in raw]
        if len(given) != 1:
            raise ConfigError(
                f"{where}: give exactly one of 'lambda', 'g_over_2pi_hz', 'device' "
                f"(got {given or 'none'})")
        omega_m: float | None = None
        g: float | None = None
        if "omega_m_over_2pi_hz" in raw:
            omega_m = TWO_PI * _num(raw, "omega_m_over_2pi_hz", where)
            if omega_m <= 0:
                raise ConfigError(f"{where}: omega_m must be positive")
        if given[0] == "lambda":
            lam = _num(raw, "lambda", where)
            if omega_m is not None:
                g = lam * omega_m
        elif given[0] == "g_over_2pi_hz":
            if omega_m is None:
                raise ConfigError(
                    f"{where}: 'g_over_2pi_hz' needs 'omega_m_over_2pi_hz' to fix lambda")
            g = TWO_PI * _num(raw, "g_over_2pi_hz", where)
            if g <= 0:
                raise ConfigError(f"{where}: g must be positive")
            lam = g / omega_m
        else:
            dev = raw["device"]
            if not isinstance(dev, Mapping):
                raise ConfigError(f"{where}: 'device' must be an object")
            _reject_unknown(dev, set(_DEVICE_KEYS), f"{where}.device")
            _require(dev, set(_DEVICE_KEYS), f"{where}.device")
            params = DeviceParams(
                beam_current=_num(dev, "beam_current_a", where),
                beam_length=_num(dev, "beam_length_m", where),
                squid_width=_num(dev, "squid_width_m", where),
                squid_length=_num(dev, "squid_length_m", where),
                beam_mass=_num(dev, "beam_mass_kg", where),
                omega_m=TWO_PI * _num(dev, "omega_m_over_2pi_hz", where),
                flux_sensitivity=flux_sensitivity_from_ghz_per_mphi0(
                    _num(dev, "flux_sensitivity_ghz_per_mphi0", where)),
                temperature=_num(dev, "temperature_k", where),
            )
            coupling = derive_coupling(params)
            g, lam = coupling.g, coupling.lam
            if omega_m is not None and abs(omega_m - params.omega_m) > 1e-9 * params.omega_m:
                raise ConfigError(
                    f"{where}: top-level omega_m contradicts device.omega_m")
            omega_m = params.omega_m
        if not 0 < lam <= LAMBDA_MAX:
            raise ConfigError(
                f"{where}: lambda = {lam:.4g} outside (0, {LAMBDA_MAX}]")
        if rules.needs_omega_m and omega_m is None:
            raise ConfigError(f"{where}: 'omega_m_over_2pi_hz' is required")

        # rates
        rates = raw["rates"]
        if not isinstance(rates, Mapping):
            raise ConfigError(f"{where}: 'rates' must be an object")
        rate_keys = {"big_gamma_over_2pi_hz", "n_th"}
        if rules.gamma_in_rates:
            rate_keys.add("gamma_over_2pi_hz")
        _reject_unknown(rates, rate_keys, f"{where}.rates")
        _require(rates, rate_keys, f"{where}.rates")
        big_gamma = TWO_PI * _num(rates, "big_gamma_over_2pi_hz", where)
        if big_gamma <= 0:
            raise ConfigError(f"{where}: big_gamma must be positive")
        n_th = _num(rates, "n_th", where)
        if n_th < 0:
            raise ConfigError(f"{where}: n_th must be >= 0")
        gamma: float | None = None
        if rules.gamma_in_rates:
            gamma = TWO_PI * _num(rates, "gamma_over_2pi_hz", where)
            if gamma < 0:
                raise ConfigError(f"{where}: gamma must be >= 0")

        # drives
        drives_raw = raw["drives"]
        if not isinstance(drives_raw, Mapping):
            raise ConfigError(f"{where}: 'drives' must be an object")
        want = {f"{name}_over_2pi_hz" for name in rules.drives_required}
        may = want | {f"{name}_over_2pi_hz" for name in rules.drives_optional}
        _reject_unknown(drives_raw, may, f"{where}.drives")
        _require(drives_raw, want, f"{where}.drives")
        drives = {key[: -len("_over_2pi_hz")]: TWO_PI * _num(drives_raw, key, where)
                  for key in drives_raw}
        cls._check_drives(protocol, drives, where)

        # cutoff
        cutoff_raw = raw["fock_cutoff"]
        if isinstance(cutoff_raw, bool) or not isinstance(cutoff_raw, int):
            raise ConfigError(f"{where}: fock_cutoff must be an integer")
        if cutoff_raw < 4:
            raise ConfigError(f"{where}: fock_cutoff must be >= 4")
        if rules.max_cutoff is not None and cutoff_raw > rules.max_cutoff:
            raise ConfigError(
                f"{where}: fock_cutoff must be <= {rules.max_cutoff} to bound cost")

        # timing
        duration = sample_step = None
        has_dur = "duration_s" in raw
        has_step = "sample_step_s" in raw
        if has_dur != has_step:
            raise ConfigError(f"{where}: duration_s and sample_step_s come as a pair")
        if rules.needs_duration and not has_dur:
            raise ConfigError(f"{where}: missing required keys "
                              f"['duration_s', 'sample_step_s']")
        if has_dur:
            duration = _num(raw, "duration_s", where)
            sample_step = _num(raw, "sample_step_s", where)
            if duration <= 0 or sample_step <= 0:
                raise ConfigError(f"{where}: duration and sample step must be positive")
            n = duration / sample_step
            if abs(n - round(n)) > 1e-9 * max(n, 1.0) or round(n) < 2:
                raise ConfigError(
                    f"{where}: sample_step_s must divide duration_s into >= 2 steps")
        if protocol == "validate_expansion" and duration is not None and duration < 5e-6:
            raise ConfigError(f"{where}: duration_s must be >= 5e-6 for a meaningful check")

        detuning = 0.0
        if "detuning_delta_d_over_2pi_hz" in raw:
            detuning = TWO_PI * _num(raw, "detuning_delta_d_over_2pi_hz", where)

        grid_halfwidth = grid_step = None
        if "grid" in raw:
            grid_raw = raw["grid"]
            if not isinstance(grid_raw, Mapping):
                raise ConfigError(f"{where}: 'grid' must be an object")
            _reject_unknown(grid_raw, {"halfwidth", "step"}, f"{where}.grid")
            _require(grid_raw, {"halfwidth", "step"}, f"{where}.grid")
            grid_halfwidth = _num(grid_raw, "halfwidth", where)
            grid_step = _num(grid_raw, "step", where)
            if grid_step <= 0 or grid_halfwidth <= 0 or grid_step > grid_halfwidth / 10:
                raise ConfigError(f"{where}: grid needs 0 < step <= halfwidth/10")

        stride = rules.default_stride
        if "delta_n_stride" in raw:
            stride_raw = raw["delta_n_stride"]
            if isinstance(stride_raw, bool) or not isinstance(stride_raw, int) or stride_raw < 1:
                raise ConfigError(f"{where}: delta_n_stride must be a positive integer")
            stride = stride_raw

        sweep_values: tuple[float, ...] | None = None
        if rules.sweep_key:
            _require(raw, {"sweep"}, where)
            sweep_raw = raw["sweep"]
            if not isinstance(sweep_raw, Mapping):
                raise ConfigError(f"{where}: 'sweep' must be an object")
            _reject_unknown(sweep_raw, {rules.sweep_key}, f"{where}.sweep")
            _require(sweep_raw, {rules.sweep_key}, f"{where}.sweep")
            values_raw = sweep_raw[rules.sweep_key]
            if not isinstance(values_raw, (list, tuple)) or len(values_raw) < 2:
                raise ConfigError(
                    f"{where}: sweep.{rules.sweep_key} must list at least two values")
            values = []
            for v in values_raw:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{where}: sweep values must be numbers")
                values.append(TWO_PI * float(v))
            if len(set(values)) != len(values):
                raise ConfigError(f"{where}: sweep values must be distinct")
            sweep_values = tuple(sorted(values))
            cls._check_sweep(protocol, sweep_values, where)

        off_shift = None
        if rules.allows_off_shift:
            off_shift = TWO_PI * 1e6
            if "off_resonance_shift_over_2pi_hz" in raw:
                off_shift = TWO_PI * _num(raw, "off_resonance_shift_over_2pi_hz", where)
                if off_shift <= 0:
                    raise ConfigError(f"{where}: off-resonance shift must be positive")

        rtol = DEFAULT_RTOL
        if "integrator_rtol" in raw:
            rtol = _num(raw, "integrator_rtol", where)
            if not 0 < rtol <= 1e-2:
                raise ConfigError(f"{where}: integrator_rtol outside (0, 1e-2]")

        gate = True
        if "convergence_gate" in raw:
            if not isinstance(raw["convergence_gate"], bool):
                raise ConfigError(f"{where}: convergence_gate must be a boolean")
            gate = raw["convergence_gate"]

        output_dir = None
        if "output_dir" in raw:
            if not isinstance(raw["output_dir"], str) or not raw["output_dir"]:
                raise ConfigError(f"{where}: output_dir must be a non-empty string")
            output_dir = raw["output_dir"]

        cfg = cls(
            protocol=protocol, lam=lam, g=g, omega_m=omega_m, drives=drives,
            big_gamma=big_gamma, gamma=gamma, n_th=n_th,
            detuning_delta_d=detuning, fock_cutoff=cutoff_raw,
            duration=duration, sample_step=sample_step, rtol=rtol,
            grid_halfwidth=grid_halfwidth, grid_step=grid_step,
            delta_n_stride=stride, sweep_values=sweep_values,
            off_resonance_shift=off_shift, output_dir=output_dir, gate=gate,
            raw=dict(raw),
        )
        cfg._check_cutoff_fits()
        return cfg

    @staticmethod
    def _check_drives(protocol: str, drives: dict[str, float], where: str) -> None:
        if protocol == "cool":
            if drives["eps_minus"] <= 0:
                raise ConfigError(f"{where}: eps_minus must be positive")
            if drives.get("eps_plus", 0.0) != 0.0:
                raise ConfigError(f"{where}: eps_plus must be absent or zero for cooling")
        elif protocol == "squeeze":
            if drives["eps_minus"] <= 0 or drives["eps_plus"] < 0:
                raise ConfigError(f"{where}: need eps_minus > 0 and eps_plus >= 0")
            if drives["eps_plus"] >= drives["eps_minus"]:
                raise ConfigError(
                    f"{where}: need eps_plus < eps_minus for a stable engineered reservoir")
        elif protocol == "sweep_amplitude":
            if drives["eps1"] <= 0:
                raise ConfigError(f"{where}: eps1 must be positive")
        else:
            if drives["eps1"] <= 0:
                raise ConfigError(f"{where}: eps1 must be positive")
            if drives["eps2"] >= 0:
                raise ConfigError(
                    f"{where}: eps2 must be negative (opposite sign to the "
                    "two-phonon rate) so the target amplitude is real")

    @staticmethod
    def _check_sweep(protocol: str, values: tuple[float, ...], where: str) -> None:
        if protocol == "sweep_gamma":
            if any(v < 0 for v in values):
                raise ConfigError(f"{where}: swept gamma values must be >= 0")
        elif protocol == "sweep_amplitude":
            if any(v <= 0 for v in values):
                raise ConfigError(f"{where}: swept drive strengths must be positive")
            if max(values) < 10.0 * min(values):
                raise ConfigError(
                    f"{where}: amplitude sweep must span at least a factor of 10")

    def _check_cutoff_fits(self) -> None:
        # The trapping target must fit under the cutoff with negligible tail.
        alphas: list[float] = []
        if self.protocol in ("cat", "detect", "sweep_detuning", "sweep_gamma"):
            alphas.append(math.sqrt(-self.drives["eps2"] / self.theta_c))
        elif self.protocol == "sweep_amplitude":
            alphas.extend(math.sqrt(v / self.theta_c) for v in self.sweep_values or ())
        for alpha in alphas:
            if alpha ** 2 + 5.0 * alpha >= self.fock_cutoff:
                raise ConfigError(
                    f"{self.protocol} config: fock_cutoff {self.fock_cutoff} too small "
                    f"for target amplitude {alpha:.3f} (need > alpha^2 + 5 alpha)")

    # -- derived quantities --------------------------------------------------

    @property
    def theta_c(self) -> float:
        """Two-phonon exchange rate 2 lambda^2 eps1, rad/s."""
        return 2.0 * self.lam ** 2 * self.drives["eps1"]

    def sample_times(self) -> np.ndarray:
        if self.duration is None or self.sample_step is None:
            raise ValueError("this configuration carries no evolution window")
        return _sample_times(self.duration, self.sample_step)

    def grid(self, alpha_target: float) -> PhaseSpaceGrid:
        if self.grid_halfwidth is None or self.grid_step is None:
            return default_grid(alpha_target)
        n = int(round(self.grid_halfwidth / self.grid_step))
        axis = np.arange(-n, n + 1) * self.grid_step
        return PhaseSpaceGrid(axis, axis.copy())


def _sample_times(duration: float, step: float) -> np.ndarray:
    n = int(round(duration / step))
    return np.arange(n + 1, dtype=float) * step


# --------------------------------------------------------------------------
# shared state and operator assembly

def _standard_dissipators(n_trunc: int, big_gamma: float, gamma: float,
                          n_th: float) -> list[DissipatorSpec]:
    """Qubit decay plus thermal contact of the mechanical mode."""
    a, adag = ladder_operators(n_trunc)
    eye_o = identity(oscillator_tag(n_trunc))
    eye_q = identity(qubit_tag())
    q = qubit_operators()
    specs = [DissipatorSpec(tensor(q["sm"], eye_o), big_gamma)]
    if gamma > 0:
        specs.append(DissipatorSpec(tensor(eye_q, a), gamma * (n_th + 1.0)))
        if n_th > 0:
            specs.append(DissipatorSpec(tensor(eye_q, adag), gamma * n_th))
    return specs


def _ground_zero(n_trunc: int) -> Ket:
    return prepare_state(StateSpec.ground_qubit_product(StateSpec.fock(0)), n_trunc)


def _ground_thermal(n_th: float, n_trunc: int) -> DensityMatrix:
    """|g><g| tensor thermal(n_th) on the composite space."""
    th = thermal_state(n_th, n_trunc)
    rho_q = np.zeros((2, 2), dtype=np.complex128)
    rho_q[0, 0] = 1.0
    return DensityMatrix(composite_tag(n_trunc), np.kron(rho_q, th.data))


def _number_full(n_trunc: int) -> Operator:
    return tensor(identity(qubit_tag()), number_operator(n_trunc))


def _rotate_oscillator(rho_m: DensityMatrix, angle: float) -> DensityMatrix:
    """Apply exp(-i angle n) rho exp(+i angle n) on the Fock basis."""
    n = rho_m.data.shape[0]
    ph = np.exp(-1j * angle * np.arange(n))
    return DensityMatrix(rho_m.tag, np.outer(ph, ph.conj()) * rho_m.data,
                         positivity_atol=EVOLVED_POSITIVITY_ATOL)


def _gate_check(cutoffs: tuple[int, int], rtols: tuple[float, float],
                base: dict[str, float], refined: dict[str, float]) -> ConvergenceRecord:
    drift = {k: abs(refined[k] - base[k]) for k in base}
    record = ConvergenceRecord(
        cutoff_base=cutoffs[0], cutoff_refined=cutoffs[1],
        rtol_base=rtols[0], rtol_refined=rtols[1],
        headline_base=base, headline_refined=refined, drift=drift,
    )
    if not record.passed:
        bad = {k: v for k, v in drift.items() if v >= record.tolerance}
        raise ConvergenceError(
            f"headline scalars did not converge under refinement "
            f"(cutoff {cutoffs[0]} -> {cutoffs[1]}, rtol {rtols[0]:g} -> {rtols[1]:g}): "
            f"drift {bad} exceeds {record.tolerance}")
    return record


def _finish(cfg: ScenarioConfig, t_start: float, *, derived: dict[str, float | None],
            headline: dict[str, float], tables: dict[str, Table],
            convergence: ConvergenceRecord | None, notes: dict[str, Any]) -> Report:
    return Report(
        protocol=cfg.protocol, config_echo=dict(cfg.raw),
        derived_constants=derived, headline=headline, tables=tables,
        convergence=convergence, wallclock_s=time.perf_counter() - t_start,
        notes=notes,
    )


# --------------------------------------------------------------------------
# cooling

def _cool_point(cfg: ScenarioConfig, cutoff: int) -> dict[str, float]:
    model = build_cooling_jc(cfg.lam, cfg.drives["eps_minus"], cutoff)
    liouville = build_liouvillian(
        model.hamiltonian,
        _standard_dissipators(cutoff, cfg.big_gamma, cfg.gamma or 0.0, cfg.n_th))
    rho_ss = steady_state(liouville)
    n_ss = float(np.real(
        np.trace(_number_full(cutoff).data @ rho_ss.data)))
    return {"n_ss": n_ss}


def run_cool(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Steady state of the resonant-exchange cooler, vs the adiabatic formula."""
    if cfg.protocol != "cool":
        raise ConfigError(f"run_cool got a {cfg.protocol!r} config")
    t0 = time.perf_counter()
    g_c = 2.0 * cfg.lam * cfg.drives["eps_minus"]
    base = _cool_point(cfg, cfg.fock_cutoff)

    n_pred: float | None = None
    coop: float | None = None
    if cfg.gamma and cfg.gamma > 0:
        pred = predicted_cooling_limit(cfg.n_th, cfg.gamma, cfg.big_gamma, g_c)
        n_pred, coop = pred.n_bar, pred.cooperativity

    tables: dict[str, Table] = {}
    if cfg.duration is not None:
        times = cfg.sample_times()
        model = build_cooling_jc(cfg.lam, cfg.drives["eps_minus"], cfg.fock_cutoff)
        liouville = build_liouvillian(
            model.hamiltonian,
            _standard_dissipators(cfg.fock_cutoff, cfg.big_gamma, cfg.gamma or 0.0, cfg.n_th))
        q = qubit_operators()
        obs = {
            "n": _number_full(cfg.fock_cutoff),
            "p_e": tensor(q["sp"] @ q["sm"], identity(oscillator_tag(cfg.fock_cutoff))),
        }
        traj = evolve(liouville, _ground_thermal(cfg.n_th, cfg.fock_cutoff), times,
                      observables=obs, rtol=cfg.rtol)
        tables["cooling_vs_time"] = Table(
            ("t_s", "n_phonon", "p_excited"),
            tuple((float(t), float(np.real(traj.observables["n"][k])),
                   float(np.real(traj.observables["p_e"][k])))
                  for k, t in enumerate(times)))

    record = None
    if cfg.gate:
        refined = _cool_point(cfg, cfg.fock_cutoff + GATE_CUTOFF_STEP)
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR), base, refined)

    headline = dict(base)
    if n_pred is not None:
        headline["n_predicted"] = n_pred
    derived: dict[str, float | None] = {
        "lam": cfg.lam, "g": cfg.g, "g_c": g_c,
        "n_predicted": n_pred, "cooperativity": coop,
    }
    notes = {"initial_state": "ground qubit x thermal(n_th)" if cfg.duration else "steady solve only"}
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record, notes=notes)


# --------------------------------------------------------------------------
# squeezing

def _squeeze_metrics(rho: DensityMatrix, target: Ket,
                     b_dag_b: Operator) -> tuple[float, float, float, float]:
    """(fidelity, <B+B>, var_min, var_max) for one composite state."""
    rho_m = partial_trace_qubit(rho)
    n = rho_m.data.shape[0]
    a_op, _ = ladder_operators(n)
    a_mat = a_op.data.toarray()
    exp_a = complex(np.trace(a_mat @ rho_m.data))
    exp_aa = complex(np.trace(a_mat @ a_mat @ rho_m.data))
    exp_n = float(np.real(np.trace(number_operator(n).data.toarray() @ rho_m.data)))
    # Var x_theta = 1/2 + <n> - |<a>|^2 + Re[e^{-2 i theta} (<a^2> - <a>^2)]:
    # extremal over theta in closed form.
    base = 0.5 + exp_n - abs(exp_a) ** 2
    swing = abs(exp_aa - exp_a ** 2)
    fid = fidelity(rho_m, target)
    bdb = float(np.real(np.trace(b_dag_b.data.toarray() @ rho.data)))
    return fid, bdb, base - swing, base + swing


def run_squeeze(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Relax toward the Bogoliubov dark state and compare with the analytic target."""
    if cfg.protocol != "squeeze":
        raise ConfigError(f"run_squeeze got a {cfg.protocol!r} config")
    t0 = time.perf_counter()

    def point(cutoff: int, rtol: float, with_curve: bool):
        model = build_squeeze_effective(
            cfg.lam, cfg.drives["eps_minus"], cfg.drives["eps_plus"], cutoff)
        eta = model.constants["eta"]
        liouville = build_liouvillian(
            model.hamiltonian,
            _standard_dissipators(cutoff, cfg.big_gamma, cfg.gamma or 0.0, cfg.n_th))
        target = prepare_state(StateSpec.squeezed_vacuum(eta), cutoff)
        a, adag = ladder_operators(cutoff)
        b = math.sinh(eta) * adag + math.cosh(eta) * a
        b_dag_b = tensor(identity(qubit_tag()), b.dag() @ b)
        rows = None
        if with_curve:
            times = cfg.sample_times()
            traj = evolve(liouville, _ground_thermal(cfg.n_th, cutoff), times,
                          rtol=rtol, retain_states=True)
            rows = []
            for k, t in enumerate(times):
                fid, bdb, vmin, vmax = _squeeze_metrics(traj.states[k], target, b_dag_b)
                rows.append((float(t), bdb, vmin, vmax, fid))
        rho_ss = steady_state(liouville)
        fid, bdb, vmin, vmax = _squeeze_metrics(rho_ss, target, b_dag_b)
        head = {"fidelity_ss": fid, "b_dag_b_ss": bdb, "var_min_ss": vmin}
        return model, head, {"var_max_ss": vmax}, rows

    model, base, extra, rows = point(cfg.fock_cutoff, cfg.rtol, with_curve=True)
    record = None
    if cfg.gate:
        _, refined, _, _ = point(cfg.fock_cutoff + GATE_CUTOFF_STEP,
                                 cfg.rtol * GATE_RTOL_FACTOR, with_curve=False)
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR), base, refined)

    eta = model.constants["eta"]
    tables = {"squeeze_vs_time": Table(
        ("t_s", "b_dag_b", "var_min", "var_max", "fidelity"), tuple(rows))}
    derived: dict[str, float | None] = {
        "lam": cfg.lam, "g": cfg.g,
        "theta": model.constants["theta"], "eta": eta,
        "var_min_target": math.exp(-2.0 * abs(eta)) / 2.0,
        "var_max_target": math.exp(2.0 * abs(eta)) / 2.0,
    }
    headline = dict(base)
    headline.update(extra)
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record,
                   notes={"initial_state": "ground qubit x thermal(n_th)"})


# --------------------------------------------------------------------------
# cat trapping

def _cat_target(alpha: float, cutoff: int) -> Ket:
    return prepare_state(StateSpec.cat(alpha, "even"), cutoff)


def _trap_evolve(theta_c: float, eps2: float, delta_d: float, cutoff: int,
                 big_gamma: float, gamma: float, n_th: float,
                 times: np.ndarray, rtol: float):
    """Common trapping run: returns (model, trajectory with states, F(t))."""
    model = build_cat_effective(theta_c, eps2, delta_d, cutoff)
    liouville = build_liouvillian(
        model.hamiltonian, _standard_dissipators(cutoff, big_gamma, gamma, n_th))
    traj = evolve(liouville, _ground_zero(cutoff), times, rtol=rtol,
                  retain_states=True)
    target = _cat_target(model.constants["alpha_target"], cutoff)
    f = np.array([fidelity(partial_trace_qubit(s), target) for s in traj.states])
    return model, traj, f


def _delta_n_of(state: DensityMatrix, grid: PhaseSpaceGrid) -> float:
    return nonclassical_volume(wigner(partial_trace_qubit(state), grid))


def run_cat(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Dissipative trapping of the even cat, with a gamma = 0 companion run."""
    if cfg.protocol != "cat":
        raise ConfigError(f"run_cat got a {cfg.protocol!r} config")
    t0 = time.perf_counter()
    times = cfg.sample_times()

    def point(cutoff: int, rtol: float):
        model, traj, f = _trap_evolve(
            cfg.theta_c, cfg.drives["eps2"], cfg.detuning_delta_d, cutoff,
            cfg.big_gamma, cfg.gamma or 0.0, cfg.n_th, times, rtol)
        _, _, f0 = _trap_evolve(
            cfg.theta_c, cfg.drives["eps2"], cfg.detuning_delta_d, cutoff,
            cfg.big_gamma, 0.0, cfg.n_th, times, rtol)
        return model, traj, f, f0

    model, traj, f, f0 = point(cfg.fock_cutoff, cfg.rtol)
    alpha = model.constants["alpha_target"]
    grid = cfg.grid(alpha)
    k_max = int(np.argmax(f))

    delta_n = np.full(times.size, math.nan)
    for k in range(times.size):
        if k % cfg.delta_n_stride == 0 or k == k_max:
            delta_n[k] = _delta_n_of(traj.states[k], grid)
    delta_n_max = float(np.nanmax(delta_n))

    base = {
        "f_max": float(f[k_max]),
        "f_max_gamma0": float(np.max(f0)),
        "delta_n_at_t_max": float(delta_n[k_max]),
    }
    record = None
    if cfg.gate:
        _, traj_r, f_r, f0_r = point(cfg.fock_cutoff + GATE_CUTOFF_STEP,
                                     cfg.rtol * GATE_RTOL_FACTOR)
        refined = {
            "f_max": float(np.max(f_r)),
            "f_max_gamma0": float(np.max(f0_r)),
            "delta_n_at_t_max": _delta_n_of(traj_r.states[k_max], grid),
        }
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR), base, refined)

    rho_m_peak = partial_trace_qubit(traj.states[k_max])
    w_peak = wigner(rho_m_peak, grid)
    p_n = phonon_distribution(rho_m_peak)

    wigner_rows = []
    for j, im in enumerate(w_peak.im_axis):
        for i, re in enumerate(w_peak.re_axis):
            wigner_rows.append((float(re), float(im), float(w_peak.values[j, i])))
    tables = {
        "fidelity_vs_time": Table(
            ("t_s", "F_gamma", "F_gamma0", "delta_N"),
            tuple((float(t), float(f[k]), float(f0[k]), float(delta_n[k]))
                  for k, t in enumerate(times))),
        "wigner_tmax": Table(("re_alpha", "im_alpha", "W"), tuple(wigner_rows)),
        "phonon_tmax": Table(
            ("n", "p_n"), tuple((float(n), float(p)) for n, p in enumerate(p_n))),
    }
    headline = dict(base)
    headline["t_max_s"] = float(times[k_max])
    headline["delta_n_max"] = delta_n_max
    derived: dict[str, float | None] = {
        "lam": cfg.lam, "g": cfg.g, "theta_c": cfg.theta_c,
        "eps2": cfg.drives["eps2"], "alpha_target": alpha,
    }
    notes = {
        "initial_state": "ground qubit x vacuum",
        "delta_n_stride": cfg.delta_n_stride,
        "grid_halfwidth": float(w_peak.re_axis[-1]),
        "grid_step": float(w_peak.re_axis[1] - w_peak.re_axis[0]),
    }
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record, notes=notes)


# --------------------------------------------------------------------------
# detection and sweeps

def _trap_point(theta_c: float, eps2: float, delta_d: float, cutoff: int,
                big_gamma: float, gamma: float, n_th: float,
                times: np.ndarray, rtol: float) -> dict[str, float]:
    """F_max plus the quasi-stationary reflection, averaged over the tail."""
    _, traj, f = _trap_evolve(theta_c, eps2, delta_d, cutoff, big_gamma, gamma,
                              n_th, times, rtol)
    t_from = times[-1] * (1.0 - REFLECTION_AVG_FRACTION)
    tail = [k for k, t in enumerate(times) if t >= t_from]
    r_tail = [reflection_coefficient(traj.states[k], big_gamma, eps2) for k in tail]
    r = complex(np.mean(r_tail))
    k_max = int(np.argmax(f))
    return {"f_max": float(f[k_max]), "t_max_s": float(times[k_max]),
            "re_r": r.real, "im_r": r.imag, "avg_from_s": float(times[tail[0]])}


def run_detect(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Single-point dark-state detection: trapping fidelity and probe reflection."""
    if cfg.protocol != "detect":
        raise ConfigError(f"run_detect got a {cfg.protocol!r} config")
    t0 = time.perf_counter()
    times = cfg.sample_times()
    eps2 = cfg.drives["eps2"]

    _, traj, f = _trap_evolve(cfg.theta_c, eps2, cfg.detuning_delta_d,
                              cfg.fock_cutoff, cfg.big_gamma, cfg.gamma or 0.0,
                              cfg.n_th, times, cfg.rtol)
    r_series = [reflection_coefficient(s, cfg.big_gamma, eps2) for s in traj.states]
    t_from = times[-1] * (1.0 - REFLECTION_AVG_FRACTION)
    tail = [k for k, t in enumerate(times) if t >= t_from]
    r = complex(np.mean([r_series[k] for k in tail]))
    k_max = int(np.argmax(f))
    base = {"f_max": float(f[k_max]), "re_r": r.real, "im_r": r.imag}

    record = None
    if cfg.gate:
        refined_full = _trap_point(
            cfg.theta_c, eps2, cfg.detuning_delta_d,
            cfg.fock_cutoff + GATE_CUTOFF_STEP, cfg.big_gamma, cfg.gamma or 0.0,
            cfg.n_th, times, cfg.rtol * GATE_RTOL_FACTOR)
        refined = {k: refined_full[k] for k in base}
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR), base, refined)

    tables = {"reflection_vs_time": Table(
        ("t_s", "re_r", "im_r", "fidelity"),
        tuple((float(t), r_series[k].real, r_series[k].imag, float(f[k]))
              for k, t in enumerate(times)))}
    alpha = math.sqrt(-eps2 / cfg.theta_c)
    headline = dict(base)
    headline["t_max_s"] = float(times[k_max])
    derived: dict[str, float | None] = {
        "lam": cfg.lam, "g": cfg.g, "theta_c": cfg.theta_c, "eps2": eps2,
        "alpha_target": alpha,
    }
    notes = {"reflection_average_window_s": [float(times[tail[0]]), float(times[-1])]}
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record, notes=notes)


def _sweep_task(args: tuple) -> tuple:
    """Worker-pool task: one trapping point, returns (coordinate, metrics)."""
    (kind, value, theta_c, eps2, delta_d, cutoff, big_gamma, gamma, n_th,
     duration, step, rtol) = args
    if kind == "detuning":
        delta_d = value
    elif kind == "gamma":
        gamma = value
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    times = _sample_times(duration, step)
    point = _trap_point(theta_c, eps2, delta_d, cutoff, big_gamma, gamma, n_th,
                        times, rtol)
    return (value, point["f_max"], point["re_r"], point["im_r"])


def _run_tasks(task, args_list: list[tuple], workers: int) -> list:
    if workers <= 1:
        return [task(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, args_list))


def _sweep_trap(cfg: ScenarioConfig, kind: str, workers: int) -> Report:
    t0 = time.perf_counter()
    eps2 = cfg.drives["eps2"]
    values = cfg.sweep_values or ()
    gamma = cfg.gamma if cfg.gamma is not None else 0.0

    def args_for(value: float, cutoff: int, rtol: float) -> tuple:
        return (kind, value, cfg.theta_c, eps2, cfg.detuning_delta_d, cutoff,
                cfg.big_gamma, gamma, cfg.n_th, cfg.duration, cfg.sample_step, rtol)

    results = _run_tasks(_sweep_task,
                         [args_for(v, cfg.fock_cutoff, cfg.rtol) for v in values],
                         workers)
    rows = tuple((v / TWO_PI, re_r, im_r, f_max)
                 for v, f_max, re_r, im_r in sorted(results))

    # Gate one representative point (the median of the sorted sweep).
    record = None
    gate_value = values[len(values) // 2]
    if cfg.gate:
        base_row = next(r for r in results if r[0] == gate_value)
        base = {"f_max": base_row[1], "re_r": base_row[2]}
        v, f_max, re_r, _ = _sweep_task(
            args_for(gate_value, cfg.fock_cutoff + GATE_CUTOFF_STEP,
                     cfg.rtol * GATE_RTOL_FACTOR))
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR),
            base, {"f_max": f_max, "re_r": re_r})

    coord = "delta_d_over_2pi_hz" if kind == "detuning" else "gamma_over_2pi_hz"
    name = "reflection_vs_detuning" if kind == "detuning" else "reflection_vs_gamma"
    tables = {name: Table((coord, "re_r", "im_r", "f_max"), rows)}
    alpha = math.sqrt(-eps2 / cfg.theta_c)
    gate_row = next(r for r in sorted(results) if r[0] == gate_value)
    headline = {"f_max": gate_row[1], "re_r": gate_row[2], "im_r": gate_row[3]}
    derived: dict[str, float | None] = {
        "lam": cfg.lam, "g": cfg.g, "theta_c": cfg.theta_c, "eps2": eps2,
        "alpha_target": alpha,
    }
    notes = {
        "swept": coord,
        "headline_point_over_2pi_hz": gate_value / TWO_PI,
        "reflection_average": f"trailing {REFLECTION_AVG_FRACTION:.0%} of the window",
    }
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record, notes=notes)


def sweep_detuning(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Reflection and trapping fidelity across probe detunings."""
    if cfg.protocol != "sweep_detuning":
        raise ConfigError(f"sweep_detuning got a {cfg.protocol!r} config")
    return _sweep_trap(cfg, "detuning", workers)


def sweep_gamma(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Reflection and trapping fidelity across mechanical decay rates."""
    if cfg.protocol != "sweep_gamma":
        raise ConfigError(f"sweep_gamma got a {cfg.protocol!r} config")
    return _sweep_trap(cfg, "gamma", workers)


def _amplitude_window(eps_res: float) -> tuple[float, float]:
    """(duration, sample_step) sized inversely to the resonant drive."""
    t_est = AMPLITUDE_WINDOW_T_BASE * (AMPLITUDE_WINDOW_EPS_BASE / eps_res)
    lo, hi = AMPLITUDE_WINDOW_BOUNDS
    duration = AMPLITUDE_WINDOW_FACTOR * min(max(t_est, lo), hi)
    return duration, duration / AMPLITUDE_SAMPLES


def _amplitude_task(args: tuple) -> tuple:
    (value, theta_c, cutoff, big_gamma, gamma, n_th, rtol, stride,
     grid_halfwidth, grid_step) = args
    eps2 = -value
    duration, step = _amplitude_window(value)
    times = _sample_times(duration, step)
    _, traj, f = _trap_evolve(theta_c, eps2, 0.0, cutoff, big_gamma, gamma,
                              n_th, times, rtol)
    alpha = math.sqrt(value / theta_c)
    if grid_halfwidth is None:
        grid = default_grid(alpha)
    else:
        n = int(round(grid_halfwidth / grid_step))
        axis = np.arange(-n, n + 1) * grid_step
        grid = PhaseSpaceGrid(axis, axis.copy())
    k_max = int(np.argmax(f))
    marks = sorted({k for k in range(times.size) if k % stride == 0} | {k_max})
    delta_n_max = max(_delta_n_of(traj.states[k], grid) for k in marks)
    return (value, alpha, float(f[k_max]), delta_n_max, duration)


def sweep_amplitude(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Trade-off table: trapping fidelity vs nonclassical volume across drives."""
    if cfg.protocol != "sweep_amplitude":
        raise ConfigError(f"sweep_amplitude got a {cfg.protocol!r} config")
    t0 = time.perf_counter()
    values = cfg.sweep_values or ()
    gamma = cfg.gamma if cfg.gamma is not None else 0.0

    def args_for(value: float, cutoff: int, rtol: float) -> tuple:
        return (value, cfg.theta_c, cutoff, cfg.big_gamma, gamma, cfg.n_th,
                rtol, cfg.delta_n_stride, cfg.grid_halfwidth, cfg.grid_step)

    results = _run_tasks(_amplitude_task,
                         [args_for(v, cfg.fock_cutoff, cfg.rtol) for v in values],
                         workers)
    rows = tuple((v / TWO_PI, alpha, f_t_max, dn_max, window)
                 for v, alpha, f_t_max, dn_max, window in sorted(results))

    record = None
    gate_value = values[len(values) // 2]
    if cfg.gate:
        base_row = next(r for r in results if r[0] == gate_value)
        base = {"f_t_max": base_row[2], "delta_n_max": base_row[3]}
        _, _, f_t_max, dn_max, _ = _amplitude_task(
            args_for(gate_value, cfg.fock_cutoff + GATE_CUTOFF_STEP,
                     cfg.rtol * GATE_RTOL_FACTOR))
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR),
            base, {"f_t_max": f_t_max, "delta_n_max": dn_max})

    tables = {"amplitude_sweep": Table(
        ("eps_res_over_2pi_hz", "alpha_target", "f_t_max", "delta_n_max", "window_s"),
        rows)}
    gate_row = next(r for r in sorted(results) if r[0] == gate_value)
    headline = {"f_t_max": gate_row[2], "delta_n_max": gate_row[3]}
    derived: dict[str, float | None] = {"lam": cfg.lam, "g": cfg.g,
                                        "theta_c": cfg.theta_c}
    notes = {
        "headline_point_over_2pi_hz": gate_value / TWO_PI,
        "window_rule": (
            f"{AMPLITUDE_WINDOW_FACTOR:g} x {AMPLITUDE_WINDOW_T_BASE:g} s x "
            f"({AMPLITUDE_WINDOW_EPS_BASE / TWO_PI:g} Hz / eps_res), "
            f"clamped to {AMPLITUDE_WINDOW_BOUNDS}"),
        "delta_n_stride": cfg.delta_n_stride,
    }
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record, notes=notes)


# --------------------------------------------------------------------------
# expansion validation

def _resonant_frequencies(cfg: ScenarioConfig) -> tuple[float, float, float]:
    """(delta, omega_m_prime, delta12) satisfying the two-phonon resonance.

    The drive-softened mechanical frequency does not depend on the qubit
    detuning, so the resonance condition delta_tilde = 2 omega_m_prime is
    solved in closed form.
    """
    omega_m = cfg.omega_m
    assert omega_m is not None and cfg.g is not None
    eps1 = cfg.drives["eps1"]
    omega_m_prime = shifted_frequencies(omega_m, eps1, cfg.g, omega_m).omega_m_prime
    if 2.0 * omega_m_prime <= 2.0 * eps1:
        raise ConfigError("validate_expansion config: no real detuning satisfies "
                          "the resonance (eps1 too large)")
    delta = math.sqrt((2.0 * omega_m_prime) ** 2 - 4.0 * eps1 ** 2)
    check = shifted_frequencies(delta, eps1, cfg.g, omega_m).delta_tilde
    assert abs(check - 2.0 * omega_m_prime) < 1e-6 * omega_m
    return delta, omega_m_prime, 2.0 * omega_m_prime


def _expansion_curves(cfg: ScenarioConfig, cutoff: int, rtol: float,
                      delta: float, omega_m_prime: float,
                      delta12: float) -> tuple[np.ndarray, np.ndarray]:
    """(fidelity, trace distance) between the two reduced mechanical states."""
    times = cfg.sample_times()
    dissipators = _standard_dissipators(cutoff, cfg.big_gamma, cfg.gamma or 0.0,
                                        cfg.n_th)
    eps1, eps2 = cfg.drives["eps1"], cfg.drives["eps2"]
    assert cfg.omega_m is not None

    full = build_polaron_expanded(delta, cfg.omega_m, cfg.lam, eps1, eps2,
                                  delta12, cutoff)
    traj_full = evolve(build_liouvillian(full.hamiltonian, dissipators),
                       _ground_zero(cutoff), times, rtol=rtol, retain_states=True)
    eff = build_cat_effective(2.0 * cfg.lam ** 2 * eps1, eps2, 0.0, cutoff)
    traj_eff = evolve(build_liouvillian(eff.hamiltonian, dissipators),
                      _ground_zero(cutoff), times, rtol=rtol, retain_states=True)

    fids = np.empty(times.size)
    dists = np.empty(times.size)
    for k, t in enumerate(times):
        rho_full = partial_trace_qubit(traj_full.states[k])
        # The effective model lives in the frame rotating at omega_m_prime;
        # counter-rotate its state before comparing.
        rho_eff = _rotate_oscillator(partial_trace_qubit(traj_eff.states[k]),
                                     omega_m_prime * float(t))
        fids[k] = state_fidelity(rho_full, rho_eff)
        dists[k] = trace_distance(rho_full, rho_eff)
    return fids, dists


def validate_expansion(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Side-by-side dynamics of the expanded and effective models, on and off resonance."""
    if cfg.protocol != "validate_expansion":
        raise ConfigError(f"validate_expansion got a {cfg.protocol!r} config")
    t0 = time.perf_counter()
    times = cfg.sample_times()
    delta, omega_m_prime, delta12 = _resonant_frequencies(cfg)
    shift = cfg.off_resonance_shift or 0.0

    f_res, d_res = _expansion_curves(cfg, cfg.fock_cutoff, cfg.rtol,
                                     delta, omega_m_prime, delta12)
    f_det, d_det = _expansion_curves(cfg, cfg.fock_cutoff, cfg.rtol,
                                     delta, omega_m_prime, delta12 + shift)
    base = {"f_resonant_end": float(f_res[-1])}

    record = None
    if cfg.gate:
        f_ref, _ = _expansion_curves(cfg, cfg.fock_cutoff + GATE_CUTOFF_STEP,
                                     cfg.rtol * GATE_RTOL_FACTOR,
                                     delta, omega_m_prime, delta12)
        record = _gate_check(
            (cfg.fock_cutoff, cfg.fock_cutoff + GATE_CUTOFF_STEP),
            (cfg.rtol, cfg.rtol * GATE_RTOL_FACTOR),
            base, {"f_resonant_end": float(f_ref[-1])})

    tables = {"expansion_vs_time": Table(
        ("t_s", "f_resonant", "d_resonant", "f_detuned", "d_detuned"),
        tuple((float(t), float(f_res[k]), float(d_res[k]),
               float(f_det[k]), float(d_det[k])) for k, t in enumerate(times)))}
    headline = dict(base)
    headline["f_detuned_end"] = float(f_det[-1])
    derived: dict[str, float | None] = {
        "lam": cfg.lam, "g": cfg.g, "delta": delta,
        "omega_m_prime": omega_m_prime, "delta12": delta12,
        "theta_c": cfg.theta_c,
    }
    notes = {
        "resonance": "delta_tilde = 2 omega_m_prime = delta12",
        "off_resonance_shift_over_2pi_hz": shift / TWO_PI,
        "comparison": "reduced mechanical states, effective frame counter-rotated",
    }
    return _finish(cfg, t0, derived=derived, headline=headline, tables=tables,
                   convergence=record, notes=notes)


# --------------------------------------------------------------------------
# dispatch

_RUNNERS = {
    "cool": run_cool,
    "squeeze": run_squeeze,
    "cat": run_cat,
    "detect": run_detect,
    "sweep_detuning": sweep_detuning,
    "sweep_gamma": sweep_gamma,
    "sweep_amplitude": sweep_amplitude,
    "validate_expansion": validate_expansion,
}


def run_protocol(cfg: ScenarioConfig, *, workers: int = 1) -> Report:
    """Dispatch a validated config to its runner."""
    return _RUNNERS[cfg.protocol](cfg, workers=workers)
