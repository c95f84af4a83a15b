"""Strict-schema JSON configuration.

Every section is a dataclass; unknown keys are rejected with a suggestion of
the closest known key, and range violations name the offending key path.
"""

import difflib
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .hamiltonian import HYPERFINE_FORMS, DipoleGeometry, PhysicalConstants, SystemParams
from .dynamics import RateParams

# Calibrated with scripts/calibrate_kpol.py so that the 600 G power sweep gives
# P = 0.70 at 550 uW for the shipped defaults.
K_POL_DEFAULT = 1.2735


class ConfigError(ValueError):
    pass


@dataclass
class ConstantsConfig:
    bohr_mhz_per_gauss: float = 1.39962449


@dataclass
class SystemConfig:
    D: float = 2880.0
    g_nv: float = 2.0
    g_n: float = 2.0
    A: float = 86.0
    include_nucleus: bool = True
    include_hyperfine: bool = True
    hyperfine_form: str = "secular"
    custom_hyperfine: bool = False

    def __post_init__(self):
        if self.hyperfine_form not in HYPERFINE_FORMS:
            raise ConfigError(f"hyperfine_form must be one of {HYPERFINE_FORMS}")
        SystemParams(**asdict(self))


@dataclass
class GeometryConfig:
    r: float = 2.3
    theta: float = 90.0
    phi: float = 0.0

    def __post_init__(self):
        DipoleGeometry(self.r, self.theta, self.phi)


@dataclass
class RatesConfig:
    gamma_pol: Optional[float] = None
    k_pol: float = K_POL_DEFAULT
    pump_broadening: float = 1.0 / (4.0 * np.pi)
    gamma2: float = 0.5
    t1_n: float = 75.0
    esr_rate: float = 1.0
    esr_linewidth: float = 1.5
    w_hf: float = 0.0
    pl_rate: float = 50.0
    pl_contrast: float = 0.3

    def __post_init__(self):
        if self.k_pol < 0 or self.pump_broadening < 0:
            raise ConfigError("k_pol and pump_broadening must be >= 0")
        kw = {f.name: getattr(self, f.name) for f in fields(RateParams)}
        kw["gamma_pol"] = self.gamma_pol or 0.0
        RateParams(**kw)


def _check_grid(lo, hi, n, what):
    if not hi > lo:
        raise ConfigError(f"{what}: max must exceed min")
    if n < 2:
        raise ConfigError(f"{what}: need at least 2 points")


@dataclass
class LevelsConfig:
    b_min: float = 0.0
    b_max: float = 1000.0
    n: int = 501

    def __post_init__(self):
        _check_grid(self.b_min, self.b_max, self.n, "levels")


@dataclass
class FieldSweepConfig:
    b_min: float = 480.0
    b_max: float = 550.0
    n: int = 701
    power_uw: float = 100.0

    def __post_init__(self):
        _check_grid(self.b_min, self.b_max, self.n, "field_sweep")


@dataclass
class EsrConfig:
    B: float = 100.0
    power_uw: float = 550.0
    f_span: float = 20.0
    n: int = 161

    def __post_init__(self):
        if self.n < 12 or self.f_span <= 0:
            raise ConfigError("esr: need n >= 12 and f_span > 0")


@dataclass
class EsrMapConfig:
    b_min: float = 300.0
    b_max: float = 700.0
    n_b: int = 41
    power_uw: float = 200.0
    f_span: float = 20.0
    n_f: int = 81

    def __post_init__(self):
        _check_grid(self.b_min, self.b_max, self.n_b, "esr_map")


@dataclass
class PowerSweepConfig:
    B: float = 600.0
    powers_uw: list = field(default_factory=lambda: [
        5.0, 10.0, 25.0, 50.0, 100.0, 200.0, 300.0, 550.0, 800.0, 1200.0])
    f_span: float = 20.0
    n_f: int = 121

    def __post_init__(self):
        if not self.powers_uw or min(self.powers_uw) < 0:
            raise ConfigError("power_sweep: powers_uw must be a non-empty list of powers >= 0")


@dataclass
class PumpProbeConfig:
    B: float = 600.0
    power_uw: float = 395.0
    pump_duration: float = 100.0
    probe_duration: float = 5.0
    wait_times: list = field(default_factory=lambda: [
        1.0, 5.0, 10.0, 20.0, 35.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 400.0])
    cycle_period: Optional[float] = None
    readout: str = "average"
    noise: float = 0.0
    f_span: float = 20.0
    n_f: int = 61

    def __post_init__(self):
        if self.pump_duration <= 0 or self.probe_duration <= 0:
            raise ConfigError("pump_probe: durations must be positive")
        if not self.wait_times or min(self.wait_times) < 0:
            raise ConfigError("pump_probe: wait_times must be non-negative")
        if np.any(np.diff(self.wait_times) <= 0):
            raise ConfigError("pump_probe: wait_times must be strictly increasing")
        minimum = self.pump_duration + self.probe_duration + max(self.wait_times)
        if self.cycle_period is None:
            self.cycle_period = minimum
        if self.cycle_period < minimum:
            raise ConfigError(f"pump_probe: cycle_period must be >= {minimum}")
        if self.readout not in ("average", "instant"):
            raise ConfigError("pump_probe: readout must be 'average' or 'instant'")
        if self.noise < 0:
            raise ConfigError("pump_probe: noise must be >= 0")


@dataclass
class Config:
    constants: ConstantsConfig = field(default_factory=ConstantsConfig)
    system: SystemConfig = field(default_factory=SystemConfig)
    geometry: Optional[GeometryConfig] = field(default_factory=GeometryConfig)
    rates: RatesConfig = field(default_factory=RatesConfig)
    levels: LevelsConfig = field(default_factory=LevelsConfig)
    field_sweep: FieldSweepConfig = field(default_factory=FieldSweepConfig)
    esr: EsrConfig = field(default_factory=EsrConfig)
    esr_map: EsrMapConfig = field(default_factory=EsrMapConfig)
    power_sweep: PowerSweepConfig = field(default_factory=PowerSweepConfig)
    pump_probe: PumpProbeConfig = field(default_factory=PumpProbeConfig)
    seed: int = 0

    def to_dict(self):
        return asdict(self)

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def system_params(self, B=0.0):
        return SystemParams(
            B=float(B),
            constants=PhysicalConstants(bohr_mhz_per_gauss=self.constants.bohr_mhz_per_gauss),
            **asdict(self.system),
        )

    def dipole_geometry(self):
        if self.geometry is None:
            return None
        return DipoleGeometry(self.geometry.r, self.geometry.theta, self.geometry.phi)

    def rate_params(self, power_uw=None):
        """Laser-on rates at ``power_uw``, or laser-off rates when it is None.

        The optical pumping rate is k_pol * power unless ``rates.gamma_pol`` pins
        it. Pumping also broadens the flip-flop line by pump_broadening * gamma_pol.
        """
        r = self.rates
        if power_uw is None:
            gamma_pol = 0.0
        else:
            gamma_pol = r.gamma_pol if r.gamma_pol is not None else r.k_pol * power_uw
        return RateParams(
            gamma_pol=gamma_pol,
            gamma2=r.gamma2 + r.pump_broadening * gamma_pol,
            t1_n=r.t1_n, esr_rate=r.esr_rate, esr_linewidth=r.esr_linewidth,
            w_hf=r.w_hf, pl_rate=r.pl_rate, pl_contrast=r.pl_contrast,
        )


# key path -> (meaning, origin); "literature value" entries are published
# measurements, everything else is an artifact default
FIELD_DOCS = {
    "constants.bohr_mhz_per_gauss": ("Bohr magneton over h, MHz/G", "physical constant"),
    "system.D": ("NV zero-field splitting, MHz", "literature value"),
    "system.g_nv": ("NV electron g-factor", "literature value"),
    "system.g_n": ("N electron g-factor", "literature value"),
    "system.A": ("14N hyperfine constant, MHz (86 or 114)", "literature value"),
    "system.include_nucleus": ("add the 14N nuclear spin", "artifact default"),
    "system.include_hyperfine": ("add the N hyperfine term", "artifact default"),
    "system.hyperfine_form": ("'secular' (A Sz Iz) or 'isotropic' (A S.I)", "artifact default"),
    "system.custom_hyperfine": ("allow A outside {86, 114}", "artifact default"),
    "geometry.r": ("NV-N distance, nm", "literature value"),
    "geometry.theta": ("angle of the NV-N vector to [111], degrees", "artifact default"),
    "geometry.phi": ("azimuth of the NV-N vector, degrees", "artifact default"),
    "rates.gamma_pol": ("fixed optical pumping rate 1/us; null = k_pol * power", "artifact default"),
    "rates.k_pol": ("pumping rate per laser power, 1/us/uW (calibrated)", "artifact default"),
    "rates.pump_broadening": ("flip-flop line broadening per unit gamma_pol, MHz us", "artifact default"),
    "rates.gamma2": ("flip-flop half width without laser, MHz", "artifact default"),
    "rates.t1_n": ("N electron T1, us", "literature value"),
    "rates.esr_rate": ("ESR drive rate at line center, 1/us", "artifact default"),
    "rates.esr_linewidth": ("ESR half width, MHz", "artifact default"),
    "rates.w_hf": ("hyperfine electron-nuclear flip-flop rate, 1/us", "artifact default"),
    "rates.pl_rate": ("PL count rate in m=0, counts/us", "artifact default"),
    "rates.pl_contrast": ("fractional PL drop in m=-1", "artifact default"),
    "levels.b_min": ("level diagram start field, G", "artifact default"),
    "levels.b_max": ("level diagram end field, G", "artifact default"),
    "levels.n": ("level diagram grid points", "artifact default"),
    "field_sweep.b_min": ("field sweep start, G", "artifact default"),
    "field_sweep.b_max": ("field sweep end, G", "artifact default"),
    "field_sweep.n": ("field sweep grid points", "artifact default"),
    "field_sweep.power_uw": ("laser power for the field sweep, uW", "artifact default"),
    "esr.B": ("field for a single ESR sweep, G", "literature value"),
    "esr.power_uw": ("laser power for a single ESR sweep, uW", "artifact default"),
    "esr.f_span": ("frequency span around D - g muB B, MHz", "artifact default"),
    "esr.n": ("frequency grid points", "artifact default"),
    "esr_map.b_min": ("map start field, G", "artifact default"),
    "esr_map.b_max": ("map end field, G", "artifact default"),
    "esr_map.n_b": ("map field points", "artifact default"),
    "esr_map.power_uw": ("laser power for the map, uW", "artifact default"),
    "esr_map.f_span": ("map frequency span, MHz", "artifact default"),
    "esr_map.n_f": ("map frequency points", "artifact default"),
    "power_sweep.B": ("field for the power sweep, G", "literature value"),
    "power_sweep.powers_uw": ("laser powers, uW", "artifact default"),
    "power_sweep.f_span": ("frequency span per ESR sweep, MHz", "artifact default"),
    "power_sweep.n_f": ("frequency points per ESR sweep", "artifact default"),
    "pump_probe.B": ("field for pump-probe, G", "literature value"),
    "pump_probe.power_uw": ("laser power, uW", "literature value"),
    "pump_probe.pump_duration": ("pump pulse, us", "literature value"),
    "pump_probe.probe_duration": ("readout pulse, us", "literature value"),
    "pump_probe.wait_times": ("dark wait times, us", "artifact default"),
    "pump_probe.cycle_period": ("fixed cycle length, us; null = pump + probe + max wait",
                                "artifact default"),
    "pump_probe.readout": ("'average' over the probe or 'instant'", "artifact default"),
    "pump_probe.noise": ("relative count-noise level on the P series", "artifact default"),
    "pump_probe.f_span": ("probe frequency span, MHz", "artifact default"),
    "pump_probe.n_f": ("probe frequency points", "artifact default"),
    "seed": ("RNG seed for optional noise", "artifact default"),
}


def _coerce(value, annotation, path):
    if annotation in (float, Optional[float]):
        if value is None and annotation is Optional[float]:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError(f"{path}: expected a non-negative integer, got {value!r}")
        return value
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if annotation is list:
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{path}: expected a list of numbers")
        return [float(v) for v in value]
    return value


def _section_type(annotation):
    if is_dataclass(annotation):
        return annotation
    for arg in getattr(annotation, "__args__", ()):
        if is_dataclass(arg):
            return arg
    return None


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            hint = difflib.get_close_matches(key, list(known), n=1)
            where = f"{prefix}.{key}" if prefix else key
            msg = f"unknown key '{where}'"
            if hint:
                msg += f"; did you mean '{hint[0]}'?"
            raise ConfigError(msg)
    kwargs = {}
    for key, value in data.items():
        f = known[key]
        path = f"{prefix}.{key}" if prefix else key
        section = _section_type(f.type)
        if section is not None:
            kwargs[key] = None if value is None else _build(section, value, path)
        else:
            kwargs[key] = _coerce(value, f.type, path)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"{prefix or 'config'}: {err}") from None


def parse_config(source=None):
    """Parse a config from a path, JSON text, a dict, or None (all defaults)."""
    if source is None:
        return Config()
    if isinstance(source, dict):
        return _build(Config, source, "")
    text = str(source)
    if isinstance(source, Path) or not text.lstrip().startswith(("{", "[")):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config parse error at line {err.lineno}, column {err.colno}: {err.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object at the top level")
    return _build(Config, data, "")
