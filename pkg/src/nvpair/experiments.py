"""Simulated measurements: field sweeps, ESR doublets, power and pump-probe series.

Each driver takes a ``Config`` and returns a ``SweepResult``. Sweep points are
independent and evaluated in grid order, so output depends only on the config
and seed.
"""

from dataclasses import replace

import numpy as np

from .config import Config
from .dynamics import (
    StateSpace, build_rate_matrix, esr_response, esr_transitions, evolve,
    flipflop_rates, n_polarization, pl_signal, rate_model, steady_state,
    time_average, uniform,
)
from .fitting import doublet_polarization, fit_double_lorentzian, fit_exp_decay
from .hamiltonian import build_total
from .results import SweepResult


def _meta(config, **extra):
    return {"config": config.digest(), "seed": config.seed, **extra}


def hamiltonian_at(config, B):
    return build_total(config.system_params(B), config.dipole_geometry())


def line_positions(config, B):
    """ESR frequencies (MHz) of the m_N = +1/2 and -1/2 lines at field B."""
    tr = esr_transitions(hamiltonian_at(config, B))
    m_i = 0 if config.system.include_nucleus else None
    return tr[(0.5, m_i)], tr[(-0.5, m_i)]


def esr_center(config, B):
    """Uncoupled NV 0 <-> -1 frequency, D - g muB B / h."""
    p = config.system_params(B)
    return p.D - p.gamma_nv * p.B


def frequency_grid(config, B, span, n):
    c = esr_center(config, B)
    return np.linspace(c - span / 2, c + span / 2, n)


def field_sweep(config, b_grid=None, power_uw=None):
    """Steady-state PL versus field with the laser on and no microwaves."""
    fs = config.field_sweep
    if b_grid is None:
        b_grid = np.linspace(fs.b_min, fs.b_max, fs.n)
    power = fs.power_uw if power_uw is None else power_uw
    rates = config.rate_params(power)
    space = StateSpace.default(config.system.include_nucleus)
    p0 = uniform(space)
    pl = []
    for B in b_grid:
        m = rate_model(hamiltonian_at(config, B), rates, space=space)
        pl.append(pl_signal(steady_state(m, p0), rates, space))
    return SweepResult("B (G)", "I_PL (counts/us)", b_grid, pl,
                       meta=_meta(config, experiment="field-sweep", power_uw=power))


def find_dips(result, count=None):
    """Positions of local minima, refined by a parabola through three points.

    Returns the ``count`` deepest dips (all of them by default), sorted by position.
    """
    x, y = result.x, result.y
    idx = [i for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] <= y[i + 1]]
    idx.sort(key=lambda i: y[i])
    if count is not None:
        idx = idx[:count]
    out = []
    for i in idx:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom > 0 else 0.0
        out.append(x[i] + shift * (x[i + 1] - x[i]))
    return sorted(out)


def esr_sweep(config, f_grid=None, B=None, power_uw=None):
    """ESR-induced PL drop versus microwave frequency at fixed field."""
    ec = config.esr
    B = ec.B if B is None else B
    power = ec.power_uw if power_uw is None else power_uw
    if f_grid is None:
        f_grid = frequency_grid(config, B, ec.f_span, ec.n)
    h = hamiltonian_at(config, B)
    rates = config.rate_params(power)
    dI = esr_response(h, rates, np.asarray(f_grid, dtype=float))
    f_plus, f_minus = line_positions(config, B)
    return SweepResult("f (MHz)", "dI_PL (counts/us)", f_grid, dI, meta=_meta(
        config, experiment="esr", B=B, power_uw=power, f_plus=f_plus, f_minus=f_minus))


def true_polarization(config, B, power_uw):
    """N polarization of the undriven steady state (populations, not a fit)."""
    h = hamiltonian_at(config, B)
    space = StateSpace.default(config.system.include_nucleus)
    m = rate_model(h, config.rate_params(power_uw), space=space)
    return n_polarization(steady_state(m, uniform(space)), space)


def measure_polarization(result):
    """Double-Lorentzian fit of an ESR doublet and the resulting polarization."""
    # dI is a PL drop; the doublet model describes dips in the PL itself
    fit = fit_double_lorentzian(result.x, -result.y)
    lower_is_plus = result.meta["f_plus"] < result.meta["f_minus"]
    return doublet_polarization(fit, lower_is_plus), fit


def esr_field_map(config, f_offsets=None, b_grid=None, power_uw=None):
    """One ESR sweep per field, frequency axis measured from D - g muB B / h."""
    mc = config.esr_map
    if b_grid is None:
        b_grid = np.linspace(mc.b_min, mc.b_max, mc.n_b)
    if f_offsets is None:
        f_offsets = np.linspace(-mc.f_span / 2, mc.f_span / 2, mc.n_f)
    power = mc.power_uw if power_uw is None else power_uw
    out = []
    for B in b_grid:
        res = esr_sweep(config, esr_center(config, B) + f_offsets, B=B, power_uw=power)
        res.meta["f_plus"] -= esr_center(config, B)
        res.meta["f_minus"] -= esr_center(config, B)
        res.meta["experiment"] = "esr-map"
        out.append(SweepResult("f - f0 (MHz)", res.y_label, f_offsets, res.y, meta=res.meta))
    return out


def map_dip_amplitudes(maps):
    """Fitted (lower-frequency, higher-frequency) dip amplitudes for each map row."""
    rows = []
    for res in maps:
        fit = fit_double_lorentzian(res.x, -res.y)
        rows.append((res.meta["B"], fit["a1"], fit["a2"]))
    return np.array(rows)


def map_rows(maps):
    """Long-format (B, f - f0, dI) rows for export."""
    return [(res.meta["B"], f, d) for res in maps for f, d in zip(res.x, res.y)]


def power_sweep(config, powers_uw=None, B=None):
    """N polarization from fitted ESR doublets versus laser power."""
    ps = config.power_sweep
    powers = list(ps.powers_uw if powers_uw is None else powers_uw)
    B = ps.B if B is None else B
    f_grid = frequency_grid(config, B, ps.f_span, ps.n_f)
    pol, flags, truth = [], [], []
    for power in powers:
        truth.append(true_polarization(config, B, power))
        if power == 0:
            # no optical pumping means no ESR contrast to fit
            pol.append(truth[-1])
            flags.append(False)
            continue
        p, fit = measure_polarization(esr_sweep(config, f_grid, B=B, power_uw=power))
        pol.append(p)
        flags.append(fit.unreliable or not fit.converged)
    return SweepResult("power (uW)", "P", powers, pol, meta=_meta(
        config, experiment="power-sweep", B=B, unreliable=flags, true_P=truth))


def simulate_pump_probe(config, spec=None):
    """Noiseless pump-probe series of the measured N polarization versus wait time.

    Each point follows one cycle: laser-on pump from the unpolarized state, dark
    wait, then a laser-on probe with microwaves at each frequency of a grid
    spanning the doublet. The PL averaged over the probe window gives the ESR
    spectrum, which is fitted like a cw measurement. The compensating dark time
    that keeps the cycle period fixed does not enter: every cycle starts from the
    unpolarized state.
    """
    spec = spec or config.pump_probe
    h = hamiltonian_at(config, spec.B)
    space = StateSpace.default(config.system.include_nucleus)
    on = config.rate_params(spec.power_uw)
    off = config.rate_params(None)
    m_on = rate_model(h, on, space=space)
    m_off = rate_model(h, off, space=space)
    p_pumped = evolve(m_on, uniform(space), spec.pump_duration)

    f_grid = frequency_grid(config, spec.B, spec.f_span, spec.n_f)
    ff = flipflop_rates(h, on.gamma2)
    transitions = esr_transitions(h)
    probes = [build_rate_matrix(space, on, ff, esr_freq=f, transitions=transitions) for f in f_grid]
    f_plus, f_minus = line_positions(config, spec.B)
    lower_is_plus = f_plus < f_minus

    pol, flags = [], []
    for wait in spec.wait_times:
        p_wait = evolve(m_off, p_pumped, wait)
        if spec.readout == "instant":
            pol.append(n_polarization(p_wait, space))
            flags.append(False)
            continue
        base = pl_signal(time_average(m_on, p_wait, spec.probe_duration), on, space)
        dI = np.array([base - pl_signal(time_average(m, p_wait, spec.probe_duration), on, space)
                       for m in probes])
        fit = fit_double_lorentzian(f_grid, -dI)
        pol.append(doublet_polarization(fit, lower_is_plus))
        flags.append(fit.unreliable or not fit.converged)
    return SweepResult("wait (us)", "P", spec.wait_times, pol, meta=_meta(
        config, experiment="pump-probe", B=spec.B, power_uw=spec.power_uw,
        pump_duration=spec.pump_duration, probe_duration=spec.probe_duration,
        cycle_period=spec.cycle_period, readout=spec.readout, unreliable=flags))


def add_count_noise(y, level, rng):
    """Shot-noise-like scatter: sigma = level * sqrt(|y| * max|y|).

    The variance grows linearly with the signal, as for Poisson counts, and equals
    (level * max|y|)^2 at the largest point.
    """
    y = np.asarray(y, dtype=float)
    scale = np.max(np.abs(y))
    return y + level * np.sqrt(np.abs(y) * scale) * rng.standard_normal(y.shape)


def pump_probe(config, spec=None, seed=None):
    """Pump-probe series with optional seeded noise and a single-exponential T1 fit."""
    spec = spec or config.pump_probe
    seed = config.seed if seed is None else seed
    clean = simulate_pump_probe(config, spec)
    y = clean.y
    if spec.noise > 0:
        y = add_count_noise(y, spec.noise, np.random.default_rng(seed))
    fit = fit_exp_decay(clean.x, y)
    meta = dict(clean.meta, seed=seed, noise=spec.noise, T1=fit["t1"],
                T1_stderr=fit.stderr["t1"], P0=fit["y0"], P_inf=fit["y_inf"],
                fit_converged=fit.converged)
    return SweepResult(clean.x_label, clean.y_label, clean.x, y, meta=meta), fit


def with_overrides(config, **sections):
    """Copy of ``config`` with fields replaced per section, e.g. rates={"t1_n": 150}."""
    changes = {}
    for name, vals in sections.items():
        current = getattr(config, name)
        if vals is None:
            changes[name] = None
        elif current is None:
            changes[name] = type(getattr(Config(), name))(**vals)
        else:
            changes[name] = replace(current, **vals)
    return replace(config, **changes)
