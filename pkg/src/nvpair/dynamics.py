"""Classical population rate model for the NV + N pair under optical pumping.

States are the joint levels (m_NV, m_N[, m_I]) with m_NV in {0, -1}; the NV
m = +1 level is dropped. Populations evolve as dp/dt = M p with M a rate
generator (columns sum to zero).

Rate conventions
----------------
All rates are in 1/us, all frequencies in MHz. The dipolar flip-flop between
(0, +1/2) and (-1, -1/2) is turned into the golden-rule rate

    W = (2 pi b_perp)^2 * gamma2 / (gamma2^2 + Delta^2) / (2 pi)

where ``b_perp`` is the transverse dipolar matrix element, ``Delta`` the
detuning of the two bare levels, and ``gamma2`` the half width at half maximum
of the flip-flop line. The ESR drive uses the same Lorentzian shape normalized
to ``esr_rate`` at line center, with half width ``esr_linewidth``.
"""

from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import I_M, build_h_dip, build_total

NV_LEVELS = (0, -1)
N_LEVELS = (0.5, -0.5)


class DegenerateSteadyStateError(RuntimeError):
    """The generator has more than one stationary state."""


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StateSpace:
    labels: tuple

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("state labels must be unique")

    @classmethod
    def default(cls, include_nucleus=False):
        if include_nucleus:
            return cls(tuple((a, b, c) for a in NV_LEVELS for b in N_LEVELS for c in I_M))
        return cls(tuple((a, b) for a in NV_LEVELS for b in N_LEVELS))

    @property
    def size(self):
        return len(self.labels)

    @property
    def has_nucleus(self):
        return len(self.labels[0]) == 3

    @property
    def nuclear_values(self):
        return I_M if self.has_nucleus else (None,)

    def index(self, m_nv, m_n, m_i=None):
        key = (m_nv, m_n, m_i) if self.has_nucleus else (m_nv, m_n)
        return self.labels.index(key)

    def mask(self, m_nv=None, m_n=None, m_i=None):
        out = np.ones(self.size, dtype=bool)
        for pos, want in enumerate((m_nv, m_n, m_i)):
            if want is None:
                continue
            out &= np.array([lab[pos] == want for lab in self.labels])
        return out


@dataclass(frozen=True)
class RateParams:
    gamma_pol: float = 0.0
    gamma2: float = 0.5
    t1_n: float = 75.0
    esr_rate: float = 1.0
    esr_linewidth: float = 1.5
    w_hf: float = 0.0
    pl_rate: float = 50.0
    pl_contrast: float = 0.3

    def __post_init__(self):
        for name in ("gamma_pol", "gamma2", "esr_rate", "esr_linewidth", "w_hf", "pl_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.t1_n > 0:
            raise ValueError("t1_n must be positive")
        if not 0 <= self.pl_contrast < 1:
            raise ValueError("pl_contrast must lie in [0, 1)")


@dataclass(frozen=True)
class RateMatrix:
    generator: np.ndarray
    space: StateSpace = field(default_factory=StateSpace.default)


def lorentzian(detuning, hwhm):
    """Peak-normalized Lorentzian; a zero width gives a delta at zero detuning."""
    if hwhm == 0:
        return np.where(np.asarray(detuning) == 0, 1.0, 0.0)
    return hwhm**2 / (hwhm**2 + np.asarray(detuning) ** 2)


def golden_rule_rate(b_perp, gamma2, detuning):
    if gamma2 <= 0:
        return 0.0
    return 2 * np.pi * b_perp**2 * gamma2 / (gamma2**2 + detuning**2)


def _flipflop_element(h):
    if h.geometry is None:
        raise ValueError("flip-flop rate needs a Hamiltonian built with a dipole geometry")
    hd = build_h_dip(h.geometry, h.params)
    # (m_NV, m_N) = (0, +1/2) is row 2, (-1, -1/2) is column 5
    return abs(hd[2, 5])


def flipflop_rates(h, gamma2):
    """Flip-flop rate and bare-level detuning for every nuclear sector.

    The detuning E(0,+1/2) - E(-1,-1/2) is taken from the Hamiltonian without the
    dipolar term: the golden rule needs unperturbed energies, and the exact
    eigenstates are fully mixed at the anticrossing.

    Returns
    -------
    dict
        m_I (``None`` without nucleus) -> (rate in 1/us, detuning in MHz)
    """
    b_perp = _flipflop_element(h)
    bare = build_total(h.params)
    out = {}
    for m_i in (I_M if h.params.include_nucleus else (None,)):
        upper = (0, 0.5) if m_i is None else (0, 0.5, m_i)
        lower = (-1, -0.5) if m_i is None else (-1, -0.5, m_i)
        delta = bare.energy(upper) - bare.energy(lower)
        out[m_i] = (golden_rule_rate(b_perp, gamma2, delta), delta)
    return out


def flipflop_rate(h, gamma2, m_i=0):
    rates = flipflop_rates(h, gamma2)
    return rates[m_i if h.params.include_nucleus else None]


def esr_transitions(h):
    """NV (0 -> -1) transition frequency per (m_N, m_I), with the secular dipolar shift."""
    sec = build_total(h.params, h.geometry, secular_dipolar=True)
    out = {}
    for m_n in N_LEVELS:
        for m_i in (I_M if h.params.include_nucleus else (None,)):
            tail = (m_n,) if m_i is None else (m_n, m_i)
            out[(m_n, m_i)] = sec.energy((-1, *tail)) - sec.energy((0, *tail))
    return out


def build_rate_matrix(space, rates, flipflop=0.0, esr_freq=None, h=None, transitions=None):
    """Assemble the rate generator.

    Parameters
    ----------
    space : StateSpace
    rates : RateParams
    flipflop : float or dict
        Flip-flop rate (1/us), or a mapping m_I -> rate as from ``flipflop_rates``
        (the detuning half of each tuple is ignored).
    esr_freq : float, optional
        Microwave frequency in MHz; no drive when omitted.
    h : CompositeHamiltonian, optional
        Source of the ESR transition frequencies when ``esr_freq`` is given.
    transitions : dict, optional
        Precomputed ``esr_transitions(h)``.
    """
    n = space.size
    k = np.zeros((n, n))  # k[j, i] = rate i -> j

    def add(src, dst, rate):
        if rate:
            k[space.index(*dst), space.index(*src)] += rate

    if h is not None and h.params.include_nucleus != space.has_nucleus:
        raise ValueError("Hamiltonian and state space disagree on the nucleus")
    if not isinstance(flipflop, dict):
        flipflop = {m_i: flipflop for m_i in space.nuclear_values}
    if esr_freq is not None and transitions is None:
        if h is None:
            raise ValueError("ESR drive needs a Hamiltonian or precomputed transitions")
        transitions = esr_transitions(h)

    relax = 1.0 / (2.0 * rates.t1_n)
    for m_i in space.nuclear_values:
        tail = (lambda m_n: (m_n,)) if m_i is None else (lambda m_n: (m_n, m_i))
        for m_n in N_LEVELS:
            add((-1, *tail(m_n)), (0, *tail(m_n)), rates.gamma_pol)
        ff = flipflop[m_i]
        ff = ff[0] if isinstance(ff, tuple) else ff
        add((0, *tail(0.5)), (-1, *tail(-0.5)), ff)
        add((-1, *tail(-0.5)), (0, *tail(0.5)), ff)
        for m_nv in NV_LEVELS:
            add((m_nv, *tail(0.5)), (m_nv, *tail(-0.5)), relax)
            add((m_nv, *tail(-0.5)), (m_nv, *tail(0.5)), relax)
        if esr_freq is not None:
            for m_n in N_LEVELS:
                drive = rates.esr_rate * float(
                    lorentzian(esr_freq - transitions[(m_n, m_i)], rates.esr_linewidth)
                )
                add((0, *tail(m_n)), (-1, *tail(m_n)), drive)
                add((-1, *tail(m_n)), (0, *tail(m_n)), drive)
        if m_i is not None and m_i > -1 and rates.w_hf:
            # S+ I- hyperfine flip-flop, both directions at the same rate
            for m_nv in NV_LEVELS:
                add((m_nv, -0.5, m_i), (m_nv, 0.5, m_i - 1), rates.w_hf)
                add((m_nv, 0.5, m_i - 1), (m_nv, -0.5, m_i), rates.w_hf)

    gen = k - np.diag(k.sum(axis=0))
    return RateMatrix(gen, space)


def rate_model(h, rates, esr_freq=None, space=None):
    """Generator for a Hamiltonian and rate set, flip-flop computed from ``h``."""
    space = space or StateSpace.default(h.params.include_nucleus)
    ff = flipflop_rates(h, rates.gamma2) if h.geometry is not None else 0.0
    return build_rate_matrix(space, rates, ff, esr_freq=esr_freq, h=h)


def _null_space(a, rtol=1e-11):
    u, s, vh = np.linalg.svd(a)
    tol = rtol * max(s[0], 1.0) * a.shape[0]
    return vh[s <= tol].conj().T


def steady_state(m, p0=None):
    """Stationary populations of a rate generator.

    When the generator has several stationary states (disconnected sectors, e.g.
    conserved nuclear spin), ``p0`` selects the long-time limit reached from that
    initial state. Without ``p0`` that case raises.
    """
    gen = m.generator
    right = _null_space(gen)
    if right.shape[1] == 0:
        raise DegenerateSteadyStateError("generator has no stationary state")
    if right.shape[1] == 1:
        p = right[:, 0].real
        p = p / p.sum()
    else:
        if p0 is None:
            raise DegenerateSteadyStateError(
                f"stationary space has dimension {right.shape[1]}; state graph is disconnected"
            )
        left = _null_space(gen.T).T
        proj = right @ np.linalg.solve(left @ right, left)
        p = (proj @ np.asarray(p0, dtype=float)).real
    resid = np.max(np.abs(gen @ p))
    if resid > 1e-9 * max(1.0, np.max(np.abs(gen))):
        raise RuntimeError(f"steady-state residual {resid:.2e} too large")
    return np.where(np.abs(p) < 1e-15, 0.0, p)


def _check_populations(p, tol=1e-9):
    return abs(p.sum() - 1.0) <= tol and p.min() >= -tol and p.max() <= 1 + tol


def _phi(z):
    """(exp(z) - 1) / z, continuous at 0."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    big = np.abs(z) > 1e-8
    out[big] = np.expm1(z[big]) / z[big]
    out[~big] = 1 + z[~big] / 2
    return out


def _eig_apply(gen, p0, t, average):
    w, v = np.linalg.eig(gen)
    if np.linalg.cond(v) > 1e8:
        return None
    c = np.linalg.solve(v, p0.astype(complex))
    f = _phi(w * t) if average else np.exp(w * t)
    p = v @ (f * c)
    if np.max(np.abs(p.imag)) > 1e-9:
        return None
    return p.real


def _rk4_apply(gen, p0, t, average):
    rmax = np.max(np.abs(gen))
    if rmax == 0 or t == 0:
        return p0.copy()
    nsteps = int(np.ceil(t * rmax / 0.1))
    dt = t / nsteps
    if dt <= np.finfo(float).tiny or nsteps > 2**60:
        raise IntegrationError("integration step underflow")
    n = gen.shape[0]
    if average:
        # augmented system: p' = M p, q' = p, so q(t) / t is the window average
        a = np.zeros((2 * n, 2 * n))
        a[:n, :n] = gen
        a[n:, :n] = np.eye(n)
        x0 = np.concatenate([p0, np.zeros(n)])
    else:
        a, x0 = gen, p0
    hm = dt * a
    step = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, 5):
        term = term @ hm / k
        step = step + term
    x = np.linalg.matrix_power(step, nsteps) @ x0
    return x[n:] / t if average else x


def _propagate(m, p0, t, average):
    if t < 0:
        raise ValueError("t must be >= 0")
    p0 = np.asarray(p0, dtype=float)
    if not _check_populations(p0):
        raise ValueError("initial populations must be a probability vector")
    if t == 0:
        return p0.copy()
    p = _eig_apply(m.generator, p0, t, average)
    if p is None or not _check_populations(p):
        p = _rk4_apply(m.generator, p0, t, average)
    return p


def evolve(m, p0, t):
    """p(t) = exp(M t) p0, by eigendecomposition with an RK4 fallback."""
    return _propagate(m, p0, t, average=False)


def time_average(m, p0, t):
    """Mean populations over [0, t] starting from ``p0``."""
    return _propagate(m, p0, t, average=True)


def uniform(space):
    return np.full(space.size, 1.0 / space.size)


def pl_signal(p, rates, space=None):
    """Photoluminescence rate (counts/us) for populations ``p``."""
    space = space or StateSpace.default(len(p) == 12)
    p = np.asarray(p, dtype=float)
    bright = p[space.mask(m_nv=0)].sum()
    dim = p[space.mask(m_nv=-1)].sum()
    return rates.pl_rate * (bright + (1.0 - rates.pl_contrast) * dim)


def n_polarization(p, space=None):
    """True N-electron polarization p(-1/2) - p(+1/2), normalized to the total."""
    space = space or StateSpace.default(len(p) == 12)
    p = np.asarray(p, dtype=float)
    down = p[space.mask(m_n=-0.5)].sum()
    up = p[space.mask(m_n=0.5)].sum()
    return (down - up) / (down + up)


def esr_response(h, rates, f, space=None):
    """ESR-induced drop in photoluminescence at microwave frequency ``f`` (MHz).

    ``f`` may be a scalar or an array; the undriven steady state is shared.
    """
    space = space or StateSpace.default(h.params.include_nucleus)
    ff = flipflop_rates(h, rates.gamma2) if h.geometry is not None else 0.0
    transitions = esr_transitions(h)
    p0 = uniform(space)
    base = pl_signal(steady_state(build_rate_matrix(space, rates, ff), p0), rates, space)
    out = []
    for freq in np.atleast_1d(f):
        m = build_rate_matrix(space, rates, ff, esr_freq=float(freq), transitions=transitions)
        out.append(base - pl_signal(steady_state(m, p0), rates, space))
    return out[0] if np.ndim(f) == 0 else np.array(out)
