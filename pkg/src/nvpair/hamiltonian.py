"""Spin Hamiltonian of an NV center dipole-coupled to a substitutional nitrogen.

Energies are frequencies in MHz (h = 1), fields in gauss, distances in nm.
The product basis is NV (m = +1, 0, -1) x N electron (m = +1/2, -1/2), with an
optional 14N nucleus (m_I = +1, 0, -1) as the fastest index.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import constants as sc
from scipy.optimize import bisect, linear_sum_assignment

from .results import SweepResult
from .spin import eigh, kron_all, spin_operators

S1 = spin_operators(1)
SHALF = spin_operators(0.5)
NV_M = (1, 0, -1)
N_M = (0.5, -0.5)
I_M = (1, 0, -1)

ALLOWED_A = (86.0, 114.0)
HYPERFINE_FORMS = ("isotropic", "secular")
LABEL_WEIGHT_FLOOR = 0.7
TRACKING_OVERLAP_FLOOR = 0.5


class LabelError(RuntimeError):
    """An eigenstate could not be matched to a product-basis label."""


class TrackingError(RuntimeError):
    """Adiabatic level tracking lost a level between adjacent grid points."""


def _dipolar_mhz_nm3():
    mu_b = sc.physical_constants["Bohr magneton"][0]
    return sc.mu_0 / (4 * np.pi) * mu_b**2 / sc.h / 1e6 / 1e-27


@dataclass(frozen=True)
class PhysicalConstants:
    bohr_mhz_per_gauss: float = 1.39962449
    # mu0 muB^2 / (4 pi h) for unit g-factors, MHz nm^3
    dipolar_mhz_nm3: float = field(default_factory=_dipolar_mhz_nm3)


@dataclass(frozen=True)
class SystemParams:
    D: float = 2880.0
    g_nv: float = 2.0
    g_n: float = 2.0
    A: float = 86.0
    B: float = 0.0
    include_nucleus: bool = False
    include_hyperfine: bool = True
    hyperfine_form: str = "isotropic"
    custom_hyperfine: bool = False
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        for name in ("g_nv", "g_n"):
            g = getattr(self, name)
            if not 1.5 < g < 2.5:
                raise ValueError(f"{name} must lie in (1.5, 2.5), got {g}")
        if not self.B >= 0:
            raise ValueError(f"B must be >= 0, got {self.B}")
        if not self.custom_hyperfine and self.A not in ALLOWED_A:
            raise ValueError(f"A must be one of {ALLOWED_A} MHz unless custom_hyperfine is set")
        if self.hyperfine_form not in HYPERFINE_FORMS:
            raise ValueError(f"hyperfine_form must be one of {HYPERFINE_FORMS}")

    @property
    def gamma_nv(self):
        """NV Zeeman slope, MHz/G."""
        return self.g_nv * self.constants.bohr_mhz_per_gauss

    @property
    def gamma_n(self):
        return self.g_n * self.constants.bohr_mhz_per_gauss

    @property
    def nuclear_dim(self):
        return 3 if self.include_nucleus else 1

    def at_field(self, B):
        return replace(self, B=float(B))


@dataclass(frozen=True)
class DipoleGeometry:
    r: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.r > 0.1:
            raise ValueError(f"r must exceed 0.1 nm, got {self.r}")
        if not 0.0 <= self.theta <= 180.0:
            raise ValueError(f"theta must lie in [0, 180] degrees, got {self.theta}")
        if not 0.0 <= self.phi < 360.0:
            raise ValueError(f"phi must lie in [0, 360) degrees, got {self.phi}")

    @property
    def unit_vector(self):
        th, ph = np.radians(self.theta), np.radians(self.phi)
        return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def format_label(label):
    parts = [f"{label[0]:+d}" if label[0] else "0", "+1/2" if label[1] > 0 else "-1/2"]
    if len(label) > 2:
        parts.append(f"{label[2]:+d}" if label[2] else "0")
    return "(" + ",".join(parts) + ")"


def basis_labels(include_nucleus):
    if include_nucleus:
        return [(a, b, c) for a in NV_M for b in N_M for c in I_M]
    return [(a, b) for a in NV_M for b in N_M]


def build_h_nv(params):
    """D Sz^2 + g_nv muB B Sz on the NV triplet (3x3, MHz)."""
    return params.D * S1.sz @ S1.sz + params.gamma_nv * params.B * S1.sz


def build_h_n(params):
    """N-center Hamiltonian: electron Zeeman plus optional 14N hyperfine.

    Returns 2x2 without the nucleus and 6x6 (electron x nucleus) with it. The
    hyperfine term is the full isotropic ``A S.I`` unless ``hyperfine_form`` is
    ``"secular"``, which keeps only ``A Sz Iz``.
    """
    zeeman = params.gamma_n * params.B * SHALF.sz
    if not params.include_nucleus:
        return zeeman
    h = np.kron(zeeman, S1.identity)
    if params.include_hyperfine:
        h = h + params.A * np.kron(SHALF.sz, S1.sz)
        if params.hyperfine_form == "isotropic":
            h = h + params.A * (np.kron(SHALF.sx, S1.sx) + np.kron(SHALF.sy, S1.sy))
    return h


def dipolar_prefactor(r, params=None):
    """mu0 g_nv g_n muB^2 / (4 pi r^3 h) in MHz, ``r`` in nm."""
    if not r > 0.1:
        raise ValueError(f"r must exceed 0.1 nm, got {r}")
    params = params or SystemParams()
    return params.constants.dipolar_mhz_nm3 * params.g_nv * params.g_n / r**3


def dipolar_zz_coefficient(geometry, params=None):
    """Coefficient of Sz^NV Sz^N in the dipolar Hamiltonian, d0 (1 - 3 cos^2 theta)."""
    d0 = dipolar_prefactor(geometry.r, params)
    return d0 * (1.0 - 3.0 * np.cos(np.radians(geometry.theta)) ** 2)


def build_h_dip(geometry, params=None, secular=False):
    """Dipolar coupling on NV x N electron (6x6, MHz).

    ``secular=True`` keeps only the Sz Sz part, which is what the rate model
    uses for level energies; the transverse part enters there as a flip-flop rate.
    """
    d0 = dipolar_prefactor(geometry.r, params)
    if secular:
        return dipolar_zz_coefficient(geometry, params) * np.kron(S1.sz, SHALF.sz)
    nv = (S1.sx, S1.sy, S1.sz)
    n = (SHALF.sx, SHALF.sy, SHALF.sz)
    rhat = geometry.unit_vector
    dot = sum(np.kron(a, b) for a, b in zip(nv, n))
    nv_r = sum(c * op for c, op in zip(rhat, nv))
    n_r = sum(c * op for c, op in zip(rhat, n))
    return d0 * (dot - 3.0 * np.kron(nv_r, n_r))


@dataclass
class CompositeHamiltonian:
    params: SystemParams
    geometry: DipoleGeometry
    h_total: np.ndarray
    secular_dipolar: bool = False

    @property
    def dim(self):
        return self.h_total.shape[0]

    @property
    def labels(self):
        return basis_labels(self.params.include_nucleus)

    def index(self, label):
        label = tuple(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown basis label {label}") from None

    @cached_property
    def eigensystem(self):
        return eigh(self.h_total)

    @cached_property
    def labelled_energies(self):
        """Map basis label -> eigenvalue, via each eigenvector's dominant component."""
        w, v = self.eigensystem
        weights = np.abs(v) ** 2
        out = {}
        for k in range(len(w)):
            j = int(np.argmax(weights[:, k]))
            if weights[j, k] < LABEL_WEIGHT_FLOOR:
                continue
            out[self.labels[j]] = float(w[k])
        return out

    def energy(self, label):
        label = tuple(label)
        self.index(label)
        try:
            return self.labelled_energies[label]
        except KeyError:
            raise LabelError(
                f"no eigenstate has weight >= {LABEL_WEIGHT_FLOOR} on {format_label(label)}"
            ) from None


def build_total(params, geometry=None, secular_dipolar=False):
    """H_NV x 1 + 1 x H_N (+ H_dip) on the composite space."""
    nd = params.nuclear_dim
    h = kron_all(build_h_nv(params), np.eye(2 * nd))
    h = h + np.kron(np.eye(3), build_h_n(params))
    if geometry is not None:
        h = h + np.kron(build_h_dip(geometry, params, secular=secular_dipolar), np.eye(nd))
    return CompositeHamiltonian(params, geometry, h, secular_dipolar)


def transition_frequency(h, from_label, to_label):
    """E(to) - E(from) in MHz, sign preserved."""
    return h.energy(to_label) - h.energy(from_label)


def _track_order(v_prev, w_prev, v_cur):
    """Column permutation of ``v_cur`` continuing the levels of ``v_prev``.

    Degenerate clusters in the previous step are treated as a whole, since the
    eigensolver's basis inside a degenerate subspace is arbitrary.
    """
    overlap = np.abs(v_prev.conj().T @ v_cur) ** 2
    scale = max(1.0, np.max(np.abs(w_prev)))
    cluster = np.zeros(len(w_prev), dtype=int)
    for k in range(1, len(w_prev)):
        same = abs(w_prev[k] - w_prev[k - 1]) <= 1e-9 * scale
        cluster[k] = cluster[k - 1] if same else cluster[k - 1] + 1
    summed = np.zeros_like(overlap)
    for c in np.unique(cluster):
        rows = cluster == c
        summed[rows] = overlap[rows].sum(axis=0)
    rows, cols = linear_sum_assignment(-summed)
    worst = summed[rows, cols].min()
    if worst < TRACKING_OVERLAP_FLOOR:
        raise TrackingError(
            f"overlap {worst:.3f} below {TRACKING_OVERLAP_FLOOR}; refine the field grid"
        )
    order = np.empty(len(w_prev), dtype=int)
    order[rows] = cols
    return order


def level_diagram(params, geometry=None, b_range=None):
    """Eigenvalues versus field, each column following one adiabatic level.

    Columns are labelled by the dominant product-basis state at the last grid
    point, where Zeeman terms are largest.
    """
    b = np.asarray(b_range, dtype=float)
    if b.ndim != 1 or b.size < 1:
        raise ValueError("b_range must be a non-empty 1-D grid")
    if b.size > 1 and not (np.all(np.diff(b) > 0) or np.all(np.diff(b) < 0)):
        raise ValueError("b_range must be strictly monotone")

    energies = np.empty((b.size, 6 * params.nuclear_dim))
    v_prev = w_prev = None
    for i, field_g in enumerate(b):
        w, v = eigh(build_total(params.at_field(field_g), geometry).h_total)
        if v_prev is not None:
            order = _track_order(v_prev, w_prev, v)
            w, v = w[order], v[:, order]
        energies[i] = w
        v_prev, w_prev = v, w

    labels = basis_labels(params.include_nucleus)
    dominant = np.argmax(np.abs(v_prev) ** 2, axis=0)
    columns = [f"E{format_label(labels[j])} (MHz)" for j in dominant]
    return SweepResult("B (G)", "E (MHz)", b, energies, columns=columns,
                       meta={"kind": "level_diagram"})


def _n_splitting(params, m_i, exact):
    if not exact:
        shift = m_i * params.A if params.include_hyperfine else 0.0
        return params.gamma_n * params.B + shift
    p = replace(params, include_nucleus=True)
    h = build_total(p)
    return h.energy((0, 0.5, m_i)) - h.energy((0, -0.5, m_i))


def resonance_mismatch(params, m_i=0, exact=False):
    """N-doublet splitting minus NV (0 <-> -1) splitting, MHz."""
    nv = params.D - params.gamma_nv * params.B
    return _n_splitting(params, m_i, exact) - nv


def find_resonance_field(params, m_i=0, bracket=None, exact=False):
    """Field where the N doublet splitting (shifted by m_I A) matches the NV 0 <-> -1 gap.

    With ``exact=False`` the hyperfine shift is first order, ``m_I * A``. With
    ``exact=True`` the N splitting comes from diagonalizing ``build_h_n`` with the
    configured hyperfine form; the default bracket then starts at 200 G, since
    hyperfine mixing makes the N states unlabellable near zero field.
    """
    if bracket is None:
        bracket = (200.0, 1000.0) if exact else (0.0, 1000.0)
    if m_i not in I_M:
        raise ValueError(f"m_i must be one of {I_M}")

    def mismatch(b):
        return resonance_mismatch(params.at_field(b), m_i, exact)

    lo, hi = bracket
    if np.sign(mismatch(lo)) == np.sign(mismatch(hi)):
        raise ValueError(f"no resonance inside [{lo}, {hi}] G")
    b_res = bisect(mismatch, lo, hi, xtol=1e-9, maxiter=200)
    if abs(mismatch(b_res)) >= 0.01:
        raise RuntimeError("bisection did not reach 0.01 MHz")
    return b_res


def distance_bound_from_splitting(splitting, coupling, params=None):
    """Upper bound on the NV-N distance (nm) from a measured ESR doublet splitting.

    The secular splitting is d0(r) |1 - 3 cos^2 theta|. Its angular factor is at
    most 1 for antiferromagnetic coupling (theta toward 90 deg) and 2 for
    ferromagnetic coupling (theta toward 0), so the largest consistent r follows
    from setting the factor to that maximum.

    Parameters
    ----------
    splitting : float
        Doublet splitting in MHz.
    coupling : {"antiferro", "ferro"} or {+1, -1}
        Sign of the zz coupling; +1 means antiferromagnetic.
    """
    if not splitting > 0:
        raise ValueError("splitting must be positive")
    if coupling in ("antiferro", "antiferromagnetic", 1, +1):
        factor = 1.0
    elif coupling in ("ferro", "ferromagnetic", -1):
        factor = 2.0
    else:
        raise ValueError(f"unknown coupling sign {coupling!r}")
    d0_at_1nm = dipolar_prefactor(1.0, params)
    return (d0_at_1nm * factor / splitting) ** (1.0 / 3.0)
