import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvpair.hamiltonian import (
    DipoleGeometry, LabelError, SystemParams, TrackingError, build_h_dip, build_h_n,
    build_h_nv, build_total, dipolar_prefactor, dipolar_zz_coefficient,
    distance_bound_from_splitting, find_resonance_field, level_diagram,
    resonance_mismatch, transition_frequency,
)
from nvpair.spin import is_hermitian

GAMMA = 2.0 * 1.39962449  # MHz/G at g = 2
MAGIC = np.degrees(np.arccos(1 / np.sqrt(3)))

# CODATA 2018, typed in so the oracle does not share code with the library
MU_B = 9.2740100783e-24
H_PLANCK = 6.62607015e-34
MU0_4PI = 1.00000000055e-7


def d0_oracle(r_nm, g1=2.0, g2=2.0):
    return MU0_4PI * g1 * g2 * MU_B**2 / (H_PLANCK * (r_nm * 1e-9) ** 3) / 1e6


# ---- single-center terms ----

def test_h_nv_zero_field():
    w = np.linalg.eigvalsh(build_h_nv(SystemParams(B=0)))
    np.testing.assert_allclose(w, [0, 2880, 2880], atol=1e-9)


@pytest.mark.parametrize("B, expected", [(514.42, 1440.0), (100.0, 2600.075)])
def test_h_nv_transition(B, expected):
    h = np.diag(build_h_nv(SystemParams(B=B))).real
    assert h[2] - h[1] == pytest.approx(expected, abs=0.1)
    assert h[2] - h[1] == pytest.approx(2880 - GAMMA * B, abs=1e-9)


def test_h_n_zeeman_splitting():
    w = np.linalg.eigvalsh(build_h_n(SystemParams(B=600)))
    assert w[1] - w[0] == pytest.approx(1679.5, abs=0.1)


def test_h_n_zero_field_hyperfine_multiplets():
    # A S.I for s = 1/2, I = 1: F = 3/2 at +A/2 (x4), F = 1/2 at -A (x2)
    w = np.linalg.eigvalsh(build_h_n(SystemParams(B=0, include_nucleus=True)))
    np.testing.assert_allclose(w, [-86, -86, 43, 43, 43, 43], atol=1e-9)


def test_h_n_without_hyperfine_commutes_with_sz_iz():
    p = SystemParams(B=300, include_nucleus=True, A=0.0, custom_hyperfine=True)
    h = build_h_n(p)
    sz = np.kron(np.diag([0.5, -0.5]), np.eye(3))
    iz = np.kron(np.eye(2), np.diag([1.0, 0, -1]))
    for op in (sz, iz):
        np.testing.assert_allclose(h @ op - op @ h, 0, atol=1e-12)


def test_secular_hyperfine_is_diagonal():
    h = build_h_n(SystemParams(B=300, include_nucleus=True, hyperfine_form="secular"))
    np.testing.assert_allclose(h, np.diag(np.diag(h)), atol=0)


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(A=100)
    SystemParams(A=114)
    with pytest.raises(ValueError):
        SystemParams(D=-1)
    with pytest.raises(ValueError):
        SystemParams(g_nv=3)
    with pytest.raises(ValueError):
        SystemParams(B=-1)


def test_geometry_validation():
    for bad in (dict(r=0.05, theta=0), dict(r=1, theta=200), dict(r=1, theta=0, phi=360)):
        with pytest.raises(ValueError):
            DipoleGeometry(**bad)


# ---- dipolar coupling ----

def test_dipolar_prefactor_values():
    assert dipolar_prefactor(2.0) == pytest.approx(6.49, abs=0.05)
    assert dipolar_prefactor(2.0) == pytest.approx(d0_oracle(2.0), rel=1e-6)
    assert dipolar_prefactor(2.3) == pytest.approx(4.27, abs=0.05)
    assert dipolar_prefactor(4.0) == pytest.approx(dipolar_prefactor(2.0) / 8, rel=1e-14)


def test_dipolar_prefactor_rejects_small_r():
    with pytest.raises(ValueError):
        dipolar_prefactor(0.05)


@pytest.mark.parametrize("theta, factor", [(0.0, -2.0), (90.0, 1.0), (MAGIC, 0.0)])
def test_zz_coefficient(theta, factor):
    g = DipoleGeometry(2.0, theta)
    d0 = dipolar_prefactor(2.0)
    c = dipolar_zz_coefficient(g)
    assert abs(c - factor * d0) <= 1e-6 * d0
    # the full tensor carries the same coefficient on Sz Sz: <+1,+1/2|H|+1,+1/2> = c/2
    assert build_h_dip(g)[0, 0].real == pytest.approx(c / 2, abs=1e-12)


def _tensor_oracle(r, theta, phi):
    """Explicit d0 (S1.S2 - 3 (S1.n)(S2.n)) from Pauli-style matrices."""
    s2 = 1 / np.sqrt(2)
    sx1 = s2 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy1 = s2 * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]])
    sz1 = np.diag([1.0, 0, -1]).astype(complex)
    sx2 = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
    sy2 = 0.5 * np.array([[0, -1j], [1j, 0]])
    sz2 = 0.5 * np.diag([1.0, -1]).astype(complex)
    t, p = np.radians(theta), np.radians(phi)
    n = (np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t))
    a = (sx1, sy1, sz1)
    b = (sx2, sy2, sz2)
    h = np.zeros((6, 6), dtype=complex)
    for i in range(3):
        for j in range(3):
            h += ((i == j) - 3 * n[i] * n[j]) * np.kron(a[i], b[j])
    return d0_oracle(r) * h


@given(st.floats(0.5, 10), st.floats(0, 180), st.floats(0, 359.9))
def test_dipolar_tensor_matches_oracle(r, theta, phi):
    h = build_h_dip(DipoleGeometry(r, theta, phi))
    np.testing.assert_allclose(h, _tensor_oracle(r, theta, phi), atol=1e-6 * d0_oracle(r))
    assert is_hermitian(h)


@given(st.floats(0, 180))
def test_flipflop_element_analytic(theta):
    # <0,+1/2| H |-1,-1/2> comes from the S- S- term: (3 sqrt2 / 4) d0 sin^2(theta)
    d0 = dipolar_prefactor(2.0)
    h = build_h_dip(DipoleGeometry(2.0, theta))
    expected = 3 * np.sqrt(2) / 4 * d0 * np.sin(np.radians(theta)) ** 2
    assert abs(h[2, 5]) == pytest.approx(expected, abs=1e-12)


def test_secular_dipolar_is_zz_only():
    g = DipoleGeometry(2.0, 30.0)
    h = build_h_dip(g, secular=True)
    np.testing.assert_allclose(h, np.diag(np.diag(h)), atol=0)
    np.testing.assert_allclose(np.diag(h).real,
                               dipolar_zz_coefficient(g) * np.kron([1, 0, -1], [0.5, -0.5]))


# ---- composite Hamiltonian ----

def test_uncoupled_total_is_diagonal():
    h = build_total(SystemParams(B=250)).h_total
    assert h.shape == (6, 6)
    np.testing.assert_allclose(h, np.diag(np.diag(h)), atol=0)


def test_full_18_dimensional_build():
    h = build_total(SystemParams(B=514, include_nucleus=True), DipoleGeometry(2.3, 90))
    assert h.h_total.shape == (18, 18)
    assert is_hermitian(h.h_total)


@given(st.floats(0, 1000), st.floats(0.5, 10), st.floats(0, 180), st.booleans())
def test_total_hermitian_and_trace(B, r, theta, nucleus):
    p = SystemParams(B=B, include_nucleus=nucleus)
    h = build_total(p, DipoleGeometry(r, theta)).h_total
    assert is_hermitian(h, rtol=1e-12)
    # trace: D Sz^2 sums to 2D per N x nuclear state; Zeeman, hyperfine and dipolar are traceless
    assert np.trace(h).real == pytest.approx(2 * 2880 * 2 * p.nuclear_dim, rel=1e-12)


def test_total_linear_in_D():
    g = DipoleGeometry(2.3, 40)
    h1 = build_total(SystemParams(B=300, D=2880), g).h_total
    h2 = build_total(SystemParams(B=300, D=5760), g).h_total
    h0 = build_total(SystemParams(B=300, D=1e-9), g).h_total
    np.testing.assert_allclose(h2 - h0, 2 * (h1 - h0), atol=1e-6)


def test_transition_frequency_uncoupled():
    h = build_total(SystemParams(B=100))
    f = transition_frequency(h, (0, 0.5), (-1, 0.5))
    assert f == pytest.approx(2600.1, abs=0.05)
    h0 = build_total(SystemParams(B=0))
    assert transition_frequency(h0, (0, 0.5), (1, 0.5)) == pytest.approx(2880)


@pytest.mark.parametrize("theta", [0.0, 30.0, 90.0])
def test_zz_shift_of_transitions(theta):
    g = DipoleGeometry(4.0, theta)
    c = dipolar_zz_coefficient(g)
    h = build_total(SystemParams(B=100), g, secular_dipolar=True)
    for m_n in (0.5, -0.5):
        f = transition_frequency(h, (0, m_n), (-1, m_n))
        assert f == pytest.approx(2880 - GAMMA * 100 - c * m_n, abs=1e-9)


@pytest.mark.parametrize("theta", [0.0, 30.0, 90.0])
@pytest.mark.parametrize("d0", [0.1, 0.01])
def test_exact_doublet_splitting_secular_oracle(theta, d0):
    # second-order corrections scale as d0^2 / (hundreds of MHz), far below 1% of d0
    r = (d0_oracle(1.0) / d0) ** (1 / 3)
    g = DipoleGeometry(r, theta)
    h = build_total(SystemParams(B=100), g)
    f_up = transition_frequency(h, (0, 0.5), (-1, 0.5))
    f_dn = transition_frequency(h, (0, -0.5), (-1, -0.5))
    expected = d0 * abs(1 - 3 * np.cos(np.radians(theta)) ** 2)
    assert abs(f_up - f_dn) == pytest.approx(expected, rel=0.01)


@pytest.mark.parametrize("theta, lower, upper", [(90.0, 0.5, -0.5), (0.0, -0.5, 0.5)])
def test_dipolar_level_ordering(theta, lower, upper):
    # antiferro (90 deg) pushes (-1,+1/2) down relative to (-1,-1/2); ferro (0 deg) reverses it
    bare = build_total(SystemParams(B=100))
    h = build_total(SystemParams(B=100), DipoleGeometry(2.0, theta))
    shift = {m: h.energy((-1, m)) - bare.energy((-1, m)) for m in (0.5, -0.5)}
    assert shift[lower] < 0 < shift[upper]


def test_unlabellable_state_raises():
    # at the NV-N anticrossing the exact eigenstates are equal mixtures
    p = SystemParams(B=find_resonance_field(SystemParams()))
    h = build_total(p, DipoleGeometry(2.0, 90))
    with pytest.raises(LabelError):
        h.energy((0, 0.5))
    with pytest.raises(LabelError):
        h.energy((2, 0.5))


# ---- resonance fields ----

@pytest.mark.parametrize("m_i, expected", [(0, 514.42), (1, 499.06), (-1, 529.78)])
def test_resonance_fields_first_order(m_i, expected):
    p = SystemParams(include_nucleus=True)
    B = find_resonance_field(p, m_i)
    assert B == pytest.approx((2880 - m_i * 86) / (2 * GAMMA), abs=1e-6)
    assert B == pytest.approx(expected, abs=0.01)
    assert abs(resonance_mismatch(p.at_field(B), m_i)) < 0.01


def test_resonance_field_exact_mode_close():
    p = SystemParams(include_nucleus=True, hyperfine_form="secular")
    assert find_resonance_field(p, 1, exact=True) == pytest.approx(
        find_resonance_field(p, 1), abs=1e-6)
    # isotropic hyperfine adds a second-order shift of order A^2 / (gamma B)
    iso = find_resonance_field(SystemParams(include_nucleus=True), 0, exact=True)
    assert 512 < iso < 515


def test_resonance_field_bad_bracket():
    with pytest.raises(ValueError):
        find_resonance_field(SystemParams(), bracket=(0, 100))


# ---- distance bounds ----

@pytest.mark.parametrize("splitting, coupling, r", [
    (4.27, "antiferro", 2.30), (5.91, "ferro", 2.60), (6.49, "antiferro", 2.00)])
def test_distance_bounds(splitting, coupling, r):
    assert distance_bound_from_splitting(splitting, coupling) == pytest.approx(r, abs=0.02)


@given(st.floats(1.0, 8.0), st.sampled_from([0.0, 90.0]))
def test_distance_round_trip(r, theta):
    split = abs(dipolar_zz_coefficient(DipoleGeometry(r, theta)))
    coupling = "ferro" if theta == 0 else "antiferro"
    assert distance_bound_from_splitting(split, coupling) == pytest.approx(r, rel=0.01)


def test_distance_rejects_nonpositive():
    with pytest.raises(ValueError):
        distance_bound_from_splitting(0.0, "ferro")


# ---- level diagram ----

def test_level_diagram_slopes_and_zero_field():
    res = level_diagram(SystemParams(), None, np.linspace(0, 400, 81))
    assert res.y.shape == (81, 6)
    # N doublet within the NV m=0 manifold: slopes +-gamma/2
    zero = res.y[:, [res.columns.index(f"E(0,{s}) (MHz)") for s in ("+1/2", "-1/2")]]
    np.testing.assert_allclose(np.diff(zero, axis=0) / 5.0, [[GAMMA / 2, -GAMMA / 2]] * 80,
                               atol=1e-9)
    np.testing.assert_allclose(np.sort(res.y[0])[::2], [0, 2880, 2880], atol=1e-9)


def test_level_diagram_tracks_through_crossing():
    # (-1,-1/2) and (0,+1/2) cross at 514.4 G without coupling; tracking keeps their slopes
    res = level_diagram(SystemParams(), None, np.linspace(480, 550, 141))
    col = res.columns.index("E(-1,-1/2) (MHz)")
    slope = np.diff(res.y[:, col]) / 0.5
    np.testing.assert_allclose(slope, -1.5 * GAMMA, atol=1e-9)


def test_level_diagram_18_columns():
    res = level_diagram(SystemParams(include_nucleus=True), DipoleGeometry(2.3, 90),
                        np.linspace(0, 1000, 201))
    assert res.y.shape == (201, 18)
    assert len(set(res.columns)) == 18


def test_tracking_fails_on_scrambled_eigenvectors():
    # a three-level rotation with overlap 1/3 everywhere cannot be followed
    from nvpair.hamiltonian import _track_order
    dft = np.exp(2j * np.pi * np.outer(range(3), range(3)) / 3) / np.sqrt(3)
    with pytest.raises(TrackingError):
        _track_order(np.eye(3), np.array([0.0, 1.0, 2.0]), dft)
    np.testing.assert_array_equal(
        _track_order(np.eye(3), np.array([0.0, 1.0, 2.0]), np.eye(3)[:, [2, 0, 1]]), [1, 2, 0])


def test_level_diagram_rejects_unsorted():
    with pytest.raises(ValueError):
        level_diagram(SystemParams(), None, [0, 10, 5])
