import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwscatter import (
    CoinField,
    DenominatorVanishes,
    FormMismatch,
    GridTooCoarse,
    HomogeneousParams,
    NoConvergence,
    NonPenetrable,
    ValidationError,
    WindowTooSmall,
    apply_walk,
    build_interior_matrix,
    coin_to_params,
    eigenfunction_infinity,
    evolve_boundary,
    infer_barrier_distance,
    make_coin,
    resonance_angles,
    smatrix_double_barrier,
    smatrix_via_dynamics,
    smatrix_via_interior,
    spectral_check,
    transfer_extend,
    transmission_floor,
)
from qwscatter.lattice import Coin
from qwscatter.oracles import random_coin, random_field, random_theta, smatrix_via_transfer
from qwscatter.scattering import (
    fixed_point_residual,
    neumann_series_apply,
    source_vector,
)

PI = math.pi
SQ = 1 / math.sqrt(2)
IDENTITY = Coin.identity()
REFLECTOR = make_coin(0, 1, 1, 0)


# interior matrix ---------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 3, 6])
def test_identity_interior_matrix_is_nilpotent(n):
    E = build_interior_matrix(CoinField.identity(n)).entries
    assert np.any(np.linalg.matrix_power(E, n)) or n == 0
    assert not np.any(np.linalg.matrix_power(E, n + 1))


def test_interior_matrix_n1_layout(rng):
    c0, c1 = random_coin(rng), random_coin(rng)
    E = build_interior_matrix(CoinField((c0, c1))).entries
    expected = np.array([[0, 0, 0, 0], [0, 0, c1.b, c1.a], [c0.d, c0.c, 0, 0], [0, 0, 0, 0]])
    np.testing.assert_array_equal(E, expected)


def test_interior_matrix_block_structure(rng):
    f = random_field(rng, 5)
    E = build_interior_matrix(f).entries
    for x in range(6):
        assert not np.any(E[2 * x:2 * x + 2, 2 * x:2 * x + 2])
        for y in range(6):
            if abs(x - y) > 1:
                assert not np.any(E[2 * x:2 * x + 2, 2 * y:2 * y + 2])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 8))
def test_interior_columns_are_contractive(seed, n):
    E = build_interior_matrix(random_field(np.random.default_rng(seed), n, 1e-3)).entries
    assert np.all(np.sum(np.abs(E) ** 2, axis=0) <= 1 + 1e-12)


def test_spectral_radius_identity():
    assert spectral_check(build_interior_matrix(CoinField.identity(4))) == 0.0


def test_spectral_radius_reflector_has_unimodular_eigenvalue():
    f = CoinField.double_barrier(REFLECTOR, REFLECTOR, 3)
    assert abs(spectral_check(build_interior_matrix(f)) - 1) < 1e-10


def test_spectral_radius_random_fields(rng):
    for _ in range(100):
        f = random_field(rng, int(rng.integers(0, 9)))
        assert spectral_check(build_interior_matrix(f)) < 1


# interior route ----------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 4])
@pytest.mark.parametrize("theta", [0.3, 2.0, 4.4])
def test_identity_field_is_transparent(n, theta):
    s = smatrix_via_interior(CoinField.identity(n), theta)
    np.testing.assert_allclose(s.as_array(), [1, 0, 1, 0], atol=1e-15)


@pytest.mark.parametrize("theta", [0.5, 1.9, 4.0])
def test_single_coin_field_scatters_like_the_coin(rng, theta):
    c = random_coin(rng)
    s = smatrix_via_interior(CoinField((c,)), theta)
    np.testing.assert_allclose(s.matrix, [[c.a, c.b], [c.c, c.d]], atol=1e-15)


@pytest.mark.parametrize("n", [1, 3])
def test_single_hadamard_barrier(hadamard, n):
    f = CoinField.double_barrier(hadamard, IDENTITY, n)
    for theta in (0.7, 2.5, 5.1):
        s = smatrix_via_interior(f, theta)
        assert abs(s.tau) ** 2 == pytest.approx(0.5, abs=1e-14)
        assert abs(s.rho) ** 2 == pytest.approx(0.5, abs=1e-14)
        assert s.max_difference(smatrix_double_barrier(hadamard, IDENTITY, n, theta)) < 1e-14


def test_double_hadamard_resonance(double_hadamard):
    s = smatrix_via_interior(double_hadamard, PI / 2)
    assert abs(s.tau - 1) < 1e-14 and abs(s.rho) < 1e-14


def test_interior_rejects_reflector():
    with pytest.raises(NonPenetrable):
        smatrix_via_interior(CoinField.double_barrier(REFLECTOR, IDENTITY, 2), 1.0)


def test_literal_prefactors_break_unitarity(rng):
    # the e^{i theta} factors on c(n) and b(0) in the printed statement are not consistent
    c = random_coin(rng)
    theta = 1.2
    s = smatrix_via_interior(CoinField((c,)), theta)
    literal = np.array([[s.tau, c.b * cmath.exp(1j * theta)], [c.c * cmath.exp(1j * theta), s.tau_tilde]])
    assert np.abs(literal @ literal.conj().T - np.eye(2)).max() > 1e-3
    assert s.unitarity_defect < 1e-14


# dynamics route ----------------------------------------------------------

def test_boundary_state_identity_phases():
    n, theta = 3, 0.9
    st_ = evolve_boundary(CoinField.identity(n), theta, 1.0, 0.0, method="closed")
    # the wave enters at psi_L(n) and leaves at psi_L(0): phases e^{i theta x}
    for x in range(n + 1):
        assert abs(st_.psi_l(x) - cmath.exp(1j * theta * x)) < 1e-14
        assert st_.psi_r(x) == 0
    assert fixed_point_residual(CoinField.identity(n), st_) < 1e-12


@pytest.mark.parametrize("method", ["iterate", "step", "closed"])
def test_zero_source_gives_zero(rng, method):
    st_ = evolve_boundary(random_field(rng, 4), 1.0, 0.0, 0.0, method=method)
    assert not np.any(st_.phi)


def test_source_vector_slots():
    s = source_vector(2, 0.4, 2.0, 3.0)
    assert s[0] == pytest.approx(3 * cmath.exp(0.4j))
    assert s[5] == pytest.approx(2 * cmath.exp(1.2j))
    assert np.count_nonzero(s) == 2


def test_iterate_matches_closed_form(rng):
    tol = 1e-11
    for _ in range(50):
        f = random_field(rng, int(rng.integers(0, 9)))
        theta = random_theta(rng, 1)[0]
        al, ar = rng.normal(size=2) + 1j * rng.normal(size=2)
        it = evolve_boundary(f, theta, al, ar, tol)
        cl = evolve_boundary(f, theta, al, ar, method="closed")
        assert np.abs(it.phi - cl.phi).max() < 10 * tol * max(1, abs(al), abs(ar))
        assert fixed_point_residual(f, it) < 1e-9


def test_step_method_matches_closed_form(rng):
    f = random_field(rng, 3, p_min=0.6)
    st_ = evolve_boundary(f, 2.2, 1.0, 0.5, method="step")
    cl = evolve_boundary(f, 2.2, 1.0, 0.5, method="closed")
    assert st_.steps > 1
    assert np.abs(st_.phi - cl.phi).max() < 1e-9


def test_no_convergence_is_reported(rng):
    f = random_field(rng, 6, p_min=0.2)
    with pytest.raises(NoConvergence):
        evolve_boundary(f, 1.0, 1.0, 0.0, tol=1e-14, t_max=4)


def test_unknown_method_rejected():
    with pytest.raises(ValidationError):
        evolve_boundary(CoinField.identity(1), 1.0, method="lanczos")


def test_dynamics_identity():
    s = smatrix_via_dynamics(CoinField.identity(3), 2.0)
    np.testing.assert_allclose(s.as_array(), [1, 0, 1, 0], atol=1e-14)


def test_dynamics_agrees_with_interior(rng):
    for _ in range(10):
        f = random_field(rng, int(rng.integers(0, 9)))
        for theta in random_theta(rng, 4):
            a, b = smatrix_via_interior(f, theta), smatrix_via_dynamics(f, theta)
            assert a.max_difference(b) < 1e-9


def test_transfer_oracle_agrees_with_interior(rng):
    for _ in range(20):
        f = random_field(rng, int(rng.integers(0, 9)), p_min=0.5)
        for theta in random_theta(rng, 4):
            assert smatrix_via_interior(f, theta).max_difference(smatrix_via_transfer(f, theta)) < 1e-9


def test_dynamics_matches_double_barrier(rng):
    for _ in range(10):
        c0, c1, n = random_coin(rng), random_coin(rng), int(rng.integers(1, 9))
        f = CoinField.double_barrier(c0, c1, n)
        for theta in random_theta(rng, 4):
            ref = smatrix_double_barrier(c0, c1, n, theta)
            assert ref.max_difference(smatrix_via_dynamics(f, theta)) < 1e-10


# generalized eigenfunction -----------------------------------------------

def test_eigenfunction_identity_plane_wave():
    theta = 1.3
    psi = eigenfunction_infinity(CoinField.identity(3), theta, 1.0, 0.0, -6, 9)
    expected = np.column_stack([np.exp(1j * theta * psi.sites), np.zeros(16)])
    np.testing.assert_allclose(psi.values, expected, atol=1e-14)


@pytest.mark.parametrize("alphas", [(1, 0), (0, 1), (0.3 - 1j, 2.0)])
def test_eigenrelation(rng, alphas):
    for _ in range(5):
        n = int(rng.integers(0, 9))
        f = random_field(rng, n)
        theta = random_theta(rng, 1)[0]
        psi = eigenfunction_infinity(f, theta, *alphas, -12, n + 12)
        out = apply_walk(f, psi)
        assert np.abs(out.values - cmath.exp(1j * theta) * psi.values).max() < 1e-10


def test_eigenfunction_boundary_form(rng):
    n = 4
    f = random_field(rng, n)
    theta = 2.8
    s = smatrix_via_interior(f, theta)
    psi = eigenfunction_infinity(f, theta, 1.0, 0.0, -5, n + 5)
    for x in range(n + 1, n + 6):
        np.testing.assert_allclose(psi.at(x), [cmath.exp(1j * theta * x), s.rho * cmath.exp(-1j * theta * x)],
                                   atol=1e-12)
    for x in range(-5, 0):
        np.testing.assert_allclose(psi.at(x), [s.tau * cmath.exp(1j * theta * x), 0], atol=1e-12)


def test_eigenfunction_window_must_cover_gamma(rng):
    with pytest.raises(WindowTooSmall):
        eigenfunction_infinity(random_field(rng, 4), 1.0, 1.0, 0.0, 1, 8)


# double barrier closed form ----------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 7])
def test_double_barrier_identity(n):
    s = smatrix_double_barrier(IDENTITY, IDENTITY, n, 1.1)
    np.testing.assert_allclose(s.as_array(), [1, 0, 1, 0], atol=1e-15)


def test_double_hadamard_closed_form(hadamard):
    e = cmath.exp(-2j * (PI / 2) * 2)
    D = 1 - hadamard.b * hadamard.c * e
    assert D == pytest.approx(0.5)
    s = smatrix_double_barrier(hadamard, hadamard, 2, PI / 2)
    assert abs(s.tau - 1) < 1e-14 and abs(s.rho) < 1e-14


def test_double_barrier_unitarity_sweep(rng):
    for _ in range(1000):
        c0, c1 = random_coin(rng, 1e-3), random_coin(rng, 1e-3)
        n = int(rng.integers(1, 17))
        s = smatrix_double_barrier(c0, c1, n, random_theta(rng, 1)[0])
        assert abs(abs(s.tau) ** 2 + abs(s.rho) ** 2 - 1) < 1e-10
        assert s.unitarity_defect < 1e-10


def test_double_barrier_denominator_vanishes():
    # b1 c0 = -1 and e^{-2 i theta n} = -1 at n = 1, theta = pi/2
    c0 = make_coin(0, 1, -1, 0)
    c1 = make_coin(0, 1, 1, 0)
    with pytest.raises(DenominatorVanishes):
        smatrix_double_barrier(c0, c1, 1, PI / 2)


def test_double_barrier_needs_separation():
    with pytest.raises(ValidationError):
        smatrix_double_barrier(IDENTITY, IDENTITY, 0, 1.0)


# resonances ---------------------------------------------------------------

def test_double_hadamard_resonances(hadamard):
    ph = coin_to_params(hadamard)
    res = resonance_angles(ph, ph, 2)
    assert res.angles == pytest.approx([PI / 2, 3 * PI / 2], abs=1e-14)
    assert res.excluded_threshold_hits == pytest.approx([PI, 2 * PI], abs=1e-14)
    assert not res.all_theta


def test_diagonal_coins_reflect_nowhere(rng):
    p0 = HomogeneousParams(1.0, 0.0, 0.4, 0.0, 1.0)
    p1 = HomogeneousParams(1.0, 0.0, 2.0, 0.0, 0.3)
    res = resonance_angles(p0, p1, 3)
    assert res.all_theta and res.angles == []
    assert res.to_json()["angles"] == "all"
    for theta in random_theta(rng, 10):
        assert abs(smatrix_double_barrier(p0.coin(), p1.coin(), 3, theta).rho) < 1e-15


@settings(max_examples=100, deadline=None)
@given(p=st.floats(0.05, 0.99), ang=st.lists(st.floats(0, 2 * PI), min_size=6, max_size=6),
       n=st.integers(1, 8))
def test_resonance_angles_zero_both_reflections(p, ang, n):
    p0 = HomogeneousParams.from_angles(p, *ang[:3])
    p1 = HomogeneousParams.from_angles(p, *ang[3:])
    res = resonance_angles(p0, p1, n)
    assert len(res.angles) + len(res.excluded_threshold_hits) == 2 * n
    for theta in res.angles:
        s = smatrix_double_barrier(p0.coin(), p1.coin(), n, theta)
        assert abs(s.rho) < 1e-10 and abs(s.rho_tilde) < 1e-10


def test_resonance_form_mismatch():
    with pytest.raises(FormMismatch):
        resonance_angles(HomogeneousParams.from_angles(0.5), HomogeneousParams.from_angles(0.6), 2)


def test_resonance_needs_positive_n():
    p = HomogeneousParams.from_angles(0.5)
    with pytest.raises(ValidationError):
        resonance_angles(p, p, 0)


# inverse problem ----------------------------------------------------------

def _rho_of(c0, c1, n):
    return lambda t: smatrix_double_barrier(c0, c1, n, t).rho


def test_infer_distance_regular_case():
    p0 = HomogeneousParams.from_angles(0.6, 0.3, 0.2, 0.0)
    p1 = HomogeneousParams.from_angles(0.6, 1.0, 0.2 + PI / 2, 0.7)
    res = infer_barrier_distance(_rho_of(p0.coin(), p1.coin(), 2))
    assert res.zeros == pytest.approx([3 * PI / 8, 7 * PI / 8, 11 * PI / 8, 15 * PI / 8], abs=1e-9)
    assert res.count == 4 and res.exact == [2]


def test_infer_distance_flags_threshold_degenerate(hadamard):
    res = infer_barrier_distance(_rho_of(hadamard, hadamard, 2))
    assert res.count == 2
    assert res.exact == [1]
    assert 2 in res.threshold_degenerate


def test_infer_distance_single_barrier(hadamard):
    res = infer_barrier_distance(_rho_of(hadamard, IDENTITY, 3), grid_size=512)
    assert res.count == 0 and res.exact == []


def test_infer_distance_grid_too_coarse():
    p0 = HomogeneousParams.from_angles(0.6, 0.3, 0.2, 0.0)
    p1 = HomogeneousParams.from_angles(0.6, 1.0, 0.2 + PI / 2, 0.7)
    with pytest.raises(GridTooCoarse):
        infer_barrier_distance(_rho_of(p0.coin(), p1.coin(), 8), grid_size=32)


# transfer matrix and transmission -----------------------------------------

def test_transfer_identity_plane_wave():
    theta, x = 0.8, 3
    u = transfer_extend([cmath.exp(1j * theta * x), 0], CoinField.identity(5), x, theta)
    np.testing.assert_allclose(u, [cmath.exp(1j * theta * (x + 1)), 0], atol=1e-15)


def test_transfer_kernel_is_trivial(rng):
    f = random_field(rng, 4)
    for x in range(-1, 5):
        assert not np.any(transfer_extend([0, 0], f, x, 1.0))


def test_transfer_rejects_reflector():
    with pytest.raises(NonPenetrable):
        transfer_extend([1, 0], CoinField((IDENTITY, REFLECTOR)), 0, 1.0)


def test_transfer_reproduces_eigenfunction(rng):
    n = 6
    f = random_field(rng, n)
    theta = 4.2
    psi = eigenfunction_infinity(f, theta, 0.7, -0.4j, -3, n + 3)
    u = psi.at(-1)
    for x in range(-1, n + 1):
        u = transfer_extend(u, f, x, theta)
    assert np.abs(u - psi.at(n + 1)).max() < 1e-9


def test_transmission_floor_identity():
    assert transmission_floor(CoinField.identity(3), np.linspace(0.1, 6, 20)) == pytest.approx(1.0)


def test_transmission_floor_double_hadamard(double_hadamard):
    grid = np.linspace(0, 2 * PI, 256)
    floor = transmission_floor(double_hadamard, grid)
    assert floor >= 1 / 3 - 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 8))
def test_transmission_product_bound(seed, n):
    # |tau| >= prod |a(x)| / 2^n, a scale-aware certificate that tau does not vanish
    rng = np.random.default_rng(seed)
    f = random_field(rng, n, p_min=1e-3)
    bound = np.prod([abs(c.a) for c in f.coins]) / 2**n
    floor = transmission_floor(f, np.linspace(0, 2 * PI, 66)[1:-1])
    assert floor >= bound * (1 - 1e-9)


# neumann series oracle ---------------------------------------------------

def test_neumann_series_converges_at_predicted_rate(rng):
    f = random_field(rng, 5, p_min=0.3)
    M = build_interior_matrix(f)
    theta = 1.7
    r = spectral_check(M)
    rhs = source_vector(f.n, theta, 1.0, 1.0)
    A = np.eye(M.size) - cmath.exp(-2j * theta) * (M.entries @ M.entries)
    exact = np.linalg.solve(A, rhs)
    # the bound r^{2(M+1)} is asymptotic; a margin factor covers the transient
    terms = int(math.ceil(math.log(1e-12) / (2 * math.log(r))))
    approx = neumann_series_apply(M, theta, rhs, terms)
    assert np.abs(approx - exact).max() < 1e-10
