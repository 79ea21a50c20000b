import numpy as np
import pytest
import scipy.linalg as sla
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from coadjoint.errors import IllConditionedError, NonContractionError, ValidationError
from coadjoint.torus import (
    ScalarState,
    WaveLattice,
    ad_matrix,
    build_lambda,
    chart_solve,
    conjugate_scan,
    dexp_fd_oracle,
    galerkin_rhs,
    integrate_geodesic,
    k_matrix,
    regularized_det,
)
from coadjoint.torus.chart import chart_residual
from coadjoint.torus.galerkin import galerkin_rhs_bruteforce, k_entry_bruteforce
from coadjoint.torus.geodesic import gamma_quadrature_check, step_halving_check
from coadjoint.torus.scan import ConjugatePoint, log_regularized_det, oracle_crossings
from conftest import kolmogorov, perturbed_kolmogorov, random_state

GEOMETRIES = [(0.0, 0.0, "euler"), (-0.5, 1.0, "gsqg"), (-0.25, 0.5, "gsqg")]


def real_velocity(L, seed):
    return random_state(L.N, seed, r=L.r).velocity_coefficients()


# -- lattice and states -------------------------------------------------------


def test_lattice_layout():
    L = WaveLattice(3)
    assert len(L) == 48
    assert all(tuple(L.modes[L.neg[i]]) == tuple(-L.modes[i]) for i in range(len(L)))
    kidx, valid = L.pairs()
    for m in range(0, len(L), 7):
        for l in range(0, len(L), 5):
            d = L.modes[m] - L.modes[l]
            assert valid[m, l] == L.contains(d)
            if valid[m, l]:
                assert tuple(L.modes[kidx[m, l]]) == tuple(d)


def test_state_validation_and_roundtrip():
    L = WaveLattice(2)
    u = ScalarState.from_modes(L, [((1, 0), 0.3 + 0.1j), ((0, 2), 0.5)])
    assert u.is_real()
    back = ScalarState.from_json(u.to_json(), r=0.0)
    assert_allclose(back.coefficients, u.coefficients)
    with pytest.raises(ValidationError):
        ScalarState.from_modes(L, [((3, 0), 1.0)])
    with pytest.raises(ValidationError):
        ScalarState(L, u.coefficients, "euler", 0.5)
    with pytest.raises(ValidationError):
        WaveLattice(0)


def test_grid_values_of_cosine():
    u = kolmogorov(2, amp=1.0)
    g = u.grid_values(16)
    y = 2 * np.pi * np.arange(16) / 16
    assert_allclose(g, np.cos(y)[None, :].repeat(16, axis=0), atol=1e-13)


# -- right-hand side and operators --------------------------------------------


@pytest.mark.parametrize("r,beta,kind", GEOMETRIES)
def test_rhs_matches_direct_convolution(r, beta, kind):
    u = random_state(3, 7, r=r, kind=kind, beta=beta)
    assert_allclose(galerkin_rhs(u).coefficients, galerkin_rhs_bruteforce(u), atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(GEOMETRIES))
def test_rhs_conserves_both_invariants(seed, geom):
    r, beta, kind = geom
    u = random_state(3, seed, r=r, kind=kind, beta=beta)
    c, L = u.coefficients, u.lattice
    dc = galerkin_rhs(u).coefficients
    # derivatives of sum |c|^2 |k|^(beta-2) and sum |c|^2 along the flow
    assert abs(np.vdot(c * L.abs_k ** (beta - 2), dc).real) < 1e-12 * max(1, np.sum(abs(c)) ** 3)
    assert abs(np.vdot(c, dc).real) < 1e-12 * max(1, np.sum(abs(c)) ** 3)
    assert galerkin_rhs(u).is_real(1e-13)


@pytest.mark.parametrize("r,beta,kind", GEOMETRIES)
def test_rhs_is_minus_k_of_velocity(r, beta, kind):
    u = random_state(3, 11, r=r, kind=kind, beta=beta)
    a = u.velocity_coefficients()
    rhs = ScalarState(u.lattice, galerkin_rhs(u).coefficients, kind, beta).velocity_coefficients()
    assert_allclose(rhs, -k_matrix(u).entries @ a, atol=1e-13)


@pytest.mark.parametrize("r", [0.0, -0.5, 0.5])
def test_k_is_metric_adjoint_of_ad(r):
    L = WaveLattice(2, r)
    a0, w, v = (real_velocity(L, s) for s in (1, 2, 3))
    K = k_matrix(a0, L).entries
    lhs = np.vdot(v, K @ w)
    rhs = np.vdot(ad_matrix(w, L).entries @ v, a0)
    assert_allclose(lhs, rhs, atol=1e-13)
    # the columns of ad_a^H are K(e_j) a
    n = len(L)
    adH = ad_matrix(a0, L).entries.conj().T
    cols = np.array([k_matrix(np.eye(n)[j], L).entries @ a0 for j in range(n)]).T
    assert_allclose(adH, cols, atol=1e-13)


def test_k_entries_against_direct_bracket():
    u = ScalarState(WaveLattice(2, 0.5), random_state(2, 5).coefficients)
    K = k_matrix(u).entries
    L = u.lattice
    for m in range(0, len(L), 3):
        for l in range(0, len(L), 2):
            assert_allclose(K[m, l], k_entry_bruteforce(u, L.modes[l], L.modes[m]), atol=1e-14)


def test_k_entry_symbolic_poisson_bracket():
    # <K e_l, e_m> at r = 0 from the vorticity form K(u0) w = u_w . grad omega0, u_w = (psi_y, -psi_x)
    x, y = sp.symbols("x y", real=True)
    u = kolmogorov(2, amp=1.0, extra=[((1, 1), 0.2 - 0.1j)])
    L = u.lattice
    K = k_matrix(u).entries
    l, m = (1, 0), (2, 1)
    k = (m[0] - l[0], m[1] - l[1])
    psi_l = sp.exp(sp.I * (l[0] * x + l[1] * y)) / (2 * sp.pi * sp.sqrt(l[0] ** 2 + l[1] ** 2))
    theta0 = complex(u.coefficients[L.index[k]]) * sp.exp(sp.I * (k[0] * x + k[1] * y))  # omega0 at k
    bracket = sp.diff(psi_l, y) * sp.diff(theta0, x) - sp.diff(psi_l, x) * sp.diff(theta0, y)
    coeff = sp.simplify(bracket / sp.exp(sp.I * (m[0] * x + m[1] * y)))
    absm = np.hypot(*m)
    want = complex(sp.N(coeff)) / absm**2 * 2 * np.pi * absm
    assert_allclose(K[L.index[m], L.index[l]], want, atol=1e-14)


# -- geodesics and Jacobi fields -------------------------------------------------


def test_kolmogorov_is_stationary_and_conservative():
    u = kolmogorov(4, amp=1.0)
    tr = integrate_geodesic(u, 0.5, 0.01, transport=False, jacobi=False)
    assert tr.energy_drift() < 1e-12 and tr.enstrophy_drift() < 1e-12
    assert np.max(abs(tr.states - tr.states[0])) < 1e-12


@pytest.mark.parametrize("r,beta,kind", GEOMETRIES)
def test_conservation_and_reality_for_generic_data(r, beta, kind):
    u = random_state(3, 4, amp=0.5, r=r, kind=kind, beta=beta)
    tr = integrate_geodesic(u, 0.5, 0.01, transport=False, jacobi=False)
    assert tr.energy_drift() < 1e-9 and tr.enstrophy_drift() < 1e-9
    assert tr.final.is_real(1e-12)


def test_step_halving():
    u = random_state(3, 9, amp=0.5)
    coarse, fine = step_halving_check(u, 0.48, 0.04), step_halving_check(u, 0.48, 0.02)
    assert fine < 1e-7
    assert 12 < coarse / fine < 20  # fourth order


def test_transport_conserves_momentum():
    # A^H u(t) = u0: the momentum transported back to the identity is conserved
    u = random_state(3, 6, amp=0.5)
    tr = integrate_geodesic(u, 0.5, 0.01, jacobi=False, matrix_stride=50)
    a0 = u.velocity_coefficients()
    at = tr.final.velocity_coefficients()
    assert_allclose(tr.A[-1].conj().T @ at, a0, atol=1e-9)


def test_transport_of_stationary_state_is_matrix_exponential():
    u = kolmogorov(3, amp=1.0)
    tr = integrate_geodesic(u, 1.0, 0.005, jacobi=False, matrix_stride=200)
    want = sla.expm(ad_matrix(u).entries)
    assert np.max(abs(tr.A[-1] - want)) < 1e-8


def test_zero_velocity_gives_t_identity():
    u = ScalarState(WaveLattice(2), np.zeros(24))
    tr = integrate_geodesic(u, 1.0, 0.1, matrix_stride=5)
    for t, P in zip(tr.matrix_times, tr.Phi):
        assert_allclose(P, t * np.eye(24), atol=1e-14)


def test_decomposition_and_gamma_quadrature():
    u = random_state(2, 3, amp=0.8)
    tr = integrate_geodesic(u, 1.0, 0.01, matrix_stride=1)
    assert np.max(tr.decomposition_residual) < 1e-13
    K = k_matrix(u).entries
    q1 = gamma_quadrature_check(tr, K)
    tr2 = integrate_geodesic(u, 1.0, 0.01, matrix_stride=2)
    q2 = gamma_quadrature_check(tr2, K)
    assert q1 < 1e-4 and 3 < q2 / q1 < 5  # trapezoid error is second order


def test_jacobi_sign_against_finite_differences():
    u = kolmogorov(3, amp=1.0)
    tr = integrate_geodesic(u, 1.0, 0.01, matrix_stride=100)
    Z = dexp_fd_oracle(u, 1.0)
    P, O, G = tr.Phi[-1], tr.Omega[-1], tr.Gamma[-1]
    scale = np.max(abs(P))
    assert np.max(abs(Z - P)) / scale < 1e-6
    assert np.max(abs(Z - (O - G))) / scale > 0.1


def test_oracle_of_zero_velocity():
    u = ScalarState(WaveLattice(2), np.zeros(24))
    assert_allclose(dexp_fd_oracle(u, 0.5, eps=1e-3, dt=0.05), 0.5 * np.eye(24), atol=1e-12)


def test_oracle_gap_for_generic_data_is_quadratic_in_amplitude():
    # the remaining gap is a Galerkin truncation effect, not finite-difference error
    gaps = []
    for amp in (0.1, 0.05):
        u = random_state(3, 2, amp=amp)
        tr = integrate_geodesic(u, 1.0, 0.01, matrix_stride=100)
        Z = dexp_fd_oracle(u, 1.0)
        P = tr.Phi[-1]
        gaps.append(np.max(abs(Z - P)) / np.max(abs(P)))
    assert gaps[0] < 1e-3
    assert_allclose(gaps[0] / gaps[1], 4.0, rtol=0.05)


def test_guards():
    u = kolmogorov(3, amp=1.0)
    with pytest.raises(ValidationError):
        integrate_geodesic(u, 1.0, 0.3)  # stability bound
    with pytest.raises(ValidationError):
        integrate_geodesic(u, 1.0, 0.03)  # not a multiple
    bad = ScalarState(WaveLattice(2, 0.3), np.zeros(24))
    with pytest.raises(ValidationError):
        integrate_geodesic(bad, 1.0, 0.1)
    with pytest.raises(IllConditionedError):
        build_lambda(np.diag([1.0, 1e-7]))
    assert_allclose(build_lambda(2 * np.eye(3)).entries, 4 * np.eye(3))


# -- regularized determinants and scans --------------------------------------------


def test_regularized_det_examples():
    assert regularized_det(np.zeros((4, 4)), 3) == 1
    v = np.array([1.0, 2.0, -1.0])
    w = np.array([0.5, 0.0, 1.0])
    T = np.outer(v, w) * (-1 / np.dot(w, v))
    assert regularized_det(T, 1) == 0 and regularized_det(T, 3) == 0
    lam = 0.7
    T = np.outer(v, w) * (lam / np.dot(w, v))
    assert_allclose(regularized_det(T, 3), (1 + lam) * np.exp(-lam + lam**2 / 2))
    # truncated log-series oracle det(I+T) exp(-tr T + tr T^2 / 2)
    rng = np.random.default_rng(3)
    T = 0.3 * rng.normal(size=(6, 6))
    series = np.linalg.det(np.eye(6) + T) * np.exp(-np.trace(T) + np.trace(T @ T) / 2)
    assert_allclose(regularized_det(T, 3), series, rtol=1e-12)
    assert_allclose(regularized_det(T, 1), np.linalg.det(np.eye(6) + T), rtol=1e-12)


def test_log_regularized_det_matches_direct():
    rng = np.random.default_rng(4)
    O = np.eye(5) + 0.2 * rng.normal(size=(5, 5))
    P = O + 0.3 * rng.normal(size=(5, 5))
    ph, la = log_regularized_det(P, O, 3)
    d = regularized_det(np.linalg.solve(O, P) - np.eye(5), 3)
    assert_allclose(ph * np.exp(la), d, rtol=1e-12)


def test_scan_small_data_has_no_zeros():
    u = random_state(2, 8, amp=0.1)
    rep = conjugate_scan(u, 1.0, 0.05)
    assert rep.zeros == []
    assert abs(rep.rows().__next__()[3] - 1.0) < 1e-15


def test_scan_finds_symmetric_double_points():
    u = kolmogorov(3, amp=6.0)
    rep = conjugate_scan(u, 2.8, 0.01)
    ts = [z.t for z in rep.zeros]
    assert len(ts) == 2
    assert_allclose(ts, [2.38809, 2.69159], atol=1e-3)
    assert all(z.sigma_min < 1e-8 for z in rep.zeros)
    assert ConjugatePoint.from_json(rep.zeros[0].to_json()).t == rep.zeros[0].t


def test_scan_sign_changes_agree_with_oracle():
    u = perturbed_kolmogorov(3, pert=0.01)
    rep = conjugate_scan(u, 2.8, 0.01)
    found, _, _ = oracle_crossings(u, 2.8, 0.01)
    assert len(rep.zeros) == len(found) == 3
    for z, (t, _) in zip(rep.zeros, found):
        assert abs(z.t - t) <= 0.01


# -- chart ----------------------------------------------------------------------------


def test_chart_zero_and_single_mode():
    L = WaveLattice(3)
    zero = ScalarState(L, np.zeros(len(L)))
    sol = chart_solve(zero)
    assert sol.residual == 0 and np.max(abs(sol.phi_hat)) == 0
    single = ScalarState.from_modes(L, [((1, 2), 0.01)])
    sol = chart_solve(single)
    assert sol.residual <= 1e-10


def test_chart_two_modes_against_pointwise_determinant():
    u = kolmogorov(3, amp=1e-2, extra=[((1, 0), 5e-3)])
    sol = chart_solve(u, tol=1e-10)
    assert sol.iterations <= 30
    assert chart_residual(u, sol.phi_hat) <= 1e-10
    assert np.max(abs(sol.phi_values())) > 0


def test_chart_large_velocity_fails():
    with pytest.raises(NonContractionError):
        chart_solve(kolmogorov(3, amp=10.0))
