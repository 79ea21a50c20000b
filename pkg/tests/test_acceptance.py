"""Acceptance criteria, one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are written to the
terminal even when output capture is on.
"""

import math
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg as sla
import sympy as sp

from coadjoint.algebra import GaussianRational, bracket_e1, curl_frame, divergence_frame
from coadjoint.cli import run
from coadjoint.s3basis import build_grading, exact_rank, hopf_apply_r0, set_bracket_check
from coadjoint.spectra import (
    catalog_s2,
    catalog_s3,
    essential_radius,
    nondecay_density,
    partial_sums,
    schatten_report,
)
from coadjoint.torus import (
    ScalarState,
    WaveLattice,
    ad_matrix,
    chart_solve,
    conjugate_scan,
    integrate_geodesic,
    regularized_det,
)
from coadjoint.torus.chart import chart_residual
from coadjoint.torus.scan import oracle_crossings
from coadjoint.errors import NonContractionError
from conftest import kolmogorov, perturbed_kolmogorov

# tolerances pinned from the criteria
C1_RUNTIME = 120.0
C2_LMAX = 100
C4_TOL = 1e-12
C4_DENSITY_TOL = 1e-3
C4_RUNTIME = 10.0
C5_TOL = 1e-8
C6_EXPM_TOL = 1e-8
C6_RUNTIME = 300.0
C7_TOL = 1e-10
C8_NONZERO = 1e-6


@pytest.fixture
def emit(capsys):
    def _emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return _emit


def test_criterion_1_exact_basis_verification(emit):
    t0 = time.perf_counter()
    curl_ok = div_ok = weight_bracket_ok = counts_ok = rank_ok = True
    set_bracket_failures = {}
    for k in range(9):
        els = build_grading(k, verify=False)
        for el in els:
            w = el.field
            curl_ok &= curl_frame(w) == w.scale(el.curl_eig) and el.curl_eig in (k + 2, -k)
            div_ok &= divergence_frame(w).is_zero()
            weight_bracket_ok &= bracket_e1(w) == w.scale(GaussianRational(0, -(2 * el.weight - k)))
        n_e = sum(el.family == "E" for el in els)
        n_f = sum(el.family == "F" for el in els)
        if k == 0:
            counts_ok &= (n_e, n_f, len(els)) == (3, 0, 3)
        else:
            counts_ok &= (n_e, n_f, len(els)) == ((k + 3) * (k + 1), (k + 1) * (k - 1), 2 * (k + 1) ** 2)
        rank_ok &= exact_rank([el.field for el in els]) == len(els)
        bad = set_bracket_check(els)
        if bad:
            set_bracket_failures[k] = len(bad)
    elapsed = time.perf_counter() - t0
    literal_ok = not set_bracket_failures
    ok = curl_ok and div_ok and counts_ok and rank_ok and literal_ok and elapsed <= C1_RUNTIME
    emit("C1 exact S^3 basis, k <= 8", ok,
         f"curl={curl_ok} div={div_ok} counts={counts_ok} rank=cardinality:{rank_ok} "
         f"bracket with verified weight={weight_bracket_ok}; bracket -i(2m-k) with set index m fails for "
         f"{sum(set_bracket_failures.values())} elements {set_bracket_failures}; {elapsed:.1f}s")
    assert curl_ok and div_ok and counts_ok and rank_ok and weight_bracket_ok
    assert elapsed <= C1_RUNTIME
    # literal form: [v, e1] = -i(2m - k) v with m the index of the set E_k^m
    assert literal_ok, f"set-index bracket relation fails: {set_bracket_failures}"


def test_criterion_2_rotation_spectrum(emit, capsys):
    cat = catalog_s2(0, C2_LMAX)
    exact = all(
        e.exact_at_integer_exponent() == Fraction(e.m) * Fraction(2, e.level * (e.level + 1))
        for e in cat.entries
    )
    # analytic log coefficient: lim l * (level sum of |lambda|^2)
    l, m = sp.symbols("l m", positive=True, integer=True)
    level = sp.summation(m**2 * (2 / (l * (l + 1))) ** 2, (m, -l, l))
    c = sp.limit(l * level, l, sp.oo)
    s = partial_sums(cat, 2)[-1]
    witness = s > 0.9 * float(c) * math.log(C2_LMAX)
    rep = schatten_report(cat, 2.2)
    certified = rep.verdict == "converges" and math.isfinite(rep.tail_upper)
    code = run(["threshold", "--dim", "2", "--r", "0"])
    printed = capsys.readouterr().out
    ok = exact and c == sp.Rational(8, 3) and witness and certified and code == 0 and printed == "2\n"
    emit("C2 rotation spectrum", ok,
         f"closed form exact for l <= {C2_LMAX}: {exact}; c = {c}; S_2({C2_LMAX}) = {s:.4f} vs "
         f"0.9 c log l = {0.9 * float(c) * math.log(C2_LMAX):.4f}; p = 2.2 sum in "
         f"[{rep.partial_sum + rep.tail_lower:.4f}, {rep.partial_sum + rep.tail_upper:.4f}]; threshold -> {printed.strip()}")
    assert ok


def test_criterion_3_hopf_spectrum(emit):
    cat = catalog_s3(0, 6)
    mismatches = 0
    mult_ok = True
    for k in range(7):
        table = {(e.family, e.m): e for e in cat.level_entries(k)}
        els = build_grading(k)
        for el in els:
            e = table[(el.family, el.weight)]
            want = el.field.scale(GaussianRational(0, 2 * e.q.numerator, e.d * e.q.denominator))
            mismatches += hopf_apply_r0(el.field) != want
        counts = Counter((el.family, el.weight) for el in els)
        mult_ok &= counts == Counter({key: e.multiplicity for key, e in table.items()})
    v15 = schatten_report(catalog_s3(1, 200), 1.5).verdict
    v16 = schatten_report(catalog_s3(1, 200), 1.6).verdict
    ok = mismatches == 0 and mult_ok and v15 == "diverges" and v16 == "converges"
    emit("C3 Hopf spectrum", ok,
         f"K_0(e1) on every basis element k <= 6: {mismatches} mismatches, multiplicities {mult_ok}; "
         f"r=1: p=1.5 {v15}, p=1.6 {v16}")
    assert ok


def test_criterion_4_noncompactness(emit):
    t0 = time.perf_counter()
    l, k = sp.symbols("l k", positive=True)
    sqg_limit = sp.limit(l * (2 / (l * (l + 1))) ** sp.Rational(1, 2), l, sp.oo)
    hopf_e = sp.limit((k + 2) * (2 / (k + 2)), k, sp.oo)
    hopf_f = sp.limit((k - 2) * (2 / k), k, sp.oo)
    r_sqg = essential_radius(catalog_s2("-1/2", 1))
    hopf_cat = catalog_s3(0, 4)
    r_hopf = essential_radius(hopf_cat)
    k0 = sorted(e.modulus for e in hopf_cat.level_entries(0))
    sup_all = max(e.modulus for e in hopf_cat.entries)
    radius_ok = (abs(r_sqg - float(sqg_limit)) <= C4_TOL and abs(r_sqg - math.sqrt(2)) <= C4_TOL
                 and abs(r_hopf - float(max(hopf_e, hopf_f))) <= C4_TOL and abs(r_hopf - 2) <= C4_TOL
                 and k0 == [0.0, 2.0, 2.0] and abs(sup_all - r_hopf) <= C4_TOL)
    dens = {eps: nondecay_density(10_000, eps) for eps in (0.2, 0.5, 1.0)}
    dens_ok = all(abs(rho - 1 + eps / math.sqrt(2)) <= C4_DENSITY_TOL for eps, (rho, _) in dens.items())
    elapsed = time.perf_counter() - t0
    ok = radius_ok and dens_ok and elapsed <= C4_RUNTIME
    emit("C4 non-compactness", ok,
         f"mu_H = r_e = {r_sqg!r} (SQG), {r_hopf!r} (Hopf, k=0 moduli {k0}); "
         f"rho(1e4, eps) = {', '.join(f'{e}:{v[0]:.4f}' for e, v in dens.items())}; {elapsed:.2f}s")
    assert ok


def test_criterion_5_galerkin_conservation(emit):
    u = kolmogorov(8, amp=1.0)
    tr = integrate_geodesic(u, 1.0, 0.01, transport=False, jacobi=False)
    de, dz = tr.energy_drift(), tr.enstrophy_drift()
    ds = float(np.max(np.abs(tr.states - tr.states[0])))
    ok = de <= C5_TOL and dz <= C5_TOL and ds <= C5_TOL
    emit("C5 Galerkin conservation", ok, f"energy drift {de:.2e}, enstrophy drift {dz:.2e}, state change {ds:.2e}")
    assert ok


def _match(scan_times, oracle_times, dt):
    """Largest distance from each scan time to the nearest oracle time, and vice versa."""
    if not scan_times and not oracle_times:
        return 0.0
    if not scan_times or not oracle_times:
        return math.inf
    a = max(min(abs(s - o) for o in oracle_times) for s in scan_times)
    b = max(min(abs(s - o) for s in scan_times) for o in oracle_times)
    return max(a, b)


def test_criterion_6_jacobi_consistency(emit):
    t0 = time.perf_counter()
    # Phi = Omega + Gamma along generic and stationary trajectories
    resid = 0.0
    for u in (perturbed_kolmogorov(4, amp=2.0, pert=0.1), kolmogorov(6, amp=1.0)):
        tr = integrate_geodesic(u, 1.0, 0.01, matrix_stride=10)
        resid = max(resid, float(np.max(tr.decomposition_residual)))
    # u0 = 0
    L = WaveLattice(6)
    tr = integrate_geodesic(ScalarState(L, np.zeros(len(L))), 1.0, 0.05, matrix_stride=4)
    zero_err = max(float(np.max(np.abs(P - t * np.eye(len(L))))) for t, P in zip(tr.matrix_times, tr.Phi))
    # stationary u0: A(1) against expm(ad_u0)
    u = kolmogorov(6, amp=1.0)
    tr = integrate_geodesic(u, 1.0, 0.0025, jacobi=False, matrix_stride=400)
    expm_err = float(np.max(np.abs(tr.A[-1] - sla.expm(ad_matrix(u).entries))))
    # conjugate times against the finite-difference oracle
    dt = 0.01
    cases = [
        ("N=3 cos", kolmogorov(3, amp=6.0), 2.8),
        ("N=3 pert 0.01", perturbed_kolmogorov(3, pert=0.01), 2.8),
        ("N=3 pert 0.05", perturbed_kolmogorov(3, pert=0.05), 3.0),
        ("N=6 cos", kolmogorov(6, amp=6.0), 3.6),
    ]
    gaps, found = {}, {}
    for name, u0, tmax in cases:
        scan_t = [z.t for z in conjugate_scan(u0, tmax, dt).zeros]
        oracle_t = [t for t, _ in oracle_crossings(u0, tmax, dt)[0]]
        gaps[name] = _match(scan_t, oracle_t, dt)
        found[name] = [round(t, 4) for t in scan_t]
    elapsed = time.perf_counter() - t0
    gap_ok = all(g <= dt for g in gaps.values()) and all(found.values())
    ok = resid <= 1e-12 and zero_err <= 1e-12 and expm_err <= C6_EXPM_TOL and gap_ok and elapsed <= C6_RUNTIME
    emit("C6 Jacobi machinery", ok,
         f"|Phi-Omega-Gamma| {resid:.1e}; |Phi - tI| {zero_err:.1e}; |A(1) - expm| {expm_err:.1e}; "
         f"conjugate times {found}; max gap / dt {max(gaps.values()) / dt:.2f}; {elapsed:.0f}s")
    assert ok


def test_criterion_7_chart_solver(emit):
    L = WaveLattice(8)
    v = ScalarState.from_modes(L, [((0, 1), 0.5e-2)])  # velocity amplitude 1e-2
    sol = chart_solve(v, tol=C7_TOL, grid=64)
    oracle = chart_residual(v, sol.phi_hat)
    raised = False
    try:
        chart_solve(ScalarState.from_modes(L, [((0, 1), 5.0)]), grid=64)
    except NonContractionError:
        raised = True
    ok = sol.residual <= C7_TOL and oracle <= C7_TOL and sol.iterations <= 30 and raised
    emit("C7 chart solver", ok,
         f"amplitude 1e-2: residual {sol.residual:.1e} (pointwise det oracle {oracle:.1e}) after "
         f"{sol.iterations} iterations; amplitude 10 non-contraction raised: {raised}")
    assert ok


def test_criterion_8_regularized_determinant(emit):
    rng = np.random.default_rng(2024)
    n = 20
    zero_hits = nonzero_hits = 0
    smallest = math.inf
    for trial in range(100):
        p = int(rng.integers(1, 4))
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        S = Q @ np.diag(rng.uniform(0.5, 2.0, n))
        lam = 0.5 * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        lam[0] = -1.0
        T = S @ np.diag(lam) @ np.linalg.inv(S)
        zero_hits += regularized_det(T, p) == 0
        lam[0] = 0.5 * np.exp(2j * np.pi * rng.uniform())
        T = S @ np.diag(lam) @ np.linalg.inv(S)
        d = abs(regularized_det(T, p))
        smallest = min(smallest, d)
        nonzero_hits += d > C8_NONZERO
    ok = zero_hits == 100 and nonzero_hits == 100
    emit("C8 regularized determinant", ok,
         f"planted -1: {zero_hits}/100 exact zeros; spectrum away from -1: {nonzero_hits}/100 with |det_p| > 1e-6 "
         f"(smallest {smallest:.2e})")
    assert ok
