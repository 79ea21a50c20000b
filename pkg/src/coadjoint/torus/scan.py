"""Regularized determinants, conjugate-point scans and a finite-difference dexp oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import NumericalError, ValidationError
from .galerkin import ad_entries, triad_table
from .geodesic import DEFAULT_STABILITY_BOUND, _Stepper, check_consistent, velocity_bound
from .lattice import ScalarState

DET_SNAP_RTOL = 1e-10
SIGMA_THRESHOLD = 1e-8
GOLDEN = (math.sqrt(5) - 1) / 2


def _log_series(lam: np.ndarray, p: int) -> np.ndarray:
    s = np.zeros_like(lam, dtype=complex)
    for j in range(1, p):
        s = s + (-1) ** j * lam**j / j
    return s


def regularized_det(T, p: int = 1, snap_rtol: float = DET_SNAP_RTOL) -> complex:
    """``det_p(T) = prod (1 + lam) exp(sum_{j<p} (-1)^j lam^j / j)`` over the eigenvalues of ``T``.

    Returns exactly ``0`` when ``Id + T`` is numerically singular, i.e.
    ``sigma_min(Id + T) <= snap_rtol * sigma_max(Id + T)``.
    """
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValidationError("regularized_det needs a square matrix")
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValidationError("p must be an integer >= 1")
    if T.size == 0:
        return 1 + 0j
    s = np.linalg.svd(np.eye(T.shape[0]) + T, compute_uv=False)
    if s[-1] <= snap_rtol * s[0]:
        return 0j
    try:
        lam = np.linalg.eigvals(T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed: {exc}") from exc
    return complex(np.prod(1 + lam) * np.exp(np.sum(_log_series(lam, p))))


def log_regularized_det(Phi: np.ndarray, Omega: np.ndarray, p: int = 3):
    """``(phase, log|d|)`` of ``d = det_p(Omega^-1 Gamma)`` with ``Gamma = Phi - Omega``.

    Works in logarithms because ``|d|`` underflows for moderate lattice sizes.
    """
    s1, l1 = np.linalg.slogdet(Phi)
    s2, l2 = np.linalg.slogdet(Omega)
    phase, logabs = s1 / s2, l1 - l2
    if p > 1:
        T = np.linalg.solve(Omega, Phi) - np.eye(Phi.shape[0])
        corr, Tj = 0j, np.eye(T.shape[0], dtype=complex)
        for j in range(1, p):
            Tj = Tj @ T
            corr += (-1) ** j * np.trace(Tj) / j
        logabs += corr.real
        phase *= np.exp(1j * corr.imag)
    return complex(phase), float(logabs)


@dataclass
class ConjugatePoint:
    t: float
    sigma_min: float
    det: float
    detection: str
    witness: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {"t": self.t, "sigma_min": self.sigma_min, "det": self.det, "detection": self.detection}

    @classmethod
    def from_json(cls, d: dict) -> "ConjugatePoint":
        return cls(d["t"], d["sigma_min"], d["det"], d["detection"])


@dataclass
class ScanReport:
    zeros: List[ConjugatePoint]
    times: np.ndarray
    det_phase: np.ndarray
    det_logabs: np.ndarray
    sigma_ratio: np.ndarray
    energy: np.ndarray
    enstrophy: np.ndarray
    dt: float
    N: int
    r: float
    p: int

    def to_json(self) -> dict:
        return {
            "zeros": [z.to_json() for z in self.zeros],
            "resolution": self.dt,
            "refinement": self.dt * 1e-3,
            "N": self.N,
            "r": self.r,
            "p": self.p,
            "steps": len(self.times) - 1,
        }

    def rows(self):
        for t, e, z, ph, la, s in zip(self.times, self.energy, self.enstrophy, self.det_phase,
                                      self.det_logabs, self.sigma_ratio):
            yield float(t), float(e), float(z), signed_exp(ph.real, la), float(s)


def signed_exp(sign: float, logabs: float) -> float:
    """``sign * exp(logabs)`` saturating to ``0`` or ``+-inf`` instead of raising."""
    if logabs < -745:
        return 0.0
    if logabs > 709:
        return math.copysign(math.inf, sign)
    return float(sign * math.exp(logabs))


def _sigma(Phi):
    s = np.linalg.svd(Phi, compute_uv=False)
    return s[-1] / s[0]


def _witness(Phi):
    _, s, vh = np.linalg.svd(Phi)
    return vh[-1].conj()


def _golden_min(f, a, b, tol):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _prepare(u0: ScalarState, t_max: float, dt: float, stability_bound: float):
    check_consistent(u0)
    if dt <= 0 or t_max <= 0:
        raise ValidationError("need dt > 0 and t_max > 0")
    cfl = dt * u0.lattice.N * velocity_bound(u0)
    if cfl > stability_bound:
        raise ValidationError(f"dt*N*|u0| = {cfl:.3g} exceeds the stability bound {stability_bound}")
    steps = int(round(t_max / dt))
    if abs(steps * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValidationError("t_max must be an integer multiple of dt")
    return steps


def conjugate_scan(
    u0: ScalarState,
    t_max: float,
    dt: float = 0.01,
    *,
    p: int = 3,
    threshold: float = SIGMA_THRESHOLD,
    candidate_ratio: float = 1e-2,
    stability_bound: float = DEFAULT_STABILITY_BOUND,
) -> ScanReport:
    """Scan ``(0, t_max]`` for zeros of ``d(t) = det_p(Omega^-1 Gamma)``.

    A zero is reported when the real part of ``d`` changes sign between two
    steps (refined by bisection to ``dt * 1e-3``), or when a local minimum of
    ``sigma_min(Phi) / sigma_max(Phi)`` refined by golden-section search drops
    below ``threshold``.  The second route catches zeros of even multiplicity,
    which symmetric data produce and at which ``d`` does not change sign.
    """
    steps = _prepare(u0, t_max, dt, stability_bound)
    L = u0.lattice
    n = len(L)
    stepper = _Stepper(u0, jacobi=True)
    z = np.zeros((n, n), dtype=complex)
    y = (u0.coefficients.copy(), np.eye(n, dtype=complex), z, z.copy(), z.copy())

    times, phases, logs, ratios, energy, enstrophy = [0.0], [1 + 0j], [0.0], [1.0], [], []
    probe = ScalarState(L, y[0], u0.kind, u0.beta)
    energy.append(probe.energy())
    enstrophy.append(probe.enstrophy())
    zeros: List[ConjugatePoint] = []
    prev2 = None  # (t, y) two steps back

    def real_det(yy):
        ph, la = log_regularized_det(yy[2], yy[3], p)
        return ph.real, la

    def report(t, yy, how):
        if any(abs(t - zp.t) <= dt for zp in zeros):
            return
        ph, la = log_regularized_det(yy[2], yy[3], p)
        zeros.append(ConjugatePoint(t, float(_sigma(yy[2])), signed_exp(ph.real, la), how, _witness(yy[2])))

    for i in range(1, steps + 1):
        y_prev, t_prev = y, (i - 1) * dt
        y = stepper.step(y, dt)
        t = i * dt
        if not np.all(np.isfinite(y[0])):
            raise NumericalError(f"non-finite state at t={t:.6g}")
        ph, la = log_regularized_det(y[2], y[3], p)
        ratio = _sigma(y[2])
        times.append(t)
        phases.append(ph)
        logs.append(la)
        ratios.append(ratio)
        probe = ScalarState(L, y[0], u0.kind, u0.beta)
        energy.append(probe.energy())
        enstrophy.append(probe.enstrophy())

        # sign change of Re d between t_prev and t; at t_prev = 0 Phi vanishes
        if i > 1 and np.sign(phases[-2].real) * np.sign(ph.real) < 0:
            a, b, sa = 0.0, dt, np.sign(phases[-2].real)
            while b - a > dt * 1e-3:
                mid = 0.5 * (a + b)
                sm, _ = real_det(stepper.step(y_prev, mid))
                if np.sign(sm) == sa:
                    a = mid
                else:
                    b = mid
            tm = 0.5 * (a + b)
            report(t_prev + tm, stepper.step(y_prev, tm), "sign-change")

        # local minimum of the singular-value ratio at the previous step
        if i >= 2 and ratios[-2] < ratios[-3] and ratios[-2] <= ratios[-1] and ratios[-2] < candidate_ratio:
            t0, y0 = prev2
            f = lambda tau: _sigma(stepper.step(y0, tau)[2])
            tau, fmin = _golden_min(f, 0.0, 2 * dt, dt * 1e-9)
            if fmin < threshold:
                report(t0 + tau, stepper.step(y0, tau), "singular-minimum")
        prev2 = (t_prev, y_prev)

    zeros.sort(key=lambda zp: zp.t)
    return ScanReport(
        zeros=zeros,
        times=np.array(times),
        det_phase=np.array(phases),
        det_logabs=np.array(logs),
        sigma_ratio=np.array(ratios),
        energy=np.array(energy),
        enstrophy=np.array(enstrophy),
        dt=dt,
        N=L.N,
        r=L.r,
        p=p,
    )


# -- finite-difference oracle --------------------------------------------------


class _OracleStepper:
    """RK4 for the base state, ``A``, the perturbed states ``u0 +- eps e_j`` and ``Z' = A^-1 du``.

    ``Z(t) = int_0^t A^-1 du`` is the left-trivialized variation of the
    geodesic, ``du`` being the central difference of the velocities.
    """

    def __init__(self, u0: ScalarState, eps: float):
        L = u0.lattice
        self.L, self.eps = L, eps
        self.tab = triad_table(L, u0.beta)
        self.psi_factor = L.abs_k ** (u0.beta - 2)
        self.vel = (self.psi_factor * L.norm)[:, None]

    def initial(self, u0: ScalarState):
        L, n = self.L, len(self.L)
        a0 = u0.velocity_coefficients()
        to_c = (1 / self.vel)
        Cp = to_c * (a0[:, None] + self.eps * np.eye(n))
        Cm = to_c * (a0[:, None] - self.eps * np.eye(n))
        return (u0.coefficients.astype(complex), np.eye(n, dtype=complex), Cp, Cm, np.zeros((n, n), complex))

    def derivs(self, y):
        c, A, Cp, Cm, Z = y
        ad = ad_entries(c * self.psi_factor, self.L)
        dU = self.vel * (Cp - Cm) / (2 * self.eps)
        return self.tab.apply(c), ad @ A, self.tab.apply(Cp), self.tab.apply(Cm), np.linalg.solve(A, dU)

    def step(self, y, h):
        k1 = self.derivs(y)
        k2 = self.derivs(tuple(a + 0.5 * h * b for a, b in zip(y, k1)))
        k3 = self.derivs(tuple(a + 0.5 * h * b for a, b in zip(y, k2)))
        k4 = self.derivs(tuple(a + h * b for a, b in zip(y, k3)))
        return tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def _default_eps(u0: ScalarState) -> float:
    scale = float(np.max(np.abs(u0.velocity_coefficients()), initial=0.0))
    return 1e-4 * max(scale, 1.0)


def dexp_fd_oracle(
    u0: ScalarState,
    t: float,
    eps: Optional[float] = None,
    dt: float = 0.01,
    *,
    richardson_rtol: float = 1e-4,
) -> np.ndarray:
    """Finite-difference matrix comparable to ``Phi(t)``.

    Column ``j`` is ``int_0^t A^-1 du_j`` where ``du_j`` is the central
    difference of the geodesic velocities started at ``u0 +- eps e_j``.  The
    computation is repeated with ``eps/2``; disagreement beyond
    ``richardson_rtol`` (relative) raises :class:`NumericalError`.
    """
    eps = _default_eps(u0) if eps is None else float(eps)
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if t == 0:
        return np.zeros((len(u0.lattice),) * 2, dtype=complex)
    steps = _prepare(u0, t, dt, DEFAULT_STABILITY_BOUND)
    out = []
    for e in (eps, eps / 2):
        st = _OracleStepper(u0, e)
        y = st.initial(u0)
        for _ in range(steps):
            y = st.step(y, dt)
        out.append(y[4])
    Z1, Z2 = out
    scale = max(np.max(np.abs(Z2)), 1e-300)
    gap = float(np.max(np.abs(Z1 - Z2)) / scale)
    if gap > richardson_rtol:
        raise NumericalError(f"finite-difference step misconfigured: eps and eps/2 differ by {gap:.2e}")
    # Richardson extrapolation of the O(eps^2) central-difference error
    return (4 * Z2 - Z1) / 3


def oracle_crossings(
    u0: ScalarState,
    t_max: float,
    dt: float = 0.01,
    eps: Optional[float] = None,
    threshold: float = 1e-4,
    candidate_ratio: float = 1e-2,
):
    """Times where ``sigma_min/sigma_max`` of the oracle matrix has a refined local minimum below ``threshold``.

    Returns ``(crossings, times, ratios)``.
    """
    steps = _prepare(u0, t_max, dt, DEFAULT_STABILITY_BOUND)
    eps = _default_eps(u0) if eps is None else float(eps)
    st = _OracleStepper(u0, eps)
    y = st.initial(u0)
    times, ratios, crossings = [0.0], [1.0], []
    prev2 = None
    prev = (0.0, y)
    for i in range(1, steps + 1):
        y = st.step(y, dt)
        times.append(i * dt)
        ratios.append(_sigma(y[4]))
        if i >= 2 and ratios[-2] < ratios[-3] and ratios[-2] <= ratios[-1] and ratios[-2] < candidate_ratio:
            t0, y0 = prev2
            tau, fmin = _golden_min(lambda s: _sigma(st.step(y0, s)[4]), 0.0, 2 * dt, dt * 1e-9)
            if fmin < threshold:
                crossings.append((t0 + tau, fmin))
        prev2, prev = prev, (i * dt, y)
    return crossings, np.array(times), np.array(ratios)
