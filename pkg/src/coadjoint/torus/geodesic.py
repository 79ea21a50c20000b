"""Galerkin geodesics together with the transport and Jacobi operators.

Along a geodesic with velocity ``u(t)`` the following are advanced by one
classical Runge-Kutta step at a time, sharing the stages:

* the scalar ``c`` (vorticity or active scalar) by :func:`galerkin_rhs`;
* the transport matrix ``A' = ad_u A``, ``A(0) = I``, standing in for ``Ad_gamma``;
* ``Phi' = Lambda^-1 - Lambda^-1 K Phi`` with ``Lambda = A^H A`` and ``K = K(u0)``;
* ``Omega' = Lambda^-1`` and ``Gamma' = -Lambda^-1 K Phi``.

The right-hand sides of ``Omega`` and ``Gamma`` add up to that of ``Phi``, so
``Phi = Omega + Gamma`` is preserved by every step up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg as sla

from ..errors import BlowUpError, IllConditionedError, ValidationError
from .galerkin import TruncatedOperatorMatrix, ad_entries, k_entries, triad_table
from .lattice import ScalarState

DEFAULT_STABILITY_BOUND = 2.0
DEFAULT_MAX_CONDITION = 1e12


def velocity_bound(state: ScalarState) -> float:
    """``sum |k| |psi_k|``, an upper bound for ``sup |u|``."""
    return float(np.sum(state.lattice.abs_k * np.abs(state.stream)))


def check_consistent(state: ScalarState):
    if abs(state.lattice.r + state.beta / 2) > 1e-12:
        raise ValidationError(
            f"metric order r={state.lattice.r} does not match beta={state.beta} (need r = -beta/2)"
        )


def lambda_inverse(A: np.ndarray) -> np.ndarray:
    """``(A^H A)^-1`` through one LU factorization of ``A``."""
    lu = sla.lu_factor(A, check_finite=False)
    eye = np.eye(A.shape[0], dtype=complex)
    return sla.lu_solve(lu, sla.lu_solve(lu, eye, trans=2, check_finite=False), check_finite=False)


def build_lambda(A, r: float = 0.0, max_condition: float = DEFAULT_MAX_CONDITION) -> TruncatedOperatorMatrix:
    """``Lambda = A^H A``; raises :class:`IllConditionedError` when ``cond(Lambda)`` is too large."""
    A = np.asarray(A, dtype=complex)
    s = np.linalg.svd(A, compute_uv=False)
    cond = np.inf if s[-1] == 0 else (s[0] / s[-1]) ** 2
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedError(f"Lambda is ill-conditioned (cond = {cond:.3e})", condition=float(cond))
    L = A.conj().T @ A
    return TruncatedOperatorMatrix(0.5 * (L + L.conj().T), r, "Lambda")


@dataclass
class GeodesicTrajectory:
    """Time samples of a Galerkin geodesic and its operators.

    ``states[i]`` is the scalar at ``times[i]``; ``A``, ``Phi``, ``Omega``,
    ``Gamma`` are stored at ``matrix_times`` only.
    """

    lattice: object
    kind: str
    beta: float
    dt: float
    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    enstrophy: np.ndarray
    matrix_times: np.ndarray
    A: List[np.ndarray] = field(default_factory=list)
    Phi: List[np.ndarray] = field(default_factory=list)
    Omega: List[np.ndarray] = field(default_factory=list)
    Gamma: List[np.ndarray] = field(default_factory=list)
    cond_lambda: np.ndarray = None
    decomposition_residual: np.ndarray = None
    completed: bool = True

    def state(self, i: int) -> ScalarState:
        return ScalarState(self.lattice, self.states[i], self.kind, self.beta)

    @property
    def final(self) -> ScalarState:
        return self.state(-1)

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def enstrophy_drift(self) -> float:
        return float(np.max(np.abs(self.enstrophy - self.enstrophy[0])))

    def diagnostics_json(self) -> dict:
        return {
            "N": self.lattice.N,
            "r": self.lattice.r,
            "kind": self.kind,
            "beta": self.beta,
            "dt": self.dt,
            "steps": len(self.times) - 1,
            "completed": self.completed,
            "energy_drift": self.energy_drift(),
            "enstrophy_drift": self.enstrophy_drift(),
            "max_state_change": float(np.max(np.abs(self.states - self.states[0]))),
            "max_cond_lambda": None if self.cond_lambda is None or not len(self.cond_lambda)
            else float(np.max(self.cond_lambda)),
            "max_decomposition_residual": None if self.decomposition_residual is None
            or not len(self.decomposition_residual) else float(np.max(self.decomposition_residual)),
        }

    def time_series_rows(self):
        for t, e, z in zip(self.times, self.energy, self.enstrophy):
            yield float(t), float(e), float(z)


class _Stepper:
    """Shared RK4 machinery for the state, transport and Jacobi matrices."""

    def __init__(self, u0: ScalarState, jacobi: bool):
        self.lattice = u0.lattice
        self.beta = u0.beta
        self.tab = triad_table(self.lattice, self.beta)
        self.jacobi = jacobi
        self.K = k_entries(u0.stream, self.lattice) if jacobi else None
        self.psi_factor = self.lattice.abs_k ** (self.beta - 2)

    def derivs(self, y):
        c = y[0]
        dc = self.tab.apply(c)
        if len(y) == 1:
            return (dc,)
        A = y[1]
        ad = ad_entries(c * self.psi_factor, self.lattice)
        dA = ad @ A
        if len(y) == 2:
            return dc, dA
        Phi = y[2]
        Linv = lambda_inverse(A)
        dGamma = -Linv @ (self.K @ Phi)
        return dc, dA, Linv + dGamma, Linv, dGamma

    def step(self, y, h):
        k1 = self.derivs(y)
        k2 = self.derivs(tuple(a + 0.5 * h * b for a, b in zip(y, k1)))
        k3 = self.derivs(tuple(a + 0.5 * h * b for a, b in zip(y, k2)))
        k4 = self.derivs(tuple(a + h * b for a, b in zip(y, k3)))
        return tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def integrate_geodesic(
    u0: ScalarState,
    t_max: float,
    dt: float,
    *,
    transport: bool = True,
    jacobi: bool = True,
    matrix_stride: int = 1,
    stability_bound: float = DEFAULT_STABILITY_BOUND,
    blowup_factor: float = 1e6,
    max_condition: float = DEFAULT_MAX_CONDITION,
    observer: Optional[Callable] = None,
) -> GeodesicTrajectory:
    """Integrate the truncated Euler-Arnold equation from ``u0`` up to ``t_max``.

    ``observer(t, y)`` is called after every step with the tuple
    ``(c, A, Phi, Omega, Gamma)`` (shorter when transport or Jacobi are off).
    """
    check_consistent(u0)
    if dt <= 0 or t_max < 0:
        raise ValidationError("need dt > 0 and t_max >= 0")
    if jacobi and not transport:
        raise ValidationError("the Jacobi operators need the transport matrix")
    L = u0.lattice
    cfl = dt * L.N * velocity_bound(u0)
    if cfl > stability_bound:
        raise ValidationError(f"dt*N*|u0| = {cfl:.3g} exceeds the stability bound {stability_bound}")
    steps = int(round(t_max / dt))
    if abs(steps * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValidationError("t_max must be an integer multiple of dt")

    n = len(L)
    stepper = _Stepper(u0, jacobi)
    y = (u0.coefficients.copy(),)
    if transport:
        y += (np.eye(n, dtype=complex),)
    if jacobi:
        z = np.zeros((n, n), dtype=complex)
        y += (z, z.copy(), z.copy())

    times = [0.0]
    states = [y[0].copy()]
    probe = ScalarState(L, y[0], u0.kind, u0.beta)
    energy, enstrophy = [probe.energy()], [probe.enstrophy()]
    mtimes, mats, conds, resid = [], {"A": [], "Phi": [], "Omega": [], "Gamma": []}, [], []

    def record_matrices(t, y):
        if not transport:
            return
        mtimes.append(t)
        mats["A"].append(y[1].copy())
        s = np.linalg.svd(y[1], compute_uv=False)
        cond = np.inf if s[-1] == 0 else float((s[0] / s[-1]) ** 2)
        conds.append(cond)
        if jacobi:
            mats["Phi"].append(y[2].copy())
            mats["Omega"].append(y[3].copy())
            mats["Gamma"].append(y[4].copy())
            scale = max(1.0, np.max(np.abs(y[2])))
            resid.append(float(np.max(np.abs(y[2] - y[3] - y[4])) / scale))
        if jacobi and cond > max_condition:
            raise IllConditionedError(f"Lambda is ill-conditioned at t={t:.6g} (cond = {cond:.3e})", condition=cond)

    def make(completed=True):
        return GeodesicTrajectory(
            lattice=L,
            kind=u0.kind,
            beta=u0.beta,
            dt=dt,
            times=np.array(times),
            states=np.array(states),
            energy=np.array(energy),
            enstrophy=np.array(enstrophy),
            matrix_times=np.array(mtimes),
            A=mats["A"],
            Phi=mats["Phi"],
            Omega=mats["Omega"],
            Gamma=mats["Gamma"],
            cond_lambda=np.array(conds),
            decomposition_residual=np.array(resid),
            completed=completed,
        )

    record_matrices(0.0, y)
    c0_norm = max(np.linalg.norm(u0.coefficients), 1e-300)
    for i in range(1, steps + 1):
        y = stepper.step(y, dt)
        t = i * dt
        cn = np.linalg.norm(y[0])
        if not np.isfinite(cn) or cn > blowup_factor * c0_norm or not all(np.all(np.isfinite(a)) for a in y[1:2]):
            raise BlowUpError(f"blow-up guard triggered at t={t:.6g}", partial=make(completed=False))
        times.append(t)
        states.append(y[0].copy())
        probe = ScalarState(L, y[0], u0.kind, u0.beta)
        energy.append(probe.energy())
        enstrophy.append(probe.enstrophy())
        if i % matrix_stride == 0 or i == steps:
            try:
                record_matrices(t, y)
            except IllConditionedError as exc:
                exc.partial = make(completed=False)
                raise
        if observer is not None:
            observer(t, y)
    return make()


def step_halving_check(u0: ScalarState, t_max: float, dt: float) -> float:
    """Largest coefficient difference between runs with ``dt`` and ``dt/2``."""
    a = integrate_geodesic(u0, t_max, dt, transport=False, jacobi=False)
    b = integrate_geodesic(u0, t_max, dt / 2, transport=False, jacobi=False)
    return float(np.max(np.abs(a.states[-1] - b.states[-1])))


def gamma_quadrature_check(traj: GeodesicTrajectory, K: np.ndarray) -> float:
    """Compare stored ``Gamma`` with trapezoidal quadrature of ``-Lambda^-1 K Phi``.

    Returns the largest deviation relative to ``max |Gamma|``; it decays like
    the square of the matrix sampling interval.
    """
    if len(traj.Phi) < 2:
        return 0.0
    integrands = [-lambda_inverse(A) @ (K @ P) for A, P in zip(traj.A, traj.Phi)]
    acc = np.zeros_like(integrands[0])
    worst = 0.0
    scale = max(1e-300, max(np.max(np.abs(G)) for G in traj.Gamma))
    for i in range(1, len(integrands)):
        h = traj.matrix_times[i] - traj.matrix_times[i - 1]
        acc = acc + 0.5 * h * (integrands[i] + integrands[i - 1])
        worst = max(worst, float(np.max(np.abs(acc - traj.Gamma[i]))) / scale)
    return worst
