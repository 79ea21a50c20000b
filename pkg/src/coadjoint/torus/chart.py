"""Volume-preserving chart ``gamma_v = id + v + grad phi`` near the identity.

For a divergence-free ``v`` the constraint ``det(I + Dv + D^2 phi) = 1`` reads
``-lap phi = det(Dv + D^2 phi)`` in two dimensions, because
``det(I + M) = 1 + tr M + det M``.  With the positive Laplacian ``Delta = -lap``
this is the fixed point ``phi = Delta^-1 det(Dv + D^2 phi)``, solved here by
plain iteration with FFT derivatives on a uniform grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonContractionError, ValidationError
from .lattice import ScalarState


@dataclass
class ChartSolution:
    """Result of :func:`chart_solve`; ``phi_hat`` is the grid spectrum of ``phi``."""

    v: np.ndarray
    phi_hat: np.ndarray
    residual: float
    iterations: int
    contraction: float
    grid: int

    def phi_values(self) -> np.ndarray:
        return np.fft.ifft2(self.phi_hat).real

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "iterations": self.iterations,
            "contraction_estimate": self.contraction,
            "grid": self.grid,
            "phi_sup": float(np.max(np.abs(self.phi_values()))),
            "phi_modes": _top_modes(self.phi_hat, self.grid),
        }


def _top_modes(phi_hat, n, count=16):
    c = phi_hat / (n * n)
    flat = np.argsort(-np.abs(c), axis=None)[:count]
    out = []
    for idx in flat:
        i, j = np.unravel_index(idx, c.shape)
        if abs(c[i, j]) == 0:
            continue
        k = [int(i if i <= n // 2 else i - n), int(j if j <= n // 2 else j - n)]
        out.append({"k": k, "re": float(c[i, j].real), "im": float(c[i, j].imag)})
    out.sort(key=lambda m: (m["k"][0], m["k"][1]))
    return out


def _wavenumbers(n):
    k = np.fft.fftfreq(n, d=1.0 / n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    return kx, ky


def _velocity_gradient(state: ScalarState, n: int):
    """Grid values of ``Dv`` for ``v = grad_perp psi`` (``x`` along axis 0)."""
    L = state.lattice
    if n < 2 * L.N + 1:
        raise ValidationError("grid too coarse for the lattice")
    psi = np.zeros((n, n), dtype=complex)
    psi[L.modes[:, 0] % n, L.modes[:, 1] % n] = state.stream * n * n
    kx, ky = _wavenumbers(n)
    d = lambda a, b: np.fft.ifft2((1j * a) * (1j * b) * psi).real
    # v = (psi_y, -psi_x)
    v1x, v1y = d(ky, kx), d(ky, ky)
    v2x, v2y = -d(kx, kx), -d(kx, ky)
    return v1x, v1y, v2x, v2y


def chart_solve(
    v: ScalarState,
    tol: float = 1e-10,
    grid: int = 64,
    max_iter: int = 50,
    contraction_bound: float = 1.0,
) -> ChartSolution:
    """Solve ``det(I + Dv + D^2 phi) = 1`` for ``phi`` by fixed-point iteration.

    The Lipschitz constant of the map is estimated by
    ``q = sup |Dv + D^2 phi|_F``; ``q >= contraction_bound``, divergence or
    exhausting ``max_iter`` raise :class:`NonContractionError`.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    n = grid
    v1x, v1y, v2x, v2y = _velocity_gradient(v, n)
    kx, ky = _wavenumbers(n)
    k2 = kx**2 + ky**2
    inv_lap = np.zeros_like(k2)
    inv_lap[k2 > 0] = 1.0 / k2[k2 > 0]

    def hessian(phi_hat):
        h = lambda a, b: np.fft.ifft2(-a * b * phi_hat).real
        return h(kx, kx), h(kx, ky), h(ky, ky)

    def det_minus_one(phi_hat):
        pxx, pxy, pyy = hessian(phi_hat)
        a, b, c, d = v1x + pxx, v1y + pxy, v2x + pxy, v2y + pyy
        return (1 + a) * (1 + d) - b * c - 1, np.sqrt(a * a + b * b + c * c + d * d)

    phi_hat = np.zeros((n, n), dtype=complex)
    q = 0.0
    prev_step = np.inf
    for it in range(1, max_iter + 1):
        pxx, pxy, pyy = hessian(phi_hat)
        a, b, c, d = v1x + pxx, v1y + pxy, v2x + pxy, v2y + pyy
        q = float(np.max(np.sqrt(a * a + b * b + c * c + d * d)))
        if q >= contraction_bound:
            raise NonContractionError(
                f"contraction estimate sup|Dv + D^2 phi| = {q:.3g} >= {contraction_bound}; v is too large"
            )
        new_hat = inv_lap * np.fft.fft2(a * d - b * c)
        step = float(np.max(np.abs(np.fft.ifft2(new_hat - phi_hat).real)))
        phi_hat = new_hat
        res, _ = det_minus_one(phi_hat)
        residual = float(np.max(np.abs(res)))
        if residual <= tol:
            return ChartSolution(v.velocity_coefficients(), phi_hat, residual, it, q, n)
        if it > 3 and step > prev_step:
            raise NonContractionError(f"fixed-point iteration diverges at step {it}")
        prev_step = step
    raise NonContractionError(f"no convergence within {max_iter} iterations (residual {residual:.3e})")


def chart_residual(v: ScalarState, phi_hat: np.ndarray) -> float:
    """Independent pointwise check of ``|det(D gamma_v) - 1|`` with ``gamma_v = id + v + grad phi``."""
    n = phi_hat.shape[0]
    v1x, v1y, v2x, v2y = _velocity_gradient(v, n)
    kx, ky = _wavenumbers(n)
    g = lambda a, b: np.fft.ifft2(-a * b * phi_hat).real
    J = np.empty((n, n, 2, 2))
    J[..., 0, 0] = 1 + v1x + g(kx, kx)
    J[..., 0, 1] = v1y + g(kx, ky)
    J[..., 1, 0] = v2x + g(ky, kx)
    J[..., 1, 1] = 1 + v2y + g(ky, ky)
    return float(np.max(np.abs(np.linalg.det(J) - 1)))
