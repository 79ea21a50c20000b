"""Triad convolutions for the truncated Euler / gSQG dynamics and the operators ad, K.

Conventions: ``grad_perp psi = (d_y psi, -d_x psi)``, ``k_perp = (k2, -k1)``, and
``{f, g} = grad_perp f . grad g``, so that
``{exp(i l.x), exp(i k.x)} = -(l_perp . k) exp(i (l+k).x)``.  Matrices act on
coordinates in the orthonormal basis ``e_k`` of :class:`WaveLattice`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import ValidationError
from .lattice import ScalarState, WaveLattice


@dataclass(frozen=True)
class TruncatedOperatorMatrix:
    """Dense matrix of an operator on the truncated velocity space."""

    entries: np.ndarray
    r: float
    label: str

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)


def _cross(lattice: WaveLattice):
    """``(k_perp . l)`` for ``k = modes[m] - modes[l]``, with the pair mask."""
    kidx, valid = lattice.pairs()
    K = lattice.modes[kidx]
    L = lattice.modes[None, :, :]
    cross = K[..., 1] * L[..., 0] - K[..., 0] * L[..., 1]
    return kidx, valid, np.where(valid, cross, 0).astype(float)


class TriadTable:
    """Sparse list of triads ``m = k + l`` with the advection kernel for a given ``beta``."""

    def __init__(self, lattice: WaveLattice, beta: float):
        kidx, valid, cross = _cross(lattice)
        m, l = np.nonzero(valid & (cross != 0))
        k = kidx[m, l]
        coef = cross[m, l] * lattice.abs_k[k] ** (beta - 2)
        self.k, self.l = k, l
        n = len(lattice)
        self.scatter = sp.csr_matrix((coef, (m, np.arange(len(m)))), shape=(n, len(m)))

    def apply(self, c: np.ndarray) -> np.ndarray:
        """Advection tendency for a coefficient vector or a matrix of column states."""
        if c.ndim == 1:
            return self.scatter @ (c[self.k] * c[self.l])
        return np.asarray(self.scatter @ (c[self.k, :] * c[self.l, :]))


_TRIADS = {}


def triad_table(lattice: WaveLattice, beta: float) -> TriadTable:
    key = (lattice.N, float(beta), id(lattice))
    tab = _TRIADS.get(key)
    if tab is None:
        tab = _TRIADS[key] = TriadTable(lattice, beta)
    return tab


def galerkin_rhs(state: ScalarState) -> ScalarState:
    """Truncated advection term ``-P_N (u . grad c)``.

    ``dc_k/dt = sum_{p+q=k} (p_perp . q) |p|^(beta-2) c_p c_q`` with ``p, q, k``
    all on the lattice.
    """
    tab = triad_table(state.lattice, state.beta)
    return ScalarState(state.lattice, tab.apply(state.coefficients), state.kind, state.beta)


def galerkin_rhs_bruteforce(state: ScalarState) -> np.ndarray:
    """Direct double loop over lattice pairs; reference for :func:`galerkin_rhs`."""
    L = state.lattice
    out = np.zeros(len(L), dtype=complex)
    modes = [tuple(m) for m in L.modes.tolist()]
    for i, p in enumerate(modes):
        for j, q in enumerate(modes):
            k = (p[0] + q[0], p[1] + q[1])
            if k not in L.index:
                continue
            cross = p[1] * q[0] - p[0] * q[1]
            out[L.index[k]] += cross * np.hypot(*p) ** (state.beta - 2) * state.coefficients[i] * state.coefficients[j]
    return out


def _stream(u, lattice: WaveLattice) -> np.ndarray:
    """Stream-function coefficients from a state or a velocity coordinate vector."""
    if isinstance(u, ScalarState):
        if u.lattice.N != lattice.N:
            raise ValidationError("state and lattice have different truncations")
        return u.stream
    a = np.asarray(u, dtype=complex)
    if a.shape != (len(lattice),):
        raise ValidationError("velocity vector does not match the lattice")
    return a / lattice.norm


def ad_entries(psi: np.ndarray, lattice: WaveLattice) -> np.ndarray:
    kidx, valid, cross = _cross(lattice)
    scale = lattice.norm[:, None] / lattice.norm[None, :]
    return np.where(valid, scale * cross * psi[kidx], 0.0)


def k_entries(psi0: np.ndarray, lattice: WaveLattice) -> np.ndarray:
    kidx, valid, cross = _cross(lattice)
    r = lattice.r
    scale = lattice.norm[:, None] / lattice.norm[None, :]
    weight = lattice.abs_k[kidx] ** (2 + 2 * r) * lattice.abs_k[:, None] ** (-2 - 2 * r)
    return np.where(valid, scale * cross * weight * psi0[kidx], 0.0)


def ad_matrix(u, lattice: WaveLattice = None) -> TruncatedOperatorMatrix:
    """Matrix of ``w -> ad_u w = -[u, w]``, projected to the lattice.

    ``u`` is a :class:`ScalarState` or a velocity coordinate vector (then
    ``lattice`` is required).  Stream functions satisfy
    ``psi_{ad_u w} = -{psi_u, psi_w}``.
    """
    lattice = lattice or u.lattice
    return TruncatedOperatorMatrix(ad_entries(_stream(u, lattice), lattice), lattice.r, "ad")


def k_matrix(u0, lattice: WaveLattice = None) -> TruncatedOperatorMatrix:
    """Matrix of ``w -> K(u0) w = ad*_w u0``.

    Stream functions: ``psi_{K w} = Delta^(-1-r) {psi_w, Delta^(1+r) psi_u0}``
    with the positive Laplacian ``|k|^2``.
    """
    lattice = lattice or u0.lattice
    return TruncatedOperatorMatrix(k_entries(_stream(u0, lattice), lattice), lattice.r, "K")


def k_entry_bruteforce(u0: ScalarState, l, m) -> complex:
    """``<K e_l, e_m>`` by evaluating the Poisson bracket of two exponentials directly."""
    L = u0.lattice
    l, m = tuple(l), tuple(m)
    k = (m[0] - l[0], m[1] - l[1])
    if k not in L.index:
        return 0j
    r = L.r
    psi0 = u0.stream[L.index[k]]
    theta0 = np.hypot(*k) ** (2 + 2 * r) * psi0  # Delta^(1+r) psi_u0 at k
    nl, nm = L.norm[L.index[l]], L.norm[L.index[m]]
    # {exp(i l.x)/n_l, theta0 exp(i k.x)} = -(l_perp . k) theta0 / n_l exp(i m.x)
    l_perp_dot_k = l[1] * k[0] - l[0] * k[1]
    bracket = -l_perp_dot_k * theta0 / nl
    psi_out = bracket * np.hypot(*m) ** (-2 - 2 * r)
    return complex(nm * psi_out)
