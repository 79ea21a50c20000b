"""Truncated Fourier lattices and real scalar fields on the 2-torus ``[0, 2 pi)^2``."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Tuple

import numpy as np

from ..errors import ValidationError


class WaveLattice:
    """Wave vectors ``k != 0`` with ``max(|k1|, |k2|) <= N``, in lexicographic order.

    ``r`` is the order of the homogeneous Sobolev metric.  The velocity basis
    is ``e_k = grad_perp exp(i k.x) / (2 pi |k|^(1+r))``, orthonormal in that metric.
    """

    def __init__(self, N: int, r=0.0):
        if not isinstance(N, (int, np.integer)) or N < 1:
            raise ValidationError(f"truncation radius N must be an integer >= 1, got {N!r}")
        self.N = int(N)
        self.r = float(r)
        modes = [(a, b) for a in range(-N, N + 1) for b in range(-N, N + 1) if (a, b) != (0, 0)]
        self.modes = np.array(modes, dtype=np.int64)
        self.index: Dict[Tuple[int, int], int] = {m: i for i, m in enumerate(modes)}
        self.neg = np.array([self.index[(-a, -b)] for a, b in modes])
        self.abs_k = np.hypot(self.modes[:, 0], self.modes[:, 1])
        self.norm = 2 * np.pi * self.abs_k ** (1 + self.r)
        self._pairs = None

    def __len__(self):
        return len(self.modes)

    @property
    def size(self) -> int:
        return len(self.modes)

    def __repr__(self):
        return f"WaveLattice(N={self.N}, r={self.r})"

    def contains(self, k) -> bool:
        return tuple(int(v) for v in k) in self.index

    def pairs(self):
        """``(kidx, valid)``: ``kidx[m, l]`` is the index of ``modes[m] - modes[l]``.

        ``valid`` marks pairs where the difference is a lattice mode.
        """
        if self._pairs is None:
            n, N = len(self), self.N
            d = self.modes[:, None, :] - self.modes[None, :, :]
            inside = (np.abs(d).max(axis=2) <= N) & (np.abs(d).sum(axis=2) > 0)
            # lexicographic position in the full (2N+1)^2 grid, skipping the origin
            flat = (d[..., 0] + N) * (2 * N + 1) + (d[..., 1] + N)
            centre = N * (2 * N + 1) + N
            kidx = np.where(flat > centre, flat - 1, flat)
            kidx = np.where(inside, kidx, 0)
            self._pairs = (kidx, inside)
            assert n == (2 * N + 1) ** 2 - 1
        return self._pairs

    def embed_indices(self, coarse: "WaveLattice") -> np.ndarray:
        """Positions of the modes of ``coarse`` inside this lattice."""
        if coarse.N > self.N:
            raise ValidationError("coarse lattice is larger than the fine one")
        return np.array([self.index[tuple(m)] for m in coarse.modes.tolist()])


@dataclass
class ScalarState:
    """Real scalar field (vorticity or active scalar) stored by Fourier coefficients.

    ``psi_k = c_k |k|^(beta - 2)`` gives the stream function; ``beta = 0`` is the
    Euler vorticity, ``beta > 0`` an active scalar of the generalized SQG family.
    """

    lattice: WaveLattice
    coefficients: np.ndarray
    kind: str = "euler"
    beta: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (len(self.lattice),):
            raise ValidationError("coefficient vector does not match the lattice")
        if self.kind not in ("euler", "gsqg"):
            raise ValidationError(f"unknown kind {self.kind!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValidationError("beta must lie in [0, 1]")
        if self.kind == "euler" and self.beta != 0.0:
            raise ValidationError("euler states have beta = 0")
        self.coefficients = c

    @property
    def metric_order(self) -> float:
        """Sobolev order ``r = -beta/2`` of the metric whose geodesics this scalar drives."""
        return -self.beta / 2

    def is_real(self, tol: float = 0.0) -> bool:
        c = self.coefficients
        return bool(np.max(np.abs(c[self.lattice.neg] - np.conj(c)), initial=0.0) <= tol)

    def symmetrized(self) -> "ScalarState":
        c = self.coefficients
        c = 0.5 * (c + np.conj(c[self.lattice.neg]))
        return ScalarState(self.lattice, c, self.kind, self.beta)

    @property
    def stream(self) -> np.ndarray:
        return self.coefficients * self.lattice.abs_k ** (self.beta - 2)

    def velocity_coefficients(self) -> np.ndarray:
        """Coordinates of ``u = grad_perp psi`` in the orthonormal lattice basis."""
        return self.lattice.norm * self.stream

    @classmethod
    def from_velocity(cls, lattice, a, kind="euler", beta=0.0) -> "ScalarState":
        psi = np.asarray(a) / lattice.norm
        return cls(lattice, psi * lattice.abs_k ** (2 - beta), kind, beta)

    @classmethod
    def from_modes(cls, lattice, modes: Iterable, kind="euler", beta=0.0) -> "ScalarState":
        """Build from ``[(k, value), ...]``; the conjugate partner ``-k`` is filled in.

        Listing both ``k`` and ``-k`` explicitly is allowed if the values are conjugate.
        """
        c = np.zeros(len(lattice), dtype=complex)
        seen = {}
        for k, val in modes:
            k = tuple(int(v) for v in k)
            if k not in lattice.index:
                raise ValidationError(f"mode {k} is outside the lattice")
            i = lattice.index[k]
            j = lattice.neg[i]
            if i in seen and seen[i] != complex(val):
                raise ValidationError(f"conflicting values for mode {k}")
            if i == j:
                raise ValidationError("self-conjugate mode")
            c[i] = val
            seen[i] = complex(val)
            if j in seen and seen[j] != np.conj(complex(val)):
                raise ValidationError(f"modes {k} and its negative are not conjugate")
            c[j] = np.conj(val)
            seen[j] = np.conj(complex(val))
        return cls(lattice, c, kind, beta)

    def energy(self) -> float:
        """``sum |c_k|^2 |k|^(beta-2)``: kinetic energy for Euler, the Hamiltonian for gSQG."""
        return float(np.sum(np.abs(self.coefficients) ** 2 * self.lattice.abs_k ** (self.beta - 2)))

    def enstrophy(self) -> float:
        """``sum |c_k|^2``: enstrophy for Euler, the quadratic Casimir for gSQG."""
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def grid_values(self, n: int = 64) -> np.ndarray:
        """Real-space samples on an ``n x n`` grid (``x`` along axis 0)."""
        return _to_grid(self.lattice, self.coefficients, n)

    def to_json(self) -> dict:
        L = self.lattice
        modes = []
        for i, (a, b) in enumerate(L.modes.tolist()):
            c = self.coefficients[i]
            if c != 0 and (a, b) > (0, 0):
                modes.append({"k": [a, b], "re": float(c.real), "im": float(c.imag)})
        return {"kind": self.kind, "beta": self.beta, "N": L.N, "modes": modes}

    @classmethod
    def from_json(cls, d: dict, N: int = None, r=None) -> "ScalarState":
        try:
            kind = d.get("kind", "euler")
            beta = float(d.get("beta", 0.0))
            N = int(N if N is not None else d["N"])
            modes = [(m["k"], complex(float(m.get("re", 0.0)), float(m.get("im", 0.0)))) for m in d["modes"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed initial-data document: {exc}") from exc
        r = -beta / 2 if r is None else float(r)
        return cls.from_modes(WaveLattice(N, r), modes, kind, beta)


def _to_grid(lattice: WaveLattice, coeffs: np.ndarray, n: int) -> np.ndarray:
    if n < 2 * lattice.N + 1:
        raise ValidationError("grid too coarse for the lattice")
    spec = np.zeros((n, n), dtype=complex)
    spec[lattice.modes[:, 0] % n, lattice.modes[:, 1] % n] = coeffs
    return np.fft.ifft2(spec).real * n * n


def load_state(path: str, N: int = None, r=None) -> ScalarState:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read initial data {path!r}: {exc}") from exc
    return ScalarState.from_json(doc, N=N, r=r)
