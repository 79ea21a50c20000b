import numpy as np
import pytest
import sympy as sp

from coadjoint.torus.lattice import ScalarState, WaveLattice

XS = sp.symbols("x y z w")


def to_sympy(p):
    """Convert a Poly4 to a sympy expression in x, y, z, w."""
    expr = sp.Integer(0)
    for mono, c in p.items():
        coeff = sp.Rational(c.real.numerator, c.real.denominator) + sp.I * sp.Rational(
            c.imag.numerator, c.imag.denominator
        )
        expr += coeff * sp.prod([v**e for v, e in zip(XS, mono)])
    return expr


def sphere_points(n, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 4))
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def kolmogorov(N, amp=1.0, r=0.0, extra=()):
    """omega = amp cos(y), optionally with extra modes [(k, value), ...]."""
    L = WaveLattice(N, r)
    return ScalarState.from_modes(L, [((0, 1), amp / 2)] + list(extra))


def perturbed_kolmogorov(N, amp=6.0, pert=0.01):
    return kolmogorov(N, amp, extra=[((1, 0), amp * pert), ((1, 1), 0.6j * pert * amp)])


def random_state(N, seed, amp=1.0, r=0.0, kind="euler", beta=0.0):
    rng = np.random.default_rng(seed)
    L = WaveLattice(N, r)
    c = amp * (rng.normal(size=len(L)) + 1j * rng.normal(size=len(L))) / L.abs_k**2
    return ScalarState(L, c, kind, beta).symmetrized()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
