"""Exact polynomial calculus on R^4 and frame vector fields on the round 3-sphere.

Polynomials carry Gaussian-rational coefficients and are stored sparsely as a
map from exponent tuples ``(a, b, c, d)`` on ``(x, y, z, w)`` to coefficients.
Vector fields tangent to S^3 are stored by their components along the
right-invariant frame

    e1 = -y dx + x dy - w dz + z dw
    e2 = -z dx + w dy + x dz - y dw
    e3 = -w dx - z dy + y dz + x dw

Everything is exact; identities are checked with ``==`` on normalized data.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Tuple

Monomial = Tuple[int, int, int, int]

_VARS = ("x", "y", "z", "w")


class GaussianRational:
    """Exact complex number ``(re + i*im) / den`` with integer parts.

    Stored in lowest terms with ``den > 0``; equality is structural.
    """

    __slots__ = ("_re", "_im", "_den")

    def __init__(self, re=0, im=0, den=1):
        if isinstance(re, Fraction) or isinstance(im, Fraction) or isinstance(den, Fraction):
            re, im = Fraction(re) / Fraction(den), Fraction(im) / Fraction(den)
            d = re.denominator * im.denominator // math.gcd(re.denominator, im.denominator)
            re, im, den = re.numerator * (d // re.denominator), im.numerator * (d // im.denominator), d
        if den == 0:
            raise ZeroDivisionError("GaussianRational with zero denominator")
        if den < 0:
            re, im, den = -re, -im, -den
        g = math.gcd(re, im, den)
        if g > 1:
            re, im, den = re // g, im // g, den // g
        self._re = re
        self._im = im
        self._den = den

    @classmethod
    def _raw(cls, re, im, den):
        obj = object.__new__(cls)
        obj._re, obj._im, obj._den = re, im, den
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, int):
            return cls._raw(value, 0, 1)
        if isinstance(value, Fraction):
            return cls._raw(value.numerator, 0, value.denominator)
        if isinstance(value, complex):
            if value.real != int(value.real) or value.imag != int(value.imag):
                raise TypeError("only integral complex literals are accepted exactly")
            return cls(int(value.real), int(value.imag))
        raise TypeError(f"cannot coerce {type(value).__name__} to GaussianRational")

    @property
    def real(self) -> Fraction:
        return Fraction(self._re, self._den)

    @property
    def imag(self) -> Fraction:
        return Fraction(self._im, self._den)

    def is_zero(self) -> bool:
        return self._re == 0 and self._im == 0

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self._re, -self._im, self._den)

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        if self._den == o._den:
            return GaussianRational(self._re + o._re, self._im + o._im, self._den)
        return GaussianRational(
            self._re * o._den + o._re * self._den,
            self._im * o._den + o._im * self._den,
            self._den * o._den,
        )

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational._raw(-self._re, -self._im, self._den)

    def __sub__(self, other):
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return GaussianRational._raw(0, 0, 1)
            if self._den == 1:
                return GaussianRational._raw(self._re * other, self._im * other, 1)
            return GaussianRational(self._re * other, self._im * other, self._den)
        o = GaussianRational.coerce(other)
        return GaussianRational(
            self._re * o._re - self._im * o._im,
            self._re * o._im + self._im * o._re,
            self._den * o._den,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        norm = o._re * o._re + o._im * o._im
        if norm == 0:
            raise ZeroDivisionError("division by zero GaussianRational")
        # (a+ib)/d / ((c+ie)/f) = (a+ib)(c-ie) f / (d (c^2+e^2))
        return GaussianRational(
            (self._re * o._re + self._im * o._im) * o._den,
            (self._im * o._re - self._re * o._im) * o._den,
            self._den * norm,
        )

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self._re == o._re and self._im == o._im and self._den == o._den

    def __hash__(self):
        return hash((self._re, self._im, self._den))

    def __complex__(self):
        return complex(self._re / self._den, self._im / self._den)

    def __repr__(self):
        return f"GaussianRational({self})"

    def __str__(self):
        re, im = self.real, self.imag
        if im == 0:
            return str(re)
        if re == 0:
            return f"{im}i"
        sign = "+" if im > 0 else "-"
        return f"({re}{sign}{abs(im)}i)"

    def to_pair(self) -> Tuple[str, str]:
        return str(self.real), str(self.imag)

    @classmethod
    def from_pair(cls, re: str, im: str) -> "GaussianRational":
        return cls(Fraction(re), Fraction(im))


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


class Poly4:
    """Sparse polynomial in ``x, y, z, w`` with Gaussian-rational coefficients.

    Instances are treated as immutable; zero coefficients are never stored.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean: Dict[Monomial, GaussianRational] = {}
        if terms:
            for mono, c in dict(terms).items():
                c = GaussianRational.coerce(c)
                if not c.is_zero():
                    if len(mono) != 4 or min(mono) < 0:
                        raise ValueError(f"bad exponent tuple {mono!r}")
                    clean[tuple(mono)] = c
        self._terms = clean

    @classmethod
    def _wrap(cls, terms: Dict[Monomial, GaussianRational]) -> "Poly4":
        obj = object.__new__(cls)
        obj._terms = terms
        return obj

    @classmethod
    def constant(cls, c) -> "Poly4":
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def var(cls, name: str) -> "Poly4":
        mono = [0, 0, 0, 0]
        mono[_VARS.index(name)] = 1
        return cls({tuple(mono): 1})

    @property
    def terms(self) -> Dict[Monomial, GaussianRational]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[Monomial, GaussianRational]]:
        return iter(self._terms.items())

    def coefficient(self, mono: Monomial) -> GaussianRational:
        return self._terms.get(tuple(mono), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def degrees(self) -> set:
        return {sum(m) for m in self._terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max(self.degrees(), default=-1)

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
        return Poly4._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly4._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def scale(self, c) -> "Poly4":
        c = c if isinstance(c, int) else GaussianRational.coerce(c)
        if (isinstance(c, int) and c == 0) or (not isinstance(c, int) and c.is_zero()):
            return Poly4._wrap({})
        return Poly4._wrap({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, complex, GaussianRational)):
            return self.scale(other)
        out: Dict[Monomial, GaussianRational] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2], m1[3] + m2[3])
                s = out.get(m)
                out[m] = c1 * c2 if s is None else s + c1 * c2
        return Poly4._wrap({m: c for m, c in out.items() if not c.is_zero()})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = Poly4.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = Poly4.constant(other)
        if not isinstance(other, Poly4):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def conjugate(self) -> "Poly4":
        """Complex conjugate of the coefficients (x, y, z, w are real)."""
        return Poly4._wrap({m: c.conjugate() for m, c in self._terms.items()})

    def diff(self, var: int) -> "Poly4":
        out = {}
        for m, c in self._terms.items():
            e = m[var]
            if e:
                mm = list(m)
                mm[var] -= 1
                out[tuple(mm)] = c * e
        return Poly4._wrap(out)

    def evaluate(self, point) -> complex:
        total = 0j
        for m, c in self._terms.items():
            total += complex(c) * math.prod(p**e for p, e in zip(point, m))
        return total

    def sorted_items(self):
        return sorted(self._terms.items(), reverse=True)

    def __repr__(self):
        return f"Poly4({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_items():
            mono = "*".join(
                (v if e == 1 else f"{v}^{e}") for v, e in zip(_VARS, m) if e
            )
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)

    def to_json(self):
        return [[list(m), *c.to_pair()] for m, c in self.sorted_items()]

    @classmethod
    def from_json(cls, data) -> "Poly4":
        return cls({tuple(m): GaussianRational.from_pair(re, im) for m, re, im in data})


def _as_poly(value) -> Poly4:
    if isinstance(value, Poly4):
        return value
    return Poly4.constant(value)


X, Y, Z, W = (Poly4.var(v) for v in _VARS)

#: complex coordinates; views over the Cartesian representation
ALPHA = X + Y * I
ALPHA_BAR = X - Y * I
BETA = Z + W * I
BETA_BAR = Z - W * I

# e_i = sum over (a, b, s): s * x_b * d/dx_a
_FRAME = (
    ((0, 1, -1), (1, 0, 1), (2, 3, -1), (3, 2, 1)),
    ((0, 2, -1), (1, 3, 1), (2, 0, 1), (3, 1, -1)),
    ((0, 3, -1), (1, 2, -1), (2, 1, 1), (3, 0, 1)),
)


def frame_cartesian(i: int) -> Tuple[Poly4, Poly4, Poly4, Poly4]:
    """Cartesian components of the frame field ``e_i`` (``i`` in 1..3)."""
    comps = [Poly4() for _ in range(4)]
    for a, b, s in _FRAME[i - 1]:
        mono = [0, 0, 0, 0]
        mono[b] = 1
        comps[a] = Poly4({tuple(mono): s})
    return tuple(comps)


def frame_derivative(i: int, f: Poly4) -> Poly4:
    """Apply ``e_i`` to ``f`` as a first-order derivation."""
    if i not in (1, 2, 3):
        raise ValueError("frame index must be 1, 2 or 3")
    out: Dict[Monomial, GaussianRational] = {}
    for a, b, s in _FRAME[i - 1]:
        for m, c in f._terms.items():
            e = m[a]
            if not e:
                continue
            mm = list(m)
            mm[a] -= 1
            mm[b] += 1
            key = tuple(mm)
            term = c * (s * e)
            prev = out.get(key)
            out[key] = term if prev is None else prev + term
    return Poly4._wrap({m: c for m, c in out.items() if not c.is_zero()})


def euclidean_laplacian(f: Poly4) -> Poly4:
    """Positive Laplacian on R^4: ``-(f_xx + f_yy + f_zz + f_ww)``."""
    total = Poly4()
    for v in range(4):
        total = total + f.diff(v).diff(v)
    return -total


def sphere_normal_form(f: Poly4) -> Poly4:
    """Remainder of ``f`` modulo ``x^2+y^2+z^2+w^2-1`` in lex order x > y > z > w.

    The leading monomial of the relation is ``x^2``, so the normal form is the
    unique representative with every exponent of ``x`` at most one.
    """
    out: Dict[Monomial, GaussianRational] = {}
    stack = list(f._terms.items())
    while stack:
        m, c = stack.pop()
        if m[0] < 2:
            prev = out.get(m)
            s = c if prev is None else prev + c
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
            continue
        # x^a * r  ->  x^(a-2) * r * (1 - y^2 - z^2 - w^2)
        base = (m[0] - 2, m[1], m[2], m[3])
        stack.append((base, c))
        stack.append(((base[0], base[1] + 2, base[2], base[3]), -c))
        stack.append(((base[0], base[1], base[2] + 2, base[3]), -c))
        stack.append(((base[0], base[1], base[2], base[3] + 2), -c))
    return Poly4._wrap(out)


class FrameField:
    """Vector field ``f1 e1 + f2 e2 + f3 e3`` on S^3 with polynomial components."""

    __slots__ = ("f1", "f2", "f3")

    def __init__(self, f1=None, f2=None, f3=None):
        self.f1 = _as_poly(f1 if f1 is not None else 0)
        self.f2 = _as_poly(f2 if f2 is not None else 0)
        self.f3 = _as_poly(f3 if f3 is not None else 0)

    @property
    def components(self) -> Tuple[Poly4, Poly4, Poly4]:
        return (self.f1, self.f2, self.f3)

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "FrameField"):
        return FrameField(self.f1 + other.f1, self.f2 + other.f2, self.f3 + other.f3)

    def __sub__(self, other: "FrameField"):
        return FrameField(self.f1 - other.f1, self.f2 - other.f2, self.f3 - other.f3)

    def __neg__(self):
        return FrameField(-self.f1, -self.f2, -self.f3)

    def scale(self, c) -> "FrameField":
        return FrameField(self.f1.scale(c), self.f2.scale(c), self.f3.scale(c))

    def __mul__(self, c):
        if isinstance(c, Poly4):
            return FrameField(self.f1 * c, self.f2 * c, self.f3 * c)
        return self.scale(c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, FrameField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components)

    def degrees(self) -> set:
        out = set()
        for f in self.components:
            out |= f.degrees()
        return out

    def normal_form(self) -> "FrameField":
        return FrameField(*(sphere_normal_form(f) for f in self.components))

    def cartesian(self) -> Tuple[Poly4, Poly4, Poly4, Poly4]:
        """Cartesian components of the field in R^4."""
        out = [Poly4() for _ in range(4)]
        for i, f in enumerate(self.components, start=1):
            if f.is_zero():
                continue
            for a, comp in enumerate(frame_cartesian(i)):
                if not comp.is_zero():
                    out[a] = out[a] + comp * f
        return tuple(out)

    def __repr__(self):
        return f"FrameField({self.f1}; {self.f2}; {self.f3})"

    def to_json(self):
        return [f.to_json() for f in self.components]

    @classmethod
    def from_json(cls, data) -> "FrameField":
        return cls(*(Poly4.from_json(d) for d in data))


E1 = FrameField(1, 0, 0)
E2 = FrameField(0, 1, 0)
E3 = FrameField(0, 0, 1)


def curl_frame(w: FrameField) -> FrameField:
    """Curl on S^3 in frame components (the frame itself has curl e_i = 2 e_i)."""
    f1, f2, f3 = w.components
    d = frame_derivative
    return FrameField(
        d(2, f3) - d(3, f2) + f1.scale(2),
        d(3, f1) - d(1, f3) + f2.scale(2),
        d(1, f2) - d(2, f1) + f3.scale(2),
    )


def bracket_e1(w: FrameField) -> FrameField:
    """Lie bracket ``[w, e1]`` of vector fields.

    Uses ``[e2, e1] = 2 e3`` and ``[e3, e1] = -2 e2`` together with
    ``[f X, Y] = f [X, Y] - (Y f) X``.
    """
    f1, f2, f3 = w.components
    d = frame_derivative
    return FrameField(
        -d(1, f1),
        -f3.scale(2) - d(1, f2),
        f2.scale(2) - d(1, f3),
    )


def divergence_frame(w: FrameField) -> Poly4:
    """Divergence on S^3; each frame field is divergence free, so div = sum e_i f_i."""
    return frame_derivative(1, w.f1) + frame_derivative(2, w.f2) + frame_derivative(3, w.f3)


def gradient_frame(f: Poly4) -> FrameField:
    """Spherical gradient in frame components (the frame is orthonormal on S^3)."""
    return FrameField(frame_derivative(1, f), frame_derivative(2, f), frame_derivative(3, f))


def tangential_divergence_cartesian(w: FrameField) -> Poly4:
    """Divergence of ``w`` computed from its Cartesian extension, reduced on S^3.

    ``div_S W = tr((I - n n^T) DW)`` with ``n = (x, y, z, w)`` on the sphere.
    Independent of :func:`divergence_frame`; used as a cross-check.
    """
    comps = w.cartesian()
    coords = (X, Y, Z, W)
    total = Poly4()
    for a in range(4):
        total = total + comps[a].diff(a)
        for b in range(4):
            total = total - coords[a] * coords[b] * comps[a].diff(b)
    return sphere_normal_form(total)


def proportionality(a: Poly4, b: Poly4):
    """Return ``c`` with ``a == c * b`` exactly, or ``None`` if no such scalar exists.

    ``b`` must be nonzero; a zero ``a`` gives ``c = 0``.
    """
    if b.is_zero():
        raise ValueError("reference polynomial is zero")
    if a.is_zero():
        return ZERO
    mono, ref = next(iter(b.items()))
    c = a.coefficient(mono) / ref
    return c if a == b.scale(c) else None


def poly_from_monomials(items: Iterable[Tuple[Monomial, object]]) -> Poly4:
    return Poly4(dict(items))
