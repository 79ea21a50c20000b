"""Closed-form spectra of the coadjoint operator for two model velocity fields.

* ``s2``: the equatorial rotation field on the round 2-sphere,
  ``lambda_l^m = i m (2 / (l (l+1)))^(1+r)``.
* ``s3``: the Hopf field ``e1`` on the round 3-sphere, with eigenvalues read off
  the curl eigenfield basis of :mod:`coadjoint.s3basis`.

Every eigenvalue is stored as ``i q (2/d)^e`` with ``q``, ``e`` rational and
``d`` a positive integer, and evaluated to floating point only on demand.  The
operator is skew self-adjoint, so singular values are the moduli ``|lambda|``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

from .errors import ValidationError

GEOMETRY_ALIASES = {"s2": "s2", "sqg": "s2", "rotation": "s2", "s3": "s3", "hopf": "s3"}


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ValidationError("boolean is not a number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValidationError(f"non-finite value {x}")
        return Fraction(repr(x))
    try:
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a rational number: {x!r}") from exc


def _power(base: Fraction, e: Fraction) -> float:
    return float(base) ** float(e) if e.denominator != 1 else float(base**e.numerator)


@dataclass(frozen=True)
class EigenEntry:
    """Eigenvalue ``i q (2/d)^e`` with multiplicity and labels."""

    q: Fraction
    d: int
    e: Fraction
    multiplicity: int
    geometry: str
    family: str
    level: int
    m: int

    @property
    def labels(self) -> Tuple[str, str, int, int]:
        return (self.geometry, self.family, self.level, self.m)

    @property
    def modulus(self) -> float:
        if self.q == 0:
            return 0.0
        return abs(float(self.q)) * _power(Fraction(2, self.d), self.e)

    @property
    def value(self) -> complex:
        if self.q == 0:
            return 0j
        return complex(0.0, float(self.q) * _power(Fraction(2, self.d), self.e))

    def exact_at_integer_exponent(self) -> Fraction:
        """Imaginary part as an exact rational; needs an integer exponent."""
        if self.e.denominator != 1:
            raise ValueError("exponent is not an integer")
        return self.q * Fraction(2, self.d) ** int(self.e)


@dataclass
class SpectralCatalog:
    """Eigenvalue list of ``K_r(u0)`` up to a level cutoff, generated lazily per level.

    ``labeling`` (``s3`` only) selects the multiplicity assignment:
    ``"verified"`` uses the exactly verified bracket weights, ``"sets"`` uses
    the set index ``m`` for every element of ``E_k^m``.
    """

    geometry: str
    r: Fraction
    cutoff: int
    labeling: str = "verified"

    def level_entries(self, n: int) -> List[EigenEntry]:
        if self.geometry == "s2":
            return _s2_level(self.r, n)
        return _s3_level(self.r, n, self.labeling)

    @property
    def first_level(self) -> int:
        return 1 if self.geometry == "s2" else 0

    def levels(self) -> Iterator[Tuple[int, List[EigenEntry]]]:
        for n in range(self.first_level, self.cutoff + 1):
            yield n, self.level_entries(n)

    @property
    def entries(self) -> List[EigenEntry]:
        return [e for _, es in self.levels() for e in es]

    def config(self) -> dict:
        return {"geometry": self.geometry, "r": str(self.r), "cutoff": self.cutoff, "labeling": self.labeling}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["geometry", "family", "k_or_l", "m", "re", "im", "multiplicity"])
        for e in self.entries:
            v = e.value
            w.writerow([e.geometry, e.family, e.level, e.m, repr(v.real), repr(v.imag), e.multiplicity])
        return buf.getvalue()


def _s2_level(r: Fraction, ell: int) -> List[EigenEntry]:
    d = ell * (ell + 1)
    e = 1 + r
    return [EigenEntry(Fraction(m), d, e, 1, "s2", "Y", ell, m) for m in range(-ell, ell + 1)]


def _s3_level(r: Fraction, k: int, labeling: str) -> List[EigenEntry]:
    e = 2 * r + 1
    if k == 0:
        # e1 (weight 0), e2 - i e3 (weight -1), e2 + i e3 (weight 1); curl eigenvalue 2
        return [EigenEntry(Fraction(-2 * mu), 2, e, 1, "s3", "E", 0, mu) for mu in (0, -1, 1)]
    out = []
    if labeling == "verified":
        weights = [(-1, k + 1)] + [(m, k + 1) for m in range(k + 1)] + [(k + 1, k + 1)]
    else:
        weights = [(0, 2 * (k + 1))] + [(m, k + 1) for m in range(1, k)] + [(k, 2 * (k + 1))]
    for mu, mult in weights:
        out.append(EigenEntry(Fraction(-(2 * mu - k)), k + 2, e, mult, "s3", "E", k, mu))
    for m in range(1, k):
        out.append(EigenEntry(Fraction(2 * m - k), k, e, k + 1, "s3", "F", k, m))
    return out


def catalog_s2(r, l_max: int) -> SpectralCatalog:
    """Rotation-field spectrum for ``1 <= l <= l_max``, ``-l <= m <= l``."""
    r = as_fraction(r)
    if r <= -1:
        raise ValidationError("catalog_s2 needs r > -1")
    if not isinstance(l_max, int) or l_max < 1:
        raise ValidationError("l_max must be an integer >= 1")
    return SpectralCatalog("s2", r, l_max)


def catalog_s3(r, k_max: int, labeling: str = "verified") -> SpectralCatalog:
    """Hopf-field spectrum for ``0 <= k <= k_max``."""
    r = as_fraction(r)
    if r < 0:
        raise ValidationError("catalog_s3 needs r >= 0")
    if not isinstance(k_max, int) or k_max < 1:
        raise ValidationError("k_max must be an integer >= 1")
    if labeling not in ("verified", "sets"):
        raise ValidationError(f"unknown labeling {labeling!r}")
    return SpectralCatalog("s3", r, k_max, labeling)


def make_catalog(geometry: str, r, cutoff: int, labeling: str = "verified") -> SpectralCatalog:
    g = GEOMETRY_ALIASES.get(str(geometry).lower())
    if g is None:
        raise ValidationError(f"unknown geometry {geometry!r}")
    return catalog_s2(r, cutoff) if g == "s2" else catalog_s3(r, cutoff, labeling)


# -- thresholds --------------------------------------------------------------


def decay_order(dim: int, r) -> Fraction:
    """Order ``sigma`` such that ``K_r`` behaves like ``Delta^(-sigma)``."""
    r = as_fraction(r)
    if dim == 2:
        return r + Fraction(1, 2)
    if dim == 3:
        return r
    raise ValidationError("dim must be 2 or 3")


def zeta_rule(dim: int, r, p) -> bool:
    """``sigma p > dim/2``: convergence of the zeta sum of ``Delta^(-sigma)``."""
    return decay_order(dim, r) * as_fraction(p) > Fraction(dim, 2)


def spectral_threshold(dim: int, r) -> Fraction:
    """Critical Schatten exponent: ``2/(1+2r)`` on S^2, ``3/(2r)`` on S^3."""
    r = as_fraction(r)
    if dim == 2:
        if r <= Fraction(-1, 2):
            raise ValidationError("dim 2 needs r > -1/2")
        return Fraction(2) / (1 + 2 * r)
    if dim == 3:
        if r <= 0:
            raise ValidationError("dim 3 needs r > 0")
        return Fraction(3) / (2 * r)
    raise ValidationError("dim must be 2 or 3")


# -- Schatten sums -----------------------------------------------------------


@dataclass
class SchattenReport:
    geometry: str
    p: float
    r: str
    cutoff: int
    partial_sum: float
    tail_lower: float
    tail_upper: float
    verdict: str
    tail_exponent: float
    compact: bool = True
    log_coefficient: Optional[float] = None

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("tail_lower", "tail_upper"):
            if math.isinf(d[key]):
                d[key] = "inf"
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SchattenReport":
        d = dict(d)
        for key in ("tail_lower", "tail_upper"):
            if d[key] == "inf":
                d[key] = math.inf
        return cls(**d)


def level_power_sum(entries: List[EigenEntry], p: float) -> float:
    return math.fsum(e.multiplicity * e.modulus**p for e in entries if e.q != 0)


def partial_sums(catalog: SpectralCatalog, p) -> List[float]:
    """Cumulative ``sum multiplicity |lambda|^p`` after each level."""
    p = float(p)
    terms, out = [], []
    for _, entries in catalog.levels():
        terms.append(level_power_sum(entries, p))
        out.append(math.fsum(terms))
    return out


def _s2_tail(p: float, r: float, L: int):
    """Bounds on ``sum_{l > L}`` of the level sums; ``a`` is the tail exponent.

    With ``sigma = p(1+r)`` and ``C = 2^(sigma+1)/(p+1)`` each level sum lies in
    ``[C l^(p+1) (l+1)^(-2 sigma), C (l+1)^(p+1) l^(-2 sigma)]``.
    """
    sigma = p * (1 + r)
    a = 2 * sigma - p - 1
    C = 2 ** (sigma + 1) / (p + 1)
    if a <= 1:
        return a, math.inf, math.inf, C
    rho = (L + 1) / (L + 2)
    upper = C * rho ** (-(p + 1)) * L ** (1 - a) / (a - 1)
    lower = C * rho ** (p + 1) * (L + 2) ** (1 - a) / (a - 1)
    return a, lower, upper, C


def _s3_tail(p: float, r: float, L: int):
    """Bounds on ``sum_{k > L}`` of the level sums for the Hopf spectrum.

    Uses ``k^(p+1)/(p+1) <= sum_m |2m-k|^p <= k^(p+1)/(p+1) + 2 k^p``; the two
    or four edge weights add at most ``2 (k+2)^p + 2 k^p``.
    """
    sigma = p * (2 * r + 1)
    a = sigma - p - 2
    C = 2**sigma / (p + 1)
    if a <= 1:
        return a, math.inf, math.inf, C
    L = max(L, 1)
    g = 1 + 2 / (L + 1)
    upper_const = 2 ** (sigma + 1) * (1 + 1 / (L + 1)) * (1 / (p + 1) + (2 * g**p + 2) / (L + 1))
    upper = upper_const * L ** (1 - a) / (a - 1)
    lower = C * ((L + 1) / (L + 3)) ** (p + 2) * (L + 3) ** (1 - a) / (a - 1)
    return a, lower, upper, C


def schatten_report(catalog: SpectralCatalog, p) -> SchattenReport:
    """Partial Schatten ``p``-sum with analytic tail bounds and a verdict.

    The verdict follows the tail exponent ``a``: the level sums behave like
    ``l^(-a)`` (resp. ``k^(-a)``), so the series converges iff ``a > 1``.
    """
    pf = float(as_fraction(p))
    if pf < 1:
        raise ValidationError("p must be >= 1")
    rf = float(catalog.r)
    parts = partial_sums(catalog, pf)
    partial = parts[-1] if parts else 0.0
    compact = True
    if catalog.geometry == "s2":
        a, lo, hi, C = _s2_tail(pf, rf, catalog.cutoff)
        compact = catalog.r > Fraction(-1, 2)
    elif catalog.geometry == "s3":
        a, lo, hi, C = _s3_tail(pf, rf, catalog.cutoff)
        compact = catalog.r > 0
    else:
        return SchattenReport(catalog.geometry, pf, str(catalog.r), catalog.cutoff, partial,
                              math.nan, math.nan, "undetermined", math.nan)
    verdict = "converges" if a > 1 and compact else "diverges"
    log_c = C if abs(a - 1) < 1e-12 else None
    return SchattenReport(
        geometry=catalog.geometry,
        p=pf,
        r=str(catalog.r),
        cutoff=catalog.cutoff,
        partial_sum=partial,
        tail_lower=lo,
        tail_upper=hi,
        verdict=verdict,
        tail_exponent=a,
        compact=compact,
        log_coefficient=log_c,
    )


# -- non-compactness ---------------------------------------------------------


@dataclass
class NonCompactnessReport:
    geometry: str
    r: str
    essential_radius: float
    hausdorff_measure: float
    density_curve: List[Tuple[float, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["essential_radius"] = _json_float(self.essential_radius)
        d["hausdorff_measure"] = _json_float(self.hausdorff_measure)
        d["density_curve"] = [list(x) for x in self.density_curve]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "NonCompactnessReport":
        d = dict(d)
        for key in ("essential_radius", "hausdorff_measure"):
            d[key] = math.inf if d[key] == "inf" else d[key]
        d["density_curve"] = [tuple(x) for x in d["density_curve"]]
        return cls(**d)


def _json_float(x):
    return "inf" if math.isinf(x) else x


def _branch_limit(coefficient: float, exponent: Fraction) -> float:
    """``lim coefficient * n^exponent`` as ``n -> infinity``."""
    if exponent < 0:
        return 0.0
    if exponent == 0:
        return coefficient
    return math.inf


def essential_radius(catalog: SpectralCatalog) -> float:
    """Largest accumulation value of ``|lambda|`` from the closed-form branches.

    On S^2 the largest modulus at level ``l`` is
    ``l (2/(l(l+1)))^(1+r) ~ 2^(1+r) l^(-1-2r)``.  On S^3 both families have
    largest modulus ``~ 2^(2r+1) k^(-2r)``.  Smaller moduli at the same level
    fill ``[0, max]`` densely, so the limit of the maxima is the answer.
    """
    r = catalog.r
    if catalog.geometry == "s2":
        return _branch_limit(2.0 ** float(1 + r), -1 - 2 * r)
    return _branch_limit(2.0 ** float(2 * r + 1), -2 * r)


def density_limit(eps: float) -> float:
    """``1 - eps/sqrt(2)``: asymptotic fraction of SQG eigenvalues above ``eps``."""
    eps = float(eps)
    if not 0 < eps <= math.sqrt(2.0) + 1e-15:
        raise ValidationError("eps must lie in (0, sqrt(2)]")
    return max(0.0, 1.0 - eps / math.sqrt(2.0))


def density_at_level(ell: int, eps: float, r=Fraction(-1, 2)) -> float:
    """Fraction ``#{m : |lambda_l^m| > eps} / (2 l)`` by exhaustive count."""
    if not isinstance(ell, int) or ell < 1:
        raise ValidationError("l must be an integer >= 1")
    entries = _s2_level(as_fraction(r), ell)
    count = sum(1 for e in entries if e.modulus > eps)
    return count / (2 * ell)


def nondecay_density(ell: int, eps: float) -> Tuple[float, float]:
    """``(rho(l, eps), lim rho)`` for the SQG rotation spectrum (``r = -1/2``)."""
    limit = density_limit(eps)
    return density_at_level(ell, float(eps)), limit


def noncompactness(catalog: SpectralCatalog, eps_values=(0.2, 0.5, 1.0), density_level: int = 10_000
                   ) -> NonCompactnessReport:
    """Essential radius, Hausdorff measure of non-compactness and density curve.

    The density curve is only meaningful for the SQG spectrum (S^2, r = -1/2).
    """
    re = essential_radius(catalog)
    curve: List[Tuple[float, float]] = []
    if catalog.geometry == "s2" and catalog.r == Fraction(-1, 2):
        for eps in eps_values:
            rho, lim = nondecay_density(density_level, eps)
            curve.append((float(eps), rho))
    return NonCompactnessReport(catalog.geometry, str(catalog.r), re, re, curve)
