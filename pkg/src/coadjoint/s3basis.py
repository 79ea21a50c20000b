"""Exact basis of curl eigenfields on the round 3-sphere.

Every grading ``k`` is built from the harmonic polynomials ``Q_kj^m`` (the
coefficients of ``(a z1 + b z2)^m (-conj(b) z1 + conj(a) z2)^(k-m)``) times the
complex frame ``e1, e2 - i e3, e2 + i e3``.  The fields are homogeneous of
degree ``k`` so all identities are checked as raw polynomial identities.

Each element records two labels:

``m``
    the index of the set ``E_k^m`` / ``F_k^m`` it is assigned to by the
    construction, always in ``0..k``;
``weight``
    the exactly verified bracket weight ``mu`` with ``[v, e1] = -i(2 mu - k) v``.

They coincide except for the edge elements ``curl(Q^0 (e2 - i e3))`` (weight
``-1``) and ``curl(Q^k (e2 + i e3))`` (weight ``k + 1``), and for ``e2 -+ i e3``
at ``k = 0`` (weights ``-1`` and ``1``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import comb
from typing import Dict, List, Optional, Tuple

import numpy as np

from .algebra import (
    ALPHA,
    ALPHA_BAR,
    BETA,
    BETA_BAR,
    E1,
    I,
    FrameField,
    GaussianRational,
    Poly4,
    bracket_e1,
    curl_frame,
    divergence_frame,
    euclidean_laplacian,
    frame_derivative,
    proportionality,
)
from .errors import ValidationError, VerificationError

# prime with p = 1 mod 4, so that -1 has a square root in F_p
RANK_PRIME = 1_000_000_009


def _check_k(k):
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 0:
        raise ValidationError(f"grading k must be an integer >= 0, got {k!r}")
    return int(k)


@lru_cache(maxsize=None)
def _power(which: str, n: int) -> Poly4:
    base = {"a": ALPHA, "ab": ALPHA_BAR, "b": BETA, "bb": BETA_BAR, "-bb": -BETA_BAR}[which]
    return base**n


@lru_cache(maxsize=None)
def _build_Q(k: int, m: int) -> Tuple[Poly4, ...]:
    out = [Poly4() for _ in range(k + 1)]
    n = k - m
    for a in range(m + 1):
        left = _power("a", a) * _power("b", m - a)
        for b in range(n + 1):
            right = _power("-bb", b) * _power("ab", n - b)
            out[a + b] = out[a + b] + (left * right).scale(comb(m, a) * comb(n, b))
    return tuple(out)


def build_Q(k: int, m: int) -> List[Poly4]:
    """Return ``[Q_k0^m, ..., Q_kk^m]``, indexed by the power ``j`` of ``z1``."""
    k = _check_k(k)
    if not isinstance(m, (int, np.integer)) or not 0 <= m <= k:
        raise ValidationError(f"need 0 <= m <= k, got k={k}, m={m!r}")
    return list(_build_Q(k, int(m)))


def v1(q: Poly4) -> FrameField:
    """``q e1``."""
    return FrameField(q, 0, 0)


def v2(q: Poly4) -> FrameField:
    """``q (e2 - i e3)``."""
    return FrameField(0, q, q * (-I))


def v3(q: Poly4) -> FrameField:
    """``q (e2 + i e3)``."""
    return FrameField(0, q, q * I)


def complex_frame_components(w: FrameField) -> Tuple[Poly4, Poly4, Poly4]:
    """Coefficients of ``w`` on ``e1, e2 - i e3, e2 + i e3``."""
    half = GaussianRational(1, 0, 2)
    g2 = (w.f2 + w.f3 * I).scale(half)
    g3 = (w.f2 - w.f3 * I).scale(half)
    return w.f1, g2, g3


@dataclass(frozen=True, eq=False)
class BasisElement:
    """One curl eigenfield together with its verified labels."""

    field: FrameField
    family: str  # "E" or "F"
    k: int
    m: int
    j: int
    weight: int
    curl_eig: int
    source: str

    @property
    def bracket_eig(self) -> GaussianRational:
        """Scalar ``c`` with ``[field, e1] = c * field``."""
        return GaussianRational(0, -(2 * self.weight - self.k))

    @property
    def set_bracket_eig(self) -> GaussianRational:
        """``-i(2m - k)`` computed from the set index ``m``."""
        return GaussianRational(0, -(2 * self.m - self.k))

    @property
    def label_consistent(self) -> bool:
        return self.weight == self.m

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "k": self.k,
            "m": self.m,
            "j": self.j,
            "weight": self.weight,
            "curl_eig": self.curl_eig,
            "bracket_eig": list(self.bracket_eig.to_pair()),
            "source": self.source,
            "components": self.field.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "BasisElement":
        return cls(
            field=FrameField.from_json(d["components"]),
            family=d["family"],
            k=d["k"],
            m=d["m"],
            j=d["j"],
            weight=d["weight"],
            curl_eig=d["curl_eig"],
            source=d["source"],
        )


def _grading_elements(k: int) -> List[BasisElement]:
    if k == 0:
        return [
            BasisElement(E1, "E", 0, 0, 0, 0, 2, "frame e1"),
            BasisElement(FrameField(0, 1, -I), "E", 0, 0, 0, -1, 2, "frame e2-ie3"),
            BasisElement(FrameField(0, 1, I), "E", 0, 0, 0, 1, 2, "frame e2+ie3"),
        ]
    out: List[BasisElement] = []
    Q0, Qk = build_Q(k, 0), build_Q(k, k)
    for j in range(k + 1):
        out.append(BasisElement(curl_frame(v1(Q0[j])), "E", k, 0, j, 0, k + 2, "curl v1"))
        out.append(BasisElement(curl_frame(v2(Q0[j])), "E", k, 0, j, -1, k + 2, "curl v2"))
    for m in range(1, k):
        for j, q in enumerate(build_Q(k, m)):
            c1 = curl_frame(v1(q))
            c2 = curl_frame(c1)
            out.append(BasisElement(c1.scale(k) + c2, "E", k, m, j, m, k + 2, "k curl v1 + curl^2 v1"))
            out.append(BasisElement(c1.scale(k + 2) - c2, "F", k, m, j, m, -k, "(k+2) curl v1 - curl^2 v1"))
    for j in range(k + 1):
        out.append(BasisElement(curl_frame(v1(Qk[j])), "E", k, k, j, k, k + 2, "curl v1"))
        out.append(BasisElement(curl_frame(v3(Qk[j])), "E", k, k, j, k + 1, k + 2, "curl v3"))
    return out


def _fail(what: str, el: BasisElement, lhs: FrameField, rhs: FrameField):
    raise VerificationError(
        f"{what} fails for {el.family} k={el.k} m={el.m} j={el.j} ({el.source}): "
        f"lhs={lhs.normal_form()!r} rhs={rhs.normal_form()!r}"
    )


def check_weight_form(w: FrameField, k: int, mu: int) -> bool:
    """True when ``w = z1 v1^mu + z2 v2^(mu+1) + z3 v3^(mu-1)`` with components in ``H_k``.

    Span membership is tested through the characterization of
    ``span_j Q_kj^m`` as the harmonic degree-``k`` polynomials with
    ``e1 f = i(2m - k) f``.
    """
    for g, s in zip(complex_frame_components(w), (mu, mu + 1, mu - 1)):
        if g.is_zero():
            continue
        if not (g.degrees() == {k} and euclidean_laplacian(g).is_zero()):
            return False
        if frame_derivative(1, g) != g.scale(GaussianRational(0, 2 * s - k)):
            return False
    return True


def verify_element(el: BasisElement) -> None:
    """Check the exact identities of one element, raising :class:`VerificationError`."""
    w = el.field
    if w.is_zero():
        raise VerificationError(f"zero element {el.family} k={el.k} m={el.m} j={el.j}")
    curl = curl_frame(w)
    if curl != w.scale(el.curl_eig):
        _fail("curl relation", el, curl, w.scale(el.curl_eig))
    br = bracket_e1(w)
    if br != w.scale(el.bracket_eig):
        _fail("bracket relation", el, br, w.scale(el.bracket_eig))
    div = divergence_frame(w)
    if not div.is_zero():
        raise VerificationError(f"divergence {div} != 0 for k={el.k} m={el.m} j={el.j}")
    if not check_weight_form(w, el.k, el.weight):
        raise VerificationError(f"element k={el.k} m={el.m} j={el.j} is not of weight form")


def build_grading(k: int, verify: bool = True) -> List[BasisElement]:
    """All basis elements of grading ``k``; each is verified exactly unless ``verify=False``."""
    k = _check_k(k)
    elements = _grading_elements(k)
    if verify:
        for el in elements:
            verify_element(el)
    return elements


def expected_counts(k: int) -> Dict[Tuple[str, int], int]:
    """Cardinalities of the sets ``E_k^m`` and ``F_k^m``, keyed by ``(family, m)``."""
    if k == 0:
        return {("E", 0): 3}
    out = {("E", 0): 2 * (k + 1), ("E", k): 2 * (k + 1)}
    for m in range(1, k):
        out[("E", m)] = k + 1
        out[("F", m)] = k + 1
    return out


# -- exact rank -------------------------------------------------------------


def _sqrt_minus_one(p: int) -> int:
    for g in range(2, p):
        s = pow(g, (p - 1) // 4, p)
        if s * s % p == p - 1:
            return s
    raise ArithmeticError("no square root of -1")


def _coordinate_rows(fields: List[FrameField]):
    cols: Dict[Tuple[int, tuple], int] = {}
    rows = []
    for f in fields:
        row = {}
        for c, poly in enumerate(f.components):
            for mono, coef in poly.items():
                key = (c, mono)
                if key not in cols:
                    cols[key] = len(cols)
                row[cols[key]] = coef
        rows.append(row)
    return rows, len(cols)


def _rank_mod_p(rows, ncols, p=RANK_PRIME) -> Optional[int]:
    s = _sqrt_minus_one(p)
    mat = np.zeros((len(rows), ncols), dtype=np.int64)
    for r, row in enumerate(rows):
        for c, coef in row.items():
            re, im = coef.real, coef.imag
            den = re.denominator * im.denominator
            if den % p == 0:
                return None
            num = (re.numerator * im.denominator + s * im.numerator * re.denominator) % p
            mat[r, c] = num * pow(den, p - 2, p) % p
    rank = 0
    nrows = mat.shape[0]
    for c in range(ncols):
        piv = next((i for i in range(rank, nrows) if mat[i, c] != 0), None)
        if piv is None:
            continue
        mat[[rank, piv]] = mat[[piv, rank]]
        inv = pow(int(mat[rank, c]), p - 2, p)
        mat[rank] = mat[rank] * inv % p
        others = np.nonzero(mat[:, c])[0]
        others = others[others != rank]
        if others.size:
            factors = mat[others, c][:, None]
            mat[others] = (mat[others] - factors * mat[rank][None, :] % p) % p
        rank += 1
        if rank == nrows:
            break
    return rank


def _rank_exact(rows, ncols) -> int:
    mat = [[row.get(c, GaussianRational(0)) for c in range(ncols)] for row in rows]
    rank = 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(mat)) if not mat[i][c].is_zero()), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        pr = mat[rank]
        for i in range(len(mat)):
            if i != rank and not mat[i][c].is_zero():
                f = mat[i][c] / pr[c]
                mat[i] = [a - f * b for a, b in zip(mat[i], pr)]
        rank += 1
    return rank


def exact_rank(fields: List[FrameField]) -> int:
    """Rank of ``fields`` over the Gaussian rationals.

    Full rank modulo a prime certifies full rank over Q(i); otherwise the
    rank is recomputed by exact elimination.
    """
    rows, ncols = _coordinate_rows(fields)
    if not rows:
        return 0
    r = _rank_mod_p(rows, ncols)
    if r == len(rows):
        return r
    return _rank_exact(rows, ncols)


# -- grading report ----------------------------------------------------------


@dataclass
class GradingReport:
    k: int
    counts: Dict[Tuple[str, int], int]
    expected: Dict[Tuple[str, int], int]
    total: int
    rank: int
    curl_ok: bool = True
    bracket_ok: bool = True
    divergence_ok: bool = True
    weight_counts: Dict[Tuple[str, int], int] = dc_field(default_factory=dict)
    label_mismatches: List[Tuple[str, int, int, int]] = dc_field(default_factory=list)

    @property
    def counts_ok(self) -> bool:
        return self.counts == self.expected

    @property
    def independent(self) -> bool:
        return self.rank == self.total

    @property
    def expected_total(self) -> int:
        return 3 if self.k == 0 else 2 * (self.k + 1) ** 2

    @property
    def set_labels_ok(self) -> bool:
        """True when every bracket weight equals the set index ``m``."""
        return not self.label_mismatches

    @property
    def ok(self) -> bool:
        return (
            self.curl_ok
            and self.bracket_ok
            and self.divergence_ok
            and self.counts_ok
            and self.independent
            and self.total == self.expected_total
        )

    def to_json(self) -> dict:
        fam = lambda d: {f"{f}{m}": n for (f, m), n in sorted(d.items())}
        return {
            "k": self.k,
            "total": self.total,
            "expected_total": self.expected_total,
            "rank": self.rank,
            "counts": fam(self.counts),
            "expected_counts": fam(self.expected),
            "weight_counts": fam(self.weight_counts),
            "curl_ok": self.curl_ok,
            "bracket_ok": self.bracket_ok,
            "divergence_ok": self.divergence_ok,
            "counts_ok": self.counts_ok,
            "independent": self.independent,
            "set_labels_ok": self.set_labels_ok,
            "label_mismatches": [list(x) for x in self.label_mismatches],
            "ok": self.ok,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GradingReport":
        unfam = lambda m: {(key[0], int(key[1:])): n for key, n in m.items()}
        return cls(
            k=d["k"],
            counts=unfam(d["counts"]),
            expected=unfam(d["expected_counts"]),
            total=d["total"],
            rank=d["rank"],
            curl_ok=d["curl_ok"],
            bracket_ok=d["bracket_ok"],
            divergence_ok=d["divergence_ok"],
            weight_counts=unfam(d["weight_counts"]),
            label_mismatches=[tuple(x) for x in d["label_mismatches"]],
        )


def verify_grading(k: int) -> GradingReport:
    """Build grading ``k`` and check every identity exactly.

    Failing curl, bracket (with the verified weight) or divergence identities
    raise :class:`VerificationError` carrying both sides.  Elements whose
    weight differs from their set index are listed in ``label_mismatches``.
    """
    elements = build_grading(k, verify=True)
    counts: Dict[Tuple[str, int], int] = {}
    weights: Dict[Tuple[str, int], int] = {}
    mismatches = []
    for el in elements:
        counts[(el.family, el.m)] = counts.get((el.family, el.m), 0) + 1
        weights[(el.family, el.weight)] = weights.get((el.family, el.weight), 0) + 1
        if not el.label_consistent:
            mismatches.append((el.family, el.m, el.j, el.weight))
    return GradingReport(
        k=k,
        counts=counts,
        expected=expected_counts(k),
        total=len(elements),
        rank=exact_rank([el.field for el in elements]),
        weight_counts=weights,
        label_mismatches=mismatches,
    )


def set_bracket_check(elements: List[BasisElement]) -> List[BasisElement]:
    """Elements violating ``[v, e1] = -i(2m - k) v`` with ``m`` the set index."""
    return [el for el in elements if bracket_e1(el.field) != el.field.scale(el.set_bracket_eig)]


def redundancy_identities(k: int) -> Dict[str, bool]:
    """Check the two proportionalities between the ``v1`` and ``v2`` combinations.

    For ``1 <= m <= k-1`` and every ``j``:

    * ``k curl v1^m + curl^2 v1^m = i (k curl v2^(m+1) + curl^2 v2^(m+1))``
    * ``(k+2) curl v1^m - curl^2 v1^m = -i (k-m)/(m+1) ((k+2) curl v2^(m+1) - curl^2 v2^(m+1))``
    """
    k = _check_k(k)
    first = second = True
    for m in range(1, k):
        Qm, Qn = build_Q(k, m), build_Q(k, m + 1)
        for j in range(k + 1):
            a1 = curl_frame(v1(Qm[j]))
            a2 = curl_frame(a1)
            b1 = curl_frame(v2(Qn[j]))
            b2 = curl_frame(b1)
            first &= a1.scale(k) + a2 == (b1.scale(k) + b2).scale(I)
            c = GaussianRational(0, -(k - m), m + 1)
            second &= a1.scale(k + 2) - a2 == (b1.scale(k + 2) - b2).scale(c)
    return {"first": bool(first), "second": bool(second)}


def axisymmetric_filter(k: int) -> List[BasisElement]:
    """Elements of grading ``k`` annihilated by ``w -> [w, e1]``."""
    return [el for el in build_grading(k) if el.bracket_eig.is_zero()]


def gradient_relations(k: int) -> bool:
    """Check that curl annihilates the gradient of every ``Q_kj^m``."""
    from .algebra import gradient_frame

    for m in range(k + 1):
        for q in build_Q(k, m):
            if not curl_frame(gradient_frame(q)).is_zero():
                return False
    return True


def hopf_coefficient(w: FrameField, r=0):
    """Exact eigen-data of ``K_r(e1) w = 2^(2r+1) curl Delta^(-1-r) [w, e1]``.

    ``w`` must be an eigenfield of curl and of ``[., e1]``.  On such a field
    ``Delta = curl^2``, so ``K_r(e1) w = sign(lam) b (2/|lam|)^(2r+1) w`` where
    ``lam`` is the curl eigenvalue and ``b`` the bracket eigenvalue, both
    recovered here by exact division.  Returns ``(q, d, e)`` with
    ``K_r(e1) w = i q (2/d)^e w``.
    """
    from fractions import Fraction

    lam = _eigenvalue(curl_frame(w), w, "curl")
    b = _eigenvalue(bracket_e1(w), w, "bracket")
    if lam.imag != 0 or lam.real.denominator != 1 or lam.real == 0:
        raise VerificationError(f"curl eigenvalue {lam} is not a nonzero integer")
    if b.real != 0:
        raise VerificationError(f"bracket eigenvalue {b} is not imaginary")
    lam_int = int(lam.real)
    sign = 1 if lam_int > 0 else -1
    return Fraction(sign) * b.imag, abs(lam_int), 2 * Fraction(r) + 1


def hopf_apply_r0(w: FrameField) -> FrameField:
    """``K_0(e1) w = 2 curl^(-1) [w, e1]`` with curl inverted on the eigenfield ``w``."""
    lam = _eigenvalue(curl_frame(w), w, "curl")
    return bracket_e1(w).scale(GaussianRational(2) / lam)


def _eigenvalue(image: FrameField, w: FrameField, what: str) -> GaussianRational:
    ref = next(f for f in w.components if not f.is_zero())
    idx = w.components.index(ref)
    c = proportionality(image.components[idx], ref)
    if c is None or image != w.scale(c):
        raise VerificationError(f"field is not a {what} eigenfield")
    return c


def grading_to_json(elements: List[BasisElement]) -> str:
    return json.dumps([el.to_json() for el in elements], sort_keys=True)


def grading_from_json(text: str) -> List[BasisElement]:
    return [BasisElement.from_json(d) for d in json.loads(text)]
