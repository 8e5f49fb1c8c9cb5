"""
Catalogue of splitting schemes.

A scheme is stored as two step-fraction tuples ``a`` (dissipative
subproblem ``-R``) and ``b`` (conservative subproblem ``J``).  Stages act in
the order ``a_1, b_1, a_2, b_2, ..., a_m, b_m``; zero-length stages are
skipped.  Force-gradient terms ``-c_j h^3 C`` are attached to individual
stages, and sixth-order schemes additionally carry a fifth-order
correction ``-h^5 Z`` in every ``J`` stage (weighted by ``b_j``) and
optionally an ``S`` factor replacing the central dissipative stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Literal

import numpy as np

from .errors import SchemeError, UnknownSchemeError

SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)
SQRT15 = math.sqrt(15.0)
CBRT2 = 2.0 ** (1.0 / 3.0)

# names of the fifth-order brackets that may enter Z
Z_BRACKETS = ("L1L1C", "L1L2D", "L2L2C", "L2L2D")


@dataclass(frozen=True)
class ForceGradient:
    """Term ``-coeff * h^3 * C`` added to stage ``stage`` (0-based) of subproblem ``sub``."""

    stage: int
    sub: Literal[1, 2]
    coeff: float


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    cls: Literal["a", "b"] | None
    a: tuple
    b: tuple
    order: int
    fg: tuple = ()
    c: float = 0.0
    z_terms: tuple = ()  # ((bracket, coeff), ...), see Z_BRACKETS
    s_variant: Literal["i", "ii"] | None = None
    e52: float = 0.0
    kind: Literal["energy", "port", "both"] = "energy"
    dissipative: bool = True
    symmetric: bool = True
    hypothesis: str = "general"
    coefficients: dict = field(default_factory=dict, compare=False, hash=False)
    description: str = ""

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def positive(self) -> bool:
        return all(v >= 0 for v in self.a) and all(v >= 0 for v in self.b)

    def stage_sequence(self) -> list[tuple[int, float]]:
        """Interleaved ``(subproblem, fraction)`` pairs in acting order, zero stages dropped."""
        seq = []
        for aj, bj in zip(self.a, self.b):
            if aj != 0:
                seq.append((1, aj))
            if bj != 0:
                seq.append((2, bj))
        return seq

    @property
    def n_stages(self) -> int:
        n = len(self.stage_sequence())
        if self.s_variant == "i":
            n += 1
        elif self.s_variant == "ii":
            n += 2
        return n

    def fg_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        c1 = np.zeros(self.m)
        c2 = np.zeros(self.m)
        for g in self.fg:
            (c1 if g.sub == 1 else c2)[g.stage] += g.coeff
        return c1, c2


def _f(x) -> float:
    return float(x)


def _class_a(m, a_red, b_red):
    a = [0.0] * m
    b = [0.0] * m
    for i, v in enumerate(a_red):
        a[i] = a[m - 1 - i] = v
    for i, v in enumerate(b_red):
        b[i] = b[m - 2 - i] = v
    return tuple(map(_f, a)), tuple(map(_f, b))


def _class_b(m, a_red, b_red):
    """``a_red`` starts at ``a_2`` (``a_1 = 0``)."""
    a = [0.0] * m
    b = [0.0] * m
    for i, v in enumerate(a_red, start=1):
        a[i] = a[m - i] = v
    for i, v in enumerate(b_red):
        b[i] = b[m - 1 - i] = v
    return tuple(map(_f, a)), tuple(map(_f, b))


def _fg_in_J(b, c):
    """Spread ``c`` over the J stages proportional to ``b_j``."""
    return tuple(ForceGradient(j, 2, bj * c) for j, bj in enumerate(b) if bj != 0)


def _build_catalogue() -> dict:
    cat: dict[str, SchemeSpec] = {}

    def add(spec):
        cat[spec.name] = spec

    a, b = _class_a(2, [Fraction(1, 2)], [1])
    add(SchemeSpec("strang-a", "a", a, b, 2, kind="both", description="Strang splitting, -R first"))
    a, b = _class_b(2, [1], [Fraction(1, 2)])
    add(SchemeSpec("strang-b", "b", a, b, 2, kind="both", description="Strang splitting, J first"))

    # 5-stage fourth order
    a5, b5 = _class_a(3, [Fraction(1, 6), Fraction(2, 3)], [Fraction(1, 2)])
    c5a = 1 / 72
    ii = SchemeSpec(
        "ea5-a", "a", a5, b5, 4, _fg_in_J(b5, c5a), c5a,
        coefficients={"c": c5a},
        description="5-stage class a, commutator in the J stages",
    )
    add(ii)
    add(replace(ii, name="ea5-a-ii"))
    add(replace(ii, name="ea5-a-i", fg=(ForceGradient(1, 1, c5a),),
                description="5-stage class a, commutator in the central -R stage"))
    a5b, b5b = _class_b(3, [0.5], [(3 - SQRT3) / 6, SQRT3 / 3])
    c5b = (2 - SQRT3) / 24
    eb = SchemeSpec(
        "ea5-b", "b", a5b, b5b, 4, _fg_in_J(b5b, c5b), c5b,
        coefficients={"c": c5b},
        description="5-stage class b, commutator in the J stages",
    )
    add(eb)
    add(replace(eb, name="ea5-b-iii", fg=(ForceGradient(1, 2, c5b),),
                description="5-stage class b, commutator in the central J stage"))

    # 7-stage fourth order
    a7, b7 = _class_a(4, [Fraction(1, 8), Fraction(3, 8)], [Fraction(1, 3), Fraction(1, 3)])
    add(SchemeSpec("ea7-a", "a", a7, b7, 4, _fg_in_J(b7, 1 / 192), 1 / 192,
                   coefficients={"c": 1 / 192}, description="7-stage class a"))
    a7b, b7b = _class_b(4, [Fraction(3, 8), Fraction(1, 4)], [Fraction(1, 6), Fraction(1, 3)])
    add(SchemeSpec("ea7-b", "b", a7b, b7b, 4, _fg_in_J(b7b, 1 / 192), 1 / 192,
                   coefficients={"c": 1 / 192}, description="7-stage class b"))

    # 9-stage sixth order
    ta = {
        "a": (0.0741652386084523, 0.3312015955219320, 0.1892663317392310),
        "b": (0.2357603332527950, 0.2642396667472050),
        "c": 3.4513723374828328e-3,
        "e51t": -2.8754632332335723e-5,
        "e53": -7.1694217000153600e-6,
        "e52": -4.2236874448321610e-5,
        "e55": -1.3885239090889685e-5,
    }
    a9, b9 = _class_a(5, ta["a"], ta["b"])
    add(SchemeSpec(
        "ea9-a", "a", a9, b9, 6, _fg_in_J(b9, ta["c"]), ta["c"],
        z_terms=(("L1L1C", ta["e51t"]), ("L1L2D", ta["e53"])),
        hypothesis="[L1,D]=0", coefficients=dict(ta),
        description="9-stage class a; sixth order when [-R,D]=0, fourth otherwise",
    ))
    tb = {
        "a": (0.2216735783842150, 0.2783264216157850),
        "b": (0.0951068381417148, 0.2665630297195250, 0.2766602642775210),
        "c": 2.7595070959696467e-3,
        "e51t": -1.4777636968353257e-5,
        "e55": 1.3097476006184691e-5,
        "e53": 1.2345801613546542e-5,
        "e56": 1.5869088947135458e-5,
    }
    a9b, b9b = _class_b(5, tb["a"], tb["b"])
    base_b = SchemeSpec(
        "ea9-b", "b", a9b, b9b, 4, _fg_in_J(b9b, tb["c"]), tb["c"],
        z_terms=(("L1L1C", tb["e51t"]), ("L2L2C", tb["e55"])),
        coefficients=dict(tb),
        description="9-stage class b; sixth order only if [J,D]=0, which for real skew J "
        "forces every commutator to vanish",
    )
    add(base_b)
    add(replace(
        base_b, name="ea9-b-fg", order=6, dissipative=False,
        z_terms=base_b.z_terms + (("L1L2D", tb["e53"]), ("L2L2D", tb["e56"])),
        description="9-stage class b with all fifth-order commutators as force gradients "
        "(symmetric term breaks dissipation)",
    ))

    # general sixth order with S factor
    gen = SchemeSpec(
        "ea6gen-ii", "a", a9, b9, 6, _fg_in_J(b9, ta["c"]), ta["c"],
        z_terms=(("L1L1C", ta["e51t"]), ("L1L2D", ta["e53"]), ("L2L2C", ta["e55"])),
        s_variant="ii", e52=ta["e52"], coefficients=dict(ta),
        description="11-stage sixth-order class a, S = exp(W) exp(a3 h L1) exp(-W)",
    )
    add(gen)
    add(replace(gen, name="ea6gen-i", s_variant="i",
                description="10-stage sixth-order class a, S split into two halves"))

    # port-based schemes
    add(SchemeSpec("pbs4-a", "a", a5, b5, 4, kind="port", description="port-based, 5 stages"))
    add(SchemeSpec("pbs4-b", "b", a5b, b5b, 4, kind="port", description="port-based, 5 stages"))
    a6, b6 = _class_a(4, [Fraction(1, 12), Fraction(5, 12)], [(5 - SQRT5) / 10, SQRT5 / 5])
    add(SchemeSpec("pbs6-a", "a", a6, b6, 6, kind="port", description="port-based, 7 stages"))
    a6b, b6b = _class_b(4, [Fraction(5, 18), Fraction(4, 9)], [(5 - SQRT15) / 10, SQRT15 / 10])
    add(SchemeSpec("pbs6-b", "b", a6b, b6b, 6, kind="port", description="port-based, 7 stages"))

    # negative baseline: triple jump with -R as the outer subproblem
    g1 = 1 / (2 - CBRT2)
    g2 = -CBRT2 / (2 - CBRT2)
    add(SchemeSpec(
        "tj4", None, (g1 / 2, (g1 + g2) / 2, (g1 + g2) / 2, g1 / 2), (g1, g2, g1, 0.0), 4,
        dissipative=False, coefficients={"gamma1": g1, "gamma2": g2},
        description="triple jump, negative steps",
    ))

    # third-order 4-stage method, factors acting right to left; the commutator
    # correction sits in the -R stages, where C = [-R, [-R, J]] is what cancels
    # the third-order residual
    add(SchemeSpec(
        "tilde3", None, (0.0, 3 / 4, 1 / 4), (1 / 3, 2 / 3, 0.0), 3,
        fg=(ForceGradient(1, 1, 3 / 4 / 48), ForceGradient(2, 1, 1 / 4 / 48)), c=1 / 48,
        symmetric=False, coefficients={"c": 1 / 48},
        description="third-order non-symmetric method for the ESQ half step",
    ))
    return cat


CATALOGUE: dict[str, SchemeSpec] = _build_catalogue()


def names() -> list[str]:
    return list(CATALOGUE)


def preset(name: str) -> SchemeSpec:
    try:
        return CATALOGUE[name]
    except KeyError:
        raise UnknownSchemeError(name) from None


@dataclass
class SchemeReport:
    name: str
    violations: list
    positive: bool
    dissipative: bool

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _palindrome_a(v, tol):
    return all(abs(v[i] - v[-1 - i]) <= tol for i in range(len(v)))


def _class_pattern_violations(cls, a, b, tol, what):
    m = len(a)
    out = []
    if cls == "a":
        if not _palindrome_a(a, tol):
            out.append(f"{what}: class a requires a_i = a_(m+1-i)")
        if abs(b[-1]) > tol:
            out.append(f"{what}: class a requires b_m = 0")
        if not _palindrome_a(b[:-1], tol):
            out.append(f"{what}: class a requires b_i = b_(m-i)")
    elif cls == "b":
        if abs(a[0]) > tol:
            out.append(f"{what}: class b requires a_1 = 0")
        if not _palindrome_a(a[1:], tol):
            out.append(f"{what}: class b requires a_i = a_(m+2-i)")
        if not _palindrome_a(b, tol):
            out.append(f"{what}: class b requires b_i = b_(m+1-i)")
    return out


def check_scheme(spec: SchemeSpec, tol: float = 1e-12) -> SchemeReport:
    """Consistency sums, class symmetry pattern, positivity and force-gradient total."""
    v = []
    if len(spec.a) != len(spec.b):
        v.append("a and b have different lengths")
        return SchemeReport(spec.name, v, spec.positive, spec.dissipative)
    sa, sb = math.fsum(spec.a), math.fsum(spec.b)
    if abs(sa - 1) > tol:
        v.append(f"sum(a) = {sa!r} != 1")
    if abs(sb - 1) > tol:
        v.append(f"sum(b) = {sb!r} != 1")
    v += _class_pattern_violations(spec.cls, spec.a, spec.b, tol, "steps")
    c1, c2 = spec.fg_arrays()
    if spec.fg:
        v += _class_pattern_violations(spec.cls, tuple(c1), tuple(c2), tol, "force gradients")
        tot = math.fsum(c1) + math.fsum(c2)
        if abs(tot - spec.c) > tol * max(1.0, abs(spec.c)):
            v.append(f"force-gradient coefficients sum to {tot!r}, expected c = {spec.c!r}")
        for g in spec.fg:
            frac = (spec.a if g.sub == 1 else spec.b)[g.stage]
            if frac == 0:
                v.append(f"force gradient on zero-length stage {g.stage} of subproblem {g.sub}")
    if spec.cls is None and spec.symmetric:
        seq = spec.stage_sequence()
        if any(s1 != s2 or abs(f1 - f2) > tol for (s1, f1), (s2, f2) in zip(seq, reversed(seq))):
            v.append("stage sequence is not palindromic")
    if spec.dissipative and not spec.positive:
        v.append("dissipation-preserving scheme has negative steps")
    return SchemeReport(spec.name, v, spec.positive, spec.dissipative)


def order_residuals_5stage(spec: SchemeSpec) -> tuple[float, float, float, float]:
    """Closed-form ``(e11, e12, e32, e31)`` for a 5-stage (m = 3) symmetric scheme."""
    if spec.m != 3 or spec.cls not in ("a", "b"):
        raise SchemeError(f"{spec.name} is not a 5-stage class-a/b scheme")
    a, b = spec.a, spec.b
    if spec.cls == "a":
        a1, a2, b1 = a[0], a[1], b[0]
        e11 = 2 * a1 + a2
        e12 = 2 * b1
        e32 = b1**2 * (a2 - 4 * a1) / 6
        e31 = b1 * (a2**2 - 2 * a1 * a2 - 2 * a1**2) / 6
    else:
        a2, b1, b2 = a[1], b[0], b[1]
        e11 = 2 * a2
        e12 = 2 * b1 + b2
        e32 = -a2 * (b2**2 - 2 * b1 * b2 - 2 * b1**2) / 6
        e31 = -(a2**2) * (b2 - 4 * b1) / 6
    return e11, e12, e32, e31


def custom_5stage(cls: str, a, b, name: str = "custom") -> SchemeSpec:
    """Unvalidated 5-stage spec from full tuples, for residual experiments."""
    return SchemeSpec(name, cls, tuple(map(float, a)), tuple(map(float, b)), 2)


def numeric_defect_order(spec, system, u=None) -> int:
    """One-step defect order of ``spec`` on ``system``; see the diagnostics module."""
    from .diagnostics import numeric_defect_order as _impl

    return _impl(spec, system, u)
