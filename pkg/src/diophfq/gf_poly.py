"""Univariate polynomials over F_q, closure-square detection and character sums.

Polynomials are immutable :class:`PolyFq` values holding element codes,
constant term first.  All functions take the field context explicitly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .gf_arith import DivisionByZero, FieldCtx


class ZeroPolynomial(ValueError):
    pass


class BothZeroGcd(ValueError):
    pass


@dataclass(frozen=True)
class PolyFq:
    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        c = list(int(x) for x in self.coeffs)
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def __str__(self):
        return format_poly(self)


ZERO = PolyFq(())
ONE = PolyFq((1,))


def parse_poly(text: str) -> PolyFq:
    """"1,5,6" -> 1 + 5X + 6X^2 (codes, constant term first)."""
    return PolyFq(tuple(int(t) for t in text.split(",") if t.strip()))


def format_poly(f: PolyFq) -> str:
    return ",".join(str(c) for c in f.coeffs) if f.coeffs else "0"


def poly_add(ctx: FieldCtx, f: PolyFq, g: PolyFq) -> PolyFq:
    a, b = f.coeffs, g.coeffs
    n = max(len(a), len(b))
    return PolyFq(tuple(ctx.add(a[i] if i < len(a) else 0, b[i] if i < len(b) else 0)
                        for i in range(n)))


def poly_neg(ctx: FieldCtx, f: PolyFq) -> PolyFq:
    return PolyFq(tuple(ctx.neg(c) for c in f.coeffs))


def poly_sub(ctx: FieldCtx, f: PolyFq, g: PolyFq) -> PolyFq:
    return poly_add(ctx, f, poly_neg(ctx, g))


def poly_scale(ctx: FieldCtx, f: PolyFq, c: int) -> PolyFq:
    return PolyFq(tuple(ctx.mul(x, c) for x in f.coeffs))


def poly_mul(ctx: FieldCtx, f: PolyFq, g: PolyFq) -> PolyFq:
    a, b = f.coeffs, g.coeffs
    if not a or not b:
        return ZERO
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] = ctx.add(out[i + j], ctx.mul(x, y))
    return PolyFq(tuple(out))


def poly_divmod(ctx: FieldCtx, f: PolyFq, g: PolyFq) -> tuple[PolyFq, PolyFq]:
    if g.is_zero():
        raise DivisionByZero("polynomial division by zero")
    rem = list(f.coeffs)
    dg = g.degree
    inv_lead = ctx.inv(g.lead)
    quot = [0] * max(0, len(rem) - dg)
    while len(rem) - 1 >= dg and rem:
        c = ctx.mul(rem[-1], inv_lead)
        shift = len(rem) - 1 - dg
        quot[shift] = c
        for i, y in enumerate(g.coeffs):
            rem[shift + i] = ctx.sub(rem[shift + i], ctx.mul(c, y))
        while rem and rem[-1] == 0:
            rem.pop()
    return PolyFq(tuple(quot)), PolyFq(tuple(rem))


def poly_monic(ctx: FieldCtx, f: PolyFq) -> PolyFq:
    if f.is_zero():
        return f
    return poly_scale(ctx, f, ctx.inv(f.lead))


def poly_gcd(ctx: FieldCtx, f: PolyFq, g: PolyFq) -> PolyFq:
    """Monic gcd."""
    if f.is_zero() and g.is_zero():
        raise BothZeroGcd("gcd(0, 0) is undefined")
    while not g.is_zero():
        f, g = g, poly_divmod(ctx, f, g)[1]
    return poly_monic(ctx, f)


def derivative(ctx: FieldCtx, f: PolyFq) -> PolyFq:
    return PolyFq(tuple(ctx.mul(ctx.from_int(i), c) for i, c in enumerate(f.coeffs))[1:])


def poly_eval(ctx: FieldCtx, f: PolyFq, x: int) -> int:
    acc = 0
    for c in reversed(f.coeffs):
        acc = ctx.add(ctx.mul(acc, x), c)
    return acc


def poly_eval_all(ctx: FieldCtx, f: PolyFq, xs=None) -> np.ndarray:
    """Evaluate f at every code in xs (default: all of F_q) at once."""
    xs = ctx.elements() if xs is None else np.asarray(xs, dtype=np.int64)
    acc = np.zeros(xs.shape, dtype=np.int64)
    for c in reversed(f.coeffs):
        acc = ctx.add_arr(ctx.mul_arr(acc, xs), c)
    return acc


def poly_arith(ctx: FieldCtx, op: str, f: PolyFq, g=None):
    """Named dispatch over add, mul, gcd, derivative, eval."""
    if op == "add":
        return poly_add(ctx, f, g)
    if op == "mul":
        return poly_mul(ctx, f, g)
    if op == "gcd":
        return poly_gcd(ctx, f, g)
    if op == "derivative":
        return derivative(ctx, f)
    if op == "eval":
        return poly_eval(ctx, f, g)
    raise ValueError(f"unknown op {op!r}")


def _pth_root(ctx: FieldCtx, f: PolyFq) -> PolyFq:
    """h with h(X)^p = f(X), given f' = 0 (so f = sum c_i X^(ip))."""
    p = ctx.p
    e = ctx.p ** (ctx.k - 1)
    return PolyFq(tuple(ctx.pow(c, e) for c in f.coeffs[::p]))


def squarefree_decomposition(ctx: FieldCtx, f: PolyFq) -> list[tuple[PolyFq, int]]:
    """[(A, i), ...] with monic square-free, pairwise coprime A and f = lc * prod A^i.

    Handles f' = 0 by p-th root descent.
    """
    if f.is_zero():
        raise ZeroPolynomial("square-free decomposition of the zero polynomial")
    f = poly_monic(ctx, f)
    if f.degree == 0:
        return []
    out: list[tuple[PolyFq, int]] = []
    df = derivative(ctx, f)
    if df.is_zero():
        return [(a, i * ctx.p) for a, i in squarefree_decomposition(ctx, _pth_root(ctx, f))]
    c = poly_gcd(ctx, f, df)
    w = poly_divmod(ctx, f, c)[0]
    i = 1
    while w.degree > 0:
        y = poly_gcd(ctx, w, c)
        fac = poly_divmod(ctx, w, y)[0]
        if fac.degree > 0:
            out.append((fac, i))
        i += 1
        w = y
        c = poly_divmod(ctx, c, y)[0]
    if c.degree > 0:
        # what is left has every multiplicity divisible by p
        out.extend((a, j * ctx.p) for a, j in squarefree_decomposition(ctx, _pth_root(ctx, c)))
    return out


def square_free_part(ctx: FieldCtx, f: PolyFq) -> PolyFq:
    """Product of the distinct monic irreducible factors of f (its radical)."""
    if f.is_zero():
        raise ZeroPolynomial("square-free part of the zero polynomial")
    f = poly_monic(ctx, f)
    if f.degree <= 0:
        return ONE
    df = derivative(ctx, f)
    if df.is_zero():
        return square_free_part(ctx, _pth_root(ctx, f))
    g = poly_gcd(ctx, f, df)
    w = poly_divmod(ctx, f, g)[0]
    # every irreducible of f divides w (multiplicity prime to p) or g (otherwise)
    rg = square_free_part(ctx, g)
    common = poly_gcd(ctx, w, rg)
    return poly_monic(ctx, poly_mul(ctx, w, poly_divmod(ctx, rg, common)[0]))


def is_square_in_closure(ctx: FieldCtx, f: PolyFq) -> bool:
    """True iff every root of f over the algebraic closure has even multiplicity."""
    return all(i % 2 == 0 for _, i in squarefree_decomposition(ctx, f))


@dataclass(frozen=True)
class FactoredKernel:
    """prod (c X + r)^e (linear_family) or prod (c X^2 + r)^e (quadratic_family)."""

    kind: str
    factors: tuple[tuple[int, int], ...]
    r: int

    def __post_init__(self):
        if self.kind not in ("linear_family", "quadratic_family"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.r == 0:
            raise ValueError("kernel shift r must be nonzero")
        if any(e not in (0, 1) for _, e in self.factors):
            raise ValueError("kernel exponents must be 0 or 1")

    def active(self) -> list[int]:
        return [c for c, e in self.factors if e]

    @property
    def degree(self) -> int:
        n = sum(1 for c in self.active() if c != 0)
        return n if self.kind == "linear_family" else 2 * n


def expand(ctx: FieldCtx, kern: FactoredKernel) -> PolyFq:
    out = ONE
    for c in kern.active():
        if kern.kind == "linear_family":
            fac = PolyFq((kern.r, c))
        else:
            fac = PolyFq((kern.r, 0, c))
        out = poly_mul(ctx, out, fac)
    return out


def kernel_is_square(ctx: FieldCtx, kern: FactoredKernel) -> bool:
    """Closure-square test on the factored form: every active coefficient value
    must occur an even number of times.  Zero coefficients give constant
    factors and are ignored."""
    counts = Counter(c for c in kern.active() if c != 0)
    return all(n % 2 == 0 for n in counts.values())


def char_sum_values(ctx: FieldCtx, values) -> int:
    return int(ctx.chi_table[np.asarray(values, dtype=np.int64)].sum(dtype=np.int64))


def char_sum_poly(ctx: FieldCtx, f: PolyFq, domain: str = "all") -> int:
    """Exact sum of chi(f(x)) over x in F_q ("all") or F_q^* ("nonzero")."""
    if domain == "all":
        xs = ctx.elements()
    elif domain == "nonzero":
        xs = ctx.nonzero()
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return char_sum_values(ctx, poly_eval_all(ctx, f, xs))


def char_sum_poly_naive(ctx: FieldCtx, f: PolyFq, domain: str = "all") -> int:
    """Scalar-loop version of char_sum_poly; used as a cross-check."""
    start = 0 if domain == "all" else 1
    return sum(ctx.chi(poly_eval(ctx, f, x)) for x in range(start, ctx.q))


@dataclass(frozen=True)
class WeilReport:
    sum: int
    degree: int
    degree_bound: float
    square_kernel: bool
    holds: bool

    @property
    def excluded(self) -> bool:
        return self.square_kernel

    def to_dict(self):
        return {"sum": self.sum, "degree": self.degree, "degree_bound": self.degree_bound,
                "square_kernel": self.square_kernel, "excluded": self.excluded,
                "holds": self.holds}


def weil_holds(total: int, degree: int, q: int) -> bool:
    """|total| <= (degree - 1) sqrt(q), decided in exact integer arithmetic."""
    if degree < 1:
        return False
    return total * total <= (degree - 1) ** 2 * q


def weil_check(ctx: FieldCtx, f: PolyFq, square_kernel: bool | None = None) -> WeilReport:
    """Complete sum of chi(f) over F_q compared with (deg f - 1) sqrt(q).

    For closure-squares the bound does not apply; ``holds`` is then True
    and the report is flagged as excluded.
    """
    if f.is_zero():
        raise ZeroPolynomial("Weil check of the zero polynomial")
    total = char_sum_poly(ctx, f, "all")
    if square_kernel is None:
        square_kernel = is_square_in_closure(ctx, f)
    d = f.degree
    bound = (d - 1) * math.sqrt(ctx.q) if d >= 1 else 0.0
    holds = True if square_kernel else weil_holds(total, d, ctx.q)
    return WeilReport(total, d, bound, square_kernel, holds)


def random_kernel(ctx: FieldCtx, rng, kind: str | None = None, max_factors: int = 6) -> FactoredKernel:
    """Random factored kernel with nonzero coefficients drawn from a small pool,
    so that repeated coefficients (and hence squares) occur regularly."""
    if kind is None:
        kind = "linear_family" if rng.random() < 0.5 else "quadratic_family"
    n = int(rng.integers(1, max_factors + 1))
    pool = rng.integers(1, ctx.q, size=max(1, n // 2 + 1))
    factors = tuple((int(rng.choice(pool)), int(rng.integers(0, 2))) for _ in range(n))
    r = int(rng.integers(1, ctx.q))
    return FactoredKernel(kind, factors, r)
