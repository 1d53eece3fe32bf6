"""Character-product sums R(eps) and the exact identities around them.

R(eps) = sum over (F_q^*)^m of prod_{i<j} chi(a_i a_j + r)^eps_ij, with
chi(x)^0 = 1 even at x = 0.  This module evaluates R directly, gives its
closed form when eps lives only on the first row, and checks the
decomposition R = (q-1)^(-1) sum S*T obtained from the rescaling
(a_1, a_2, ..., a_m) -> (a_1/b, a_2 b, ..., a_m b).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dioph_count import (DEFAULT_BUDGET, BudgetExceeded, CountSpec, count_dfs,
                          expansion_sums, pair_count)
from .gf_arith import FieldCtx
from .gf_poly import FactoredKernel, char_sum_poly, expand, kernel_is_square, weil_holds


class PreconditionViolated(ValueError):
    pass


class ZeroEpsilon(PreconditionViolated):
    pass


class IdentityViolated(AssertionError):
    pass


def pair_list(m: int) -> list[tuple[int, int]]:
    """Pairs (i, j), 1 <= i < j <= m, in row-major order (1,2),(1,3),...,(2,3),..."""
    return [(i, j) for i in range(1, m + 1) for j in range(i + 1, m + 1)]


@dataclass(frozen=True)
class EpsilonMatrix:
    """Exponent vector over the pairs of :func:`pair_list`.

    Hex form: bit t of the integer is the exponent of the t-th pair, so
    for m = 4 "1" is eps_{1,2} alone and "3f" is all ones.
    """

    m: int
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) != pair_count(self.m):
            raise ValueError(f"need {pair_count(self.m)} bits for m={self.m}, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("exponents must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_pairs(cls, m: int, pairs) -> "EpsilonMatrix":
        on = {tuple(sorted(p)) for p in pairs}
        return cls(m, tuple(int(p in on) for p in pair_list(m)))

    @classmethod
    def from_int(cls, m: int, value: int) -> "EpsilonMatrix":
        M = pair_count(m)
        if not 0 <= value < 1 << M:
            raise ValueError(f"eps value {value:#x} does not fit in {M} bits")
        return cls(m, tuple((value >> t) & 1 for t in range(M)))

    @classmethod
    def from_hex(cls, m: int, text: str) -> "EpsilonMatrix":
        return cls.from_int(m, int(text, 16))

    @classmethod
    def all_ones(cls, m: int) -> "EpsilonMatrix":
        return cls(m, (1,) * pair_count(m))

    def to_int(self) -> int:
        return sum(b << t for t, b in enumerate(self.bits))

    def to_hex(self) -> str:
        return format(self.to_int(), "x")

    def __getitem__(self, pair: tuple[int, int]) -> int:
        i, j = sorted(pair)
        return self.bits[pair_list(self.m).index((i, j))]

    def active_pairs(self) -> list[tuple[int, int]]:
        return [p for p, b in zip(pair_list(self.m), self.bits) if b]

    def nonzero(self) -> bool:
        return any(self.bits)

    def row1_weight(self) -> int:
        return sum(1 for i, _ in self.active_pairs() if i == 1)

    def lower_weight(self) -> int:
        return sum(1 for i, _ in self.active_pairs() if i >= 2)

    def row1(self) -> list[int]:
        """Exponents eps_{1,j} for j = 2..m."""
        return [self[1, j] for j in range(2, self.m + 1)]

    def relabel(self, perm) -> "EpsilonMatrix":
        """New matrix with eps'_{a,b} = eps_{perm[a], perm[b]} (perm is 1-based, old labels)."""
        return EpsilonMatrix(self.m, tuple(self[perm[a - 1], perm[b - 1]]
                                           for a, b in pair_list(self.m)))


def all_epsilons(m: int, include_zero: bool = True):
    for v in range(0 if include_zero else 1, 1 << pair_count(m)):
        yield EpsilonMatrix.from_int(m, v)


def canonicalize_eps(eps: EpsilonMatrix) -> tuple[tuple[int, ...], EpsilonMatrix]:
    """Renumber variables so that eps_{1,2} = 1.

    Returns (perm, relabeled): new variable t is old variable perm[t-1].
    The first active pair (i, j) is moved to slots 1, 2; the remaining
    variables keep their relative order.
    """
    if not eps.nonzero():
        raise ZeroEpsilon("eps must be nonzero")
    i, j = eps.active_pairs()[0]
    perm = (i, j) + tuple(t for t in range(1, eps.m + 1) if t not in (i, j))
    return perm, eps.relabel(perm)


# -- direct evaluation -------------------------------------------------------

def _chi_matrix(ctx: FieldCtx, r: int) -> np.ndarray:
    vs = ctx.nonzero()
    shifted = ctx.add_arr(ctx.mul_arr(vs[:, None], vs[None, :]), r)
    return ctx.chi_table[shifted].astype(np.int64)


def _r_eps_naive(ctx, m, r, eps, budget):
    n = ctx.q - 1
    active = eps.active_pairs()
    if n**m * max(1, len(active)) > budget:
        raise BudgetExceeded(f"{n}^{m} terms exceeds budget {budget}")
    chi = _chi_matrix(ctx, r)
    total = 0
    for i0 in range(n):
        term = np.ones((n,) * (m - 1), dtype=np.int64)
        for i, j in active:
            s = [1] * (m - 1)
            if i == 1:
                s[j - 2] = n
                term = term * chi[i0].reshape(s)
            else:
                s[i - 2] = n
                s[j - 2] = n
                term = term * chi.reshape(s)
        total += int(term.sum())
    return total


def _r_eps_dfs(ctx, m, r, eps):
    """Assign a_1, a_2, ... in turn; keep for every later variable the vector of
    partial character products, and skip branches whose weight is zero."""
    chi = _chi_matrix(ctx, r)
    n = ctx.q - 1
    e = {p: 1 for p in eps.active_pairs()}

    def rec(t, weights):
        # weights[k] holds the partial product for variable t+k (0-based t)
        if t == m - 1:
            return int(weights[0].sum())
        total = 0
        w_now = weights[0]
        for v in np.nonzero(w_now)[0]:
            nxt = []
            for k in range(1, len(weights)):
                w = weights[k]
                if e.get((t + 1, t + 1 + k)):
                    w = w * chi[v]
                nxt.append(w)
            total += int(w_now[v]) * rec(t + 1, nxt)
        return total

    return rec(0, [np.ones(n, dtype=np.int64) for _ in range(m)])


def r_eps(ctx: FieldCtx, m: int, r: int, eps: EpsilonMatrix, algo: str = "naive",
          budget: int = DEFAULT_BUDGET) -> int:
    """Exact R(eps).  For eps = 0 this is (q-1)^m; see :func:`r_eps_flagged`."""
    if eps.m != m:
        raise ValueError("eps has the wrong size")
    if not eps.nonzero():
        return (ctx.q - 1) ** m
    if algo == "naive":
        return _r_eps_naive(ctx, m, r, eps, budget)
    if algo == "dfs_weighted":
        return _r_eps_dfs(ctx, m, r, eps)
    raise ValueError(f"unknown algorithm {algo!r}")


def r_eps_flagged(ctx: FieldCtx, m: int, r: int, eps: EpsilonMatrix, algo: str = "naive",
                  budget: int = DEFAULT_BUDGET) -> tuple[int, bool]:
    """(R(eps), trivial) where trivial marks the empty product eps = 0."""
    return r_eps(ctx, m, r, eps, algo, budget), not eps.nonzero()


def r_eps_vanishing_closed_form(ctx: FieldCtx, m: int, r: int, eps: EpsilonMatrix) -> int:
    """(-chi(r))^w (q-1)^(m-w) with w the number of active pairs (1, j).

    Valid only when no pair (i, j) with i >= 2 is active.
    """
    if not eps.nonzero():
        raise ZeroEpsilon("eps must be nonzero")
    if eps.lower_weight():
        raise PreconditionViolated("eps has active pairs outside row 1")
    w = eps.row1_weight()
    return (-ctx.chi(r)) ** w * (ctx.q - 1) ** (m - w)


def inner_sum_sign_mismatch(ctx: FieldCtx, r: int) -> bool:
    """True when sum_{a != 0} chi(a + r) differs from -1, i.e. r is a non-square."""
    return -ctx.chi(r) != -1


# -- S / T decomposition -----------------------------------------------------

def f_kernel(eps: EpsilonMatrix, r: int, a_rest) -> FactoredKernel:
    """prod_j (a_j X + r)^eps_{1,j}; a_rest = (a_2, ..., a_m)."""
    return FactoredKernel("linear_family",
                          tuple((int(a), e) for a, e in zip(a_rest, eps.row1())), r)


def g_kernel(eps: EpsilonMatrix, r: int, a_rest, ctx: FieldCtx) -> FactoredKernel:
    """prod_{2<=i<j} (a_i a_j X^2 + r)^eps_{i,j}."""
    facs = []
    for i, j in pair_list(eps.m):
        if i >= 2:
            facs.append((ctx.mul(int(a_rest[i - 2]), int(a_rest[j - 2])), eps[i, j]))
    return FactoredKernel("quadratic_family", tuple(facs), r)


def _check_rest(ctx, eps, a_rest):
    if len(a_rest) != eps.m - 1:
        raise ValueError(f"need {eps.m - 1} values a_2..a_m")
    if any(int(a) == 0 or not 0 < int(a) < ctx.q for a in a_rest):
        raise PreconditionViolated("a_2..a_m must be nonzero field elements")


def s_sum(ctx: FieldCtx, r: int, eps: EpsilonMatrix, a_rest) -> int:
    """S = sum over a_1 in F_q^* of chi(F(a_1)), F from the first row of eps."""
    _check_rest(ctx, eps, a_rest)
    if eps.row1_weight() == 0:
        raise PreconditionViolated("F has degree 0: no active pair (1, j)")
    if eps[1, 2] != 1:
        raise PreconditionViolated("eps_{1,2} must be 1")
    return char_sum_poly(ctx, expand(ctx, f_kernel(eps, r, a_rest)), "nonzero")


def t_sum(ctx: FieldCtx, r: int, eps: EpsilonMatrix, a_rest) -> int:
    """T = sum over b in F_q^* of chi(G(b)), G from the pairs below row 1."""
    _check_rest(ctx, eps, a_rest)
    if eps.lower_weight() == 0:
        raise PreconditionViolated("G has degree 0: no active pair (i, j) with i >= 2")
    return char_sum_poly(ctx, expand(ctx, g_kernel(eps, r, a_rest, ctx)), "nonzero")


@dataclass
class KernelStats:
    """Character sums of one kernel: punctured (x != 0) and complete."""

    punctured: int
    complete: int
    degree: int
    square: bool
    weil_ok: bool


def _kernel_stats(ctx: FieldCtx, kern: FactoredKernel) -> KernelStats:
    f = expand(ctx, kern)
    punctured = char_sum_poly(ctx, f, "nonzero")
    at_zero = ctx.chi(f.coeffs[0]) if f.coeffs else 0
    complete = punctured + at_zero
    square = kernel_is_square(ctx, kern)
    ok = True if square else weil_holds(complete, f.degree, ctx.q)
    return KernelStats(punctured, complete, f.degree, square, ok)


@dataclass
class STDecompositionReport:
    q: int
    m: int
    r: int
    eps: str
    r_direct: int
    r_via_st: Fraction
    square_kernel_tuples: int
    weil_max_abs: int
    contribution_a: Fraction
    contribution_b: Fraction
    kernels_checked: int = 0
    weil_violations: int = 0
    weil_max_ratio: float = 0.0
    identity_holds: bool = field(init=False)

    def __post_init__(self):
        self.identity_holds = self.r_via_st == self.r_direct

    @property
    def bound_ratio(self) -> float:
        """|R(eps)| / q^(m-1)."""
        return abs(self.r_direct) / self.q ** (self.m - 1)

    def to_dict(self) -> dict:
        def frac(x):
            return f"{x.numerator}/{x.denominator}"
        return {
            "q": self.q, "m": self.m, "r": self.r, "eps": self.eps,
            "r_direct": self.r_direct, "r_via_st": frac(self.r_via_st),
            "identity_holds": self.identity_holds,
            "square_kernel_tuples": self.square_kernel_tuples,
            "contribution_a": frac(self.contribution_a),
            "contribution_b": frac(self.contribution_b),
            "weil_max_abs": self.weil_max_abs,
            "kernels_checked": self.kernels_checked,
            "weil_violations": self.weil_violations,
            "weil_max_ratio": self.weil_max_ratio,
            "bound_ratio": self.bound_ratio,
        }


def st_identity_check(ctx: FieldCtx, m: int, r: int, eps: EpsilonMatrix,
                      budget: int = DEFAULT_BUDGET, strict: bool = True,
                      direct_algo: str = "naive") -> STDecompositionReport:
    """Compare R(eps) with (q-1)^(-1) sum over (a_2..a_m) of S*T, exactly.

    Every kernel is also classified (closure-square or not) and, when not a
    square, its complete character sum is tested against the Weil bound.
    Raises IdentityViolated on mismatch unless ``strict`` is False.
    """
    if eps.m != m:
        raise ValueError("eps has the wrong size")
    if eps[1, 2] != 1:
        raise PreconditionViolated("eps must be canonical (eps_{1,2} = 1)")
    if eps.lower_weight() == 0:
        raise PreconditionViolated("eps has no active pair (i, j) with i >= 2")
    n = ctx.q - 1
    if n ** (m - 1) * ctx.q > budget:
        raise BudgetExceeded(f"{n}^{m - 1} kernel pairs exceeds budget {budget}")

    # S depends only on the multiset of active slopes, T on that of active products
    cache: dict[tuple, KernelStats] = {}

    def stats(kind, coeffs):
        key = (kind, coeffs)
        if key not in cache:
            cache[key] = _kernel_stats(ctx, FactoredKernel(kind, tuple((c, 1) for c in coeffs), r))
        return cache[key]

    row1 = eps.row1()
    lower = [(i, j) for i, j in eps.active_pairs() if i >= 2]
    total_a = total_b = 0
    square_tuples = 0
    weil_max_abs = 0
    for a_rest in itertools.product(range(1, ctx.q), repeat=m - 1):
        slopes = tuple(sorted(a for a, e in zip(a_rest, row1) if e))
        prods = tuple(sorted(ctx.mul(a_rest[i - 2], a_rest[j - 2]) for i, j in lower))
        s = stats("linear_family", slopes)
        t = stats("quadratic_family", prods)
        st = s.punctured * t.punctured
        if s.square or t.square:
            square_tuples += 1
            total_a += st
        else:
            total_b += st
            weil_max_abs = max(weil_max_abs, abs(s.punctured), abs(t.punctured))

    checked = violations = 0
    max_ratio = 0.0
    for ks in cache.values():
        if ks.square:
            continue
        checked += 1
        violations += not ks.weil_ok
        max_ratio = max(max_ratio, abs(ks.complete) / ((ks.degree - 1) * math.sqrt(ctx.q))
                        if ks.degree > 1 else (math.inf if ks.complete else 0.0))

    total = total_a + total_b
    if total % n:
        raise IdentityViolated(f"sum of S*T = {total} is not divisible by q-1 = {n}")
    direct = r_eps(ctx, m, r, eps, direct_algo, budget)
    report = STDecompositionReport(
        ctx.q, m, r, eps.to_hex(), direct, Fraction(total, n), square_tuples, weil_max_abs,
        Fraction(total_a, n), Fraction(total_b, n), checked, violations, max_ratio)
    if strict and not report.identity_holds:
        raise IdentityViolated(f"R(eps) = {direct} but (q-1)^-1 sum S*T = {report.r_via_st}")
    return report



@dataclass
class ExpansionReport:
    q: int
    m: int
    r: int
    sum_r_eps: int
    product_sum: int
    restricted_sum: int
    correction: int
    count: int

    @property
    def expansion_holds(self) -> bool:
        return self.sum_r_eps == self.product_sum

    @property
    def restricted_holds(self) -> bool:
        return self.restricted_sum == 2 ** pair_count(self.m) * self.count

    @property
    def holds(self) -> bool:
        return self.expansion_holds and self.restricted_holds

    def to_dict(self) -> dict:
        return {"q": self.q, "m": self.m, "r": self.r, "sum_r_eps": self.sum_r_eps,
                "product_sum": self.product_sum, "restricted_sum": self.restricted_sum,
                "correction": self.correction, "count": self.count,
                "expansion_holds": self.expansion_holds,
                "restricted_holds": self.restricted_holds, "holds": self.holds}


def expansion_identity_check(ctx: FieldCtx, m: int, r: int, budget: int = DEFAULT_BUDGET,
                             strict: bool = True) -> ExpansionReport:
    """Check sum over all eps of R(eps) = sum prod(1 + chi(a_i a_j + r)) exactly,
    and that dropping tuples with a vanishing shifted product leaves 2^M N_r."""
    M = pair_count(m)
    if (1 << M) * (ctx.q - 1) ** m > budget:
        raise BudgetExceeded(f"2^{M} evaluations of R over {ctx.q - 1}^{m} terms exceeds budget")
    lhs = sum(r_eps(ctx, m, r, e, budget=budget) for e in all_epsilons(m))
    full, restricted = expansion_sums(ctx, m, r, budget)
    n = count_dfs(ctx, CountSpec(m, r)).count
    report = ExpansionReport(ctx.q, m, r, lhs, full, restricted, full - restricted, n)
    if strict and not report.holds:
        raise IdentityViolated(f"expansion identity failed: {report.to_dict()}")
    return report
