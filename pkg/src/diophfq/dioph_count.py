"""Exact counts of Diophantine m-tuples with shift r over F_q.

Three independent routes compute the same number:

* ``count_brute``: full enumeration of the m-dimensional tuple grid;
* ``count_dfs``: clique enumeration on the pair graph with sorted prefixes
  and multinomial weights (the fast path);
* ``count_expansion``: sum of prod(1 + chi(a_i a_j + r)) over tuples with
  no vanishing shifted product, divided by 2^M.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .gf_arith import FieldCtx

DEFAULT_BUDGET = 10**9

DOMAINS = ("nonzero", "all")
SQUARE_RULES = ("qr_only", "qr_or_zero")
MULTIPLICITIES = ("ordered_with_repeats", "ordered_distinct", "unordered_distinct")


class BudgetExceeded(RuntimeError):
    pass


class UnsupportedVariant(ValueError):
    pass


@dataclass(frozen=True)
class CountSpec:
    m: int
    r: int
    entries_domain: str = "nonzero"
    square_rule: str = "qr_only"
    multiplicity: str = "ordered_with_repeats"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("tuple length m must be >= 2")
        if self.r == 0:
            raise ValueError("shift r must be nonzero")
        if self.entries_domain not in DOMAINS:
            raise ValueError(f"unknown entries_domain {self.entries_domain!r}")
        if self.square_rule not in SQUARE_RULES:
            raise ValueError(f"unknown square_rule {self.square_rule!r}")
        if self.multiplicity not in MULTIPLICITIES:
            raise ValueError(f"unknown multiplicity {self.multiplicity!r}")

    @property
    def variant(self) -> str:
        return f"{self.entries_domain}:{self.square_rule}:{self.multiplicity}"

    @property
    def is_default(self) -> bool:
        return (self.entries_domain, self.square_rule, self.multiplicity) == (
            DOMAINS[0], SQUARE_RULES[0], MULTIPLICITIES[0])

    @classmethod
    def from_variant(cls, m: int, r: int, variant: str) -> "CountSpec":
        d, s, mu = variant.split(":")
        return cls(m, r, d, s, mu)


def all_variants(m: int, r: int):
    for d in DOMAINS:
        for s in SQUARE_RULES:
            for mu in MULTIPLICITIES:
                yield CountSpec(m, r, d, s, mu)


def pair_count(m: int) -> int:
    return m * (m - 1) // 2


def main_term(q: int, m: int) -> Fraction:
    return Fraction(q**m, 2 ** pair_count(m))


def residual_norms(residual: Fraction, q: int, m: int) -> tuple[float, float]:
    """(|E| / q^(m-1), |E| / q^(m-1/2)), rounded once from exact rationals."""
    n1 = float(abs(Fraction(residual)) / q ** (m - 1))
    return n1, n1 / math.sqrt(q)


@dataclass
class CountReport:
    q: int
    p: int
    k: int
    m: int
    r: int
    variant: str
    count: int
    algo: str
    millis: float = 0.0
    main_term: Fraction = field(init=False)
    residual: Fraction = field(init=False)
    residual_norm_1: float = field(init=False)
    residual_norm_half: float = field(init=False)

    def __post_init__(self):
        self.main_term = main_term(self.q, self.m)
        self.residual = self.count - self.main_term
        self.residual_norm_1, self.residual_norm_half = residual_norms(self.residual, self.q, self.m)

    def to_dict(self) -> dict:
        return {
            "q": self.q, "p": self.p, "k": self.k, "m": self.m, "r": self.r,
            "variant": self.variant, "algo": self.algo, "count": self.count,
            "main_term": f"{self.main_term.numerator}/{self.main_term.denominator}",
            "residual": f"{self.residual.numerator}/{self.residual.denominator}",
            "residual_norm_1": self.residual_norm_1,
            "residual_norm_half": self.residual_norm_half,
            "millis": self.millis,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_text(self) -> str:
        d = self.to_dict()
        return "\n".join(f"{k:>18}: {v}" for k, v in d.items())


def _report(ctx: FieldCtx, spec: CountSpec, count: int, algo: str, t0: float) -> CountReport:
    return CountReport(ctx.q, ctx.p, ctx.k, spec.m, spec.r, spec.variant, int(count), algo,
                       millis=round((time.perf_counter() - t0) * 1000, 3))


def _domain(ctx: FieldCtx, spec: CountSpec) -> np.ndarray:
    return ctx.elements() if spec.entries_domain == "all" else ctx.nonzero()


def _passes(ctx: FieldCtx, values: np.ndarray, square_rule: str) -> np.ndarray:
    chi = ctx.chi_table[values]
    if square_rule == "qr_or_zero":
        return chi >= 0
    return chi == 1


def _check_spec(ctx: FieldCtx, spec: CountSpec):
    if not 0 < spec.r < ctx.q:
        raise ValueError(f"shift r={spec.r} is not a nonzero element of F_{ctx.q}")


@dataclass(frozen=True, eq=False)
class PairGraph:
    """Compatibility graph on the entry domain, loops included.

    ``adj[i, j]`` refers to ``vertices[i]`` and ``vertices[j]``; each row
    is the candidate bitset for that vertex.
    """

    ctx: FieldCtx
    r: int
    vertices: np.ndarray
    adj: np.ndarray

    @property
    def loops(self) -> np.ndarray:
        return np.diagonal(self.adj)

    def neighbors(self, code: int) -> set[int]:
        i = int(np.searchsorted(self.vertices, code))
        return {int(v) for v in self.vertices[self.adj[i]] if v != code}

    def edges(self) -> set[tuple[int, int]]:
        """Unordered non-loop edges as (smaller code, larger code)."""
        iu, ju = np.nonzero(np.triu(self.adj, 1))
        return {(int(self.vertices[i]), int(self.vertices[j])) for i, j in zip(iu, ju)}

    def loop_vertices(self) -> set[int]:
        return {int(v) for v in self.vertices[self.loops]}

    def row_bits(self, code: int) -> int:
        i = int(np.searchsorted(self.vertices, code))
        return sum(1 << int(j) for j in np.nonzero(self.adj[i])[0])


def build_pair_graph(ctx: FieldCtx, spec: CountSpec) -> PairGraph:
    _check_spec(ctx, spec)
    vs = _domain(ctx, spec)
    shifted = ctx.add_arr(ctx.mul_arr(vs[:, None], vs[None, :]), spec.r)
    adj = _passes(ctx, shifted, spec.square_rule)
    adj.setflags(write=False)
    return PairGraph(ctx, spec.r, vs, adj)


# -- brute force -------------------------------------------------------------

def _predicate_table(ctx, spec, vs):
    # scalar field ops at oracle scale keep this path apart from the vectorized graph build
    if len(vs) <= 64:
        prod = np.array([[ctx.add(ctx.mul(int(a), int(b)), spec.r) for b in vs] for a in vs],
                        dtype=np.int64)
    else:
        prod = ctx.add_arr(ctx.mul_arr(vs[:, None], vs[None, :]), spec.r)
    return _passes(ctx, prod, spec.square_rule)


def _grid_masks(n: int, m: int, i0: int, table: np.ndarray, multiplicity: str):
    """Boolean array over the (m-1)-dim grid of (a_2..a_m) indices, with a_1 = i0."""
    shape = (n,) * (m - 1)
    ok = np.ones(shape, dtype=bool)

    def along(vec, axis):
        s = [1] * (m - 1)
        s[axis] = n
        return vec.reshape(s)

    def pair(i, j):
        s = [1] * (m - 1)
        s[i] = n
        s[j] = n
        return table.reshape(s)

    for j in range(m - 1):
        ok &= along(table[i0], j)
    for i in range(m - 1):
        for j in range(i + 1, m - 1):
            ok &= pair(i, j)
    if multiplicity != "ordered_with_repeats":
        idx = np.arange(n)
        for j in range(m - 1):
            if multiplicity == "unordered_distinct":
                ok &= along(idx > i0, j)
            else:
                ok &= along(idx != i0, j)
        for i in range(m - 1):
            for j in range(i + 1, m - 1):
                s = [1] * (m - 1)
                s[i] = n
                ii = idx.reshape(s)
                s = [1] * (m - 1)
                s[j] = n
                jj = idx.reshape(s)
                ok &= (ii < jj) if multiplicity == "unordered_distinct" else (ii != jj)
    return ok


def count_brute(ctx: FieldCtx, spec: CountSpec, budget: int = DEFAULT_BUDGET) -> CountReport:
    """Count by checking every tuple of the entry domain."""
    _check_spec(ctx, spec)
    t0 = time.perf_counter()
    vs = _domain(ctx, spec)
    n, m = len(vs), spec.m
    if n**m * pair_count(m) > budget:
        raise BudgetExceeded(f"{n}^{m} tuples x {pair_count(m)} pairs exceeds budget {budget}")
    table = _predicate_table(ctx, spec, vs)
    total = 0
    for i0 in range(n):
        total += int(np.count_nonzero(_grid_masks(n, m, i0, table, spec.multiplicity)))
    return _report(ctx, spec, total, "brute", t0)


# -- DFS over the pair graph -------------------------------------------------

def _dfs_count(adj: np.ndarray, m: int, allow_repeats: bool, threads: int = 1) -> int:
    """Weighted count of sorted index sequences i_1 <= ... <= i_m forming a clique.

    Each multiset is weighted by its number of orderings m!/prod(mult!) when
    repeats are allowed; without repeats only strictly increasing sequences
    are visited and each counts once.
    """
    n = adj.shape[0]
    loops = np.diagonal(adj).copy()
    upper = np.triu(adj, 1)
    mf = math.factorial(m) if allow_repeats else 1
    idx = np.arange(n)

    def last_level(cand, last, run, denom):
        total = int(np.count_nonzero(cand[last + 1:])) * (mf // denom)
        if allow_repeats and last >= 0 and cand[last]:
            total += mf // (denom * (run + 1))
        return total

    def two_levels(cand, last, run, denom):
        total = 0
        js = np.nonzero(cand & (idx > last))[0]
        if len(js):
            greater = np.count_nonzero(upper[js] & cand, axis=1)
            total += int(greater.sum()) * (mf // denom)
            if allow_repeats:
                total += int(np.count_nonzero(loops[js])) * (mf // (denom * 2))
        if allow_repeats and last >= 0 and cand[last]:
            total += last_level(cand, last, run + 1, denom * (run + 1))
        return total

    def rec(cand, last, run, denom, remaining):
        if remaining == 1:
            return last_level(cand, last, run, denom)
        if remaining == 2:
            return two_levels(cand, last, run, denom)
        total = 0
        if allow_repeats and last >= 0 and cand[last]:
            total += rec(cand, last, run + 1, denom * (run + 1), remaining - 1)
        for j in np.nonzero(cand[last + 1:])[0] + last + 1:
            total += rec(cand & adj[j], int(j), 1, denom, remaining - 1)
        return total

    full = np.ones(n, dtype=bool)
    if m <= 2 or threads <= 1:
        return rec(full, -1, 0, 1, m)

    def branch(j):
        return rec(adj[j].copy(), int(j), 1, 1, m - 1)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(branch, range(n)))


def count_dfs(ctx: FieldCtx, spec: CountSpec, threads: int = 1,
              graph: PairGraph | None = None) -> CountReport:
    """Count via sorted-prefix clique enumeration on the pair graph."""
    t0 = time.perf_counter()
    g = graph if graph is not None else build_pair_graph(ctx, spec)
    m = spec.m
    if spec.multiplicity == "ordered_with_repeats":
        total = _dfs_count(g.adj, m, True, threads)
    elif m > len(g.vertices):
        total = 0
    else:
        total = _dfs_count(g.adj, m, False, threads)
        if spec.multiplicity == "ordered_distinct":
            total *= math.factorial(m)
    return _report(ctx, spec, total, "dfs", t0)


# -- character-sum expansion ------------------------------------------------

def expansion_sums(ctx: FieldCtx, m: int, r: int, budget: int = DEFAULT_BUDGET) -> tuple[int, int]:
    """Sums over (F_q^*)^m of prod_{i<j} (1 + chi(a_i a_j + r)).

    Returns (full, restricted): ``full`` takes every tuple (chi(0) = 0, so a
    vanishing shifted product contributes a factor 1); ``restricted`` skips
    tuples with some a_i a_j + r = 0, leaving only terms 0 or 2^M.
    """
    vs = ctx.nonzero()
    n = len(vs)
    M = pair_count(m)
    if n**m * M > budget:
        raise BudgetExceeded(f"{n}^{m} tuples x {M} pairs exceeds budget {budget}")
    shifted = ctx.add_arr(ctx.mul_arr(vs[:, None], vs[None, :]), r)
    factor = 1 + ctx.chi_table[shifted].astype(np.int64)
    nonvanishing = shifted != 0
    full = restricted = 0
    for i0 in range(n):
        prod = np.ones((n,) * (m - 1), dtype=np.int64)
        alive = np.ones((n,) * (m - 1), dtype=bool)
        for j in range(m - 1):
            s = [1] * (m - 1)
            s[j] = n
            prod = prod * factor[i0].reshape(s)
            alive = alive & nonvanishing[i0].reshape(s)
        for i in range(m - 1):
            for j in range(i + 1, m - 1):
                s = [1] * (m - 1)
                s[i] = n
                s[j] = n
                prod = prod * factor.reshape(s)
                alive = alive & nonvanishing.reshape(s)
        full += int(prod.sum())
        restricted += int(prod[alive].sum())
    return full, restricted


def expansion_restricted_sum(ctx: FieldCtx, m: int, r: int, budget: int = DEFAULT_BUDGET) -> int:
    return expansion_sums(ctx, m, r, budget)[1]


def count_expansion(ctx: FieldCtx, spec: CountSpec, budget: int = DEFAULT_BUDGET) -> CountReport:
    """Count through the expansion of prod(1 + chi); default variant only."""
    if not spec.is_default:
        raise UnsupportedVariant(f"expansion counting needs the default variant, got {spec.variant}")
    _check_spec(ctx, spec)
    t0 = time.perf_counter()
    s = expansion_restricted_sum(ctx, spec.m, spec.r, budget)
    scale = 2 ** pair_count(spec.m)
    if s % scale:
        raise AssertionError(f"restricted sum {s} not divisible by 2^M = {scale}")
    return _report(ctx, spec, s // scale, "expansion", t0)


ALGORITHMS = {"dfs": count_dfs, "brute": count_brute, "expansion": count_expansion}


def count(ctx: FieldCtx, spec: CountSpec, algo: str = "dfs", threads: int = 1,
          budget: int = DEFAULT_BUDGET) -> CountReport:
    if algo == "dfs":
        return count_dfs(ctx, spec, threads=threads)
    if algo == "brute":
        return count_brute(ctx, spec, budget=budget)
    if algo == "expansion":
        return count_expansion(ctx, spec, budget=budget)
    raise ValueError(f"unknown algorithm {algo!r}")
