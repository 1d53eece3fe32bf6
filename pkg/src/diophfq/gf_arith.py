"""Arithmetic in F_q for odd prime powers q = p^k.

Elements are plain integers ("codes") in 0..q-1.  A code packs the
coefficient vector of the polynomial representative in base p:
``code = c_0 + c_1 p + ... + c_{k-1} p^{k-1}``.  Multiplication goes
through exp/log tables of a fixed generator, the quadratic character is
read off the parity of the discrete log.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TABLE_LIMIT = 2**20


class FieldError(ValueError):
    pass


class NotPrime(FieldError):
    pass


class EvenCharacteristic(FieldError):
    pass


class ReducibleModulus(FieldError):
    pass


class FieldTooLarge(FieldError):
    pass


class DivisionByZero(ZeroDivisionError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n, ascending."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def prime_power(q: int) -> tuple[int, int] | None:
    """Return (p, k) with q = p^k, or None if q is not a prime power."""
    if q < 2:
        return None
    p = prime_factors(q)
    if len(p) != 1:
        return None
    p = p[0]
    k = 0
    while q > 1:
        q //= p
        k += 1
    return p, k


# -- dense polynomials over the prime field F_p (lists, constant term first) --

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _pmod(a, m, p):
    a = list(a)
    inv_lead = pow(m[-1], p - 2, p)
    dm = len(m) - 1
    while len(_trim(a)) > dm:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, y in enumerate(m):
            a[shift + i] = (a[shift + i] - c * y) % p
    return a


def _pgcd(a, b, p):
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _trim(_pmod(a, b, p))
    return a


def _ppowmod(base, e, m, p):
    result = [1]
    base = _pmod(base, m, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), m, p)
        base = _pmod(_pmul(base, base, p), m, p)
        e >>= 1
    return result


def is_irreducible(poly, p: int) -> bool:
    """Rabin-style test: gcd(f, X^(p^i) - X) = 1 for i <= deg/2 and f | X^(p^k) - X."""
    f = _trim(list(poly))
    k = len(f) - 1
    if k < 1:
        return False
    if k == 1:
        return True
    xp = [0, 1]
    for i in range(1, k + 1):
        xp = _trim(_ppowmod(xp, p, f, p))
        diff = xp + [0] * max(0, 2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        diff = _trim(diff)
        if i <= k // 2:
            if len(_pgcd(f, diff, p)) > 1:
                return False
        if i == k:
            return not diff
    return True


def _default_modulus(p: int, k: int) -> tuple[int, ...]:
    for low in range(p**k):
        digits = [(low // p**i) % p for i in range(k)]
        cand = digits + [1]
        if is_irreducible(cand, p):
            return tuple(cand)
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class FieldCtx:
    """Immutable F_q context.  Build with :func:`field_new`."""

    p: int
    k: int
    q: int
    modulus: tuple[int, ...]
    generator_code: int
    exp_table: np.ndarray = field(repr=False)
    log_table: np.ndarray = field(repr=False)
    squares: np.ndarray = field(repr=False)
    chi_table: np.ndarray = field(repr=False)

    @property
    def name(self) -> str:
        return str(self.p) if self.k == 1 else f"{self.p}^{self.k}"

    def __repr__(self):
        return f"FieldCtx(q={self.q}, p={self.p}, k={self.k}, modulus={self.modulus})"

    # scalar operations -------------------------------------------------

    def check(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.q:
            raise ValueError(f"element code {x} out of range for F_{self.q}")
        return x

    def add(self, x: int, y: int) -> int:
        if self.k == 1:
            return (x + y) % self.p
        p, out, pw = self.p, 0, 1
        for _ in range(self.k):
            out += ((x % p + y % p) % p) * pw
            x //= p
            y //= p
            pw *= p
        return out

    def neg(self, x: int) -> int:
        if self.k == 1:
            return -x % self.p
        p, out, pw = self.p, 0, 1
        for _ in range(self.k):
            out += (-(x % p) % p) * pw
            x //= p
            pw *= p
        return out

    def sub(self, x: int, y: int) -> int:
        return self.add(x, self.neg(y))

    def mul(self, x: int, y: int) -> int:
        if x == 0 or y == 0:
            return 0
        return int(self.exp_table[(self.log_table[x] + self.log_table[y]) % (self.q - 1)])

    def inv(self, x: int) -> int:
        if x == 0:
            raise DivisionByZero("inverse of zero")
        return int(self.exp_table[-self.log_table[x] % (self.q - 1)])

    def pow(self, x: int, e: int) -> int:
        if x == 0:
            if e < 0:
                raise DivisionByZero("negative power of zero")
            return 1 if e == 0 else 0
        return int(self.exp_table[(self.log_table[x] * e) % (self.q - 1)])

    def from_int(self, n: int) -> int:
        """Image of the integer n under Z -> F_p -> F_q."""
        return n % self.p

    def chi(self, x: int) -> int:
        return int(self.chi_table[x])

    # vectorized operations (numpy int64 arrays of codes) -----------------

    def add_arr(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.k == 1:
            return (x + y) % self.p
        out = np.zeros(np.broadcast(x, y).shape, dtype=np.int64)
        pw = 1
        for _ in range(self.k):
            out += (((x // pw) % self.p + (y // pw) % self.p) % self.p) * pw
            pw *= self.p
        return out

    def mul_arr(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        e = (self.log_table[x] + self.log_table[y]) % (self.q - 1)
        return np.where((x == 0) | (y == 0), 0, self.exp_table[e])

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    def nonzero(self) -> np.ndarray:
        return np.arange(1, self.q, dtype=np.int64)


def _slow_mul(x: int, y: int, p: int, k: int, modulus) -> int:
    """Multiply two codes through explicit polynomial arithmetic mod the modulus."""
    a = [(x // p**i) % p for i in range(k)]
    b = [(y // p**i) % p for i in range(k)]
    if k == 1:
        return x * y % p
    c = _pmod(_pmul(_trim(a), _trim(b), p), list(modulus), p)
    return sum(int(v) * p**i for i, v in enumerate(c[:k]))


def poly_mul_codes(ctx: FieldCtx, x: int, y: int) -> int:
    """Table-free product, used to cross-check the exp/log path."""
    return _slow_mul(x, y, ctx.p, ctx.k, ctx.modulus)


def _order_is_full(g: int, p: int, k: int, modulus, q: int, factors) -> bool:
    for ell in factors:
        # square-and-multiply on codes
        e, base, acc = (q - 1) // ell, g, 1
        while e:
            if e & 1:
                acc = _slow_mul(acc, base, p, k, modulus)
            base = _slow_mul(base, base, p, k, modulus)
            e >>= 1
        if acc == 1:
            return False
    return True


def field_new(p: int, k: int = 1, modulus=None, table_limit: int = DEFAULT_TABLE_LIMIT) -> FieldCtx:
    """Construct the context for F_{p^k}.

    ``modulus`` is an optional coefficient list c0,...,ck (monic,
    irreducible over F_p).  Without it a deterministic irreducible is
    chosen: the one with the smallest code.
    """
    p, k = int(p), int(k)
    if p % 2 == 0:
        raise EvenCharacteristic(f"characteristic {p} is even; odd q required")
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if k < 1:
        raise ValueError("extension degree must be >= 1")
    q = p**k
    if q > table_limit:
        raise FieldTooLarge(f"q = {q} exceeds table limit {table_limit}")

    if modulus is None:
        modulus = (0, 1) if k == 1 else _default_modulus(p, k)
    else:
        modulus = tuple(int(c) % p for c in modulus)
        if len(_trim(list(modulus))) != k + 1 or modulus[-1] != 1:
            raise ReducibleModulus(f"modulus must be monic of degree {k}")
        if k > 1 and not is_irreducible(modulus, p):
            raise ReducibleModulus(f"{list(modulus)} is reducible over F_{p}")

    factors = prime_factors(q - 1)
    if k == 1:
        g = next(g for g in range(1, p) if all(pow(g, (q - 1) // ell, p) != 1 for ell in factors))
    else:
        g = next(g for g in range(1, q) if _order_is_full(g, p, k, modulus, q, factors))

    exp_table = np.zeros(q - 1, dtype=np.int64)
    log_table = np.full(q, -1, dtype=np.int64)
    if k == 1:
        x = 1
        for i in range(q - 1):
            exp_table[i] = x
            x = x * g % p
    else:
        # multiply by g as a linear map on coefficient vectors
        gpoly = [(g // p**i) % p for i in range(k)]
        cur = [1] + [0] * (k - 1)
        weights = [p**i for i in range(k)]
        mod = list(modulus)
        for i in range(q - 1):
            exp_table[i] = sum(c * w for c, w in zip(cur, weights))
            cur = _pmod(_pmul(_trim(list(cur)), _trim(list(gpoly)), p), mod, p)
            cur = (list(cur) + [0] * k)[:k]
    log_table[exp_table] = np.arange(q - 1)
    if np.any(log_table[1:] < 0):  # pragma: no cover
        raise AssertionError("generator does not span F_q^*")

    squares = np.zeros(q, dtype=bool)
    squares[exp_table[0::2]] = True
    chi_table = np.where(squares, 1, -1).astype(np.int8)
    chi_table[0] = 0
    for arr in (exp_table, log_table, squares, chi_table):
        arr.setflags(write=False)
    return FieldCtx(p, k, q, tuple(modulus), g, exp_table, log_table, squares, chi_table)


@functools.lru_cache(maxsize=None)
def get_field(p: int, k: int = 1) -> FieldCtx:
    """Cached :func:`field_new` with the default modulus."""
    return field_new(p, k)


def parse_field(text: str, modulus=None, table_limit: int = DEFAULT_TABLE_LIMIT) -> FieldCtx:
    """Parse "p", "p^k" or a prime power "q" (e.g. "9") into a context."""
    text = text.strip()
    if "^" in text:
        p, k = (int(t) for t in text.split("^", 1))
    else:
        n = int(text)
        pk = prime_power(n)
        if pk is None:
            if n % 2 == 0:
                raise EvenCharacteristic(f"{n} is even")
            raise NotPrime(f"{n} is not a prime power")
        p, k = pk
    if modulus is None and table_limit == DEFAULT_TABLE_LIMIT:
        if p % 2 == 0:
            raise EvenCharacteristic(f"characteristic {p} is even; odd q required")
        if not is_prime(p):
            raise NotPrime(f"{p} is not prime")
        return get_field(p, k)
    return field_new(p, k, modulus, table_limit)


def parse_modulus(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def fe_arith(ctx: FieldCtx, op: str, x: int, y: int | None = None) -> int:
    """Dispatch one field operation by name: add, sub, mul, inv, pow."""
    if op == "add":
        return ctx.add(x, y)
    if op == "sub":
        return ctx.sub(x, y)
    if op == "mul":
        return ctx.mul(x, y)
    if op == "inv":
        return ctx.inv(x)
    if op == "pow":
        return ctx.pow(x, y)
    raise ValueError(f"unknown op {op!r}")


def quad_char(ctx: FieldCtx, x: int) -> int:
    """Quadratic character: 0 at 0, +1 on nonzero squares, -1 otherwise."""
    return int(ctx.chi_table[x])


def euler_char(ctx: FieldCtx, x: int) -> int:
    """x^((q-1)/2) computed by table-free square-and-multiply; test oracle for quad_char."""
    if x == 0:
        return 0
    e, base, acc = (ctx.q - 1) // 2, x, 1
    while e:
        if e & 1:
            acc = poly_mul_codes(ctx, acc, base)
        base = poly_mul_codes(ctx, base, base)
        e >>= 1
    if acc == 1:
        return 1
    if acc == ctx.neg(1):
        return -1
    raise AssertionError(f"x^((q-1)/2) = {acc} is not +-1")  # pragma: no cover
