"""Residual scans over q, the smallest-q search, and row persistence."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .dioph_count import (DEFAULT_BUDGET, BudgetExceeded, CountSpec, count, main_term,
                          residual_norms)
from .gf_arith import DEFAULT_TABLE_LIMIT, FieldCtx, get_field, prime_power

CSV_FIELDS = ("q", "p", "k", "m", "r", "variant", "algo", "count", "main_term", "residual",
              "residual_norm_1", "residual_norm_half", "millis")


class RangeError(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class NotFoundWithinRange(LookupError):
    def __init__(self, msg, failures):
        super().__init__(msg)
        self.failures = failures


def enumerate_odd_prime_powers(q_min: int, q_max: int,
                               table_limit: int = DEFAULT_TABLE_LIMIT) -> list[tuple[int, int]]:
    if not 3 <= q_min <= q_max <= table_limit:
        raise RangeError(f"need 3 <= q_min <= q_max <= {table_limit}, got {q_min}..{q_max}")
    out = []
    for q in range(q_min | 1, q_max + 1, 2):
        pk = prime_power(q)
        if pk is not None:
            out.append(pk)
    return out


def square_class_representatives(ctx: FieldCtx, alternate: bool = False) -> tuple[int, int]:
    """(square, non-square) shift codes: the smallest of each class, or the largest."""
    codes = range(ctx.q - 1, 0, -1) if alternate else range(1, ctx.q)
    sq = next(c for c in codes if ctx.chi(c) == 1)
    codes = range(ctx.q - 1, 0, -1) if alternate else range(1, ctx.q)
    nsq = next(c for c in codes if ctx.chi(c) == -1)
    return sq, nsq


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass
class ScanRow:
    q: int
    p: int
    k: int
    m: int
    r: int
    variant: str
    algo: str
    count: int | None
    main_term: str
    residual: str
    residual_norm_1: float | None
    residual_norm_half: float | None
    millis: float = 0.0

    @property
    def skipped(self) -> bool:
        return self.count is None

    @classmethod
    def from_report(cls, rep, record_timing: bool = False) -> "ScanRow":
        return cls(rep.q, rep.p, rep.k, rep.m, rep.r, rep.variant, rep.algo, rep.count,
                   _frac_str(rep.main_term), _frac_str(rep.residual),
                   rep.residual_norm_1, rep.residual_norm_half,
                   rep.millis if record_timing else 0.0)

    @classmethod
    def skipped_row(cls, ctx: FieldCtx, spec: CountSpec, algo: str) -> "ScanRow":
        return cls(ctx.q, ctx.p, ctx.k, spec.m, spec.r, spec.variant, f"{algo}:skipped", None,
                   _frac_str(main_term(ctx.q, spec.m)), "", None, None, 0.0)

    def residual_fraction(self) -> Fraction:
        return Fraction(self.residual)

    def recomputed_norms(self) -> tuple[float, float]:
        return residual_norms(self.residual_fraction(), self.q, self.m)

    def verify(self, rel: float = 1e-12) -> bool:
        """Re-derive the real columns from the rational strings."""
        if self.skipped:
            return True
        if Fraction(self.count) - Fraction(self.main_term) != self.residual_fraction():
            return False
        if Fraction(self.main_term) != main_term(self.q, self.m):
            return False
        for got, want in zip((self.residual_norm_1, self.residual_norm_half), self.recomputed_norms()):
            if abs(got - want) > rel * max(abs(want), 1e-300):
                return False
        return True

    def to_dict(self) -> dict:
        return asdict(self)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for row in rows:
        d = row.to_dict()
        w.writerow([_cell(d[f]) for f in CSV_FIELDS])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps([row.to_dict() for row in rows], indent=1) + "\n"


def _parse_row(d: dict) -> ScanRow:
    def num(v, t):
        return None if v in ("", None) else t(v)
    return ScanRow(int(d["q"]), int(d["p"]), int(d["k"]), int(d["m"]), int(d["r"]), d["variant"],
                   d["algo"], num(d["count"], int), d["main_term"], d["residual"] or "",
                   num(d["residual_norm_1"], float), num(d["residual_norm_half"], float),
                   float(d["millis"]))


def write_rows(rows, path: str, fmt: str | None = None):
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    text = rows_to_json(rows) if fmt == "json" else rows_to_csv(rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_rows(path: str, fmt: str | None = None) -> list[ScanRow]:
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    with open(path, newline="") as fh:
        if fmt == "json":
            return [_parse_row(d) for d in json.load(fh)]
        return [_parse_row(d) for d in csv.DictReader(fh)]


def _shifts(ctx: FieldCtx, r_mode) -> list[int]:
    if r_mode == "all":
        return list(range(1, ctx.q))
    if r_mode in ("class", "one_per_square_class"):
        return sorted(square_class_representatives(ctx))
    r = int(r_mode)
    if not 0 < r < ctx.q:
        raise ValueError(f"shift code {r} is not a nonzero element of F_{ctx.q}")
    return [r]


@dataclass(frozen=True)
class _Job:
    p: int
    k: int
    m: int
    r_mode: str
    entries_domain: str
    square_rule: str
    multiplicity: str
    algo: str
    budget: int
    record_timing: bool


def _run_job(job: _Job) -> list[ScanRow]:
    ctx = get_field(job.p, job.k)
    rows = []
    for r in _shifts(ctx, job.r_mode):
        spec = CountSpec(job.m, r, job.entries_domain, job.square_rule, job.multiplicity)
        try:
            rep = count(ctx, spec, job.algo, budget=job.budget)
        except BudgetExceeded:
            rows.append(ScanRow.skipped_row(ctx, spec, job.algo))
            continue
        rows.append(ScanRow.from_report(rep, job.record_timing))
    return rows


def _field_list(q_range) -> list[tuple[int, int]]:
    if isinstance(q_range, tuple) and len(q_range) == 2 and all(isinstance(x, int) for x in q_range):
        return enumerate_odd_prime_powers(*q_range)
    out = []
    for q in q_range:
        pk = prime_power(int(q))
        if pk is None or pk[0] == 2:
            raise RangeError(f"{q} is not an odd prime power")
        out.append(pk)
    return out


def scan_residuals(m: int, q_range, r_mode="class", entries_domain: str = "nonzero",
                   square_rule: str = "qr_only", multiplicity: str = "ordered_with_repeats",
                   out: str | None = None, fmt: str | None = None, algo: str = "dfs",
                   threads: int = 1, budget: int = DEFAULT_BUDGET,
                   record_timing: bool = False) -> list[ScanRow]:
    """One row per (q, r).  ``q_range`` is (q_min, q_max) or an explicit list of q.

    r_mode: "all", "class" (one shift per square class) or a fixed shift code.
    Rows come back ordered by (q, r) whatever the worker count.  Timings are
    zeroed unless ``record_timing``, so repeated runs write identical files.
    """
    jobs = [_Job(p, k, m, str(r_mode), entries_domain, square_rule, multiplicity, algo, budget,
                 record_timing) for p, k in _field_list(q_range)]
    rows: list[ScanRow] = []
    try:
        if threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for part in pool.map(_run_job, jobs):
                    rows.extend(part)
        else:
            for job in jobs:
                rows.extend(_run_job(job))
    finally:
        rows.sort(key=lambda row: (row.q, row.r))
        if out is not None:
            write_rows(rows, out, fmt)
    return rows


@dataclass
class ResidualSummary:
    max_norm_1: float
    max_norm_half: float
    envelope_slope: float | None
    slope_flag: str
    bins_used: int
    zero_bins: int
    bin_points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def residual_summary(rows, bin_size: int = 3) -> ResidualSummary:
    """Maxima of both normalized residuals plus the log-log growth slope of the
    residual envelope.  q values are grouped into bins of ``bin_size``
    consecutive prime powers; the largest |residual| in each bin (and the q
    where it occurs) is one point of the least-squares fit."""
    rows = [r for r in rows if not r.skipped]
    if not rows:
        raise EmptyInput("no rows to summarize")
    if len({r.m for r in rows}) != 1:
        raise ValueError("rows mix several values of m")
    max1 = max(r.residual_norm_1 for r in rows)
    maxh = max(r.residual_norm_half for r in rows)

    per_q: dict[int, Fraction] = {}
    for r in rows:
        per_q[r.q] = max(per_q.get(r.q, Fraction(0)), abs(r.residual_fraction()))
    qs = sorted(per_q)
    points = []
    zero_bins = 0
    for i in range(0, len(qs), bin_size):
        chunk = qs[i:i + bin_size]
        qbest = max(chunk, key=lambda q: (per_q[q], q))
        if per_q[qbest] == 0:
            zero_bins += 1
            continue
        points.append((qbest, float(per_q[qbest])))
    if max1 == 0:
        return ResidualSummary(0.0, 0.0, None, "all-zero", 0, zero_bins, [])
    if len(points) < 2:
        return ResidualSummary(max1, maxh, None, "insufficient-data", len(points), zero_bins, points)
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    slope = float(np.polyfit(x, y, 1)[0])
    return ResidualSummary(max1, maxh, slope, "ok", len(points), zero_bins, points)


@dataclass
class SmallestQResult:
    m: int
    q0: int | None
    failures: list[tuple[int, int]]
    checked: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"m": self.m, "q0": self.q0, "failures": [list(f) for f in self.failures],
                "checked": self.checked}


def search_smallest_q(m: int, q_max: int, alternate_reps: bool = False, q_min: int = 3,
                      spec_kwargs: dict | None = None) -> SmallestQResult:
    """First odd prime power q with N_r(m, q) > 0 for every shift r.

    One shift per square class is enough since N_r only depends on the class
    of r.  Raises NotFoundWithinRange (carrying the failures) when no q up to
    q_max qualifies.
    """
    spec_kwargs = spec_kwargs or {}
    failures = []
    checked = []
    for p, k in enumerate_odd_prime_powers(q_min, max(q_min, q_max)) if q_max >= q_min else []:
        ctx = get_field(p, k)
        checked.append(ctx.q)
        witness = None
        for r in square_class_representatives(ctx, alternate_reps):
            if count(ctx, CountSpec(m, r, **spec_kwargs), "dfs").count == 0:
                witness = r
                break
        if witness is None:
            return SmallestQResult(m, ctx.q, failures, checked)
        failures.append((ctx.q, witness))
    raise NotFoundWithinRange(f"no q <= {q_max} has N_r({m}, q) > 0 for all r", failures)


def default_threads() -> int:
    return int(os.environ.get("DIOPHFQ_THREADS", "1"))
