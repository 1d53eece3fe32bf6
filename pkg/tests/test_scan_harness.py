from fractions import Fraction

import pytest

from diophfq.dioph_count import CountSpec, count_brute
from diophfq.gf_arith import get_field
from diophfq.scan_harness import (CSV_FIELDS, EmptyInput, NotFoundWithinRange, RangeError,
                                  ScanRow, enumerate_odd_prime_powers, read_rows,
                                  residual_summary, rows_to_csv, scan_residuals,
                                  search_smallest_q, square_class_representatives)


def qs(pairs):
    return [p**k for p, k in pairs]


def test_enumerate_odd_prime_powers():
    assert qs(enumerate_odd_prime_powers(3, 30)) == [3, 5, 7, 9, 11, 13, 17, 19, 23, 25, 27, 29]
    assert enumerate_odd_prime_powers(4, 4) == []
    assert enumerate_odd_prime_powers(121, 128) == [(11, 2), (5, 3), (127, 1)]
    with pytest.raises(RangeError):
        enumerate_odd_prime_powers(2, 10)
    with pytest.raises(RangeError):
        enumerate_odd_prime_powers(10, 5)


def test_scan_m4_q5_row():
    (row,) = scan_residuals(4, [5], r_mode="1")
    n = count_brute(get_field(5), CountSpec(4, 1)).count
    assert row.main_term == "625/64"
    assert Fraction(row.residual) == n - Fraction(625, 64)
    assert row.verify()


def test_scan_m2_q5_all_r():
    rows = scan_residuals(2, [5], r_mode="all")
    assert [(r.r, r.count) for r in rows] == [(1, 4), (2, 8), (3, 8), (4, 4)]


def test_class_mode_two_rows():
    rows = scan_residuals(3, [7], r_mode="class")
    assert len(rows) == 2
    ctx = get_field(7)
    assert {ctx.chi(r.r) for r in rows} == {1, -1}


@pytest.mark.parametrize("m", [2, 3, 4])
def test_all_vs_class_counts_agree(m):
    all_rows = scan_residuals(m, (3, 27), r_mode="all")
    cls_rows = scan_residuals(m, (3, 27), r_mode="class")
    by_class = {}
    for row in all_rows:
        by_class.setdefault((row.q, get_field(row.p, row.k).chi(row.r)), set()).add(row.count)
    assert all(len(v) == 1 for v in by_class.values())
    for row in cls_rows:
        assert by_class[(row.q, get_field(row.p, row.k).chi(row.r))] == {row.count}


def test_persistence_round_trip(tmp_path):
    rows = scan_residuals(3, (3, 30), r_mode="all")
    for fmt in ("csv", "json"):
        path = tmp_path / f"rows.{fmt}"
        scan_residuals(3, (3, 30), r_mode="all", out=str(path))
        back = read_rows(str(path))
        assert back == rows
        assert all(r.verify() for r in back)
        assert residual_summary(back) == residual_summary(rows)
    header = (tmp_path / "rows.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_FIELDS)
    assert header == "q,p,k,m,r,variant,algo,count,main_term,residual,residual_norm_1,residual_norm_half,millis"


def test_skipped_rows_persist(tmp_path):
    rows = scan_residuals(4, [5, 31], r_mode="1", algo="brute", budget=10**5,
                          out=str(tmp_path / "s.csv"))
    assert [r.skipped for r in rows] == [False, True]
    assert rows[1].algo == "brute:skipped"
    assert read_rows(str(tmp_path / "s.csv")) == rows


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    scan_residuals(4, (5, 40), out=str(a), threads=1)
    scan_residuals(4, (5, 40), out=str(b), threads=2)
    assert a.read_bytes() == b.read_bytes()


def test_residual_summary_edge_cases():
    zero = ScanRow(5, 5, 1, 2, 1, "v", "dfs", 0, "0/1", "0/1", 0.0, 0.0)
    s = residual_summary([zero, zero])
    assert s.max_norm_1 == 0 and s.envelope_slope is None and s.slope_flag == "all-zero"
    (row,) = scan_residuals(4, [7], r_mode="1")
    s = residual_summary([row])
    assert s.envelope_slope is None and s.slope_flag == "insufficient-data"
    with pytest.raises(EmptyInput):
        residual_summary([])


def test_residual_summary_slope_on_synthetic_cubic():
    rows = []
    for q in [5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43]:
        res = Fraction(q**3, 5)
        n1 = float(res / q**3)
        rows.append(ScanRow(q, q, 1, 4, 1, "v", "dfs", 0, "0/1", f"{res.numerator}/{res.denominator}",
                            n1, n1 / q**0.5))
    assert residual_summary(rows).envelope_slope == pytest.approx(3.0)


def test_search_smallest_q():
    res = search_smallest_q(2, 9)
    assert res.q0 == 5 and res.failures == [(3, 1)]
    with pytest.raises(NotFoundWithinRange) as exc:
        search_smallest_q(2, 3)
    assert exc.value.failures == [(3, 1)]


def test_search_m3_and_rep_insensitivity():
    res = search_smallest_q(3, 200)
    assert res.q0 == 7 and res.failures == [(3, 1), (5, 1)]
    alt = search_smallest_q(3, 200, alternate_reps=True)
    assert alt.q0 == res.q0
    assert [q for q, _ in alt.failures] == [q for q, _ in res.failures]
    for q, r in res.failures + alt.failures:
        assert count_brute(get_field(q), CountSpec(3, r)).count == 0
    ctx = get_field(7)
    for r in range(1, 7):
        assert count_brute(ctx, CountSpec(3, r)).count > 0


def test_square_class_representatives():
    ctx = get_field(3, 2)
    sq, nsq = square_class_representatives(ctx)
    assert ctx.chi(sq) == 1 and ctx.chi(nsq) == -1
    sq2, nsq2 = square_class_representatives(ctx, alternate=True)
    assert (sq2, nsq2) != (sq, nsq)


def test_csv_text_has_exact_rationals():
    text = rows_to_csv(scan_residuals(4, [5], r_mode="1"))
    assert "625/64" in text and "-625/64" in text
