"""Command-line driver.

Exit codes: 0 ok, 2 usage or invalid input, 3 budget exceeded,
4 identity violated (always a defect), 130 interrupted.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import char_decomp as cd
from .dioph_count import (DEFAULT_BUDGET, DOMAINS, MULTIPLICITIES, SQUARE_RULES, BudgetExceeded,
                          CountSpec, UnsupportedVariant, count)
from .gf_arith import FieldError, parse_field, parse_modulus
from .gf_poly import (ZeroPolynomial, expand, is_square_in_closure, kernel_is_square, parse_poly,
                      random_kernel, weil_check)
from .scan_harness import (NotFoundWithinRange, RangeError, default_threads, residual_summary,
                           rows_to_csv, rows_to_json, scan_residuals, search_smallest_q)

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_IDENTITY = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _field(args):
    modulus = parse_modulus(args.modulus) if getattr(args, "modulus", None) else None
    return parse_field(args.field, modulus)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _variant_args(p):
    p.add_argument("--domain", choices=DOMAINS, default="nonzero", help="entry domain")
    p.add_argument("--square-rule", choices=SQUARE_RULES, default="qr_only")
    p.add_argument("--multiplicity", choices=MULTIPLICITIES, default="ordered_with_repeats")


def _field_args(p, required=True):
    p.add_argument("--field", required=required, help='field as "p", "q" or "p^k", e.g. 3^2')
    p.add_argument("--modulus", help="irreducible modulus coefficients c0,...,ck")


def cmd_count(args) -> int:
    ctx = _field(args)
    spec = CountSpec(args.m, args.r, args.domain, args.square_rule, args.multiplicity)
    rep = count(ctx, spec, args.algo, threads=args.threads, budget=args.budget)
    if args.format == "json":
        text = rep.to_json()
    elif args.format == "csv":
        from .scan_harness import ScanRow
        text = rows_to_csv([ScanRow.from_report(rep, record_timing=True)]).rstrip("\n")
    else:
        text = rep.to_text()
    _emit(text, args.out)
    return EXIT_OK


def cmd_identity(args) -> int:
    ctx = _field(args)
    rs = [args.r] if args.r is not None else list(range(1, ctx.q))
    results = []
    if args.eps is None:
        for r in rs:
            rep = cd.expansion_identity_check(ctx, args.m, r, budget=args.budget, strict=False)
            d = rep.to_dict()
            d["check"] = "expansion"
            results.append(d)
            print(f"expansion r={r}: sum R(eps) = {rep.sum_r_eps}, sum prod(1+chi) = "
                  f"{rep.product_sum}; restricted {rep.restricted_sum} = 2^M * {rep.count}: "
                  f"{'ok' if rep.holds else 'VIOLATED'}")
    else:
        eps = cd.EpsilonMatrix.from_hex(args.m, args.eps)
        if not eps.nonzero():
            raise cd.ZeroEpsilon("eps must be nonzero")
        perm, canon = cd.canonicalize_eps(eps)
        for r in rs:
            direct = cd.r_eps(ctx, args.m, r, eps, budget=args.budget)
            relabeled = cd.r_eps(ctx, args.m, r, canon, budget=args.budget)
            d = {"check": "relabel", "r": r, "eps": eps.to_hex(), "canonical": canon.to_hex(),
                 "perm": list(perm), "r_eps": direct, "r_eps_canonical": relabeled,
                 "holds": direct == relabeled}
            results.append(d)
            print(f"relabel r={r}: R({eps.to_hex()}) = {direct}, "
                  f"R({canon.to_hex()}) = {relabeled}: {'ok' if d['holds'] else 'VIOLATED'}")
            if canon.lower_weight() == 0:
                closed = cd.r_eps_vanishing_closed_form(ctx, args.m, r, canon)
                d = {"check": "vanishing", "r": r, "closed_form": closed, "r_eps": relabeled,
                     "holds": closed == relabeled}
                print(f"vanishing r={r}: closed form {closed} = R {relabeled}: "
                      f"{'ok' if d['holds'] else 'VIOLATED'}")
            else:
                rep = cd.st_identity_check(ctx, args.m, r, canon, budget=args.budget, strict=False)
                d = rep.to_dict()
                d["check"] = "st"
                d["holds"] = rep.identity_holds and rep.weil_violations == 0
                print(f"st r={r}: R = {rep.r_direct}, (q-1)^-1 sum S*T = {rep.r_via_st}, "
                      f"weil violations {rep.weil_violations}: {'ok' if d['holds'] else 'VIOLATED'}")
            results.append(d)
    if args.out:
        _emit(json.dumps(results, indent=1), args.out)
    return EXIT_OK if all(d["holds"] for d in results) else EXIT_IDENTITY


def cmd_decompose(args) -> int:
    ctx = _field(args)
    eps = cd.EpsilonMatrix.from_hex(args.m, args.eps)
    perm, canon = cd.canonicalize_eps(eps)
    rep = cd.st_identity_check(ctx, args.m, args.r, canon, budget=args.budget, strict=False)
    d = rep.to_dict()
    d["perm"] = list(perm)
    _emit(json.dumps(d, indent=1), args.out)
    return EXIT_OK if rep.identity_holds else EXIT_IDENTITY


def cmd_weil(args) -> int:
    ctx = _field(args)
    if args.poly:
        rep = weil_check(ctx, parse_poly(args.poly))
        _emit(json.dumps(rep.to_dict()), args.out)
        return EXIT_OK if rep.holds else EXIT_IDENTITY
    rng = np.random.default_rng(args.seed)
    holds = excluded = mismatches = 0
    lines = []
    for i in range(args.samples):
        kern = random_kernel(ctx, rng, max_factors=args.max_factors)
        f = expand(ctx, kern)
        if f.degree < 1:
            # constant kernel: no roots, nothing to bound
            excluded += 1
            holds += 1
            continue
        rep = weil_check(ctx, f)
        if kernel_is_square(ctx, kern) != is_square_in_closure(ctx, f):
            mismatches += 1
        excluded += rep.excluded
        holds += rep.holds
        lines.append(f"{i},{kern.kind},{f.degree},{rep.sum},{int(rep.square_kernel)},{int(rep.holds)}")
    summary = (f"{holds}/{args.samples} holds ({excluded} excluded as closure-squares or constants); "
               f"square-test mismatches: {mismatches}")
    if args.out:
        _emit("sample,kind,degree,sum,square,holds\n" + "\n".join(lines), args.out)
    print(summary)
    return EXIT_OK if holds == args.samples and mismatches == 0 else EXIT_IDENTITY


def cmd_scan(args) -> int:
    if args.q_list:
        q_range = [int(t) for t in args.q_list.split(",")]
    else:
        q_range = (args.q_min, args.q_max)
    rows = scan_residuals(args.m, q_range, args.r_mode, args.domain, args.square_rule,
                          args.multiplicity, out=args.out, fmt=args.format, algo=args.algo,
                          threads=args.threads, budget=args.budget, record_timing=args.timing)
    if not args.out:
        print(rows_to_json(rows) if args.format == "json" else rows_to_csv(rows), end="")
    if args.summary:
        print(json.dumps(residual_summary(rows).to_dict()), file=sys.stderr)
    return EXIT_OK


def cmd_search(args) -> int:
    try:
        res = search_smallest_q(args.m, args.q_max, alternate_reps=args.alternate_reps)
    except NotFoundWithinRange as exc:
        print(f"{exc}; failures: {exc.failures}", file=sys.stderr)
        return 1
    print(f"q0 = {res.q0}")
    for q, r in res.failures:
        print(f"failure: q={q}, r={r}")
    if args.out:
        _emit(json.dumps(res.to_dict()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diophfq", description="Diophantine m-tuples over finite fields")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="count Diophantine m-tuples")
    _field_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, default=1, help="shift as an element code")
    p.add_argument("--algo", choices=("dfs", "brute", "expansion"), default="dfs")
    _variant_args(p)
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("identity", help="check the expansion, relabeling and S*T identities")
    _field_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, help="shift code (default: every nonzero shift)")
    p.add_argument("--eps", help="exponent vector as hex, bit t = t-th pair (1,2),(1,3),...")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("decompose", help="print the S*T decomposition report for one eps")
    _field_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--eps", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("weil", help="Weil-bound check on a polynomial or random kernels")
    _field_args(p)
    p.add_argument("--poly", help='coefficient codes, constant first, e.g. "1,5,6"')
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-factors", type=int, default=6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_weil)

    p = sub.add_parser("scan", help="residual scan over a range of q")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--q-min", type=int, default=3)
    p.add_argument("--q-max", type=int, default=50)
    p.add_argument("--q-list", help="explicit comma-separated q values (overrides the range)")
    p.add_argument("--r-mode", default="class", help='"all", "class" or a fixed shift code')
    _variant_args(p)
    p.add_argument("--algo", choices=("dfs", "brute", "expansion"), default="dfs")
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--timing", action="store_true", help="record wall time in the millis column")
    p.add_argument("--summary", action="store_true", help="print residual summary to stderr")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--seed", type=int, default=0, help="accepted for config symmetry; scans are exhaustive")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("search", help="smallest q with N_r(m, q) > 0 for every r")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--q-max", type=int, required=True)
    p.add_argument("--alternate-reps", action="store_true",
                   help="use the largest representative of each square class")
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except cd.IdentityViolated as exc:
        print(f"identity violated: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except (FieldError, cd.PreconditionViolated, UnsupportedVariant, ZeroPolynomial,
            RangeError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
