"""Exact counting of Diophantine m-tuples over finite fields F_q, with
executable checks of the character-sum identities behind the count."""

from .char_decomp import (EpsilonMatrix, canonicalize_eps, expansion_identity_check, r_eps,
                          r_eps_vanishing_closed_form, s_sum, st_identity_check, t_sum)
from .dioph_count import (CountReport, CountSpec, build_pair_graph, count, count_brute,
                          count_dfs, count_expansion)
from .gf_arith import FieldCtx, fe_arith, field_new, get_field, parse_field, quad_char
from .gf_poly import (FactoredKernel, PolyFq, char_sum_poly, is_square_in_closure,
                      kernel_is_square, poly_arith, square_free_part, weil_check)
from .scan_harness import (ScanRow, enumerate_odd_prime_powers, residual_summary,
                           scan_residuals, search_smallest_q)

__version__ = "0.1.0"
