"""Formal equivalence: miter construction, SAT, k-induction, coverage."""

from .cnf import Cnf, CnfBuilder  # noqa: F401
from .sat import SatResult, sat_solve  # noqa: F401
from .miter import Miter, build_miter  # noqa: F401
from .check import (  # noqa: F401
    EvalResult,
    Verdict,
    check_combinational,
    check_inductive,
    evaluate_candidate,
    partition_coverage,
    self_verify,
)
