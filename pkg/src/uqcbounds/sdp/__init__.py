"""Semidefinite programs for query-complexity lower bounds."""
from .barrier import BarrierOptions
from .certificates import Certificate, closed_form_value, refined_bound, verify_certificate
from .problems import (
    SdpSolution,
    dual_feasibility,
    form_sizes,
    query_lower_bound,
    solve_dual,
    solve_dual_subgroup,
    solve_primal,
    solve_subgroup,
)

__all__ = [
    "BarrierOptions",
    "Certificate",
    "SdpSolution",
    "closed_form_value",
    "dual_feasibility",
    "form_sizes",
    "query_lower_bound",
    "refined_bound",
    "solve_dual",
    "solve_dual_subgroup",
    "solve_primal",
    "solve_subgroup",
    "verify_certificate",
]
