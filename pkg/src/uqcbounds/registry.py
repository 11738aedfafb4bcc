"""Known constants for the built-in tasks, and report assembly with consistency checks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .sdp.certificates import RefinedBound, closed_form_value, refined_bound
from .tasks import Task, as_task

SCHEMA_VERSION = "uqc-bounds-report/1"
NUMERIC_TOL = 1e-5
ASYMPTOTIC_MARKER = "asymptotic ~(pi/2)d^2"
NUMERICAL_PRIOR = "numerical (prior work)"


@dataclass(frozen=True)
class BestKnown:
    """Smallest query count achieved by a known protocol: a number or a symbolic marker."""

    value: int | None = None
    marker: str | None = None
    provenance: str = "analytic (prior work)"

    def to_json(self):
        return {"value": self.value, "marker": self.marker, "provenance": self.provenance}


@dataclass(frozen=True)
class PriorBound:
    value: int
    provenance: str


@dataclass(frozen=True)
class RegistryRow:
    task: Task
    d: int
    sdp_closed_form: float
    refined: RefinedBound | None
    best_known: BestKnown | None
    prior_lower_bound: PriorBound | None = None

    def as_triple(self):
        """``(sdp_closed_form, refined, best_known)`` with markers kept as strings."""
        best = None
        if self.best_known is not None:
            best = self.best_known.value if self.best_known.value is not None else self.best_known.marker
        return (self.sdp_closed_form, self.refined.value if self.refined else None, best)


def _prior(task: Task, d: int) -> PriorBound | None:
    if task.name == "inversion":
        if d == 2:
            return PriorBound(4, NUMERICAL_PRIOR)
        if d <= 7:
            return PriorBound(6, NUMERICAL_PRIOR)
        return PriorBound(d - 1, "analytic (prior work)")
    if task.name == "transposition":
        return PriorBound(4 if d == 2 else 5, NUMERICAL_PRIOR)
    if task.name == "conjugation":
        return PriorBound(d - 1, "analytic (prior work)")
    return None


def _best_known(task: Task, d: int) -> BestKnown | None:
    if task.name in ("inversion", "transposition"):
        if d == 2:
            return BestKnown(4, provenance=NUMERICAL_PRIOR)
        return BestKnown(marker=ASYMPTOTIC_MARKER)
    if task.name == "conjugation":
        return BestKnown(d - 1)
    if task.name == "iteration":
        return BestKnown(task.order, provenance="sequential application")
    return None


def lookup(task, d: int) -> RegistryRow:
    """Closed-form SDP value, refined bound and best-known achievable count for ``task``."""
    task = as_task(task)
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    refined = refined_bound(task, d)
    if task.name == "iteration":
        refined = RefinedBound(task.order, provenance="tight by construction")
    return RegistryRow(task, int(d), float(closed_form_value(task, d)), refined, _best_known(task, d),
                       _prior(task, d))


def row_violations(row: RegistryRow) -> list:
    """Internal contradictions of a registry row (empty when consistent)."""
    out = []
    if row.refined is not None and row.refined.value < row.sdp_closed_form - 1e-12:
        out.append(f"refined bound {row.refined.value} below SDP value {row.sdp_closed_form}")
    bk = row.best_known
    if bk is not None and bk.value is not None:
        if bk.value < row.sdp_closed_form - 1e-12:
            out.append(f"best known {bk.value} below SDP value {row.sdp_closed_form}")
        if row.refined is not None and bk.value < row.refined.value:
            out.append(f"best known {bk.value} below refined bound {row.refined.value}")
    return out


def registry_rows(d_values=range(2, 9), orders=range(1, 9)):
    for d in d_values:
        for name in ("inversion", "transposition", "conjugation", "so_inversion", "diag_inversion"):
            yield lookup(name, d)
        for n in orders:
            yield lookup(Task("iteration", n), d)


def round_sig(x, digits: int = 9):
    """Round a float to ``digits`` significant digits (for stable output)."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    x = float(x)
    if not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits}g}")


@dataclass
class BoundReport:
    task: dict  # {"name", "parameters", "subgroup"}
    d: int
    numeric_sdp_value: float
    closed_form_value: float | None = None
    refined_bound: dict | None = None
    best_known_achievable: dict | None = None
    certificate: dict | None = None
    catalysis: dict | None = None
    probabilistic: list | None = None
    dual_value: float | None = None
    gap: float | None = None
    solver_status: str = "optimal"
    integer_bound: int | None = None
    status: str = "consistent"
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "task": self.task,
            "d": self.d,
            "numeric_sdp_value": round_sig(self.numeric_sdp_value),
            "dual_value": round_sig(self.dual_value),
            "gap": round_sig(self.gap),
            "solver_status": self.solver_status,
            "closed_form_value": round_sig(self.closed_form_value),
            "refined_bound": self.refined_bound,
            "best_known_achievable": self.best_known_achievable,
            "integer_bound": self.integer_bound,
            "certificate": _round_tree(self.certificate),
            "catalysis": _round_tree(self.catalysis),
            "probabilistic": _round_tree(self.probabilistic),
            "status": self.status,
            "violations": list(self.violations),
        }
        return out


def _round_tree(obj):
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    if isinstance(obj, float):
        return round_sig(obj)
    return obj


def task_descriptor(task=None, expr_text: str | None = None, subgroup: str = "full") -> dict:
    if task is None:
        return {"name": "custom", "parameters": {"expr": expr_text}, "subgroup": subgroup}
    task = as_task(task)
    params = {"order": task.order} if task.order is not None else {}
    return {"name": task.name, "parameters": params, "subgroup": task.subgroup if subgroup == "full" else subgroup}


def assemble_report(task, d: int, numeric_value: float, *, dual_value: float | None = None,
                    gap: float | None = None, solver_status: str = "optimal", certificate=None,
                    catalysis=None, probabilistic=None, expr_text: str | None = None,
                    subgroup: str = "full", integer_rounding: bool = False,
                    closed_form: float | None = None) -> BoundReport:
    """Collect the pipeline outputs for one instance and cross-check them.

    Violations (numeric value off the closed form, refined bound below the
    closed form, a best-known count below a lower bound, an invalid
    certificate) are listed and mark the report ``inconsistent``; nothing is
    raised.
    """
    from .sdp.problems import query_lower_bound

    row = None
    if task is not None:
        task = as_task(task)
        row = lookup(task, d)
        # the closed form applies to the task's own subgroup setting only
        if subgroup in ("full", task.subgroup) and closed_form is None:
            closed_form = row.sdp_closed_form
    report = BoundReport(task_descriptor(task, expr_text, subgroup), d, float(numeric_value),
                         closed_form_value=closed_form, dual_value=dual_value, gap=gap,
                         solver_status=solver_status)
    if row is not None and subgroup in ("full", row.task.subgroup):
        if row.refined is not None:
            report.refined_bound = {"value": row.refined.value, "provenance": row.refined.provenance,
                                    "intermediate": round_sig(row.refined.intermediate)}
        if row.best_known is not None:
            report.best_known_achievable = row.best_known.to_json()
        report.violations.extend(row_violations(row))
    if integer_rounding:
        report.integer_bound = query_lower_bound(numeric_value)
    if closed_form is not None and abs(numeric_value - closed_form) > NUMERIC_TOL:
        report.violations.append(
            f"numeric_sdp_value {numeric_value:.9g} differs from closed form {closed_form:.9g} "
            f"by {numeric_value - closed_form:.3g}")
    if report.refined_bound is not None and closed_form is not None and report.refined_bound["value"] < closed_form:
        report.violations.append("refined_bound below closed_form_value")
    if certificate is not None:
        summary = certificate.summary() if hasattr(certificate, "summary") else dict(certificate)
        report.certificate = summary
        if not (summary["primal_feasible"] and summary["dual_feasible"] and summary["values_match"]):
            report.violations.append("certificate does not verify")
    if catalysis is not None:
        report.catalysis = catalysis.to_dict() if hasattr(catalysis, "to_dict") else dict(catalysis)
    if probabilistic is not None:
        report.probabilistic = [p.row() if hasattr(p, "row") else dict(p) for p in probabilistic]
    if report.violations:
        report.status = "inconsistent"
    return report


REPORT_CSV_COLUMNS = ("task", "order", "subgroup", "d", "numeric_sdp_value", "dual_value", "gap",
                      "closed_form_value", "refined_bound", "best_known_achievable", "integer_bound",
                      "certificate_valid", "catalysis_verdict", "status")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def reports_csv(reports) -> str:
    """Flatten reports to CSV, one row per report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    for r in reports:
        bk = r.best_known_achievable
        best = None if bk is None else (bk["value"] if bk["value"] is not None else bk["marker"])
        cert = None
        if r.certificate is not None:
            c = r.certificate
            cert = c["primal_feasible"] and c["dual_feasible"] and c["values_match"]
        w.writerow([_fmt(v) for v in (
            r.task["name"], r.task["parameters"].get("order", r.task["parameters"].get("expr")),
            r.task["subgroup"], r.d, r.numeric_sdp_value, r.dual_value, r.gap, r.closed_form_value,
            None if r.refined_bound is None else r.refined_bound["value"], best, r.integer_bound,
            cert, None if r.catalysis is None else r.catalysis["verdict"], r.status)])
    return buf.getvalue()
