from typing import Any


class PlanningError(Exception):
    """
    Base class for every error raised by the planner.

    Attributes:
        reason (str): Machine-readable reason written into run artifacts.
        exit_code (int): Process exit status the CLI maps this error to.
        detail (str): Human-readable description of the failure.
        context (dict): Extra JSON-serializable fields (row index, certificate, ...).
    """

    reason = "planning_error"
    exit_code = 2
    status = "error"

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict:
        """
        Serialize the error for `result.json` and CLI output.

        Returns:
            dict: status, reason, detail and any extra context fields.
        """
        return {
            "status": self.status,
            "reason": self.reason,
            "detail": self.detail,
            **self.context,
        }


class MalformedSeries(PlanningError):
    reason = "malformed_series"

    def __init__(self, detail: str, row: int | None = None, **context: Any):
        super().__init__(detail, row=row, **context)
        self.row = row


class ShapeError(PlanningError):
    reason = "shape_mismatch"


class DomainError(PlanningError):
    reason = "domain_error"


class DegenerateDistribution(PlanningError):
    reason = "degenerate_distribution"


class DegenerateParams(PlanningError):
    reason = "degenerate_params"


class InsufficientHistory(PlanningError):
    reason = "insufficient_history"


class ConfigError(PlanningError):
    reason = "config_error"


class ModelError(PlanningError):
    reason = "model_error"


class SolverError(PlanningError):
    reason = "solver_error"


class Infeasibility(PlanningError):
    """Outcomes where the inputs are valid but no admissible plan exists."""

    reason = "infeasible"
    exit_code = 1
    status = "infeasible"


class LpInfeasible(Infeasibility):
    reason = "lp_infeasible"


class LpUnbounded(Infeasibility):
    reason = "lp_unbounded"
    status = "unbounded"


class NoFeasibleCutoff(Infeasibility):
    reason = "no_feasible_cutoff"
