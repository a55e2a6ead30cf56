import logging
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from . import simplex
from .errors import LpInfeasible, LpUnbounded, ModelError
from .models import KktReport, LinearProgram, LpSolution, RenewableSizingSolution
from .schemas import DER_CLASSES, DemandContext, RegulatoryParams, SavingsCoefficients

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR_MW = 1e-6
ACTIVE_TOLERANCE = 1e-9
KKT_TOLERANCE = 1e-7
FEASIBILITY_TOLERANCE = 1e-9
NG_INDEX = DER_CLASSES.index("natural_gas_chp")


def _vector(capacities: Sequence[float]) -> np.ndarray:
    x = np.asarray(capacities, dtype=float)
    if x.shape != (len(DER_CLASSES),):
        raise ModelError(f"expected capacities for {', '.join(DER_CLASSES)}")
    return x


def fuel_savings(capacities: Sequence[float], coeff: SavingsCoefficients) -> float:
    """Annual fuel savings in MMBtu for capacities ordered pv, wind, biomass, NG."""
    gamma = [row.gamma_mmbtu_per_mw for row in coeff.by_class()]
    return float(np.dot(gamma, _vector(capacities)))


def emissions_reduction(capacities: Sequence[float], coeff: SavingsCoefficients) -> float:
    """Annual CO2 reduction in tons."""
    alpha = [row.alpha_tons_per_mw for row in coeff.by_class()]
    return float(np.dot(alpha, _vector(capacities)))


def system_energy_savings(capacities: Sequence[float], coeff: SavingsCoefficients) -> float:
    """Annual system energy savings in MWh, CHP rows counting electric plus thermal."""
    beta = [row.beta_total for row in coeff.by_class()]
    return float(np.dot(beta, _vector(capacities)))


def mandate_denominators(ctx: DemandContext) -> tuple[float, float]:
    """
    Denominators of the CO2 and efficiency mandates.

    Returns:
        tuple: (E_CO2 * L, E_l + E_th).

    Raises:
        ModelError: If either is missing or not positive.
    """
    if ctx.annual_load_mwh is None or ctx.average_load_mw is None:
        raise ModelError("annual load energy and average load must be known before Step 1")
    emissions_base = ctx.base_emissions_tons_per_mw * ctx.average_load_mw
    energy_base = ctx.annual_load_mwh + ctx.annual_thermal_load_mwh
    if emissions_base <= 0.0 or energy_base <= 0.0:
        raise ModelError("E_CO2 * L and E_l + E_th must both be positive")
    return emissions_base, energy_base


def build_lp(
    reg: RegulatoryParams,
    coeff: SavingsCoefficients,
    ctx: DemandContext,
    objective: Optional[Sequence[float]] = None,
) -> LinearProgram:
    """
    Formulate Step 1: maximize fuel savings subject to the mandates.

    Ratio mandates are cross-multiplied into linear rows. Rows for mandates
    set to zero are omitted; each active share mandate also gets a total
    capacity floor so its denominator stays positive.

    Args:
        reg (RegulatoryParams): Mandate floors.
        coeff (SavingsCoefficients): Per-class savings coefficients.
        ctx (DemandContext): Denominator constants and capacity caps.
        objective: Optional replacement objective (maximized).

    Returns:
        LinearProgram: Variables pv, wind, biomass_chp, natural_gas_chp.

    Raises:
        ModelError: If a mandate denominator is not positive.
    """
    emissions_base, energy_base = mandate_denominators(ctx)
    n = len(DER_CLASSES)
    rows: list[list[float]] = []
    limits: list[float] = []
    labels: list[str] = []

    def add(row, limit, label):
        rows.append([float(value) for value in row])
        limits.append(float(limit))
        labels.append(label)

    for index, (name, cap) in enumerate(zip(DER_CLASSES, ctx.caps())):
        unit = np.zeros(n)
        unit[index] = 1.0
        add(unit, cap, "biomass_cap" if name == "biomass_chp" else f"cap:{name}")

    theta = reg.pv_share_floor
    if theta > 0.0:
        biomass_term = theta if reg.pv_share_includes_biomass else 0.0
        add([theta - 1.0, theta, biomass_term, 0.0], 0.0, "pv_share")
        add([-1.0, -1.0, -1.0 if reg.pv_share_includes_biomass else 0.0, 0.0],
            -DENOMINATOR_FLOOR_MW, "pv_share_denominator")

    rho = reg.renewable_share_floor
    if rho > 0.0:
        add([rho - 1.0, rho - 1.0, rho - 1.0, rho], 0.0, "renewable_share")
        add([-1.0, -1.0, -1.0, -1.0], -DENOMINATOR_FLOOR_MW, "renewable_share_denominator")

    if reg.co2_reduction_floor > 0.0:
        alpha = [row.alpha_tons_per_mw for row in coeff.by_class()]
        add(-np.asarray(alpha), -reg.co2_reduction_floor * emissions_base, "co2_reduction")

    if reg.efficiency_increase_floor > 0.0:
        beta = [row.beta_total for row in coeff.by_class()]
        add(-np.asarray(beta), -reg.efficiency_increase_floor * energy_base, "efficiency_increase")

    gamma = [row.gamma_mmbtu_per_mw for row in coeff.by_class()]
    return LinearProgram(
        variable_names=list(DER_CLASSES),
        objective=list(objective) if objective is not None else gamma,
        a_ub=rows,
        b_ub=limits,
        row_labels=labels,
        tie_break_index=NG_INDEX,
    )


class _Normalized:
    """Row- and objective-scaled copy of an LP; all tolerances apply here."""

    def __init__(self, lp: LinearProgram):
        n = len(lp.variable_names)
        self.a = np.asarray(lp.a_ub, dtype=float).reshape(-1, n)
        self.b = np.asarray(lp.b_ub, dtype=float)
        self.c = np.asarray(lp.objective, dtype=float)
        self.row_scale = np.abs(self.a).max(axis=1) if self.a.size else np.zeros(0)
        self.row_scale[self.row_scale == 0.0] = 1.0
        self.obj_scale = float(np.abs(self.c).max()) if self.c.size else 1.0
        if self.obj_scale == 0.0:
            self.obj_scale = 1.0
        self.a = self.a / self.row_scale[:, None]
        self.b = self.b / self.row_scale
        self.c = self.c / self.obj_scale

    def multipliers_to_original(self, mu: np.ndarray, nu: np.ndarray):
        return mu * self.obj_scale / self.row_scale, nu * self.obj_scale

    def multipliers_from_original(self, mu: np.ndarray, nu: np.ndarray):
        return mu * self.row_scale / self.obj_scale, nu / self.obj_scale


def _active_set_multipliers(problem: _Normalized, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Non-negative multipliers on the active constraints solving c = A^T mu - nu."""
    slack = problem.b - problem.a @ x
    active_rows = np.flatnonzero(np.abs(slack) <= ACTIVE_TOLERANCE)
    active_bounds = np.flatnonzero(x <= ACTIVE_TOLERANCE)
    basis = np.hstack([problem.a[active_rows].T, -np.eye(x.size)[:, active_bounds]])
    mu = np.zeros(problem.b.size)
    nu = np.zeros(x.size)
    if basis.shape[1]:
        weights, _ = nnls(basis, problem.c)
        mu[active_rows] = weights[: active_rows.size]
        nu[active_bounds] = weights[active_rows.size:]
    return mu, nu


def solve_lp(lp: LinearProgram) -> LpSolution:
    """
    Solve an LP with the dense Bland simplex and attach KKT multipliers.

    Args:
        lp (LinearProgram): Problem to maximize.

    Returns:
        LpSolution: Optimal vertex, objective and multipliers in original units.

    Raises:
        LpInfeasible: With a Farkas certificate over the constraint rows.
        LpUnbounded: With an improving ray.
    """
    problem = _Normalized(lp)
    secondary = None
    if lp.tie_break_index is not None:
        secondary = np.zeros(problem.c.size)
        secondary[lp.tie_break_index] = 1.0
    outcome = simplex.maximize(problem.c, problem.a, problem.b, secondary=secondary)

    if outcome.status == "infeasible":
        certificate = simplex.farkas_certificate(problem.a, problem.b)
        original = None if certificate is None else (certificate / problem.row_scale).tolist()
        raise LpInfeasible(
            "mandates and capacity caps admit no capacity mix",
            certificate=original,
            row_labels=lp.row_labels,
        )
    if outcome.status == "unbounded":
        raise LpUnbounded(
            "objective grows without bound",
            ray=outcome.ray.tolist(),
            variable_names=lp.variable_names,
        )

    x = np.maximum(outcome.x, 0.0)
    mu, nu = problem.multipliers_to_original(*_active_set_multipliers(problem, x))
    return LpSolution(
        x=x.tolist(),
        objective_value=float(np.dot(lp.objective, x)),
        row_multipliers=mu.tolist(),
        bound_multipliers=nu.tolist(),
    )


def kkt_verify(solution: LpSolution, lp: LinearProgram) -> KktReport:
    """
    Check the KKT conditions of `solution` on the scaled problem.

    Returns:
        KktReport: Stationarity, primal and dual feasibility and
        complementary slackness residuals; passes iff all are at most 1e-7.
    """
    problem = _Normalized(lp)
    x = np.asarray(solution.x, dtype=float)
    mu, nu = problem.multipliers_from_original(
        np.asarray(solution.row_multipliers, dtype=float),
        np.asarray(solution.bound_multipliers, dtype=float),
    )
    slack = problem.b - problem.a @ x
    stationarity = float(np.abs(problem.c - problem.a.T @ mu + nu).max(initial=0.0))
    primal = float(max(0.0, (-slack).max(initial=0.0), (-x).max(initial=0.0)))
    dual = float(max(0.0, (-mu).max(initial=0.0), (-nu).max(initial=0.0)))
    slackness = float(max(np.abs(mu * slack).max(initial=0.0), np.abs(nu * x).max(initial=0.0)))
    return KktReport(
        stationarity=stationarity,
        primal_feasibility=primal,
        dual_feasibility=dual,
        complementary_slackness=slackness,
        tolerance=KKT_TOLERANCE,
        passed=max(stationarity, primal, dual, slackness) <= KKT_TOLERANCE,
    )


def size_renewables(
    reg: RegulatoryParams,
    coeff: SavingsCoefficients,
    ctx: DemandContext,
    objective: Optional[Sequence[float]] = None,
) -> RenewableSizingSolution:
    """
    Run Step 1 end to end: formulate, solve and verify.

    Returns:
        RenewableSizingSolution: Capacities, savings indices and the KKT report.
    """
    lp = build_lp(reg, coeff, ctx, objective=objective)
    solution = solve_lp(lp)
    report = kkt_verify(solution, lp)
    if not report.passed:
        logger.warning("KKT verification failed: residual %.3g", report.residual_norm)
    x = solution.x
    caps = ctx.caps()
    binding = [
        name
        for name, value, cap in zip(DER_CLASSES, x, caps)
        if cap > 0.0 and abs(value - cap) <= ACTIVE_TOLERANCE * max(1.0, cap)
    ]
    result = RenewableSizingSolution(
        pv_mw=x[0],
        wind_mw=x[1],
        biomass_chp_mw=x[2],
        natural_gas_threshold_mw=x[3],
        fuel_savings_mmbtu=fuel_savings(x, coeff),
        emissions_reduction_tons=emissions_reduction(x, coeff),
        system_energy_savings_mwh=system_energy_savings(x, coeff),
        kkt_residual=report.residual_norm,
        kkt=report,
        row_labels=lp.row_labels,
        row_multipliers=solution.row_multipliers,
        bound_multipliers=solution.bound_multipliers,
        binding_caps=binding,
    )
    logger.info(
        "Step 1: pv=%.4f wind=%.4f biomass=%.4f ng_thr=%.4f MW, FS=%.1f MMBtu",
        result.pv_mw,
        result.wind_mw,
        result.biomass_chp_mw,
        result.natural_gas_threshold_mw,
        result.fuel_savings_mmbtu,
    )
    return result


def mandate_residuals(
    capacities: Sequence[float],
    reg: RegulatoryParams,
    coeff: SavingsCoefficients,
    ctx: DemandContext,
) -> dict[str, float]:
    """
    Relative slack of every Step 1 constraint at `capacities`.

    Each value is (lhs - rhs) / max(1, |lhs| + |rhs|); a constraint holds
    when its value is at least -1e-9. The NG entry is the installed NG-CHP
    capacity, not the threshold.
    """
    pv, wind, biomass, natural_gas = _vector(capacities)
    emissions_base = ctx.base_emissions_tons_per_mw * (ctx.average_load_mw or 0.0)
    energy_base = (ctx.annual_load_mwh or 0.0) + ctx.annual_thermal_load_mwh
    pv_denominator = pv + wind + (biomass if reg.pv_share_includes_biomass else 0.0)
    renewable = pv + wind + biomass
    pairs = {
        "biomass_cap": (ctx.biomass_cap_mw, biomass),
        "pv_share": (pv, reg.pv_share_floor * pv_denominator),
        "renewable_share": (renewable, reg.renewable_share_floor * (renewable + natural_gas)),
        "co2_reduction": (
            emissions_reduction(capacities, coeff),
            reg.co2_reduction_floor * emissions_base,
        ),
        "efficiency_increase": (
            system_energy_savings(capacities, coeff),
            reg.efficiency_increase_floor * energy_base,
        ),
    }
    return {
        label: (lhs - rhs) / max(1.0, abs(lhs) + abs(rhs)) for label, (lhs, rhs) in pairs.items()
    }


def mandates_hold(residuals: dict[str, float]) -> dict[str, bool]:
    return {label: bool(value >= -FEASIBILITY_TOLERANCE) for label, value in residuals.items()}
