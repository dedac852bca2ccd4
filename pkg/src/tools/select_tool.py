# src/tools/select_tool.py

from typing import Dict, Sequence

from .base_tool import BaseTool, RunContext
from .estimate_tool import ESTIMATES_FILE
from core.errors import ValidationError
from core.selection import (
    DEFAULT_TAU_GRID,
    FINE_TAU_GRID,
    TOP_LABEL,
    WTT_LABEL,
    EstimateSummary,
    select_model,
    tau_label,
)

SELECTION_FILE = "selection.json"


def _covers(estimates: Dict[str, EstimateSummary], tau_grid: Sequence[float]) -> bool:
    labels = [WTT_LABEL] + [tau_label(tau) for tau in tau_grid if tau > 0]
    return all(label in estimates for label in labels)


class SelectTool(BaseTool):
    """
    Escalera de pruebas de Wald sobre las estimaciones: elige la hipótesis más
    informativa que no se rechaza frente a TEPS^top.
    """

    @property
    def name(self) -> str:
        return "select"

    @property
    def description(self) -> str:
        return f"Lee {ESTIMATES_FILE}, aplica la escalera de Wald con TAU_GRID y ALPHA y escribe {SELECTION_FILE}."

    def execute(self, context: RunContext) -> str:
        cfg = context.config
        document = context.artifacts.read_json(ESTIMATES_FILE)
        estimates = {
            label: EstimateSummary(label=label, beta=summary["mean"], covariance=summary["covariance"])
            for label, summary in document.get("estimates", {}).items()
        }
        if TOP_LABEL not in estimates:
            raise ValidationError(f"{ESTIMATES_FILE} no contiene la estimación {TOP_LABEL}.")

        result = select_model(estimates, estimates[TOP_LABEL], cfg.alpha, cfg.tau_grid, cfg.nominal_df)
        alternatives = {}
        for grid in (DEFAULT_TAU_GRID, FINE_TAU_GRID):
            if tuple(grid) != tuple(cfg.tau_grid) and _covers(estimates, grid):
                other = select_model(estimates, estimates[TOP_LABEL], cfg.alpha, grid, cfg.nominal_df)
                alternatives[",".join(f"{tau:g}" for tau in grid)] = other.to_dict()

        context.artifacts.write_json(SELECTION_FILE, {
            **result.to_dict(),
            "tau_grid": list(cfg.tau_grid),
            "nominal_df": cfg.nominal_df,
            "alternative_grids": alternatives,
            "estimates": {label: summary.to_dict() for label, summary in estimates.items()},
        })
        last = result.ladder[-1]
        return f"Elegido {result.chosen} tras {len(result.ladder)} pruebas (última: {last.comparison}, p={last.p_value:.3g})."
