# src/tools/priority_logit_tool.py

import argparse
import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from .base_tool import BaseTool, RunContext
from core.economy import RuleMode
from core.errors import DependencyMissingError, ValidationError
from core.priority_logit import PriorityLogitFit, draw_priority_scores, fit_priority_logit, ranking_to_pairs
from core.rng import PURPOSE_PRIORITY, stream
from services.dataset_store import ESTIMATED_SCORES_FILE, RANKINGS_FILE, DatasetStore

logger = logging.getLogger(__name__)

PRIORITY_LOGIT_FILE = "priority_logit.json"


class PriorityLogitTool(BaseTool):
    """
    Prioridades latentes de los programas con selección.

    Ajusta un logit por pares al orden que cada programa DETERMINISTIC dio a sus
    postulantes y convierte los puntajes latentes en un sorteo de percentiles.
    Las etapas siguientes los usan como puntajes conocidos.
    """

    @property
    def name(self) -> str:
        return "priority-logit"

    @property
    def description(self) -> str:
        return (f"Lee {RANKINGS_FILE} y las covariables de DATA_DIR, ajusta el logit de prioridades por programa "
                f"y escribe {PRIORITY_LOGIT_FILE} y {ESTIMATED_SCORES_FILE}.")

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--ridge", type=float, default=0.0,
                            help="Penalización ℓ₂; necesaria si el orden está completamente separado.")
        parser.add_argument("--covariates", help="Covariables separadas por comas (por defecto todas).")

    def _covariates(self, context: RunContext, frame: pd.DataFrame) -> List[str]:
        requested = context.options.get("covariates")
        if not requested:
            names = list(frame.columns)
        else:
            names = [part.strip() for part in requested.split(",") if part.strip()]
        unknown = [name for name in names if name not in frame.columns]
        if unknown:
            raise ValidationError(f"Covariables desconocidas: {', '.join(unknown)}.")
        if not names:
            raise ValidationError("students.csv no trae covariables para el logit de prioridades.")
        return names

    def execute(self, context: RunContext) -> str:
        cfg = context.config
        if not cfg.data_dir:
            raise DependencyMissingError("Este subcomando necesita DATA_DIR con los CSV del mercado.")
        store = DatasetStore(cfg.data_dir)
        screened = {p.id for p in store.read_programs() if p.rule_mode == RuleMode.DETERMINISTIC}
        student_ids, covariates = store.read_covariates()
        names = self._covariates(context, covariates)
        X = covariates[names].to_numpy(dtype=float)
        ridge = float(context.options.get("ridge") or 0.0)

        fits: Dict[int, PriorityLogitFit] = {}
        for c, ranking in store.read_rankings().items():
            if c not in screened:
                logger.warning("[ADVERTENCIA] El programa %d no es DETERMINISTIC; se ignora su orden.", c)
                continue
            fits[c] = fit_priority_logit(ranking_to_pairs(ranking), X, ridge=ridge)
        if not fits:
            raise ValidationError(f"{RANKINGS_FILE} no trae el orden de ningún programa DETERMINISTIC.")

        context.artifacts.write_json(PRIORITY_LOGIT_FILE, {
            "covariates": names,
            "ridge": ridge,
            "programs": {
                str(c): {"beta": fit.beta.tolist(), "se": fit.standard_errors.tolist(),
                         "log_likelihood": fit.log_likelihood, "n_pairs": fit.n_pairs}
                for c, fit in fits.items()
            },
        })
        frames = [
            pd.DataFrame({
                "student_id": student_ids,
                "program_id": c,
                "latent": fit.scores,
                "known_score": draw_priority_scores(fit.scores, stream(cfg.seed, PURPOSE_PRIORITY, c)),
            })
            for c, fit in fits.items()
        ]
        context.artifacts.write_csv(ESTIMATED_SCORES_FILE, pd.concat(frames, ignore_index=True))
        n_pairs = int(np.sum([fit.n_pairs for fit in fits.values()]))
        return f"Logit de prioridades para {len(fits)} programas ({n_pairs} pares ordenados)."
