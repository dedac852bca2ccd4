# src/tools/estimate_tool.py

import argparse
import logging
from typing import Dict

import pandas as pd

from .base_tool import BaseTool, RunContext
from .infer_tool import RELATIONS_FILE
from core.errors import ValidationError
from core.gibbs_sampler import gibbs_estimate, spec_from_economy, willingness_to_travel
from core.rng import PURPOSE_STAGE, derive_seed
from experiments.montecarlo import STAGE_GIBBS
from services.artifact_store import label_slug, relations_from_json

logger = logging.getLogger(__name__)

ESTIMATES_FILE = "estimates.json"
ESTIMATES_TABLE_FILE = "estimates.csv"
DISTANCE_TERM = "distance"


def posterior_file(label: str) -> str:
    return f"posterior_{label_slug(label)}.csv"


class EstimateTool(BaseTool):
    """
    Estimación bayesiana de las preferencias con cada conjunto de relaciones inferido.
    """

    @property
    def name(self) -> str:
        return "estimate"

    @property
    def description(self) -> str:
        return (f"Lee {RELATIONS_FILE} y los datos de DATA_DIR, corre el muestreador de Gibbs por método y escribe "
                f"{ESTIMATES_FILE}, {ESTIMATES_TABLE_FILE} y las extracciones posterior_<método>.csv.")

    def add_arguments(self, parser: argparse.ArgumentParser):
        self.add_dataset_arguments(parser)
        parser.add_argument("--method", action="append",
                            help="Estima solo este método (repetible), p. ej. --method WTT --method TEPS^top.")

    def execute(self, context: RunContext) -> str:
        economy, _ = context.dataset()
        cfg = context.config
        relations = relations_from_json(context.artifacts.read_json(RELATIONS_FILE))
        wanted = context.options.get("method")
        if wanted:
            unknown = [label for label in wanted if label not in relations]
            if unknown:
                raise ValidationError(f"Métodos sin relaciones en {RELATIONS_FILE}: {', '.join(unknown)}.")
            relations = {label: relations[label] for label in wanted}

        spec = spec_from_economy(economy, cfg.terms, cfg.normalized_type)
        summaries: Dict[str, Dict[str, object]] = {}
        rows = []
        for index, (label, sets) in enumerate(relations.items()):
            logger.info("Estimando %s ...", label)
            draws = gibbs_estimate(sets, spec, context.gibbs_config(derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_GIBBS,
                                                                                  index)))
            context.artifacts.write_csv(posterior_file(label), draws.to_frame())
            summary = draws.summary()
            if DISTANCE_TERM in draws.names:
                summary["willingness_to_travel"] = {
                    name: willingness_to_travel(summary["mean"], draws.names, name, DISTANCE_TERM)
                    for name in draws.names if name != DISTANCE_TERM
                } if summary["mean"][draws.names.index(DISTANCE_TERM)] != 0 else None
            summaries[label] = summary
            psrf = summary["psrf"] or {}
            for j, name in enumerate(draws.names):
                rows.append({"method": label, "param": name, "mean": summary["mean"][j], "sd": summary["sd"][j],
                             "mcse": _at(summary["mcse"], j), "ess": _at(summary["ess"], j), "psrf": psrf.get(name)})
        context.artifacts.write_json(ESTIMATES_FILE, {"terms": list(cfg.terms), "estimates": summaries})
        context.artifacts.write_csv(ESTIMATES_TABLE_FILE, pd.DataFrame(rows))
        pending = [label for label, s in summaries.items() if s["converged"] is False]
        note = f"; sin converger: {', '.join(pending)}" if pending else ""
        return f"{len(summaries)} métodos estimados con {len(spec.names)} coeficientes{note}."


def _at(values, j):
    return None if values is None else values[j]
