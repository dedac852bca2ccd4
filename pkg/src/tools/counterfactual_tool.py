# src/tools/counterfactual_tool.py

import argparse
from typing import List

import pandas as pd

from .base_tool import BaseTool, RunContext
from .estimate_tool import ESTIMATES_FILE, posterior_file
from .select_tool import SELECTION_FILE
from core.errors import ValidationError
from core.gibbs_sampler import PosteriorDraws, spec_from_economy
from core.rng import PURPOSE_STAGE, derive_seed
from experiments.counterfactual import policy_effect
from experiments.montecarlo import STAGE_COUNTERFACTUAL
from experiments.policies import Policy

EFFECT_FILE = "counterfactual.csv"
SEGREGATION_FILE = "segregation.csv"


class CounterfactualTool(BaseTool):
    """
    Efecto previsto de POLICY sobre la segregación, con preferencias extraídas del
    posterior del método elegido (o de los indicados con --method).
    """

    @property
    def name(self) -> str:
        return "counterfactual"

    @property
    def description(self) -> str:
        return (f"Lee {ESTIMATES_FILE}, las extracciones del método elegido en {SELECTION_FILE} y DATA_DIR; "
                f"simula POLICY con ROLs veraces y escribe {EFFECT_FILE} y {SEGREGATION_FILE}.")

    def add_arguments(self, parser: argparse.ArgumentParser):
        self.add_dataset_arguments(parser)
        parser.add_argument("--method", action="append",
                            help=f"Posterior a usar (repetible); por defecto el elegido en {SELECTION_FILE}.")

    def _methods(self, context: RunContext) -> List[str]:
        return context.options.get("method") or [context.artifacts.read_json(SELECTION_FILE)["chosen"]]

    def execute(self, context: RunContext) -> str:
        economy, _ = context.dataset()
        cfg = context.config
        document = context.artifacts.read_json(ESTIMATES_FILE)
        spec = spec_from_economy(economy, document.get("terms", cfg.terms), cfg.normalized_type)
        seed = derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_COUNTERFACTUAL)

        effects, reports = [], []
        for label in self._methods(context):
            summary = document["estimates"].get(label)
            if summary is None:
                raise ValidationError(f"{ESTIMATES_FILE} no contiene la estimación '{label}'.")
            types = [int(t) for t in summary["sigma2_mean"]]
            posterior = PosteriorDraws.from_frame(context.artifacts.read_csv(posterior_file(label)),
                                                  summary["names"], types, cfg.normalized_type)
            effect = policy_effect(economy, Policy(cfg.policy), cfg.cf_group, cfg.cf_attributes, cfg.cf_lottery_draws,
                                   seed, spec=spec, posterior=posterior, n_pref_draws=cfg.cf_pref_draws,
                                   workers=cfg.threads, progress=True)
            effects.append(effect.to_frame().assign(method=label, policy=cfg.policy))
            for report in (effect.baseline, effect.counterfactual):
                reports.append(report.to_frame().assign(method=label))

        effect_frame = pd.concat(effects, ignore_index=True)
        context.artifacts.write_csv(EFFECT_FILE, effect_frame)
        context.artifacts.write_csv(SEGREGATION_FILE, pd.concat(reports, ignore_index=True))
        listing = "; ".join(
            f"{row['method']} {row['metric']}: {row['effect']:+.4f}" for row in effect_frame.to_dict("records")
        )
        return f"Efecto de {cfg.policy} sobre la brecha por {cfg.cf_group}: {listing}."
