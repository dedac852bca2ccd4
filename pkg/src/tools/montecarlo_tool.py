# src/tools/montecarlo_tool.py

import argparse

import pandas as pd

from .base_tool import BaseTool, RunContext
from core.rng import PURPOSE_STAGE, derive_seed
from core.uncertainty import PartitionMode
from experiments.behavior import Dgp, ThresholdBasis
from experiments.montecarlo import (
    STAGE_GIBBS,
    HarnessConfig,
    behavior_table,
    estimate_table,
    policy_effect_table,
    run_monte_carlo,
    selection_table,
)
from experiments.policies import Policy
from experiments.synthetic_economy import McConfig

BEHAVIOR_TABLE_FILE = "table_behavior.csv"
ESTIMATES_TABLE_FILE = "table_estimates.csv"
SELECTION_TABLE_FILE = "table_selection.csv"
POLICY_TABLE_FILE = "table_policy_effects.csv"


class MonteCarloTool(BaseTool):
    """
    Experimento completo sobre economías sintéticas: comportamiento, sesgo de las
    estimaciones y frecuencia de selección por DGP.
    """

    @property
    def name(self) -> str:
        return "montecarlo"

    @property
    def description(self) -> str:
        return (f"Genera MC_SAMPLES economías sintéticas, aplica cada DGP y escribe {BEHAVIOR_TABLE_FILE}, "
                f"{ESTIMATES_TABLE_FILE} y {SELECTION_TABLE_FILE}.")

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--behavior-only", action="store_true",
                            help="Solo la tabla de comportamiento, sin estimar ni seleccionar.")
        parser.add_argument("--policy-effects", action="store_true",
                            help=f"Evalúa además POLICY con los posteriores WTT y elegido ({POLICY_TABLE_FILE}).")

    def execute(self, context: RunContext) -> str:
        cfg = context.config
        estimate = not context.options.get("behavior_only")
        with_policy = estimate and bool(context.options.get("policy_effects"))
        mc = McConfig.for_students(cfg.mc_students, seed=cfg.seed)
        harness = HarnessConfig(
            n_samples=cfg.mc_samples,
            cutoff_samples=cfg.mc_cutoff_samples,
            cutoff_draws=cfg.mc_cutoff_draws,
            n_draws=cfg.n_draws,
            partition_mode=PartitionMode(cfg.partition_mode),
            odds_lottery_draws=cfg.mc_odds_lottery_draws,
            threshold_basis=ThresholdBasis(cfg.mc_threshold_basis),
            behavior_check_draws=cfg.mc_behavior_check_draws,
            tau_grid=cfg.tau_grid,
            alpha=cfg.alpha,
            nominal_df=cfg.nominal_df,
            estimate=estimate,
            keep_posteriors=with_policy,
            workers=cfg.threads,
            progress=True,
        )
        gibbs = context.gibbs_config(derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_GIBBS), progress=False)
        result = run_monte_carlo(mc, cfg.dgp, harness, gibbs)

        context.artifacts.write_csv(BEHAVIOR_TABLE_FILE, behavior_table(result))
        context.artifacts.write_csv(ESTIMATES_TABLE_FILE, estimate_table(result))
        context.artifacts.write_csv(SELECTION_TABLE_FILE, selection_table(result))
        if with_policy:
            frames = [
                policy_effect_table(mc, result, Dgp(dgp), Policy(cfg.policy), cfg.cf_group, cfg.cf_attributes,
                                    cfg.cf_pref_draws, cfg.cf_lottery_draws, cfg.threads)
                for dgp in cfg.dgp
            ]
            context.artifacts.write_csv(POLICY_TABLE_FILE, pd.concat(frames, ignore_index=True))
        return (f"Monte Carlo: {cfg.mc_samples} muestras × {len(cfg.dgp)} DGP "
                f"({'con' if estimate else 'sin'} estimación).")
