# src/tools/simulate_cutoffs_tool.py

import argparse

import pandas as pd

from .base_tool import BaseTool, RunContext
from core.uncertainty import simulate_cutoff_distribution

CUTOFFS_FILE = "cutoffs.csv"


class SimulateCutoffsTool(BaseTool):
    """
    Distribución empírica de cortes: N_DRAWS loterías pasadas por DA con los ROLs observados.
    """

    @property
    def name(self) -> str:
        return "simulate-cutoffs"

    @property
    def description(self) -> str:
        return f"Simula N_DRAWS vectores de cortes con los ROLs de DATA_DIR y escribe {CUTOFFS_FILE}."

    def add_arguments(self, parser: argparse.ArgumentParser):
        self.add_dataset_arguments(parser)

    def execute(self, context: RunContext) -> str:
        economy, rols = context.dataset()
        cfg = context.config
        cutoffs = simulate_cutoff_distribution(economy, rols, cfg.n_draws, cfg.seed, cfg.threads)
        frame = pd.DataFrame(cutoffs, columns=[f"c{c}" for c in range(economy.n_programs)])
        frame.insert(0, "draw", range(len(frame)))
        context.artifacts.write_csv(CUTOFFS_FILE, frame)
        filled = float((cutoffs > 0).mean())
        return f"{len(frame)} sorteos de cortes para {economy.n_programs} programas ({filled:.0%} con corte positivo)."
