# src/tools/partition_tool.py

import argparse

import numpy as np
import pandas as pd

from .base_tool import BaseTool, RunContext
from core.uncertainty import (
    PartitionMode,
    admission_probabilities,
    assignment_probabilities,
    build_feasible_partition,
    feasibility_status,
)
from services.artifact_store import partitions_to_json

PARTITIONS_FILE = "partitions.json"
PROBABILITIES_FILE = "assignment_probabilities.csv"
STATUS_FILE = "feasibility_status.csv"


class PartitionTool(BaseTool):
    """
    Partición de la incertidumbre de cada estudiante en clases de conjuntos factibles,
    con las probabilidades de asignación y admisión que se derivan de ella.
    """

    @property
    def name(self) -> str:
        return "partition"

    @property
    def description(self) -> str:
        return (f"Construye las particiones de conjuntos factibles ({PARTITIONS_FILE}), las probabilidades "
                f"de asignación y admisión ({PROBABILITIES_FILE}) y la clasificación de programas ({STATUS_FILE}).")

    def add_arguments(self, parser: argparse.ArgumentParser):
        self.add_dataset_arguments(parser)

    def execute(self, context: RunContext) -> str:
        economy, rols = context.dataset()
        cfg = context.config
        partitions = build_feasible_partition(
            economy, rols, cfg.n_draws, cfg.seed, mode=PartitionMode(cfg.partition_mode),
            n_own_draws=cfg.n_own_draws, workers=cfg.threads,
        )
        context.artifacts.write_json(
            PARTITIONS_FILE, partitions_to_json(partitions, rols, economy.n_programs, economy.student_ids)
        )

        n_programs = economy.n_programs
        ids = np.repeat(economy.student_ids, n_programs)
        programs = np.tile(np.arange(n_programs), economy.n_students)
        assigned = np.concatenate([assignment_probabilities(p, n_programs) for p in partitions])
        admitted = np.concatenate([admission_probabilities(p, n_programs) for p in partitions])
        context.artifacts.write_csv(PROBABILITIES_FILE, pd.DataFrame({
            "student_id": ids, "program_id": programs, "assignment": assigned, "admission": admitted,
        }))

        status = [s.value for p, rol in zip(partitions, rols) for s in feasibility_status(p, rol, n_programs)]
        status_frame = pd.DataFrame({"student_id": ids, "program_id": programs, "status": status})
        context.artifacts.write_csv(STATUS_FILE, status_frame)

        n_classes = np.mean([len(p.classes) for p in partitions])
        return f"Particiones de {len(partitions)} estudiantes ({cfg.partition_mode}); {n_classes:.2f} clases por estudiante."
