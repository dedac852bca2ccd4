# src/tools/infer_tool.py

import argparse
import json
import os
from typing import Dict, List

import numpy as np
import pandas as pd

from .base_tool import BaseTool, RunContext
from .partition_tool import PARTITIONS_FILE
from core.errors import ConfigError, DependencyMissingError, ValidationError
from core.inference import RelationSet
from services.artifact_store import (
    partition_student_ids,
    partitions_from_json,
    relations_to_frame,
    relations_to_json,
)
from services.base_inference_method import BaseInferenceMethod
from services.teps_method import TepsMethod, method_ladder

RELATIONS_FILE = "relations.json"
RELATIONS_TABLE_FILE = "relations.csv"
RELATIONS_SUMMARY_FILE = "relations_summary.csv"


class InferTool(BaseTool):
    """
    Infiere las relaciones de preferencia de cada estudiante con WTT y TEPS^τ
    a partir de las particiones de la etapa anterior.
    """

    @property
    def name(self) -> str:
        return "infer"

    @property
    def description(self) -> str:
        return (f"Lee {PARTITIONS_FILE} y escribe {RELATIONS_FILE} y {RELATIONS_TABLE_FILE} con las relaciones "
                f"de WTT, TEPS^top y TEPS^τ para cada τ de la grilla.")

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--partitions", help=f"Archivo de particiones (por defecto OUTPUT_DIR/{PARTITIONS_FILE}).")
        parser.add_argument("--tau", type=float, help="Infiere solo TEPS^τ para este τ.")

    def _methods(self, context: RunContext) -> List[BaseInferenceMethod]:
        tau = context.options.get("tau")
        if tau is None:
            return method_ladder(context.config.tau_grid, context.config.outside_option)
        if not 0 <= tau <= 100:
            raise ConfigError(f"--tau debe estar en [0, 100]; llegó {tau}.")
        return [TepsMethod(int(tau) if float(tau).is_integer() else tau, context.config.outside_option)]

    def _read_partitions(self, context: RunContext) -> Dict:
        path = context.options.get("partitions")
        if not path:
            return context.artifacts.read_json(PARTITIONS_FILE)
        if not os.path.isfile(path):
            raise DependencyMissingError(f"No se encontró el archivo de particiones '{path}'.")
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def execute(self, context: RunContext) -> str:
        document = self._read_partitions(context)
        partitions, rols, n_programs = partitions_from_json(document)
        if not partitions:
            raise ValidationError("El archivo de particiones no contiene estudiantes.")
        relations: Dict[str, List[RelationSet]] = {}
        rows = []
        for method in self._methods(context):
            sets = method.infer_all(partitions, rols, n_programs)
            relations[method.label] = sets
            sizes = np.array([len(s) for s in sets], dtype=float)
            rows.append({"method": method.label, "students": len(sets), "mean_relations": sizes.mean(),
                         "min_relations": sizes.min(), "max_relations": sizes.max()})
        context.artifacts.write_json(RELATIONS_FILE, relations_to_json(relations))
        context.artifacts.write_csv(RELATIONS_TABLE_FILE,
                                    relations_to_frame(relations, partition_student_ids(document)))
        context.artifacts.write_csv(RELATIONS_SUMMARY_FILE, pd.DataFrame(rows))
        listing = ", ".join(f"{row['method']}={row['mean_relations']:.1f}" for row in rows)
        return f"Relaciones medias por estudiante: {listing}."
