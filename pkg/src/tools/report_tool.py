# src/tools/report_tool.py

from typing import Callable, List, Tuple

import pandas as pd

from .base_tool import BaseTool, RunContext
from .counterfactual_tool import EFFECT_FILE
from .estimate_tool import ESTIMATES_TABLE_FILE
from .infer_tool import RELATIONS_SUMMARY_FILE
from .montecarlo_tool import BEHAVIOR_TABLE_FILE, ESTIMATES_TABLE_FILE as MC_ESTIMATES_FILE, POLICY_TABLE_FILE, \
    SELECTION_TABLE_FILE
from .partition_tool import PARTITIONS_FILE
from .select_tool import SELECTION_FILE
from .simulate_cutoffs_tool import CUTOFFS_FILE
from core.errors import DependencyMissingError

REPORT_FILE = "report.txt"


class ReportTool(BaseTool):
    """
    Resumen legible de todos los artefactos presentes en OUTPUT_DIR.
    """

    @property
    def name(self) -> str:
        return "report"

    @property
    def description(self) -> str:
        return f"Resume en {REPORT_FILE} los artefactos de las etapas ya ejecutadas en OUTPUT_DIR."

    def _sections(self) -> List[Tuple[str, str, Callable[[RunContext, str], str]]]:
        return [
            ("Cortes simulados", CUTOFFS_FILE, _cutoffs),
            ("Particiones", PARTITIONS_FILE, _partitions),
            ("Relaciones inferidas", RELATIONS_SUMMARY_FILE, _table),
            ("Estimaciones", ESTIMATES_TABLE_FILE, _table),
            ("Selección", SELECTION_FILE, _selection),
            ("Contrafactual", EFFECT_FILE, _table),
            ("Monte Carlo: comportamiento", BEHAVIOR_TABLE_FILE, _table),
            ("Monte Carlo: estimaciones", MC_ESTIMATES_FILE, _table),
            ("Monte Carlo: selección", SELECTION_TABLE_FILE, _table),
            ("Monte Carlo: efectos de política", POLICY_TABLE_FILE, _table),
        ]

    def execute(self, context: RunContext) -> str:
        blocks = []
        for title, name, render in self._sections():
            if context.artifacts.exists(name):
                blocks.append(f"== {title} ({name}) ==\n{render(context, name)}\n")
        if not blocks:
            raise DependencyMissingError(f"No hay artefactos en '{context.config.output_dir}'; ejecute antes alguna etapa.")
        context.artifacts.write_text(REPORT_FILE, "\n".join(blocks))
        return f"{REPORT_FILE}: {len(blocks)} secciones."


def _table(context: RunContext, name: str) -> str:
    frame = context.artifacts.read_csv(name)
    with pd.option_context("display.width", 160, "display.max_columns", None):
        return frame.to_string(index=False, float_format=lambda v: f"{v:.4f}")


def _cutoffs(context: RunContext, name: str) -> str:
    frame = context.artifacts.read_csv(name).drop(columns="draw")
    summary = pd.DataFrame({"mean": frame.mean(), "sd": frame.std(), "positive": (frame > 0).mean()})
    return f"{len(frame)} sorteos\n" + summary.to_string(float_format=lambda v: f"{v:.4f}")


def _partitions(context: RunContext, name: str) -> str:
    students = context.artifacts.read_json(name).get("students", [])
    if not students:
        return "sin estudiantes"
    classes = [len(s["classes"]) for s in students]
    lengths = [len(s["rol"]) for s in students]
    return (f"{len(students)} estudiantes; clases por estudiante: media {sum(classes) / len(classes):.2f}, "
            f"máximo {max(classes)}; longitud media del ROL {sum(lengths) / len(lengths):.2f}")


def _selection(context: RunContext, name: str) -> str:
    document = context.artifacts.read_json(name)
    lines = [f"Elegido: {document['chosen']} (α={document['alpha']})"]
    for step in document.get("ladder", []):
        verdict = "rechaza" if step["rejected"] else "no rechaza"
        lines.append(f"  {step['comparison']}: W={step['statistic']:.3f}, gl={step['df']}, "
                     f"p={step['p_value']:.4f} -> {verdict}")
    for grid, other in document.get("alternative_grids", {}).items():
        lines.append(f"Con la grilla {grid}: {other['chosen']}")
    return "\n".join(lines)
