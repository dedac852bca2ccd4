# src/main.py

import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

# --- Configuración Inicial ---
load_dotenv()
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

# --- Importaciones de Componentes ---
from core.dispatcher import Dispatcher
from core.errors import TepsError
from core.tool_registry import ToolRegistry
from tools.counterfactual_tool import CounterfactualTool
from tools.estimate_tool import EstimateTool
from tools.infer_tool import InferTool
from tools.montecarlo_tool import MonteCarloTool
from tools.partition_tool import PartitionTool
from tools.priority_logit_tool import PriorityLogitTool
from tools.report_tool import ReportTool
from tools.select_tool import SelectTool
from tools.simulate_cutoffs_tool import SimulateCutoffsTool

logger = logging.getLogger("teps")


def build_registry() -> ToolRegistry:
    """Registra un subcomando por etapa, en el orden del pipeline."""
    tool_registry = ToolRegistry()
    for tool in (PriorityLogitTool(), SimulateCutoffsTool(), PartitionTool(), InferTool(), EstimateTool(),
                 SelectTool(), MonteCarloTool(), CounterfactualTool(), ReportTool()):
        tool_registry.register_tool(tool)
    return tool_registry


def configure_logging(argv: List[str]):
    verbose = "-v" in argv or "--verbose" in argv
    level = logging.INFO if verbose else os.getenv("LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Punto de entrada de la línea de comandos.

    Returns:
        int: Código de salida (0 éxito, 2 validación, 3 numérico, 4 dependencia faltante, 1 inesperado).
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    configure_logging(argv)

    # --- 1. Composition Root ---
    dispatcher = Dispatcher(tool_registry=build_registry())

    # --- 2. Ejecución del subcomando ---
    try:
        tool, context = dispatcher.dispatch(argv)
        response = tool.execute(context)
        context.artifacts.write_manifest(options=context.options)
    except TepsError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Error inesperado")
        print(f"[ERROR INESPERADO] Ocurrió un error: {e}", file=sys.stderr)
        return 1

    print(f"{tool.name}: {response}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
