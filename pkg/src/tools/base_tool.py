# src/tools/base_tool.py

import argparse
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from core.config import RunConfig
from core.economy import Economy, Rol, TieBreak, validate_rols
from core.errors import DependencyMissingError
from core.gibbs_sampler import GibbsConfig
from services.artifact_store import ArtifactStore
from services.dataset_store import ESTIMATED_SCORES_FILE, DatasetStore


@dataclass
class RunContext:
    """
    Todo lo que una herramienta necesita para ejecutarse.

    Attributes:
        config (RunConfig): Configuración resuelta (archivo + banderas).
        artifacts (ArtifactStore): Salidas de la ejecución en OUTPUT_DIR.
        options (Dict[str, Any]): Opciones propias del subcomando.
    """
    config: RunConfig
    artifacts: ArtifactStore
    options: Dict[str, Any] = field(default_factory=dict)
    _dataset: Optional[Tuple[Economy, List[Rol]]] = None

    def dataset(self) -> Tuple[Economy, List[Rol]]:
        """
        Carga (una sola vez) la economía y los ROLs de DATA_DIR.

        Si `priority-logit` ya dejó puntajes estimados en OUTPUT_DIR, con ellos se
        completan los programas DETERMINISTIC que no traen puntaje conocido.

        Raises:
            DependencyMissingError: Si no se configuró DATA_DIR.
        """
        if self._dataset is None:
            if not self.config.data_dir:
                raise DependencyMissingError("Este subcomando necesita DATA_DIR con los CSV del mercado.")
            tiebreak = TieBreak(self.options.get("tiebreak") or TieBreak.STB)
            estimated = None
            if self.artifacts.exists(ESTIMATED_SCORES_FILE):
                estimated = self.artifacts.read_csv(ESTIMATED_SCORES_FILE)
            economy, rols = DatasetStore(self.config.data_dir, tiebreak).parse_inputs(estimated)
            rols = validate_rols(rols, economy.n_students, economy.n_programs, list_cap=self.config.list_cap)
            self._dataset = (economy, rols)
        return self._dataset

    def gibbs_config(self, seed: int, progress: bool = True) -> GibbsConfig:
        """Ajustes del muestreador tomados de la configuración, con la semilla de la etapa."""
        cfg = self.config
        return GibbsConfig(n_iter=cfg.gibbs_n_iter, burn_in=cfg.gibbs_burn_in, thin=cfg.gibbs_thin,
                           n_chains=cfg.gibbs_chains, seed=seed, workers=cfg.threads, progress=progress)


class BaseTool(ABC):
    """
    Clase base abstracta (Interfaz) para todos los subcomandos de la línea de comandos.

    Define el contrato que cada etapa del pipeline debe seguir para integrarse
    con el ToolRegistry y el Dispatcher.

    Una herramienta bien diseñada tiene:
    1. Un 'name' único, que es el nombre del subcomando.
    2. Una 'description' que aparece en la ayuda de la línea de comandos.
    3. Un método 'execute' que lee los artefactos de la etapa anterior y escribe los suyos.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """
        Retorna el nombre del subcomando.
        Ejemplo: "simulate-cutoffs", "infer".
        """
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """
        Retorna una descripción breve de la etapa: qué lee y qué escribe.
        """
        pass

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Opciones propias del subcomando; por defecto ninguna."""
        pass

    @staticmethod
    def add_dataset_arguments(parser: argparse.ArgumentParser):
        parser.add_argument("--tiebreak", choices=[t.value for t in TieBreak], default=TieBreak.STB.value,
                            help="Desempate de loterías: una sola (STB) o una por programa (MTB).")

    @abstractmethod
    def execute(self, context: RunContext) -> str:
        """
        Ejecuta la etapa.

        Args:
            context (RunContext): Configuración, almacén de artefactos y opciones.

        Returns:
            str: Resumen de una línea para mostrar al usuario.

        Raises:
            TepsError: Cualquier error tipado de validación, numérico o de dependencias.
        """
        pass
