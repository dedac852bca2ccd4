# src/core/errors.py

from typing import List, Sequence


class TepsError(Exception):
    """
    Excepción base del proyecto. Cada subclase lleva el código de salida
    que `main.py` devuelve cuando el error llega hasta la línea de comandos.
    """
    exit_code: int = 1


class ValidationError(TepsError, ValueError):
    """Datos de entrada inconsistentes: dimensiones, ids, ROLs, columnas."""
    exit_code = 2


class ConfigError(ValidationError):
    """Clave desconocida, valor inválido o ruta inexistente en la configuración."""


class CycleError(ValidationError):
    """
    Un conjunto de relaciones contiene un ciclo.

    Attributes:
        cycle (List[int]): Programas que forman el ciclo, en orden.
    """

    def __init__(self, cycle: Sequence[int], message: str = ""):
        self.cycle: List[int] = list(cycle)
        text = message or "Relaciones cíclicas: " + " > ".join(str(c) for c in self.cycle)
        super().__init__(text)


class NumericalError(TepsError, RuntimeError):
    """Fallo numérico (optimización divergente, matriz singular...)."""
    exit_code = 3


class SeparationError(NumericalError):
    """La verosimilitud del logit por pares no está acotada (separación completa)."""


class DependencyMissingError(TepsError, FileNotFoundError):
    """Falta el artefacto que produce una etapa previa del pipeline."""
    exit_code = 4
