# src/services/teps_method.py

from typing import List, Sequence

from core.errors import ValidationError
from core.inference import RelationSet, teps_infer
from core.selection import tau_label
from core.uncertainty import StudentPartition
from services.base_inference_method import BaseInferenceMethod
from services.wtt_method import WttMethod


class TepsMethod(BaseInferenceMethod):
    """
    TEPS^τ: estabilidad en las clases más probables y extensión transitiva.

    Args:
        tau (float): Parámetro de atención en [0, 100].
        outside_option (bool): Modela la opción exterior con el id C.
    """

    def __init__(self, tau: float, outside_option: bool = False):
        if not 0 <= tau <= 100:
            raise ValidationError(f"τ debe estar en [0, 100]; llegó {tau}.")
        self.tau = tau
        self.outside_option = outside_option

    @property
    def label(self) -> str:
        return tau_label(self.tau)

    def infer(self, partition: StudentPartition, rol: Sequence[int], n_programs: int) -> RelationSet:
        outside = n_programs if self.outside_option else None
        return teps_infer(partition, rol, self.tau, outside)


def method_ladder(tau_grid: Sequence[float], outside_option: bool = False) -> List[BaseInferenceMethod]:
    """WTT, TEPS^top y TEPS^τ para cada τ de la grilla, sin repetir etiquetas."""
    methods: List[BaseInferenceMethod] = [WttMethod(), TepsMethod(0, outside_option)]
    for tau in sorted(tau_grid):
        if tau > 0:
            methods.append(TepsMethod(tau, outside_option))
    return methods
