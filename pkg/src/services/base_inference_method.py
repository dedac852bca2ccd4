# src/services/base_inference_method.py

from abc import ABC, abstractmethod
from typing import List, Sequence

from core.inference import RelationSet
from core.uncertainty import StudentPartition


class BaseInferenceMethod(ABC):
    """
    Clase base abstracta (Interfaz) para las hipótesis de inferencia de preferencias.

    Cada implementación (WTT, TEPS^τ) traduce la partición de un estudiante y
    su ROL en un conjunto de relaciones "x preferido a y". El resto de la
    aplicación (estimación, selección, Monte Carlo) trabaja solo contra este
    contrato, de modo que las hipótesis son intercambiables.
    """

    @property
    @abstractmethod
    def label(self) -> str:
        """
        Etiqueta con la que la hipótesis aparece en tablas y en la escalera de selección.
        Ejemplo: "WTT", "TEPS^top", "TEPS^80".
        """
        pass

    @abstractmethod
    def infer(self, partition: StudentPartition, rol: Sequence[int], n_programs: int) -> RelationSet:
        """
        Infiere las relaciones de un estudiante.

        Args:
            partition (StudentPartition): Clases de conjuntos factibles del estudiante.
            rol (Sequence[int]): ROL enviado.
            n_programs (int): Número de programas del mercado.

        Returns:
            RelationSet: Relaciones transitivamente cerradas.
        """
        pass

    def infer_all(self, partitions: Sequence[StudentPartition], rols: Sequence[Sequence[int]],
                  n_programs: int) -> List[RelationSet]:
        return [self.infer(partition, rol, n_programs) for partition, rol in zip(partitions, rols)]
