# src/services/wtt_method.py

from typing import Sequence

from core.inference import RelationSet, wtt_infer
from core.selection import WTT_LABEL
from core.uncertainty import StudentPartition
from services.base_inference_method import BaseInferenceMethod


class WttMethod(BaseInferenceMethod):
    """Veracidad débil: usa solo el ROL, la partición no interviene."""

    @property
    def label(self) -> str:
        return WTT_LABEL

    def infer(self, partition: StudentPartition, rol: Sequence[int], n_programs: int) -> RelationSet:
        return wtt_infer(rol, range(n_programs))
