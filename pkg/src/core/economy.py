# src/core/economy.py

"""
Tipos básicos del mercado: programas, reglas de prioridad, economía y ROLs.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ValidationError

# Opción exterior implícita: siempre factible, corte 0, sin relaciones.
UNASSIGNED = -1

Rol = Tuple[int, ...]


class RuleMode(str, Enum):
    LOTTERY_COARSE = "LOTTERY_COARSE"
    DETERMINISTIC = "DETERMINISTIC"
    EXAM = "EXAM"


class TieBreak(str, Enum):
    STB = "STB"
    MTB = "MTB"


@dataclass(frozen=True)
class Program:
    """
    Un programa (asiento escolar) del mercado.

    Attributes:
        id (int): Índice denso 0..C-1.
        capacity (int): Número de asientos, no negativo.
        school_id (int): Escuela a la que pertenece el programa.
        attributes (Dict[str, float]): Características usadas por la utilidad y las políticas.
        rule_mode (RuleMode): Estructura de prioridad del programa.
        n_groups (int): Número de grupos de prioridad intrínseca (n_c).
        variance_type (int): Tipo de varianza del error de utilidad.
    """
    id: int
    capacity: int
    school_id: int = 0
    attributes: Dict[str, float] = field(default_factory=dict)
    rule_mode: RuleMode = RuleMode.LOTTERY_COARSE
    n_groups: int = 1
    variance_type: int = 0


@dataclass(frozen=True)
class PriorityRules:
    """Modo de prioridad por programa y regla de desempate global."""
    modes: Tuple[RuleMode, ...]
    n_groups: Tuple[int, ...]
    tiebreak: TieBreak = TieBreak.STB

    @property
    def lottery_mask(self) -> np.ndarray:
        return np.array([m == RuleMode.LOTTERY_COARSE for m in self.modes], dtype=bool)

    @property
    def exam_mask(self) -> np.ndarray:
        return np.array([m == RuleMode.EXAM for m in self.modes], dtype=bool)

    @property
    def deterministic_mask(self) -> np.ndarray:
        return np.array([m == RuleMode.DETERMINISTIC for m in self.modes], dtype=bool)


@dataclass
class Economy:
    """
    Economía finita: programas, estudiantes con prioridades intrínsecas y covariables.

    Attributes:
        programs (List[Program]): Programas ordenados por id.
        intrinsic (np.ndarray): (n, C) grupo de prioridad t_{i,c} de cada estudiante.
        known_scores (np.ndarray | None): (n, C) puntajes conocidos de programas DETERMINISTIC.
        tiebreak (TieBreak): STB o MTB para los programas de lotería.
        student_ids (np.ndarray | None): Identificadores externos de los estudiantes.
        covariates (Dict[str, np.ndarray]): Columnas por estudiante (D, x, y, ...).
        zone_groups (np.ndarray | None): (n, C) parte de `intrinsic` debida a la zonificación.
        distances (np.ndarray | None): (n, C) distancia estudiante-programa.
    """
    programs: List[Program]
    intrinsic: np.ndarray
    known_scores: Optional[np.ndarray] = None
    tiebreak: TieBreak = TieBreak.STB
    student_ids: Optional[np.ndarray] = None
    covariates: Dict[str, np.ndarray] = field(default_factory=dict)
    zone_groups: Optional[np.ndarray] = None
    distances: Optional[np.ndarray] = None

    def __post_init__(self):
        self.intrinsic = np.asarray(self.intrinsic, dtype=np.int64)
        if self.student_ids is None:
            self.student_ids = np.arange(self.intrinsic.shape[0])
        self.validate()

    @property
    def n_students(self) -> int:
        return int(self.intrinsic.shape[0])

    @property
    def n_programs(self) -> int:
        return len(self.programs)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([p.capacity for p in self.programs], dtype=np.int64)

    @property
    def rules(self) -> PriorityRules:
        return PriorityRules(
            modes=tuple(p.rule_mode for p in self.programs),
            n_groups=tuple(p.n_groups for p in self.programs),
            tiebreak=self.tiebreak,
        )

    def program_attribute(self, name: str) -> np.ndarray:
        """Vector (C,) de un atributo de programa; error si algún programa no lo tiene."""
        try:
            return np.array([p.attributes[name] for p in self.programs], dtype=float)
        except KeyError:
            raise ValidationError(f"Atributo de programa desconocido: '{name}'.")

    def student_covariate(self, name: str) -> np.ndarray:
        if name not in self.covariates:
            raise ValidationError(f"Covariable de estudiante desconocida: '{name}'.")
        return np.asarray(self.covariates[name])

    def validate(self):
        """
        Comprueba ids densos, capacidades y rangos de grupos.

        Raises:
            ValidationError: Si algún invariante de la economía no se cumple.
        """
        for index, program in enumerate(self.programs):
            if program.id != index:
                raise ValidationError(f"Los ids de programa deben ser densos: se esperaba {index}, llegó {program.id}.")
            if program.capacity < 0:
                raise ValidationError(f"Capacidad negativa en el programa {program.id}.")
            if program.n_groups < 1:
                raise ValidationError(f"n_groups debe ser >= 1 en el programa {program.id}.")
        n, n_cols = self.intrinsic.shape if self.intrinsic.ndim == 2 else (None, None)
        if n is None or n_cols != self.n_programs:
            raise ValidationError(
                f"La matriz de prioridades debe ser (n, {self.n_programs}); llegó {self.intrinsic.shape}."
            )
        n_groups = np.array([p.n_groups for p in self.programs])
        bad = (self.intrinsic < 0) | (self.intrinsic >= n_groups[None, :])
        if bad.any():
            i, c = np.argwhere(bad)[0]
            raise ValidationError(
                f"Grupo de prioridad fuera de rango: estudiante {i}, programa {c}, t={self.intrinsic[i, c]}."
            )
        for name, matrix in (("known_scores", self.known_scores), ("zone_groups", self.zone_groups),
                             ("distances", self.distances)):
            if matrix is not None and np.shape(matrix) != self.intrinsic.shape:
                raise ValidationError(f"'{name}' debe tener forma {self.intrinsic.shape}.")
        if self.known_scores is not None:
            ks = np.asarray(self.known_scores, dtype=float)
            if ((ks < 0) | (ks > 1)).any():
                raise ValidationError("Los puntajes conocidos deben estar en [0, 1].")
        if self.deterministic_without_scores():
            raise ValidationError("Hay programas DETERMINISTIC pero no se dieron puntajes conocidos.")
        for name, column in self.covariates.items():
            if len(column) != n:
                raise ValidationError(f"La covariable '{name}' tiene {len(column)} filas; se esperaban {n}.")

    def deterministic_without_scores(self) -> bool:
        return self.known_scores is None and any(
            p.rule_mode == RuleMode.DETERMINISTIC for p in self.programs
        )


@dataclass(frozen=True)
class Matching:
    """
    Resultado de DA.

    Attributes:
        assignment (np.ndarray): (n,) programa asignado o UNASSIGNED.
        cutoffs (np.ndarray): (C,) corte de cada programa en [0, 1].
    """
    assignment: np.ndarray
    cutoffs: np.ndarray


def validate_rols(rols: Sequence[Sequence[int]], n_students: int, n_programs: int,
                  list_cap: Optional[int] = None) -> List[Rol]:
    """
    Valida y normaliza una lista de ROLs.

    Args:
        rols: Un ROL por estudiante, del programa más preferido al menos preferido.
        n_students (int): Número de estudiantes esperado.
        n_programs (int): Número de programas (C).
        list_cap (int, optional): Longitud máxima permitida del ROL.

    Returns:
        List[Rol]: ROLs como tuplas de enteros.

    Raises:
        ValidationError: Dimensiones inconsistentes, ids inválidos, duplicados o ROL demasiado largo.
    """
    if len(rols) != n_students:
        raise ValidationError(f"Se esperaban {n_students} ROLs; llegaron {len(rols)}.")
    clean: List[Rol] = []
    for i, rol in enumerate(rols):
        rol = tuple(int(c) for c in rol)
        if len(set(rol)) != len(rol):
            raise ValidationError(f"El ROL del estudiante {i} repite programas: {rol}.")
        for c in rol:
            if not 0 <= c < n_programs:
                raise ValidationError(f"El ROL del estudiante {i} contiene un programa inválido: {c}.")
        if list_cap is not None and len(rol) > list_cap:
            raise ValidationError(f"El ROL del estudiante {i} supera el límite de {list_cap} programas.")
        clean.append(rol)
    return clean


def rol_matrix(rols: Sequence[Rol], n_programs: int) -> np.ndarray:
    """Matriz (n, C) con los ROLs rellenos con UNASSIGNED a la derecha."""
    matrix = np.full((len(rols), max(n_programs, 1)), UNASSIGNED, dtype=np.int64)
    for i, rol in enumerate(rols):
        matrix[i, :len(rol)] = rol
    return matrix


def rank_matrix(rols: Sequence[Rol], n_programs: int) -> np.ndarray:
    """Matriz (n, C) con la posición de cada programa en el ROL; C si no está listado."""
    ranks = np.full((len(rols), n_programs), n_programs, dtype=np.int64)
    for i, rol in enumerate(rols):
        for position, c in enumerate(rol):
            ranks[i, c] = position
    return ranks
