# src/experiments/synthetic_economy.py

"""
Economías sintéticas para los experimentos de Monte Carlo: estudiantes
uniformes en el disco unidad, programas equiespaciados en el círculo de
radio 1/2, prioridades gruesas con lotería única y utilidades normales
heterocedásticas.
"""

from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from core.economy import Economy, Program, Rol, RuleMode, TieBreak
from core.errors import ValidationError
from core.gibbs_sampler import MC_TERMS, UtilitySpec, build_design_matrix, spec_from_economy
from core.rng import PURPOSE_ECONOMY, stream

DEFAULT_CAPACITIES = (110, 50, 100, 100, 50, 100, 100, 50, 100, 100, 50, 100)
DEFAULT_STUDENTS = 1000
EXTRA_SEATS = 10
SMALL_CAPACITY = 50
DISADVANTAGED_SHARE = 2 / 3


@dataclass(frozen=True)
class McConfig:
    """
    Parámetros del diseño de Monte Carlo.

    Attributes:
        n_students (int): Estudiantes por economía.
        capacities (Tuple[int, ...]): Asientos por programa; suman n_students + 10.
        beta (Tuple[float, ...]): Coeficientes verdaderos de (calidad, D×A, distancia, Small).
        sigma2 (Tuple[float, float]): Varianza de los programas 1-6 y 7-12.
        n_groups (int): Grupos de prioridad por programa.
        small (Tuple[int, ...]): Indicador Small de cada programa.
        seed (int): Semilla maestra.
    """
    n_students: int = DEFAULT_STUDENTS
    capacities: Tuple[int, ...] = DEFAULT_CAPACITIES
    beta: Tuple[float, ...] = (0.3, 2.0, -1.0, 0.0)
    sigma2: Tuple[float, float] = (1.0, 2.0)
    n_groups: int = 4
    small: Tuple[int, ...] = tuple(int(c == SMALL_CAPACITY) for c in DEFAULT_CAPACITIES)
    seed: int = 20240101

    def __post_init__(self):
        if sum(self.capacities) != self.n_students + EXTRA_SEATS:
            raise ValidationError(
                f"La capacidad total ({sum(self.capacities)}) debe ser n_students + {EXTRA_SEATS}."
            )
        if len(self.small) != len(self.capacities):
            raise ValidationError("'small' debe tener un valor por programa.")
        if len(self.beta) != len(MC_TERMS):
            raise ValidationError(f"beta debe tener {len(MC_TERMS)} coeficientes.")

    @property
    def n_programs(self) -> int:
        return len(self.capacities)

    @classmethod
    def for_students(cls, n_students: int, seed: int = 20240101) -> "McConfig":
        """Escala las capacidades de referencia a `n_students` manteniendo 10 asientos de holgura."""
        scaled = [max(1, int(round(c * n_students / DEFAULT_STUDENTS))) for c in DEFAULT_CAPACITIES]
        largest = int(np.argmax(DEFAULT_CAPACITIES))
        scaled[largest] += n_students + EXTRA_SEATS - sum(scaled)
        if scaled[largest] < 1:
            raise ValidationError(f"No se pueden escalar las capacidades a {n_students} estudiantes.")
        return cls(n_students=n_students, capacities=tuple(scaled), seed=seed)

    def variance_types(self) -> np.ndarray:
        half = self.n_programs // 2
        return np.array([0 if c < half else 1 for c in range(self.n_programs)], dtype=np.int64)


@dataclass(frozen=True)
class SyntheticEconomy:
    """
    Una muestra: economía observable más las preferencias verdaderas.

    Attributes:
        economy (Economy): Programas, prioridades, covariables y distancias.
        utilities (np.ndarray): (k, C) utilidades verdaderas.
        true_rols (List[Rol]): Orden verdadero completo de cada estudiante.
        sample_index (int): Índice de la muestra.
    """
    economy: Economy
    utilities: np.ndarray
    true_rols: List[Rol] = field(default_factory=list)
    sample_index: int = 0

    def with_economy(self, economy: Economy) -> "SyntheticEconomy":
        return replace(self, economy=economy)

    def utility_spec(self, terms=MC_TERMS, normalized_type: int = 0) -> UtilitySpec:
        return spec_from_economy(self.economy, terms, normalized_type)


def truthful_rols(utilities: np.ndarray) -> List[Rol]:
    """ROL completo ordenado por utilidad descendente (empates por id de programa)."""
    order = np.argsort(-np.asarray(utilities), axis=1, kind="stable")
    return [tuple(int(c) for c in row) for row in order]


def generate_economy(cfg: McConfig, sample_index: int, pool: int = 0) -> SyntheticEconomy:
    """
    Genera una economía sintética reproducible.

    Args:
        cfg (McConfig): Diseño.
        sample_index (int): Índice de la muestra; fija el flujo aleatorio.
        pool (int): Familia de muestras (0 = estimación, 1 = simulación de cortes).

    Returns:
        SyntheticEconomy: Economía, utilidades verdaderas y ROLs veraces.
    """
    rng = stream(cfg.seed, PURPOSE_ECONOMY, pool, sample_index)
    k, n_programs = cfg.n_students, cfg.n_programs

    radius = np.sqrt(rng.random(k))
    angle = 2 * np.pi * rng.random(k)
    student_xy = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    program_angle = 2 * np.pi * np.arange(n_programs) / n_programs
    program_xy = 0.5 * np.column_stack([np.cos(program_angle), np.sin(program_angle)])
    distances = np.linalg.norm(student_xy[:, None, :] - program_xy[None, :, :], axis=-1)

    intrinsic = rng.integers(0, cfg.n_groups, size=(k, n_programs))
    disadvantaged = (intrinsic[:, 0] == 0) & (rng.random(k) < DISADVANTAGED_SHARE)

    types = cfg.variance_types()
    programs = [
        Program(
            id=c,
            capacity=cfg.capacities[c],
            school_id=c,
            attributes={
                "quality": float(c + 1),
                "A": float((c + 1) % 2 == 1),
                "small": float(cfg.small[c]),
                "x": float(program_xy[c, 0]),
                "y": float(program_xy[c, 1]),
            },
            rule_mode=RuleMode.LOTTERY_COARSE,
            n_groups=cfg.n_groups,
            variance_type=int(types[c]),
        )
        for c in range(n_programs)
    ]
    economy = Economy(
        programs=programs,
        intrinsic=intrinsic,
        tiebreak=TieBreak.STB,
        covariates={"D": disadvantaged.astype(float), "x": student_xy[:, 0], "y": student_xy[:, 1]},
        zone_groups=np.zeros((k, n_programs), dtype=np.int64),
        distances=distances,
    )

    X = build_design_matrix(economy, MC_TERMS)
    sd = np.sqrt(np.asarray(cfg.sigma2, dtype=float)[types])
    utilities = X @ np.asarray(cfg.beta, dtype=float) + sd[None, :] * rng.standard_normal((k, n_programs))
    return SyntheticEconomy(economy=economy, utilities=utilities, true_rols=truthful_rols(utilities),
                            sample_index=sample_index)
