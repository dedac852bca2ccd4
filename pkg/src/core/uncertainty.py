# src/core/uncertainty.py

"""
Paso 1 de TEPS: simulación de la incertidumbre de prioridades (loterías y
exámenes), distribución de cortes y partición de cada estudiante en clases
de conjuntos factibles.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.economy import UNASSIGNED, Economy, PriorityRules, Rol, TieBreak, rol_matrix, validate_rols
from core.errors import ValidationError
from core.matching import feasible_mask, run_da_arrays
from core.rng import PURPOSE_LOTTERY, PURPOSE_OWN_SCORE, PURPOSE_RESAMPLE, parallel_map, stream

logger = logging.getLogger(__name__)


class PartitionMode(str, Enum):
    JOINT = "JOINT"
    INDEPENDENT = "INDEPENDENT"


class FeasibilityStatus(str, Enum):
    RANKED = "RANKED"
    EVER_FEASIBLE_UNRANKED = "EVER_FEASIBLE_UNRANKED"
    NEVER_FEASIBLE_UNRANKED = "NEVER_FEASIBLE_UNRANKED"


@dataclass(frozen=True)
class LotteryDraw:
    """
    Una realización de la incertidumbre de puntajes.

    Attributes:
        lottery (np.ndarray): (n,) con STB o (n, C) con MTB, valores en [0, 1].
        exam (np.ndarray | None): (n,) resultado del examen, compartido por los programas EXAM.
    """
    lottery: np.ndarray
    exam: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FeasibleClass:
    """Clase de equivalencia W: conjunto factible B_W (máscara de bits), α_W y frecuencia."""
    feasible: int
    assigned: int
    count: int

    def programs(self) -> List[int]:
        return bitmask_programs(self.feasible)


@dataclass(frozen=True)
class StudentPartition:
    """
    Partición de los sorteos de un estudiante por conjunto factible.

    Las clases están ordenadas por frecuencia descendente y, a igualdad,
    por máscara ascendente.
    """
    classes: Tuple[FeasibleClass, ...]
    n_draws: int

    def probability(self, cls: FeasibleClass) -> Fraction:
        return Fraction(cls.count, self.n_draws)

    def probabilities(self) -> List[float]:
        return [cls.count / self.n_draws for cls in self.classes]


def draw_lottery(rules: PriorityRules, n_students: int, rng: np.random.Generator) -> LotteryDraw:
    """Sorteo uniforme: un número por estudiante (STB) o uno por estudiante-programa (MTB)."""
    n_programs = len(rules.modes)
    if rules.tiebreak == TieBreak.STB:
        lottery = rng.random(n_students)
    else:
        lottery = rng.random((n_students, n_programs))
    exam = rng.random(n_students) if rules.exam_mask.any() else None
    return LotteryDraw(lottery=lottery, exam=exam)


def realize_scores(rules: PriorityRules, intrinsic: np.ndarray, draw: LotteryDraw,
                   known_scores: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Construye los puntajes ex post s_{i,c}.

    Programas de lotería: s = (t + λ) / n_c. Programas EXAM: s = (t + e) / n_c
    con el resultado del examen e. Programas DETERMINISTIC: puntaje conocido.

    Args:
        rules (PriorityRules): Modo por programa y regla de desempate.
        intrinsic (np.ndarray): (n, C) grupos t_{i,c}.
        draw (LotteryDraw): Sorteo de loterías (y examen).
        known_scores (np.ndarray, optional): (n, C) puntajes de programas DETERMINISTIC.

    Returns:
        np.ndarray: (n, C) puntajes en [0, 1].

    Raises:
        ValidationError: Si algún grupo está fuera de rango o faltan puntajes conocidos.
    """
    intrinsic = np.asarray(intrinsic)
    n_groups = np.asarray(rules.n_groups, dtype=float)
    if intrinsic.ndim != 2 or intrinsic.shape[1] != n_groups.shape[0]:
        raise ValidationError(f"Prioridades con forma {intrinsic.shape} para {n_groups.shape[0]} programas.")
    if ((intrinsic < 0) | (intrinsic >= n_groups[None, :])).any():
        i, c = np.argwhere((intrinsic < 0) | (intrinsic >= n_groups[None, :]))[0]
        raise ValidationError(f"Grupo fuera de rango: estudiante {i}, programa {c}, t={intrinsic[i, c]}.")

    lottery = np.asarray(draw.lottery, dtype=float)
    if lottery.ndim == 1:
        lottery = np.broadcast_to(lottery[:, None], intrinsic.shape)
    scores = (intrinsic + lottery) / n_groups[None, :]

    exam_mask = rules.exam_mask
    if exam_mask.any():
        if draw.exam is None:
            raise ValidationError("El sorteo no trae resultados de examen para los programas EXAM.")
        exam = np.asarray(draw.exam, dtype=float)[:, None]
        scores[:, exam_mask] = (intrinsic[:, exam_mask] + exam) / n_groups[None, exam_mask]

    deterministic = rules.deterministic_mask
    if deterministic.any():
        if known_scores is None:
            raise ValidationError("Faltan puntajes conocidos para los programas DETERMINISTIC.")
        scores[:, deterministic] = np.asarray(known_scores, dtype=float)[:, deterministic]
    return np.clip(scores, 0.0, 1.0)


def simulate_cutoff_distribution(economy: Economy, rols: Sequence[Sequence[int]], n_draws: int,
                                 seed: int, workers: int = 1) -> np.ndarray:
    """
    Distribución empírica de cortes: `n_draws` sorteos independientes pasados por DA.

    Args:
        economy (Economy): Programas, prioridades y regla de desempate.
        rols: ROL de cada estudiante.
        n_draws (int): Número de sorteos (>= 1).
        seed (int): Semilla maestra; el sorteo d usa el flujo (seed, LOTTERY, d).
        workers (int): Procesos en paralelo; no altera el resultado.

    Returns:
        np.ndarray: (n_draws, C) vector de cortes por sorteo.
    """
    if n_draws < 1:
        raise ValidationError("n_draws debe ser >= 1.")
    task = _DrawTask.build(economy, rols, seed)
    blocks = parallel_map(task.cutoffs_block, _blocks(n_draws, workers), workers)
    return np.vstack(blocks)


def build_feasible_partition(economy: Economy, rols: Sequence[Sequence[int]], n_draws: int, seed: int,
                             mode: PartitionMode = PartitionMode.JOINT, n_own_draws: Optional[int] = None,
                             workers: int = 1) -> List[StudentPartition]:
    """
    Partición de la incertidumbre de cada estudiante en clases de conjuntos factibles.

    JOINT: en cada sorteo el conjunto factible usa los cortes y el puntaje propio
    del mismo sorteo, con la asignación realizada incluida. INDEPENDENT: primero
    se simulan `n_draws` vectores de cortes y luego `n_own_draws` puntajes propios
    nuevos, cada uno comparado con un vector de cortes remuestreado.

    Returns:
        List[StudentPartition]: Una partición por estudiante.
    """
    if n_draws < 1:
        raise ValidationError("n_draws debe ser >= 1.")
    mode = PartitionMode(mode)
    task = _DrawTask.build(economy, rols, seed)
    if mode == PartitionMode.JOINT:
        blocks = parallel_map(task.bitmask_block, _blocks(n_draws, workers), workers)
        masks = np.vstack(blocks)
    else:
        cutoff_draws = simulate_cutoff_distribution(economy, rols, n_draws, seed, workers)
        masks = own_score_bitmasks(economy, cutoff_draws, n_own_draws or n_draws, seed)
    partitions = aggregate_partitions(masks, task.rols)
    logger.info("Particiones construidas (%s): %d estudiantes, %d sorteos.", mode.value,
                len(partitions), masks.shape[0])
    return partitions


def own_score_bitmasks(economy: Economy, cutoff_draws: np.ndarray, n_own_draws: int, seed: int) -> np.ndarray:
    """
    Protocolo de dos etapas: puntajes propios nuevos frente a cortes remuestreados.

    Returns:
        np.ndarray: (n_own_draws, n) máscaras de conjuntos factibles.
    """
    rules = economy.rules
    capacities = economy.capacities
    n = economy.n_students
    picker = stream(seed, PURPOSE_RESAMPLE)
    picks = picker.integers(0, cutoff_draws.shape[0], size=n_own_draws)
    masks = np.empty((n_own_draws, n), dtype=object if economy.n_programs > 62 else np.int64)
    for draw_index in range(n_own_draws):
        draw = draw_lottery(rules, n, stream(seed, PURPOSE_OWN_SCORE, draw_index))
        scores = realize_scores(rules, economy.intrinsic, draw, economy.known_scores)
        feasible = (scores >= cutoff_draws[picks[draw_index]][None, :]) & (capacities > 0)[None, :]
        masks[draw_index] = to_bitmasks(feasible)
    return masks


def aggregate_partitions(masks: np.ndarray, rols: Sequence[Rol]) -> List[StudentPartition]:
    """Agrupa las máscaras (sorteos × estudiantes) por estudiante y conjunto factible."""
    n_draws = masks.shape[0]
    partitions = []
    for i, rol in enumerate(rols):
        counts: Dict[int, int] = {}
        for mask in masks[:, i].tolist():
            counts[mask] = counts.get(mask, 0) + 1
        classes = sorted(
            (FeasibleClass(feasible=int(m), assigned=best_in_rol(int(m), rol), count=k) for m, k in counts.items()),
            key=lambda cls: (-cls.count, cls.feasible),
        )
        partitions.append(StudentPartition(classes=tuple(classes), n_draws=n_draws))
    return partitions


def best_in_rol(feasible: int, rol: Sequence[int]) -> int:
    """α_W: primer programa del ROL contenido en el conjunto factible, o UNASSIGNED."""
    for c in rol:
        if feasible >> c & 1:
            return c
    return UNASSIGNED


def to_bitmasks(mask: np.ndarray) -> np.ndarray:
    """Convierte una matriz booleana (n, C) en una máscara entera por fila."""
    n_programs = mask.shape[1]
    if n_programs <= 62:
        weights = np.left_shift(np.int64(1), np.arange(n_programs, dtype=np.int64))
        return mask.astype(np.int64) @ weights
    return np.array([sum(1 << c for c in np.flatnonzero(row)) for row in mask], dtype=object)


def bitmask_programs(bitmask: int) -> List[int]:
    programs, c = [], 0
    while bitmask:
        if bitmask & 1:
            programs.append(c)
        bitmask >>= 1
        c += 1
    return programs


def programs_bitmask(programs: Sequence[int]) -> int:
    mask = 0
    for c in programs:
        mask |= 1 << int(c)
    return mask


def assignment_probabilities(partition: StudentPartition, n_programs: int) -> np.ndarray:
    """(C,) probabilidad de que el estudiante sea asignado a cada programa."""
    probs = np.zeros(n_programs)
    for cls in partition.classes:
        if cls.assigned != UNASSIGNED:
            probs[cls.assigned] += cls.count / partition.n_draws
    return probs


def admission_probabilities(partition: StudentPartition, n_programs: int) -> np.ndarray:
    """(C,) probabilidad de que cada programa esté en el conjunto factible."""
    probs = np.zeros(n_programs)
    for cls in partition.classes:
        for c in cls.programs():
            if c < n_programs:
                probs[c] += cls.count / partition.n_draws
    return probs


def feasibility_status(partition: StudentPartition, rol: Sequence[int], n_programs: int) -> List[FeasibilityStatus]:
    """Clasifica cada programa en listado, no listado alguna vez factible o nunca factible."""
    ever = 0
    for cls in partition.classes:
        ever |= cls.feasible
    ranked = set(rol)
    status = []
    for c in range(n_programs):
        if c in ranked:
            status.append(FeasibilityStatus.RANKED)
        elif ever >> c & 1:
            status.append(FeasibilityStatus.EVER_FEASIBLE_UNRANKED)
        else:
            status.append(FeasibilityStatus.NEVER_FEASIBLE_UNRANKED)
    return status


def _blocks(n_draws: int, workers: int) -> List[Tuple[int, int]]:
    n_blocks = max(1, min(n_draws, workers * 4))
    edges = np.linspace(0, n_draws, n_blocks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


@dataclass(frozen=True)
class _DrawTask:
    """Datos inmutables que cada proceso necesita para simular un bloque de sorteos."""
    economy: Economy
    rols: Tuple[Rol, ...]
    choices: np.ndarray
    lengths: np.ndarray
    seed: int

    @classmethod
    def build(cls, economy: Economy, rols: Sequence[Sequence[int]], seed: int) -> "_DrawTask":
        clean = validate_rols(rols, economy.n_students, economy.n_programs)
        return cls(
            economy=economy,
            rols=tuple(clean),
            choices=rol_matrix(clean, economy.n_programs),
            lengths=np.array([len(r) for r in clean], dtype=np.int64),
            seed=int(seed),
        )

    def _run(self, draw_index: int):
        economy = self.economy
        rules = economy.rules
        draw = draw_lottery(rules, economy.n_students, stream(self.seed, PURPOSE_LOTTERY, draw_index))
        scores = realize_scores(rules, economy.intrinsic, draw, economy.known_scores)
        return scores, run_da_arrays(self.choices, self.lengths, scores, economy.capacities)

    def cutoffs_block(self, bounds: Tuple[int, int]) -> np.ndarray:
        start, stop = bounds
        return np.vstack([self._run(d)[1].cutoffs for d in range(start, stop)])

    def bitmask_block(self, bounds: Tuple[int, int]) -> np.ndarray:
        start, stop = bounds
        rows = []
        for d in range(start, stop):
            scores, matching = self._run(d)
            feasible = feasible_mask(scores, matching.cutoffs, matching.assignment, self.economy.capacities)
            rows.append(to_bitmasks(feasible))
        return np.vstack(rows)
