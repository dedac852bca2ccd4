# src/core/matching.py

"""
Aceptación diferida (DA) con propuestas de estudiantes, extracción de cortes
y verificación de estabilidad ex post.
"""

import itertools
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.economy import UNASSIGNED, Matching, Program, Rol, rank_matrix, rol_matrix, validate_rols
from core.errors import ValidationError


def run_da(rols: Sequence[Sequence[int]], scores: np.ndarray, programs: Sequence[Program]) -> Matching:
    """
    Ejecuta DA con propuestas de estudiantes sobre puntajes realizados.

    Los empates exactos de puntaje dentro de un programa se resuelven a favor
    del índice de estudiante más bajo.

    Args:
        rols: ROL enviado por cada estudiante.
        scores (np.ndarray): (n, C) puntajes ex post en [0, 1].
        programs: Programas con su capacidad.

    Returns:
        Matching: Emparejamiento estable óptimo para los estudiantes y sus cortes.

    Raises:
        ValidationError: Dimensiones inconsistentes o programa inválido en algún ROL.
    """
    scores = np.asarray(scores, dtype=float)
    n_programs = len(programs)
    if scores.ndim != 2 or scores.shape[1] != n_programs:
        raise ValidationError(f"La matriz de puntajes debe ser (n, {n_programs}); llegó {scores.shape}.")
    clean = validate_rols(rols, scores.shape[0], n_programs)
    capacities = np.array([p.capacity for p in programs], dtype=np.int64)
    lengths = np.array([len(r) for r in clean], dtype=np.int64)
    return run_da_arrays(rol_matrix(clean, n_programs), lengths, scores, capacities)


def run_da_arrays(choices: np.ndarray, lengths: np.ndarray, scores: np.ndarray,
                  capacities: np.ndarray) -> Matching:
    """
    Núcleo vectorizado de DA sobre entradas ya validadas.

    En cada ronda todos los estudiantes libres proponen a su siguiente opción
    y cada programa retiene a los mejores `capacity` entre retenidos y nuevos.
    """
    n = choices.shape[0]
    pointer = np.zeros(n, dtype=np.int64)
    held = np.full(n, UNASSIGNED, dtype=np.int64)
    free = np.flatnonzero(lengths > 0)
    while free.size:
        held[free] = choices[free, pointer[free]]
        pointer[free] += 1
        candidates = np.flatnonzero(held >= 0)
        targets = held[candidates]
        order = np.lexsort((candidates, -scores[candidates, targets], targets))
        candidates, targets = candidates[order], targets[order]
        within = np.arange(targets.size) - np.searchsorted(targets, targets, side="left")
        rejected = candidates[within >= capacities[targets]]
        held[rejected] = UNASSIGNED
        free = rejected[pointer[rejected] < lengths[rejected]]
    return Matching(assignment=held, cutoffs=compute_cutoffs(held, scores, capacities))


def compute_cutoffs(assignment: np.ndarray, scores: np.ndarray, capacities: np.ndarray) -> np.ndarray:
    """
    Corte de cada programa: menor puntaje admitido si está lleno, 0 si sobran asientos.

    Los programas sin asientos reciben corte 1 y nunca son factibles.
    """
    n_programs = capacities.shape[0]
    cutoffs = np.zeros(n_programs, dtype=float)
    admitted = assignment >= 0
    targets = assignment[admitted]
    counts = np.bincount(targets, minlength=n_programs)
    admitted_scores = scores[np.flatnonzero(admitted), targets]
    minimum = np.full(n_programs, np.inf)
    np.minimum.at(minimum, targets, admitted_scores)
    full = (counts >= capacities) & (capacities > 0)
    cutoffs[full] = minimum[full]
    cutoffs[capacities == 0] = 1.0
    return cutoffs


def feasible_mask(scores: np.ndarray, cutoffs: np.ndarray, assignment: np.ndarray,
                  capacities: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Factibilidad ex post (n, C): s_{i,c} >= p_c, con el programa asignado siempre factible.
    """
    mask = scores >= cutoffs[None, :]
    if capacities is not None:
        mask &= (capacities > 0)[None, :]
    assigned = np.flatnonzero(assignment >= 0)
    mask[assigned, assignment[assigned]] = True
    return mask


def check_stability(matching: Matching, true_rols: Sequence[Sequence[int]], scores: np.ndarray,
                    capacities: Optional[np.ndarray] = None) -> List[Tuple[int, int]]:
    """
    Pares bloqueantes ex post respecto de las preferencias verdaderas.

    Un par (i, c) bloquea si c es factible para i a los cortes realizados y
    i prefiere c a su asignación según `true_rols`.

    Args:
        matching (Matching): Resultado de DA sobre los mismos programas y puntajes.
        true_rols: Orden verdadero de cada estudiante (programas aceptables).
        scores (np.ndarray): (n, C) puntajes realizados.
        capacities (np.ndarray, optional): Para excluir programas sin asientos.

    Returns:
        List[Tuple[int, int]]: Pares (estudiante, programa) ordenados; vacía si todos están bien asignados.

    Raises:
        ValidationError: Si las dimensiones no coinciden.
    """
    scores = np.asarray(scores, dtype=float)
    n, n_programs = _check_dimensions(matching, scores)
    clean = validate_rols(true_rols, n, n_programs)
    blocking = _blocking_matrix(matching, clean, scores, capacities)
    return [(int(i), int(c)) for i, c in np.argwhere(blocking)]


def stable_student_mask(matching: Matching, true_rols: Sequence[Sequence[int]], scores: np.ndarray,
                        capacities: Optional[np.ndarray] = None) -> np.ndarray:
    """(n,) True si el estudiante recibe su programa favorito entre los factibles."""
    scores = np.asarray(scores, dtype=float)
    n, n_programs = _check_dimensions(matching, scores)
    clean = validate_rols(true_rols, n, n_programs)
    return ~_blocking_matrix(matching, clean, scores, capacities).any(axis=1)


def _check_dimensions(matching: Matching, scores: np.ndarray) -> Tuple[int, int]:
    if scores.ndim != 2:
        raise ValidationError("La matriz de puntajes debe ser bidimensional.")
    n, n_programs = scores.shape
    if matching.assignment.shape[0] != n or matching.cutoffs.shape[0] != n_programs:
        raise ValidationError(
            f"El emparejamiento ({matching.assignment.shape[0]} estudiantes, {matching.cutoffs.shape[0]} programas) "
            f"no coincide con los puntajes {scores.shape}."
        )
    return n, n_programs


def _blocking_matrix(matching: Matching, rols: Sequence[Rol], scores: np.ndarray,
                     capacities: Optional[np.ndarray]) -> np.ndarray:
    n_programs = scores.shape[1]
    ranks = rank_matrix(rols, n_programs)
    assignment = matching.assignment
    own_rank = np.full(assignment.shape[0], n_programs, dtype=np.int64)
    assigned = np.flatnonzero(assignment >= 0)
    own_rank[assigned] = ranks[assigned, assignment[assigned]]
    feasible = feasible_mask(scores, matching.cutoffs, assignment, capacities)
    return feasible & (ranks < own_rank[:, None])


def brute_force_student_optimal(rols: Sequence[Sequence[int]], scores: np.ndarray,
                                capacities: Sequence[int]) -> np.ndarray:
    """
    Oráculo exhaustivo para instancias pequeñas: enumera todos los emparejamientos
    estables (sin pares bloqueantes en el sentido clásico) y devuelve el óptimo
    para los estudiantes.
    """
    scores = np.asarray(scores, dtype=float)
    capacities = np.asarray(capacities, dtype=np.int64)
    n, n_programs = scores.shape
    clean = validate_rols(rols, n, n_programs)
    ranks = rank_matrix(clean, n_programs)
    options = [tuple(rol) + (UNASSIGNED,) for rol in clean]

    def priority(i: int, c: int) -> Tuple[float, int]:
        return scores[i, c], -i

    stable = []
    for assignment in itertools.product(*options):
        counts = np.bincount([c for c in assignment if c >= 0], minlength=n_programs)
        if (counts > capacities).any():
            continue
        blocked = False
        for i, rol in enumerate(clean):
            own = assignment[i]
            own_rank = ranks[i, own] if own >= 0 else n_programs
            for c in rol:
                if ranks[i, c] >= own_rank:
                    break
                holders = [j for j, a in enumerate(assignment) if a == c]
                if counts[c] < capacities[c] or any(priority(i, c) > priority(j, c) for j in holders):
                    blocked = True
                    break
            if blocked:
                break
        if not blocked:
            stable.append(assignment)
    if not stable:
        raise ValidationError("No se encontró ningún emparejamiento estable.")

    def rank_of(i: int, c: int) -> int:
        return ranks[i, c] if c >= 0 else n_programs

    best = min(stable, key=lambda a: tuple(rank_of(i, c) for i, c in enumerate(a)))
    for other in stable:
        if any(rank_of(i, other[i]) < rank_of(i, best[i]) for i in range(n)):
            raise ValidationError("El conjunto de emparejamientos estables no tiene óptimo para los estudiantes.")
    return np.array(best, dtype=np.int64)
