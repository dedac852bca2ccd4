# src/experiments/behavior.py

"""
Procesos generadores de ROLs: veracidad (TT), errores irrelevantes para el
pago (MIS_IRR) y errores relevantes (MIS_REL).
"""

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from core.economy import Matching, Rol, rol_matrix
from core.matching import run_da_arrays, stable_student_mask
from core.rng import PURPOSE_BEHAVIOR, stream
from core.uncertainty import draw_lottery, realize_scores
from experiments.synthetic_economy import SyntheticEconomy

logger = logging.getLogger(__name__)

NEVER_SKIPPER_RATE = {1: 1 - 0.956, 0: 1 - 0.701}
ADMISSION_THRESHOLD = 0.10
DEFAULT_CHECK_DRAWS = 200
DEFAULT_ODDS_LOTTERY_DRAWS = 20
ODDS_CHUNK = 256


class Dgp(str, Enum):
    TT = "TT"
    MIS_IRR = "MIS_IRR"
    MIS_REL = "MIS_REL"


class ThresholdBasis(str, Enum):
    """Probabilidad que MIS_REL compara con el umbral de omisión."""
    ASSIGNMENT = "ASSIGNMENT"
    FEASIBILITY = "FEASIBILITY"


@dataclass(frozen=True)
class BehaviorStats:
    """Resumen de una muestra; las proporciones están en [0, 1]."""
    mean_length: float
    wtt_share: float
    stable_share: float
    mistake_share: float
    skipper_share: float
    fallback_count: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class StudentOdds:
    """
    Probabilidades estimadas con los cortes simulados bajo veracidad.

    Attributes:
        assignment (np.ndarray): (k, C) probabilidad de ser asignado a cada programa con el ROL veraz.
        admission (np.ndarray): (k, C) probabilidad de que cada programa sea factible.
    """
    assignment: np.ndarray
    admission: np.ndarray

    def skip_basis(self, basis: ThresholdBasis) -> np.ndarray:
        return self.assignment if ThresholdBasis(basis) == ThresholdBasis.ASSIGNMENT else self.admission


def estimate_odds(synthetic: SyntheticEconomy, tt_cutoff_draws: np.ndarray, seed: int,
                  lottery_draws: int = DEFAULT_ODDS_LOTTERY_DRAWS, chunk: int = ODDS_CHUNK) -> StudentOdds:
    """Combina cada vector de cortes simulado con `lottery_draws` sorteos propios del estudiante."""
    economy = synthetic.economy
    rules = economy.rules
    k, n_programs = economy.n_students, economy.n_programs
    cutoffs = np.asarray(tt_cutoff_draws, dtype=float).reshape(-1, n_programs)
    open_programs = (economy.capacities > 0)[None, None, :]
    ranks = np.argsort(np.asarray([list(r) for r in synthetic.true_rols]), axis=1)
    offsets = (np.arange(k) * n_programs)[None, :]
    assigned_counts = np.zeros(k * n_programs)
    admitted_counts = np.zeros((k, n_programs))
    for l in range(lottery_draws):
        draw = draw_lottery(rules, k, stream(seed, PURPOSE_BEHAVIOR, 0, l))
        scores = realize_scores(rules, economy.intrinsic, draw, economy.known_scores)
        for start in range(0, cutoffs.shape[0], chunk):
            feasible = (scores[None, :, :] >= cutoffs[start:start + chunk, None, :]) & open_programs
            admitted_counts += feasible.sum(axis=0)
            best = np.where(feasible, ranks[None, :, :], n_programs).argmin(axis=2)
            hit = np.take_along_axis(feasible, best[:, :, None], axis=2)[:, :, 0]
            assigned_counts += np.bincount((offsets + best)[hit], minlength=k * n_programs)
    n_pairs = max(cutoffs.shape[0] * lottery_draws, 1)
    return StudentOdds(assignment=assigned_counts.reshape(k, n_programs) / n_pairs,
                       admission=admitted_counts / n_pairs)


def submitted_rols(synthetic: SyntheticEconomy, dgp: Dgp, odds: StudentOdds, rng: np.random.Generator,
                   threshold_basis: ThresholdBasis = ThresholdBasis.ASSIGNMENT,
                   ) -> Tuple[List[Rol], np.ndarray, np.ndarray]:
    """
    Aplica la regla de omisión de cada DGP.

    Los omisores de MIS_IRR quitan los programas a los que nunca serían asignados;
    los de MIS_REL quitan además aquellos cuya probabilidad (de asignación por
    defecto) no alcanza ADMISSION_THRESHOLD. En ambos, un favorito que nunca es
    factible se agrega al final de la lista.

    Returns:
        Tuple[List[Rol], np.ndarray, np.ndarray]: ROLs enviados, indicador de potencial
        omisor e indicador de ROL vacío reemplazado por un único programa.
    """
    dgp = Dgp(dgp)
    k = synthetic.economy.n_students
    disadvantaged = synthetic.economy.student_covariate("D").astype(int)
    never_rate = np.where(disadvantaged == 1, NEVER_SKIPPER_RATE[1], NEVER_SKIPPER_RATE[0])
    skipper = rng.random(k) >= never_rate
    fallback = np.zeros(k, dtype=bool)
    if dgp == Dgp.TT:
        return list(synthetic.true_rols), np.zeros(k, dtype=bool), fallback

    relevance = odds.skip_basis(threshold_basis)
    rols: List[Rol] = []
    for i, truth in enumerate(synthetic.true_rols):
        if not skipper[i]:
            rols.append(tuple(truth))
            continue
        keep = odds.assignment[i] > 0
        if dgp == Dgp.MIS_REL:
            keep &= relevance[i] >= ADMISSION_THRESHOLD
        rol = [c for c in truth if keep[c]]
        favorite = truth[0]
        if favorite not in rol and odds.admission[i, favorite] == 0:
            rol.append(favorite)
        if not rol:
            rol = [int(np.argmax(odds.assignment[i]))]
            fallback[i] = True
        rols.append(tuple(rol))
    return rols, skipper, fallback


def apply_behavior(synthetic: SyntheticEconomy, dgp: Dgp, tt_cutoff_draws: np.ndarray, behavior_seed: int,
                   check_draws: int = DEFAULT_CHECK_DRAWS, odds: Optional[StudentOdds] = None,
                   lottery_draws: int = DEFAULT_ODDS_LOTTERY_DRAWS,
                   threshold_basis: ThresholdBasis = ThresholdBasis.ASSIGNMENT) -> Tuple[List[Rol], BehaviorStats]:
    """
    Genera los ROLs enviados bajo `dgp` y sus estadísticas frente a las preferencias verdaderas.

    Args:
        synthetic (SyntheticEconomy): Muestra con preferencias verdaderas.
        dgp (Dgp): TT, MIS_IRR o MIS_REL.
        tt_cutoff_draws (np.ndarray): (B, C) cortes simulados con todos los estudiantes veraces.
        behavior_seed (int): Semilla de los sorteos propios, omisores y verificación.
        check_draws (int): Ejecuciones de DA para medir la proporción estable.
        odds (StudentOdds, optional): Probabilidades ya estimadas; se comparten entre DGPs de una muestra.
        lottery_draws (int): Sorteos propios por vector de cortes si hay que estimar `odds`.
        threshold_basis (ThresholdBasis): Probabilidad comparada con el umbral de MIS_REL.

    Returns:
        Tuple[List[Rol], BehaviorStats]: ROLs enviados y resumen.
    """
    dgp = Dgp(dgp)
    if odds is None:
        odds = estimate_odds(synthetic, tt_cutoff_draws, behavior_seed, lottery_draws)
    rols, skipper, fallback = submitted_rols(synthetic, dgp, odds, stream(behavior_seed, PURPOSE_BEHAVIOR, 1),
                                             threshold_basis)
    if fallback.any():
        logger.warning("[ADVERTENCIA] %d estudiantes omitieron todos los programas; se conserva uno.",
                       int(fallback.sum()))
    stats = BehaviorStats(
        mean_length=float(np.mean([len(r) for r in rols])),
        wtt_share=float(np.mean([tuple(r) == tuple(t[:len(r)]) for r, t in zip(rols, synthetic.true_rols)])),
        stable_share=stable_share(synthetic, rols, behavior_seed, check_draws),
        mistake_share=float(np.mean([tuple(r) != tuple(t) for r, t in zip(rols, synthetic.true_rols)])),
        skipper_share=float(skipper.mean()),
        fallback_count=int(fallback.sum()),
    )
    return rols, stats


def stable_share(synthetic: SyntheticEconomy, rols: List[Rol], seed: int, n_draws: int) -> float:
    """Proporción media de estudiantes asignados a su programa favorito entre los factibles."""
    economy = synthetic.economy
    rules = economy.rules
    choices = rol_matrix(rols, economy.n_programs)
    lengths = np.array([len(r) for r in rols], dtype=np.int64)
    shares = []
    for d in range(n_draws):
        draw = draw_lottery(rules, economy.n_students, stream(seed, PURPOSE_BEHAVIOR, 2, d))
        scores = realize_scores(rules, economy.intrinsic, draw, economy.known_scores)
        matching: Matching = run_da_arrays(choices, lengths, scores, economy.capacities)
        mask = stable_student_mask(matching, synthetic.true_rols, scores, economy.capacities)
        shares.append(mask.mean())
    return float(np.mean(shares))
