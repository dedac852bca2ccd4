# src/experiments/counterfactual.py

"""
Evaluación contrafactual de políticas: se extraen preferencias del posterior
(o se fijan), los estudiantes envían ROLs veraces y se corre DA sobre muchas
loterías en la economía transformada.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.economy import Economy, rol_matrix
from core.errors import ValidationError
from core.gibbs_sampler import PosteriorDraws, UtilitySpec
from core.matching import run_da_arrays
from core.rng import PURPOSE_LOTTERY, PURPOSE_PREFERENCES, parallel_map, stream
from core.uncertainty import draw_lottery, realize_scores
from experiments.policies import Policy, apply_policy
from experiments.synthetic_economy import truthful_rols

logger = logging.getLogger(__name__)

PEER_METRIC = "peer"


@dataclass
class SegregationReport:
    """
    Medias por grupo de las características del programa asignado.

    Attributes:
        policy (str): Política evaluada.
        metrics (List[str]): Atributos de programa y, si se pidió, la proporción de pares del grupo focal.
        groups (List[float]): Valores del atributo de agrupación.
        runs (np.ndarray): (n_runs, n_metrics, n_groups) medias por corrida de DA.
    """
    policy: str
    metrics: List[str]
    groups: List[float]
    runs: np.ndarray

    @property
    def n_runs(self) -> int:
        return int(self.runs.shape[0])

    def gaps(self) -> np.ndarray:
        """(n_runs, n_metrics) diferencia entre el último y el primer grupo."""
        return self.runs[:, :, -1] - self.runs[:, :, 0]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        means, sds = np.nanmean(self.runs, axis=0), np.nanstd(self.runs, axis=0)
        gaps = self.gaps()
        for m, metric in enumerate(self.metrics):
            for g, group in enumerate(self.groups):
                rows.append({"policy": self.policy, "metric": metric, "group": group,
                             "mean": means[m, g], "sd": sds[m, g]})
            rows.append({"policy": self.policy, "metric": metric, "group": "gap",
                         "mean": float(np.nanmean(gaps[:, m])), "sd": float(np.nanstd(gaps[:, m]))})
        return pd.DataFrame(rows)


@dataclass
class PolicyEffect:
    baseline: SegregationReport
    counterfactual: SegregationReport

    def effect(self) -> np.ndarray:
        """(n_runs, n_metrics) brecha con la política menos brecha sin ella, con números aleatorios comunes."""
        return self.counterfactual.gaps() - self.baseline.gaps()

    def to_frame(self) -> pd.DataFrame:
        effect = self.effect()
        return pd.DataFrame({
            "metric": self.baseline.metrics,
            "gap_none": np.nanmean(self.baseline.gaps(), axis=0),
            "gap_policy": np.nanmean(self.counterfactual.gaps(), axis=0),
            "effect": np.nanmean(effect, axis=0),
            "effect_sd": np.nanstd(effect, axis=0),
        })


def preference_draws(spec: UtilitySpec, posterior: Optional[PosteriorDraws] = None,
                     utilities: Optional[np.ndarray] = None, n_pref_draws: int = 1, seed: int = 0) -> List[np.ndarray]:
    """
    Utilidades para cada extracción de preferencias.

    Con `utilities` se usan utilidades fijas; con `posterior` se toman
    `n_pref_draws` extracciones equiespaciadas de β y σ² y se añade ruido normal.

    Raises:
        ValidationError: Si no se da ni posterior ni utilidades.
    """
    if utilities is not None:
        return [np.asarray(utilities, dtype=float)]
    if posterior is None:
        raise ValidationError("Se necesita un posterior o utilidades fijas.")
    betas, sigmas = posterior.pooled_beta(), posterior.pooled_sigma2()
    picks = np.linspace(0, betas.shape[0] - 1, n_pref_draws).round().astype(int)
    type_index = {t: j for j, t in enumerate(posterior.types)}
    columns = np.array([type_index[int(t)] for t in spec.variance_type])
    draws = []
    for p, pick in enumerate(picks):
        rng = stream(seed, PURPOSE_PREFERENCES, p)
        sd = np.sqrt(sigmas[pick][columns])
        draws.append(spec.X @ betas[pick] + sd[None, :] * rng.standard_normal((spec.n_students, spec.n_programs)))
    return draws


@dataclass(frozen=True)
class _Grid:
    economy: Economy
    metrics: Sequence[str]
    group: np.ndarray
    groups: Sequence[float]
    n_lottery_draws: int
    seed: int

    def run(self, utilities: np.ndarray) -> np.ndarray:
        economy = self.economy
        rules = economy.rules
        rols = truthful_rols(utilities)
        choices = rol_matrix(rols, economy.n_programs)
        lengths = np.array([len(r) for r in rols], dtype=np.int64)
        out = np.full((self.n_lottery_draws, len(self.metrics), len(self.groups)), np.nan)
        for l in range(self.n_lottery_draws):
            draw = draw_lottery(rules, economy.n_students, stream(self.seed, PURPOSE_LOTTERY, l))
            scores = realize_scores(rules, economy.intrinsic, draw, economy.known_scores)
            assignment = run_da_arrays(choices, lengths, scores, economy.capacities).assignment
            out[l] = segregation_metrics(economy, assignment, self.metrics, self.group, self.groups)
        return out


def segregation_metrics(economy: Economy, assignment: np.ndarray, metrics: Sequence[str], group: np.ndarray,
                        groups: Sequence[float]) -> np.ndarray:
    """(n_metrics, n_groups) media de cada métrica entre los estudiantes asignados de cada grupo."""
    assigned = assignment >= 0
    values = np.full((len(metrics), len(groups)), np.nan)
    focal = float(groups[-1])
    for m, metric in enumerate(metrics):
        if metric == PEER_METRIC:
            seats = np.bincount(assignment[assigned], minlength=economy.n_programs)
            focal_seats = np.bincount(assignment[assigned & (group == focal)], minlength=economy.n_programs)
            per_program = np.divide(focal_seats, seats, out=np.zeros(economy.n_programs), where=seats > 0)
        else:
            per_program = economy.program_attribute(metric)
        for g, value in enumerate(groups):
            members = assigned & (group == value)
            if members.any():
                values[m, g] = per_program[assignment[members]].mean()
    return values


def evaluate_counterfactual(economy: Economy, policy: Policy, group_by: str, attributes: Sequence[str],
                            n_lottery_draws: int, seed: int, spec: Optional[UtilitySpec] = None,
                            posterior: Optional[PosteriorDraws] = None, utilities: Optional[np.ndarray] = None,
                            n_pref_draws: int = 1, include_peers: bool = True, workers: int = 1,
                            progress: bool = False) -> SegregationReport:
    """
    Segregación prevista bajo `policy` con ROLs veraces.

    Args:
        economy (Economy): Economía observada.
        policy (Policy): Transformación de prioridades.
        group_by (str): Covariable de estudiante que define los grupos.
        attributes: Atributos de programa a promediar.
        n_lottery_draws (int): Loterías por extracción de preferencias.
        seed (int): Semilla maestra; las loterías se comparten entre políticas.
        spec (UtilitySpec, optional): Diseño, necesario con `posterior`.
        posterior (PosteriorDraws, optional): Extracciones de β y σ².
        utilities (np.ndarray, optional): Utilidades fijas (k, C).
        n_pref_draws (int): Extracciones de preferencias del posterior.

    Returns:
        SegregationReport: Medias por corrida sobre n_pref_draws × n_lottery_draws corridas de DA.
    """
    if posterior is not None and spec is None:
        raise ValidationError("Con un posterior hay que dar también el diseño (spec).")
    group = economy.student_covariate(group_by).astype(float)
    groups = sorted(set(group.tolist()))
    if len(groups) < 2:
        raise ValidationError(f"La covariable '{group_by}' define un solo grupo.")
    metrics = list(attributes) + ([PEER_METRIC] if include_peers else [])
    for name in attributes:
        economy.program_attribute(name)
    transformed = apply_policy(economy, policy)

    utility_draws = preference_draws(spec, posterior, utilities, n_pref_draws, seed) if posterior is not None \
        else preference_draws(None, None, utilities)
    grid = _Grid(economy=transformed, metrics=metrics, group=group, groups=groups,
                 n_lottery_draws=n_lottery_draws, seed=seed)
    items = tqdm(utility_draws, desc=f"Contrafactual {Policy(policy).value}", leave=False) \
        if progress and workers <= 1 else utility_draws
    blocks = parallel_map(grid.run, items, workers)
    runs = np.concatenate(blocks, axis=0)
    logger.info("Contrafactual %s: %d corridas de DA.", Policy(policy).value, runs.shape[0])
    return SegregationReport(policy=Policy(policy).value, metrics=metrics, groups=groups, runs=runs)


def policy_effect(economy: Economy, policy: Policy, group_by: str, attributes: Sequence[str],
                  n_lottery_draws: int, seed: int, **kwargs) -> PolicyEffect:
    """Evalúa NONE y `policy` con las mismas preferencias y loterías."""
    baseline = evaluate_counterfactual(economy, Policy.NONE, group_by, attributes, n_lottery_draws, seed, **kwargs)
    counterfactual = evaluate_counterfactual(economy, policy, group_by, attributes, n_lottery_draws, seed, **kwargs)
    return PolicyEffect(baseline=baseline, counterfactual=counterfactual)
