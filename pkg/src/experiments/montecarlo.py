# src/experiments/montecarlo.py

"""
Harness de Monte Carlo: genera muestras, aplica cada DGP, infiere relaciones
con WTT y TEPS^τ, estima por Gibbs y selecciona con la escalera de Wald.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.gibbs_sampler import MC_TERMS, GibbsConfig, PosteriorDraws, gibbs_estimate
from core.rng import PURPOSE_STAGE, derive_seed
from core.selection import DEFAULT_ALPHA, DEFAULT_TAU_GRID, TOP_LABEL, WTT_LABEL, EstimateSummary, select_model
from core.uncertainty import PartitionMode, build_feasible_partition, simulate_cutoff_distribution
from experiments.behavior import (
    DEFAULT_CHECK_DRAWS,
    DEFAULT_ODDS_LOTTERY_DRAWS,
    Dgp,
    ThresholdBasis,
    apply_behavior,
    estimate_odds,
)
from experiments.counterfactual import policy_effect
from experiments.policies import Policy
from experiments.synthetic_economy import McConfig, generate_economy
from services.teps_method import method_ladder

logger = logging.getLogger(__name__)

STAGE_CUTOFFS = 1
STAGE_BEHAVIOR = 2
STAGE_PARTITION = 3
STAGE_GIBBS = 4
STAGE_COUNTERFACTUAL = 5

BEHAVIOR_ROWS = {
    "mean_length": "Longitud media del ROL",
    "wtt_share": "ROL consistente con WTT (%)",
    "stable_share": "Asignado a su favorito factible (%)",
    "mistake_share": "Comete errores (%)",
}


@dataclass(frozen=True)
class HarnessConfig:
    """
    Tamaños del experimento.

    Attributes:
        n_samples (int): Muestras de estimación por DGP.
        cutoff_samples (int): Economías veraces usadas para simular cortes.
        cutoff_draws (int): Sorteos de cortes por economía veraz.
        n_draws (int): Sorteos para las particiones de cada muestra.
        partition_mode (PartitionMode): Protocolo de partición.
        odds_lottery_draws (int): Sorteos propios por vector de cortes al estimar las probabilidades veraces.
        threshold_basis (ThresholdBasis): Probabilidad que MIS_REL compara con su umbral.
        behavior_check_draws (int): Corridas de DA para medir la estabilidad.
        tau_grid (Sequence[float]): Grilla de τ.
        alpha (float): Nivel de significancia.
        nominal_df (bool): Grados de libertad |β| en la prueba de Wald.
        estimate (bool): Si es False solo se calcula la tabla de comportamiento.
        keep_posteriors (bool): Conserva las extracciones para evaluar políticas después.
        workers (int): Procesos para cortes, particiones y cadenas.
        progress (bool): Barras de progreso.
    """
    n_samples: int = 20
    cutoff_samples: int = 20
    cutoff_draws: int = 100
    n_draws: int = 1000
    partition_mode: PartitionMode = PartitionMode.JOINT
    odds_lottery_draws: int = DEFAULT_ODDS_LOTTERY_DRAWS
    threshold_basis: ThresholdBasis = ThresholdBasis.ASSIGNMENT
    behavior_check_draws: int = DEFAULT_CHECK_DRAWS
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID
    alpha: float = DEFAULT_ALPHA
    nominal_df: bool = False
    estimate: bool = True
    keep_posteriors: bool = False
    workers: int = 1
    progress: bool = False


@dataclass
class MonteCarloResult:
    behavior: List[Dict[str, object]] = field(default_factory=list)
    estimates: List[Dict[str, object]] = field(default_factory=list)
    selections: List[Dict[str, object]] = field(default_factory=list)
    true_beta: Sequence[float] = ()
    posteriors: Dict[tuple, PosteriorDraws] = field(default_factory=dict)


def tt_cutoff_pool(cfg: McConfig, harness: HarnessConfig) -> np.ndarray:
    """Cortes simulados una sola vez con todos los estudiantes veraces, agrupados entre economías."""
    pools = []
    for s in range(harness.cutoff_samples):
        synthetic = generate_economy(cfg, s, pool=1)
        seed = derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_CUTOFFS, s)
        pools.append(simulate_cutoff_distribution(synthetic.economy, synthetic.true_rols, harness.cutoff_draws,
                                                  seed, harness.workers))
    return np.vstack(pools)


def run_monte_carlo(cfg: McConfig, dgps: Sequence[Dgp], harness: HarnessConfig,
                    gibbs: Optional[GibbsConfig] = None) -> MonteCarloResult:
    """
    Ejecuta el pipeline completo por muestra y DGP.

    Returns:
        MonteCarloResult: Filas de comportamiento, estimaciones y selección.
    """
    gibbs = gibbs or GibbsConfig()
    dgps = [Dgp(d) for d in dgps]
    result = MonteCarloResult(true_beta=tuple(cfg.beta))
    tt_cutoffs = tt_cutoff_pool(cfg, harness)
    logger.info("Cortes veraces simulados: %d sorteos.", tt_cutoffs.shape[0])
    methods = method_ladder(harness.tau_grid)

    samples = range(harness.n_samples)
    if harness.progress:
        samples = tqdm(samples, desc="Monte Carlo")
    for s in samples:
        synthetic = generate_economy(cfg, s)
        economy = synthetic.economy
        spec = synthetic.utility_spec(MC_TERMS)
        odds = estimate_odds(synthetic, tt_cutoffs, derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_BEHAVIOR, s),
                             harness.odds_lottery_draws)
        for d_index, dgp in enumerate(dgps):
            behavior_seed = derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_BEHAVIOR, s, d_index)
            rols, stats = apply_behavior(synthetic, dgp, tt_cutoffs, behavior_seed, harness.behavior_check_draws,
                                         odds=odds, threshold_basis=harness.threshold_basis)
            result.behavior.append({"sample": s, "dgp": dgp.value, **stats.to_dict()})
            if not harness.estimate:
                continue

            partitions = build_feasible_partition(
                economy, rols, harness.n_draws, derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_PARTITION, s, d_index),
                mode=harness.partition_mode, workers=harness.workers,
            )
            summaries: Dict[str, EstimateSummary] = {}
            for m_index, method in enumerate(methods):
                relations = method.infer_all(partitions, rols, economy.n_programs)
                chain_seed = derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_GIBBS, s, d_index, m_index)
                draws = gibbs_estimate(relations, spec, replace(gibbs, seed=chain_seed, workers=harness.workers))
                summaries[method.label] = EstimateSummary.from_posterior(method.label, draws)
                if harness.keep_posteriors:
                    result.posteriors[(s, dgp.value, method.label)] = draws
                for j, name in enumerate(draws.names):
                    result.estimates.append({
                        "sample": s, "dgp": dgp.value, "method": method.label, "param": name,
                        "estimate": float(draws.mean()[j]), "sd": float(draws.sd()[j]),
                        "converged": draws.converged(),
                    })
            selection = select_model(summaries, summaries[TOP_LABEL], harness.alpha, harness.tau_grid,
                                     harness.nominal_df)
            result.selections.append({"sample": s, "dgp": dgp.value, "chosen": selection.chosen})
            logger.info("Muestra %d, %s: elegido %s.", s, dgp.value, selection.chosen)
    return result


def behavior_table(result: MonteCarloResult) -> pd.DataFrame:
    """Promedios entre muestras de las estadísticas de comportamiento; una columna por DGP."""
    frame = pd.DataFrame(result.behavior)
    if frame.empty:
        return pd.DataFrame(columns=["statistic"])
    means = frame.groupby("dgp")[list(BEHAVIOR_ROWS)].mean()
    rows = []
    for key, title in BEHAVIOR_ROWS.items():
        scale = 1.0 if key == "mean_length" else 100.0
        rows.append({"statistic": title, **{dgp: round(float(means.loc[dgp, key]) * scale, 4) for dgp in means.index}})
    return pd.DataFrame(rows)


def estimate_table(result: MonteCarloResult) -> pd.DataFrame:
    """Media, desviación y raíz del ECM de las estimaciones por DGP, método y parámetro."""
    frame = pd.DataFrame(result.estimates)
    columns = ["dgp", "method", "param", "true", "mean", "sd", "rmse"]
    if frame.empty:
        return pd.DataFrame(columns=columns)
    truth = dict(zip(MC_TERMS, result.true_beta))
    frame["true"] = frame["param"].map(truth)
    frame["sq_error"] = (frame["estimate"] - frame["true"]) ** 2
    table = frame.groupby(["dgp", "method", "param"], sort=False).agg(
        true=("true", "first"), mean=("estimate", "mean"), sd=("estimate", "std"), mse=("sq_error", "mean"),
    ).reset_index()
    table["rmse"] = np.sqrt(table.pop("mse"))
    return table[columns]


def selection_table(result: MonteCarloResult) -> pd.DataFrame:
    """Frecuencia con la que se elige cada estimador, por DGP."""
    frame = pd.DataFrame(result.selections)
    if frame.empty:
        return pd.DataFrame(columns=["dgp", "chosen", "share"])
    counts = frame.groupby(["dgp", "chosen"], sort=False).size().rename("count").reset_index()
    counts["share"] = counts["count"] / counts.groupby("dgp")["count"].transform("sum")
    return counts[["dgp", "chosen", "share"]]


def policy_effect_table(cfg: McConfig, result: MonteCarloResult, dgp: Dgp, policy: Policy = Policy.NO_PRIORITIES,
                        group_by: str = "D", attributes: Sequence[str] = ("A",), n_pref_draws: int = 20,
                        n_lottery_draws: int = 20, workers: int = 1) -> pd.DataFrame:
    """
    Efecto previsto de `policy` sobre la brecha entre grupos, con el posterior WTT
    y con el posterior elegido por la escalera, muestra por muestra.

    Requiere haber corrido `run_monte_carlo` con `keep_posteriors=True`.
    """
    dgp = Dgp(dgp)
    chosen = {row["sample"]: row["chosen"] for row in result.selections if row["dgp"] == dgp.value}
    rows = []
    for s, label in sorted(chosen.items()):
        synthetic = generate_economy(cfg, s)
        spec = synthetic.utility_spec(MC_TERMS)
        seed = derive_seed(cfg.seed, PURPOSE_STAGE, STAGE_COUNTERFACTUAL, s)
        for role, method in (("wtt", WTT_LABEL), ("selected", label)):
            posterior = result.posteriors.get((s, dgp.value, method))
            if posterior is None:
                continue
            effect = policy_effect(synthetic.economy, policy, group_by, attributes, n_lottery_draws, seed,
                                   spec=spec, posterior=posterior, n_pref_draws=n_pref_draws, workers=workers)
            for metric_row in effect.to_frame().to_dict("records"):
                rows.append({"sample": s, "dgp": dgp.value, "role": role, "method": method, **metric_row})
    return pd.DataFrame(rows)
