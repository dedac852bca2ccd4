# src/core/gibbs_sampler.py

"""
Estimación bayesiana del modelo de utilidad aleatoria U = Xβ + ε con
ε_c ~ N(0, σ²_{tipo(c)}), usando aumento de datos: las utilidades latentes
se extraen truncadas por las relaciones de preferencia inferidas.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import invgamma
from tqdm import tqdm

from core.diagnostics import PSRF_THRESHOLD, effective_sample_size, mcse, psrf
from core.economy import Economy
from core.errors import ValidationError
from core.inference import RelationSet, transitive_closure
from core.rng import PURPOSE_GIBBS, parallel_map, stream
from core.truncated_normal import draw_truncated_normal_array

logger = logging.getLogger(__name__)

# Regresores del modelo sintético: índice de calidad, D×A, distancia y Small.
MC_TERMS = ("quality", "D*A", "distance", "small")
DEFAULT_PRIOR_VARIANCE = 100.0


@dataclass(frozen=True)
class UtilitySpec:
    """
    Diseño del modelo de utilidad.

    Attributes:
        X (np.ndarray): (k, C, p) regresores por estudiante y programa.
        variance_type (np.ndarray): (C,) tipo de varianza de cada programa.
        normalized_type (int): Tipo cuya varianza se fija en 1.
        names (Tuple[str, ...]): Nombre de cada coeficiente.
    """
    X: np.ndarray
    variance_type: np.ndarray
    normalized_type: int = 0
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        types = np.asarray(self.variance_type, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "variance_type", types)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"beta{j + 1}" for j in range(X.shape[-1])))
        self.validate()

    @property
    def n_students(self) -> int:
        return self.X.shape[0]

    @property
    def n_programs(self) -> int:
        return self.X.shape[1]

    @property
    def n_coefficients(self) -> int:
        return self.X.shape[2]

    @property
    def types(self) -> List[int]:
        return sorted(set(self.variance_type.tolist()))

    @property
    def free_types(self) -> List[int]:
        return [t for t in self.types if t != self.normalized_type]

    def validate(self):
        if self.X.ndim != 3:
            raise ValidationError(f"X debe ser (k, C, p); llegó forma {self.X.shape}.")
        if not np.isfinite(self.X).all():
            i, c, j = np.argwhere(~np.isfinite(self.X))[0]
            raise ValidationError(f"Covariable no finita: estudiante {i}, programa {c}, regresor {j}.")
        if self.variance_type.shape != (self.X.shape[1],):
            raise ValidationError(f"variance_type debe tener {self.X.shape[1]} elementos.")
        if self.normalized_type not in self.types:
            raise ValidationError(f"El tipo normalizado {self.normalized_type} no aparece en variance_type.")
        if len(self.names) != self.X.shape[2]:
            raise ValidationError("Hay que dar un nombre por coeficiente.")


@dataclass(frozen=True)
class GibbsConfig:
    """
    Parámetros del muestreador.

    Attributes:
        n_iter (int): Iteraciones totales por cadena.
        burn_in (int): Iteraciones descartadas al inicio.
        thin (int): Se retiene una de cada `thin` iteraciones tras el calentamiento.
        n_chains (int): Número de cadenas independientes.
        seed (int): Semilla maestra; la cadena j usa el flujo (seed, GIBBS, j).
        prior_variance (float): A⁻¹ = prior_variance·I.
        nu (Dict[int, float] | None): Grados de libertad a priori por tipo (3 + C_τ por defecto).
        v0 (Dict[int, float] | None): Escala a priori por tipo (3 + C_τ por defecto).
        record_utilities (bool): Guarda las utilidades retenidas (solo para problemas pequeños).
        workers (int): Procesos para correr cadenas en paralelo.
        progress (bool): Barra de progreso de la primera cadena.
    """
    n_iter: int = 20_000
    burn_in: int = 15_000
    thin: int = 1
    n_chains: int = 3
    seed: int = 0
    prior_variance: float = DEFAULT_PRIOR_VARIANCE
    nu: Optional[Dict[int, float]] = None
    v0: Optional[Dict[int, float]] = None
    record_utilities: bool = False
    workers: int = 1
    progress: bool = False

    def __post_init__(self):
        if min(self.n_iter, self.thin, self.n_chains) < 1 or self.burn_in < 0:
            raise ValidationError("n_iter, thin y n_chains deben ser positivos; burn_in no negativo.")
        if self.burn_in >= self.n_iter:
            raise ValidationError(f"burn_in ({self.burn_in}) debe ser menor que n_iter ({self.n_iter}).")
        if not self.prior_variance > 0:
            raise ValidationError("La varianza a priori debe ser positiva.")

    @property
    def n_kept(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin

    def prior_nu(self, spec: UtilitySpec, t: int) -> float:
        default = 3.0 + float((spec.variance_type == t).sum())
        return float(self.nu.get(t, default)) if self.nu else default

    def prior_v0(self, spec: UtilitySpec, t: int) -> float:
        default = 3.0 + float((spec.variance_type == t).sum())
        return float(self.v0.get(t, default)) if self.v0 else default


@dataclass
class PosteriorDraws:
    """
    Extracciones retenidas por cadena.

    Attributes:
        beta (np.ndarray): (m, n, p).
        sigma2 (np.ndarray): (m, n, T) en el orden de `types`.
        names (Tuple[str, ...]): Nombres de los coeficientes.
        types (Tuple[int, ...]): Tipos de varianza.
        normalized_type (int): Tipo fijado en 1.
        utilities (np.ndarray | None): (m, n, k, C) si se pidió guardarlas.
    """
    beta: np.ndarray
    sigma2: np.ndarray
    names: Tuple[str, ...]
    types: Tuple[int, ...]
    normalized_type: int
    utilities: Optional[np.ndarray] = None
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return self.beta.shape[0]

    @property
    def n_kept(self) -> int:
        return self.beta.shape[1]

    def pooled_beta(self) -> np.ndarray:
        return self.beta.reshape(-1, self.beta.shape[-1])

    def pooled_sigma2(self) -> np.ndarray:
        return self.sigma2.reshape(-1, self.sigma2.shape[-1])

    def mean(self) -> np.ndarray:
        return self.pooled_beta().mean(axis=0)

    def covariance(self) -> np.ndarray:
        return np.atleast_2d(np.cov(self.pooled_beta(), rowvar=False))

    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance()))

    def psrf(self) -> Optional[Dict[str, float]]:
        """PSRF de cada coeficiente y de cada varianza libre; None con una sola cadena."""
        if self.n_chains < 2 or self.n_kept < 2:
            return None
        values = dict(zip(self.names, psrf(self.beta).tolist()))
        for index, t in enumerate(self.types):
            if t != self.normalized_type:
                values[f"sigma2_{t}"] = float(psrf(self.sigma2[:, :, index]))
        return values

    def mcse(self) -> Optional[np.ndarray]:
        """Error de Monte Carlo de la media de cada coeficiente; None con menos de 4 extracciones."""
        pooled = self.pooled_beta()
        return None if pooled.shape[0] < 4 else mcse(pooled)

    def effective_sample_size(self) -> Optional[np.ndarray]:
        pooled = self.pooled_beta()
        return None if pooled.shape[0] < 4 else effective_sample_size(pooled)

    def converged(self) -> Optional[bool]:
        values = self.psrf()
        if values is None:
            return None
        return all(v < PSRF_THRESHOLD for v in values.values())

    def summary(self) -> Dict[str, object]:
        sigma_mean = self.pooled_sigma2().mean(axis=0)
        error, ess = self.mcse(), self.effective_sample_size()
        return {
            "names": list(self.names),
            "mean": self.mean().tolist(),
            "sd": self.sd().tolist(),
            "mcse": None if error is None else error.tolist(),
            "ess": None if ess is None else ess.tolist(),
            "covariance": self.covariance().tolist(),
            "sigma2_mean": {str(t): float(v) for t, v in zip(self.types, sigma_mean)},
            "psrf": self.psrf(),
            "converged": self.converged(),
            "n_chains": self.n_chains,
            "n_kept": self.n_kept,
            **self.meta,
        }

    def to_frame(self) -> pd.DataFrame:
        """Tabla larga (chain, iter, param, value)."""
        frames = []
        columns = list(self.names) + [f"sigma2_{t}" for t in self.types]
        for chain in range(self.n_chains):
            wide = pd.DataFrame(np.hstack([self.beta[chain], self.sigma2[chain]]), columns=columns)
            wide.insert(0, "iter", np.arange(self.n_kept))
            wide.insert(0, "chain", chain)
            frames.append(wide.melt(id_vars=["chain", "iter"], var_name="param", value_name="value"))
        return pd.concat(frames, ignore_index=True)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, names: Sequence[str], types: Sequence[int],
                   normalized_type: int = 0) -> "PosteriorDraws":
        """Inversa de `to_frame`: reconstruye las extracciones desde la tabla larga."""
        columns = list(names) + [f"sigma2_{t}" for t in types]
        missing = set(columns) - set(frame["param"].unique())
        if missing:
            raise ValidationError(f"Faltan parámetros en la tabla de extracciones: {sorted(missing)}.")
        wide = frame.pivot_table(index=["chain", "iter"], columns="param", values="value")[columns]
        n_chains = wide.index.get_level_values("chain").nunique()
        values = wide.to_numpy().reshape(n_chains, -1, len(columns))
        p = len(names)
        return cls(beta=values[:, :, :p], sigma2=values[:, :, p:], names=tuple(names), types=tuple(int(t) for t in types),
                   normalized_type=normalized_type)


def build_design_matrix(economy: Economy, terms: Sequence[str] = MC_TERMS) -> np.ndarray:
    """
    Construye X (k, C, p) a partir de términos con nombre.

    Cada término es "distance", un atributo de programa ("quality", "small"),
    una covariable de estudiante, o una interacción "cov*attr".

    Raises:
        ValidationError: Si un término no se puede resolver.
    """
    k, n_programs = economy.n_students, economy.n_programs
    columns = []
    for term in terms:
        if term == "distance":
            if economy.distances is None:
                raise ValidationError("La economía no tiene distancias para el término 'distance'.")
            columns.append(np.asarray(economy.distances, dtype=float))
        elif "*" in term:
            left, right = term.split("*", 1)
            columns.append(_term_column(economy, left) * _term_column(economy, right))
        else:
            columns.append(_term_column(economy, term))
    if not columns:
        raise ValidationError("El diseño necesita al menos un término.")
    return np.stack([np.broadcast_to(col, (k, n_programs)) for col in columns], axis=-1).astype(float)


def spec_from_economy(economy: Economy, terms: Sequence[str] = MC_TERMS, normalized_type: int = 0) -> UtilitySpec:
    """Diseño completo: regresores de `terms` y el tipo de varianza declarado por cada programa."""
    types = np.array([p.variance_type for p in economy.programs], dtype=np.int64)
    return UtilitySpec(X=build_design_matrix(economy, terms), variance_type=types, normalized_type=normalized_type,
                       names=tuple(terms))


def _term_column(economy: Economy, name: str) -> np.ndarray:
    if name in economy.covariates:
        return np.asarray(economy.covariates[name], dtype=float)[:, None]
    return economy.program_attribute(name)[None, :]


def whitened_gram(X: np.ndarray, sigma2_by_program: np.ndarray) -> np.ndarray:
    """X*'X* con X* = X / σ_c."""
    Xs = X / np.sqrt(sigma2_by_program)[None, :, None]
    return np.einsum("kcp,kcq->pq", Xs, Xs)


def gibbs_estimate(relations: Sequence[RelationSet], spec: UtilitySpec, cfg: GibbsConfig) -> PosteriorDraws:
    """
    Muestreador de Gibbs con utilidades latentes truncadas por las relaciones.

    Args:
        relations: Un RelationSet por estudiante; el id C representa la opción exterior
            con utilidad fija en 0.
        spec (UtilitySpec): Regresores y tipos de varianza.
        cfg (GibbsConfig): Iteraciones, previas y semilla.

    Returns:
        PosteriorDraws: n_chains × n_kept extracciones de β y σ².

    Raises:
        ValidationError: Dimensiones inconsistentes o programas fuera de rango.
        CycleError: Si las relaciones de algún estudiante son cíclicas.
    """
    if len(relations) != spec.n_students:
        raise ValidationError(f"Se esperaban {spec.n_students} conjuntos de relaciones; llegaron {len(relations)}.")
    chain_task = _Chain.build(relations, spec, cfg)
    results = parallel_map(chain_task.run, range(cfg.n_chains), cfg.workers)
    draws = PosteriorDraws(
        beta=np.stack([r[0] for r in results]),
        sigma2=np.stack([r[1] for r in results]),
        names=spec.names,
        types=tuple(spec.types),
        normalized_type=spec.normalized_type,
        utilities=np.stack([r[2] for r in results]) if cfg.record_utilities else None,
        meta={"seed": cfg.seed, "n_iter": cfg.n_iter, "burn_in": cfg.burn_in, "thin": cfg.thin},
    )
    if draws.converged() is False:
        logger.warning("[ADVERTENCIA] Alguna cadena no converge (PSRF >= %.1f): %s", PSRF_THRESHOLD, draws.psrf())
    return draws


@dataclass(frozen=True)
class _Chain:
    spec: UtilitySpec
    cfg: GibbsConfig
    lower_mask: np.ndarray
    upper_mask: np.ndarray
    width: int

    @classmethod
    def build(cls, relations: Sequence[RelationSet], spec: UtilitySpec, cfg: GibbsConfig) -> "_Chain":
        n_programs = spec.n_programs
        uses_outside = any(max(rel.programs(), default=-1) == n_programs for rel in relations)
        width = n_programs + 1 if uses_outside else n_programs
        lower = np.zeros((spec.n_students, width, width), dtype=bool)
        for i, rel in enumerate(relations):
            closed = rel if rel.closed else transitive_closure(rel)
            for better, worse in closed.pairs:
                if not (0 <= better < width and 0 <= worse < width):
                    raise ValidationError(f"Relación ({better}, {worse}) del estudiante {i} fuera de rango.")
                lower[i, better, worse] = True
        return cls(spec=spec, cfg=cfg, lower_mask=lower, upper_mask=lower.transpose(0, 2, 1).copy(), width=width)

    def _bounds(self, U: np.ndarray, c: int, known: np.ndarray):
        lower = np.where(self.lower_mask[:, c, :] & known, U, -np.inf).max(axis=1)
        upper = np.where(self.upper_mask[:, c, :] & known, U, np.inf).min(axis=1)
        return lower, upper

    def run(self, chain: int):
        spec, cfg = self.spec, self.cfg
        rng = stream(cfg.seed, PURPOSE_GIBBS, chain)
        X, types = spec.X, spec.variance_type
        k, n_programs, p = X.shape
        type_list = spec.types
        free = spec.free_types
        grams = {t: np.einsum("kcp,kcq->pq", X[:, types == t], X[:, types == t]) for t in type_list}
        prior_precision = np.eye(p) / cfg.prior_variance

        sigma2 = {t: 1.0 for t in type_list}
        for t in free:
            sigma2[t] = float(invgamma.rvs(cfg.prior_nu(spec, t) / 2, scale=cfg.prior_v0(spec, t) / 2,
                                           random_state=rng))
        beta = np.sqrt(cfg.prior_variance) * rng.standard_normal(p)

        U = np.zeros((k, self.width))
        known = np.zeros(self.width, dtype=bool)
        known[n_programs:] = True
        for c in range(n_programs):
            U[:, c] = self._draw_column(U, c, known, X, beta, sigma2[types[c]], rng)
            known[c] = True
        known[:] = True

        kept_beta = np.empty((cfg.n_kept, p))
        kept_sigma = np.empty((cfg.n_kept, len(type_list)))
        kept_u = np.empty((cfg.n_kept, k, n_programs)) if cfg.record_utilities else None
        iterations = range(1, cfg.n_iter + 1)
        if cfg.progress and chain == 0:
            iterations = tqdm(iterations, desc="Gibbs", leave=False)
        slot = 0
        for r in iterations:
            for c in range(n_programs):
                U[:, c] = self._draw_column(U, c, known, X, beta, sigma2[types[c]], rng)

            sigma_by_program = np.array([sigma2[t] for t in types])
            gram = sum(grams[t] / sigma2[t] for t in type_list)
            cross = np.einsum("kcp,kc->p", X, U[:, :n_programs] / sigma_by_program[None, :])
            V = np.linalg.inv(gram + prior_precision)
            V = (V + V.T) / 2
            beta = V @ cross + np.linalg.cholesky(V) @ rng.standard_normal(p)

            for t in free:
                cols = types == t
                resid = U[:, :n_programs][:, cols] - X[:, cols] @ beta
                shape = (cfg.prior_nu(spec, t) + k * cols.sum()) / 2
                scale = (cfg.prior_v0(spec, t) + float((resid ** 2).sum())) / 2
                sigma2[t] = float(invgamma.rvs(shape, scale=scale, random_state=rng))

            if r > cfg.burn_in and (r - cfg.burn_in) % cfg.thin == 0 and slot < cfg.n_kept:
                kept_beta[slot] = beta
                kept_sigma[slot] = [sigma2[t] for t in type_list]
                if kept_u is not None:
                    kept_u[slot] = U[:, :n_programs]
                slot += 1
        return kept_beta, kept_sigma, kept_u

    def _draw_column(self, U, c, known, X, beta, variance, rng) -> np.ndarray:
        lower, upper = self._bounds(U, c, known)
        return draw_truncated_normal_array(X[:, c, :] @ beta, np.sqrt(variance), lower, upper, rng)


def willingness_to_travel(mean: Sequence[float], names: Sequence[str], attribute: str,
                          distance_term: str = "distance") -> float:
    """
    Distancia equivalente de un atributo: -β_attr / β_distance.

    Raises:
        ValidationError: Si falta algún término o el coeficiente de distancia es 0.
    """
    names = list(names)
    for term in (attribute, distance_term):
        if term not in names:
            raise ValidationError(f"Término desconocido: '{term}'.")
    beta_distance = mean[names.index(distance_term)]
    if beta_distance == 0:
        raise ValidationError("El coeficiente de distancia es 0.")
    return -float(mean[names.index(attribute)]) / float(beta_distance)
