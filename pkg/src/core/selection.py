# src/core/selection.py

"""
Selección secuencial entre WTT y TEPS^τ mediante pruebas de Wald tipo Hausman.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2

from core.errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
DEFAULT_TAU_GRID = (20, 40, 60, 80, 100)
FINE_TAU_GRID = tuple(range(10, 101, 10))
EIGEN_TOLERANCE = 1e-8

WTT_LABEL = "WTT"
TOP_LABEL = "TEPS^top"
ALL_LABEL = "TEPS^all"


def tau_label(tau: float) -> str:
    """Etiqueta de la estimación TEPS^τ: τ=0 es TEPS^top y τ=100 es TEPS^all."""
    if tau == 0:
        return TOP_LABEL
    if tau == 100:
        return ALL_LABEL
    return f"TEPS^{tau:g}"


@dataclass(frozen=True)
class EstimateSummary:
    label: str
    beta: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (beta.shape[0], beta.shape[0]):
            raise ValidationError(f"'{self.label}': covarianza {cov.shape} para β de dimensión {beta.shape[0]}.")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise ValidationError(f"'{self.label}': la covarianza no es simétrica.")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "covariance", (cov + cov.T) / 2)

    @classmethod
    def from_posterior(cls, label: str, draws) -> "EstimateSummary":
        return cls(label=label, beta=draws.mean(), covariance=draws.covariance())

    def to_dict(self) -> Dict[str, object]:
        return {"label": self.label, "beta": self.beta.tolist(), "covariance": self.covariance.tolist()}


@dataclass(frozen=True)
class LadderStep:
    comparison: str
    statistic: float
    df: int
    p_value: float
    rejected: bool


@dataclass
class SelectionResult:
    chosen: str
    ladder: List[LadderStep] = field(default_factory=list)
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> Dict[str, object]:
        return {"chosen": self.chosen, "alpha": self.alpha, "ladder": [asdict(step) for step in self.ladder]}


def chi_square_sf(x: float, df: int) -> float:
    """
    P(χ²_df > x).

    Raises:
        ValidationError: Si x < 0 o df < 1.
    """
    if x < 0:
        raise ValidationError(f"El estadístico chi-cuadrado no puede ser negativo: {x}.")
    if int(df) != df or df < 1:
        raise ValidationError(f"Los grados de libertad deben ser un entero positivo: {df}.")
    return float(chi2.sf(x, int(df)))


def wald_statistic(robust: EstimateSummary, efficient: EstimateSummary,
                   nominal_df: bool = False) -> Tuple[float, int, float]:
    """
    Estadístico de Wald d' M⁺ d con d = β̂_robusto − β̂_eficiente y M = V_robusto − V_eficiente.

    M se proyecta a su parte semidefinida positiva descartando autovalores por
    debajo de EIGEN_TOLERANCE·λ_max; los grados de libertad son el rango de M,
    o |β| con `nominal_df`.

    Returns:
        Tuple[float, int, float]: (estadístico, grados de libertad, p-valor).

    Raises:
        ValidationError: Si las dimensiones no coinciden.
    """
    if robust.beta.shape != efficient.beta.shape:
        raise ValidationError(
            f"Dimensiones distintas: {robust.label} {robust.beta.shape} vs {efficient.label} {efficient.beta.shape}."
        )
    d = robust.beta - efficient.beta
    M = robust.covariance - efficient.covariance
    eigenvalues, eigenvectors = np.linalg.eigh((M + M.T) / 2)
    largest = eigenvalues.max(initial=0.0)
    keep = eigenvalues > EIGEN_TOLERANCE * largest if largest > 0 else np.zeros_like(eigenvalues, dtype=bool)
    rank = int(keep.sum())
    projected = eigenvectors[:, keep].T @ d
    statistic = float(max((projected ** 2 / eigenvalues[keep]).sum(), 0.0))
    df = d.shape[0] if nominal_df else rank
    if df == 0:
        return 0.0, 0, 1.0
    return statistic, df, chi_square_sf(statistic, df)


def select_model(estimates: Mapping[str, EstimateSummary], top: EstimateSummary,
                 alpha: float = DEFAULT_ALPHA, tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
                 nominal_df: bool = False) -> SelectionResult:
    """
    Escalera de pruebas: TEPS^top contra WTT y luego contra TEPS^τ con τ descendente.

    Se elige el primer estimador cuya hipótesis no se rechaza; si todas se
    rechazan, se elige TEPS^top.

    Raises:
        ValidationError: Si falta alguna etiqueta requerida o α está fuera de (0, 1).
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"El nivel de significancia debe estar en (0, 1): {alpha}.")
    order = [WTT_LABEL] + [tau_label(tau) for tau in sorted(tau_grid, reverse=True) if tau > 0]
    missing = [label for label in order if label not in estimates]
    if missing:
        raise ValidationError(f"Faltan estimaciones para: {', '.join(missing)}.")

    result = SelectionResult(chosen=top.label, alpha=alpha)
    for label in order:
        statistic, df, p_value = wald_statistic(top, estimates[label], nominal_df=nominal_df)
        rejected = p_value < alpha
        result.ladder.append(LadderStep(f"{top.label} vs {label}", statistic, df, p_value, rejected))
        if not rejected:
            result.chosen = label
            break
    logger.info("Selección: %s (%d pruebas).", result.chosen, len(result.ladder))
    return result


def selection_frequencies(results: Sequence[SelectionResult], labels: Optional[Sequence[str]] = None) -> Dict[str, float]:
    """Fracción de veces que se elige cada etiqueta."""
    counts: Dict[str, int] = {}
    for result in results:
        counts[result.chosen] = counts.get(result.chosen, 0) + 1
    labels = list(labels) if labels is not None else sorted(counts)
    total = max(len(results), 1)
    return {label: counts.get(label, 0) / total for label in labels}
