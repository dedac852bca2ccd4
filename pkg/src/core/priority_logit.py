# src/core/priority_logit.py

"""
Logit de rangos por pares para prioridades latentes de programas con selección:
v_i = X_i β y P(i ≻ i') = exp(v_i) / (exp(v_i) + exp(v_i')).
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import expit

from core.errors import NumericalError, SeparationError, ValidationError

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class PriorityLogitFit:
    """
    Attributes:
        beta (np.ndarray): (p,) coeficientes estimados.
        covariance (np.ndarray): (p, p) inversa de la información observada.
        scores (np.ndarray): (n,) puntajes latentes v̂ = X β̂.
        log_likelihood (float): Log-verosimilitud en el óptimo (sin penalización).
        n_pairs (int): Pares usados.
    """
    beta: np.ndarray
    covariance: np.ndarray
    scores: np.ndarray
    log_likelihood: float
    n_pairs: int

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def ranking_to_pairs(ranking: Sequence[int]) -> List[Tuple[int, int]]:
    """Todos los pares (ganador, perdedor) de un orden de mejor a peor."""
    ranking = list(ranking)
    return [(ranking[a], ranking[b]) for a in range(len(ranking)) for b in range(a + 1, len(ranking))]


def pairwise_log_likelihood(beta: np.ndarray, differences: np.ndarray) -> float:
    """Σ log σ(Δx β) sobre los pares."""
    z = differences @ np.asarray(beta, dtype=float)
    return float(-np.logaddexp(0.0, -z).sum())


def fit_priority_logit(pairs: Sequence[Tuple[int, int]], X: np.ndarray, ridge: float = 0.0) -> PriorityLogitFit:
    """
    Máxima verosimilitud del logit por pares sin intercepto.

    Args:
        pairs: Pares (i, i') con i ≻ i' en el orden del programa.
        X (np.ndarray): (n, p) covariables de los estudiantes.
        ridge (float): Penalización ℓ₂ (0 = sin penalizar).

    Returns:
        PriorityLogitFit: Estimación y puntajes latentes para todos los estudiantes.

    Raises:
        ValidationError: Sin pares, índices fuera de rango o covariables no finitas.
        SeparationError: Si los pares están separados y ridge == 0.
        NumericalError: Si el optimizador no converge.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise ValidationError("Las covariables deben ser finitas.")
    if len(pairs) == 0:
        raise ValidationError("Se necesita al menos un par ordenado.")
    if ridge < 0:
        raise ValidationError("La penalización ridge no puede ser negativa.")
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.min() < 0 or pairs.max() >= X.shape[0]:
        raise ValidationError("Hay pares con estudiantes fuera de rango.")
    differences = X[pairs[:, 0]] - X[pairs[:, 1]]

    if ridge == 0 and is_separated(differences):
        raise SeparationError(
            "La verosimilitud no está acotada (separación completa); use la opción ridge."
        )

    def objective(beta):
        z = differences @ beta
        value = np.logaddexp(0.0, -z).sum() + 0.5 * ridge * beta @ beta
        gradient = -differences.T @ expit(-z) + ridge * beta
        return value, gradient

    p = X.shape[1]
    result = minimize(objective, np.zeros(p), jac=True, method="BFGS", options={"gtol": GRADIENT_TOLERANCE})
    if not result.success and np.abs(result.jac).max() > np.sqrt(GRADIENT_TOLERANCE):
        raise NumericalError(f"El logit por pares no convergió: {result.message}")
    beta = result.x
    weights = expit(differences @ beta) * expit(-(differences @ beta))
    information = differences.T @ (differences * weights[:, None]) + ridge * np.eye(p)
    fit = PriorityLogitFit(
        beta=beta,
        covariance=np.linalg.inv(information),
        scores=X @ beta,
        log_likelihood=pairwise_log_likelihood(beta, differences),
        n_pairs=len(pairs),
    )
    logger.info("Logit por pares: %d pares, log-verosimilitud %.4f.", fit.n_pairs, fit.log_likelihood)
    return fit


def is_separated(differences: np.ndarray) -> bool:
    """
    ¿Existe β ≠ 0 con Δx β >= 0 en todos los pares y alguna desigualdad estricta?

    Se resuelve max Σ Δx β sujeto a Δx β >= 0 y |β_j| <= 1.
    """
    n_pairs, p = differences.shape
    result = linprog(
        c=-differences.sum(axis=0),
        A_ub=-differences,
        b_ub=np.zeros(n_pairs),
        bounds=[(-1.0, 1.0)] * p,
        method="highs",
    )
    return bool(result.status == 0 and -result.fun > 1e-9)


def draw_priority_scores(latent: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Un sorteo de puntajes de prioridad: v̂ + ruido logístico, convertido a percentiles en (0, 1].
    """
    latent = np.asarray(latent, dtype=float)
    noisy = latent + rng.logistic(size=latent.shape)
    ranks = np.argsort(np.argsort(noisy))
    return (ranks + 1) / latent.shape[0]
