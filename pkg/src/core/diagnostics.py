# src/core/diagnostics.py

"""
Diagnósticos de convergencia de las cadenas MCMC.
"""

import numpy as np

from core.errors import NumericalError, ValidationError

PSRF_THRESHOLD = 1.1


def psrf(chains: np.ndarray) -> np.ndarray:
    """
    Factor de reducción de escala potencial (Gelman-Rubin).

    Usa la varianza intra-cadena con divisor n tanto en el numerador como en
    el denominador, de modo que cadenas idénticas dan exactamente 1.

    Args:
        chains (np.ndarray): (m, n) o (m, n, P) con m cadenas de n iteraciones.

    Returns:
        np.ndarray: PSRF por parámetro (escalar si la entrada es 2-D).

    Raises:
        ValidationError: Menos de 2 cadenas o menos de 2 iteraciones.
        NumericalError: Varianza intra-cadena nula.
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim not in (2, 3):
        raise ValidationError(f"Se esperaban cadenas (m, n[, P]); llegó forma {chains.shape}.")
    m, n = chains.shape[:2]
    if m < 2:
        raise ValidationError("El PSRF necesita al menos 2 cadenas.")
    if n < 2:
        raise ValidationError("Cada cadena necesita al menos 2 iteraciones.")
    within = chains.var(axis=1, ddof=0).mean(axis=0)
    between_over_n = chains.mean(axis=1).var(axis=0, ddof=1)
    if np.any(within == 0):
        raise NumericalError("Varianza intra-cadena nula: el PSRF no está definido.")
    return np.sqrt((within + between_over_n) / within)


def mcse(draws: np.ndarray) -> np.ndarray:
    """Error estándar de Monte Carlo de la media por medias de lotes (√n lotes)."""
    draws = np.asarray(draws, dtype=float)
    n = draws.shape[0]
    if n < 4:
        raise ValidationError("Se necesitan al menos 4 extracciones para el error de Monte Carlo.")
    n_batches = int(np.sqrt(n))
    size = n // n_batches
    batches = draws[: n_batches * size].reshape((n_batches, size) + draws.shape[1:]).mean(axis=1)
    return batches.std(axis=0, ddof=1) / np.sqrt(n_batches)


def effective_sample_size(draws: np.ndarray) -> np.ndarray:
    draws = np.asarray(draws, dtype=float)
    error = mcse(draws)
    variance = draws.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(error > 0, variance / error ** 2, float(draws.shape[0]))
