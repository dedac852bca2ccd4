# src/core/truncated_normal.py

"""
Muestreo exacto de normales truncadas a un intervalo (lower, upper).

En el cuerpo se usa la inversa de la CDF sobre la cola inferior (reflejando
el intervalo cuando queda por encima de la media). Si el borde más cercano
está a 5 desviaciones o más, se usa rechazo con propuesta exponencial, o con
propuesta uniforme cuando el intervalo es estrecho.
"""

from typing import Union

import numpy as np
from scipy.special import ndtr, ndtri

from core.errors import ValidationError

TAIL_THRESHOLD = 5.0

ArrayLike = Union[float, np.ndarray]


def draw_truncated_normal(mean: float, variance: float, lower: float, upper: float,
                          rng: np.random.Generator) -> float:
    """
    Una realización de N(mean, variance) restringida a (lower, upper).

    Args:
        mean (float): Media de la normal sin truncar.
        variance (float): Varianza, > 0.
        lower (float): Límite inferior (puede ser -inf).
        upper (float): Límite superior (puede ser +inf).
        rng (np.random.Generator): Generador a usar.

    Returns:
        float: Valor estrictamente dentro de (lower, upper).

    Raises:
        ValidationError: Si lower >= upper o la varianza no es positiva.
    """
    if not variance > 0:
        raise ValidationError(f"La varianza debe ser positiva; llegó {variance}.")
    value = draw_truncated_normal_array(np.array([mean], dtype=float), np.array([np.sqrt(variance)]),
                                        np.array([lower], dtype=float), np.array([upper], dtype=float), rng)
    return float(value[0])


def draw_truncated_normal_array(mean: ArrayLike, sd: ArrayLike, lower: ArrayLike, upper: ArrayLike,
                                rng: np.random.Generator) -> np.ndarray:
    """
    Versión vectorizada: un valor por elemento, con parámetros que se difunden entre sí.

    Raises:
        ValidationError: Si algún lower >= upper o alguna desviación no es positiva.
    """
    mean, sd, lower, upper = (np.asarray(v, dtype=float) for v in (mean, sd, lower, upper))
    mean, sd, lower, upper = np.broadcast_arrays(mean, sd, lower, upper)
    if (sd <= 0).any():
        raise ValidationError("La desviación estándar debe ser positiva.")
    if not (lower < upper).all():
        bad = np.flatnonzero(~(lower < upper).ravel())[0]
        raise ValidationError(
            f"Intervalo de truncamiento vacío: ({lower.ravel()[bad]}, {upper.ravel()[bad]})."
        )

    a = (lower - mean) / sd
    b = (upper - mean) / sd
    # Reflejo: el intervalo estandarizado queda con b <= 0 o conteniendo al 0.
    flip = a > 0
    a, b = np.where(flip, -b, a), np.where(flip, -a, b)

    z = np.empty(a.shape, dtype=float)
    tail = b <= -TAIL_THRESHOLD
    body = ~tail
    if body.any():
        z[body] = _inverse_cdf(a[body], b[body], rng)
    if tail.any():
        # Muestra en (-b, -a), lejos en la cola superior, y se vuelve a reflejar.
        z[tail] = -_tail_rejection(-b[tail], -a[tail], rng)

    z = np.where(flip, -z, z)
    draws = mean + sd * z
    return np.clip(draws, np.nextafter(lower, np.inf), np.nextafter(upper, -np.inf))


def _inverse_cdf(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    pa, pb = ndtr(a), ndtr(b)
    u = rng.random(a.shape)
    z = ndtri(pa + u * (pb - pa))
    return np.clip(z, a, b)


def _tail_rejection(alpha: np.ndarray, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Normal estándar truncada a (alpha, beta) con alpha >= TAIL_THRESHOLD."""
    out = np.empty(alpha.shape, dtype=float)
    pending = np.arange(alpha.shape[0])
    narrow = (beta - alpha) < 1.0 / alpha
    rate = (alpha + np.sqrt(alpha ** 2 + 4.0)) / 2.0
    while pending.size:
        lo, hi = alpha[pending], beta[pending]
        is_narrow = narrow[pending]
        width = np.where(is_narrow, hi - lo, 0.0)
        uniform = lo + width * rng.random(pending.size)
        lam = rate[pending]
        exponential = lo + rng.exponential(1.0, pending.size) / lam
        candidate = np.where(is_narrow, uniform, exponential)
        log_accept = np.where(
            is_narrow,
            (lo ** 2 - candidate ** 2) / 2.0,
            -((candidate - lam) ** 2) / 2.0,
        )
        accepted = (np.log(rng.random(pending.size)) <= log_accept) & (candidate < hi)
        out[pending[accepted]] = candidate[accepted]
        pending = pending[~accepted]
    return out
