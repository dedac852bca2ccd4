# src/core/rng.py

"""
Flujos de números aleatorios basados en contador.

Cada unidad de trabajo (un sorteo de lotería, una muestra de Monte Carlo,
una cadena de Gibbs) obtiene su propio generador a partir de la semilla
maestra y de una clave de enteros. El resultado no depende del orden de
ejecución ni del número de procesos.
"""

import concurrent.futures
from typing import Callable, Iterable, List, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

# Etiquetas de propósito para separar familias de flujos con la misma semilla.
PURPOSE_LOTTERY = 1
PURPOSE_OWN_SCORE = 2
PURPOSE_RESAMPLE = 3
PURPOSE_ECONOMY = 4
PURPOSE_BEHAVIOR = 5
PURPOSE_GIBBS = 6
PURPOSE_PREFERENCES = 7
PURPOSE_STAGE = 8
PURPOSE_PRIORITY = 9


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """
    Devuelve un generador Philox para la clave `(master_seed, *key)`.

    Args:
        master_seed (int): Semilla maestra de la ejecución.
        *key (int): Índices no negativos que identifican la unidad de trabajo.

    Returns:
        np.random.Generator: Generador independiente del resto de claves.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Aplica `fn` a cada elemento conservando el orden de entrada.

    Con `workers > 1` usa un `ProcessPoolExecutor`; `fn` y los elementos
    deben poder serializarse con pickle.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def derive_seed(master_seed: int, *key: int) -> int:
    """Semilla entera derivada de `(master_seed, *key)`, para etapas que reciben una semilla maestra propia."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint32)[0])
