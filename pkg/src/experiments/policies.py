# src/experiments/policies.py

"""
Políticas contrafactuales sobre las reglas de prioridad.
"""

from dataclasses import replace
from enum import Enum
from typing import Union

import numpy as np

from core.economy import Economy, RuleMode, TieBreak
from core.errors import ValidationError
from experiments.synthetic_economy import SyntheticEconomy


class Policy(str, Enum):
    NONE = "NONE"
    NO_SCREENING = "NO_SCREENING"
    NO_ZONING = "NO_ZONING"
    NO_PRIORITIES = "NO_PRIORITIES"


def apply_policy(economy: Union[Economy, SyntheticEconomy], policy: Union[Policy, str]):
    """
    Transforma las reglas de prioridad de la economía.

    NONE devuelve el mismo objeto. NO_SCREENING convierte los programas
    DETERMINISTIC y EXAM en programas de lotería. NO_ZONING resta el componente
    de zonificación de los grupos intrínsecos. NO_PRIORITIES deja todos los
    grupos en 0 con una única lotería (STB).

    Raises:
        ValidationError: Si la política no existe.
    """
    try:
        policy = Policy(policy)
    except ValueError:
        raise ValidationError(f"Política desconocida: '{policy}'.")
    if isinstance(economy, SyntheticEconomy):
        transformed = apply_policy(economy.economy, policy)
        return economy if transformed is economy.economy else economy.with_economy(transformed)
    if policy == Policy.NONE:
        return economy
    if policy == Policy.NO_SCREENING:
        return _without_screening(economy)
    if policy == Policy.NO_ZONING:
        return _without_zoning(economy)
    return _without_priorities(economy)


def _without_screening(economy: Economy) -> Economy:
    programs = [
        p if p.rule_mode == RuleMode.LOTTERY_COARSE else replace(p, rule_mode=RuleMode.LOTTERY_COARSE)
        for p in economy.programs
    ]
    return replace(economy, programs=programs)


def _without_zoning(economy: Economy) -> Economy:
    if economy.zone_groups is None:
        return economy
    intrinsic = np.clip(economy.intrinsic - economy.zone_groups, 0, None)
    return replace(economy, intrinsic=intrinsic, zone_groups=np.zeros_like(economy.zone_groups))


def _without_priorities(economy: Economy) -> Economy:
    programs = [replace(p, rule_mode=RuleMode.LOTTERY_COARSE, n_groups=1) for p in economy.programs]
    zone = None if economy.zone_groups is None else np.zeros_like(economy.zone_groups)
    return replace(economy, programs=programs, intrinsic=np.zeros_like(economy.intrinsic),
                   tiebreak=TieBreak.STB, zone_groups=zone)
