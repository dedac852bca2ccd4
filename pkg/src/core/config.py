# src/core/config.py

"""
Configuración de una ejecución: archivo clave=valor leído con python-dotenv.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from core.errors import ConfigError

CONFIG_ENV_VAR = "TEPS_CONFIG"

DGP_CHOICES = ("TT", "MIS_IRR", "MIS_REL")
POLICY_CHOICES = ("NONE", "NO_SCREENING", "NO_ZONING", "NO_PRIORITIES")
PARTITION_CHOICES = ("JOINT", "INDEPENDENT")
THRESHOLD_BASIS_CHOICES = ("ASSIGNMENT", "FEASIBILITY")

# Dónde se escribe y con cuántos procesos no altera ningún resultado.
HASH_EXCLUDED = ("output_dir", "threads")


def _int(value: str) -> int:
    return int(value)


def _optional_int(value: str) -> Optional[int]:
    return None if value.strip() in ("", "none", "None") else int(value)


def _float(value: str) -> float:
    return float(value)


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "si", "sí"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise ValueError(f"valor booleano inválido '{value}'")


def _text(value: str) -> str:
    return value.strip()


def _optional_text(value: str) -> Optional[str]:
    return value.strip() or None


def _names(value: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in value.split(",") if part.strip())


def _tau_grid(value: str) -> Tuple[float, ...]:
    grid = []
    for part in _names(value):
        tau = float(part)
        if not 0 <= tau <= 100:
            raise ValueError(f"τ fuera de [0, 100]: {part}")
        grid.append(int(tau) if tau.is_integer() else tau)
    return tuple(sorted(set(grid)))


def _choices(allowed: Tuple[str, ...]) -> Callable[[str], str]:
    def parse(value: str) -> str:
        value = value.strip().upper()
        if value not in allowed:
            raise ValueError(f"'{value}' no está entre {allowed}")
        return value
    return parse


def _choice_list(allowed: Tuple[str, ...]) -> Callable[[str], Tuple[str, ...]]:
    single = _choices(allowed)

    def parse(value: str) -> Tuple[str, ...]:
        return tuple(single(part) for part in _names(value))
    return parse


@dataclass(frozen=True)
class RunConfig:
    """Configuración resuelta; cada campo corresponde a una clave en MAYÚSCULAS del archivo."""
    data_dir: Optional[str] = None
    output_dir: str = "output"
    seed: int = 20240101
    threads: int = 1
    n_draws: int = 1000
    partition_mode: str = "JOINT"
    n_own_draws: Optional[int] = None
    tau_grid: Tuple[float, ...] = (20, 40, 60, 80, 100)
    alpha: float = 0.05
    nominal_df: bool = False
    terms: Tuple[str, ...] = ("quality", "D*A", "distance", "small")
    gibbs_n_iter: int = 20_000
    gibbs_burn_in: int = 15_000
    gibbs_thin: int = 1
    gibbs_chains: int = 3
    normalized_type: int = 0
    dgp: Tuple[str, ...] = DGP_CHOICES
    policy: str = "NO_PRIORITIES"
    mc_samples: int = 20
    mc_students: int = 1000
    mc_cutoff_samples: int = 20
    mc_cutoff_draws: int = 100
    mc_odds_lottery_draws: int = 20
    mc_threshold_basis: str = "ASSIGNMENT"
    mc_behavior_check_draws: int = 200
    cf_pref_draws: int = 50
    cf_lottery_draws: int = 50
    cf_group: str = "D"
    cf_attributes: Tuple[str, ...] = ("A", "small")
    outside_option: bool = False
    list_cap: Optional[int] = None

    def validate(self) -> "RunConfig":
        """
        Raises:
            ConfigError: Si algún valor es incoherente o DATA_DIR no existe.
        """
        positive = ("threads", "n_draws", "gibbs_n_iter", "gibbs_thin", "gibbs_chains", "mc_samples",
                    "mc_students", "mc_cutoff_samples", "mc_cutoff_draws", "mc_odds_lottery_draws",
                    "mc_behavior_check_draws", "cf_pref_draws", "cf_lottery_draws")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name.upper()} debe ser >= 1.")
        if not 0 <= self.gibbs_burn_in < self.gibbs_n_iter:
            raise ConfigError("GIBBS_BURN_IN debe estar en [0, GIBBS_N_ITER).")
        if not 0 < self.alpha < 1:
            raise ConfigError("ALPHA debe estar en (0, 1).")
        if not self.tau_grid:
            raise ConfigError("TAU_GRID no puede estar vacío.")
        if self.n_own_draws is not None and self.n_own_draws < 1:
            raise ConfigError("N_OWN_DRAWS debe ser >= 1.")
        if self.list_cap is not None and self.list_cap < 1:
            raise ConfigError("LIST_CAP debe ser >= 1.")
        if self.data_dir is not None and not os.path.isdir(self.data_dir):
            raise ConfigError(f"DATA_DIR no existe: '{self.data_dir}'.")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {key: list(value) if isinstance(value, tuple) else value for key, value in asdict(self).items()}

    def config_hash(self) -> str:
        """Primeros 12 caracteres del SHA-256 del JSON canónico, sin las claves que no cambian resultados."""
        values = {key: value for key, value in self.to_dict().items() if key not in HASH_EXCLUDED}
        canonical = json.dumps(values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        clean = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **clean).validate()


_PARSERS: Dict[str, Callable[[str], Any]] = {
    "data_dir": _optional_text,
    "output_dir": _text,
    "seed": _int,
    "threads": _int,
    "n_draws": _int,
    "partition_mode": _choices(PARTITION_CHOICES),
    "n_own_draws": _optional_int,
    "tau_grid": _tau_grid,
    "alpha": _float,
    "nominal_df": _bool,
    "terms": _names,
    "gibbs_n_iter": _int,
    "gibbs_burn_in": _int,
    "gibbs_thin": _int,
    "gibbs_chains": _int,
    "normalized_type": _int,
    "dgp": _choice_list(DGP_CHOICES),
    "policy": _choices(POLICY_CHOICES),
    "mc_samples": _int,
    "mc_students": _int,
    "mc_cutoff_samples": _int,
    "mc_cutoff_draws": _int,
    "mc_odds_lottery_draws": _int,
    "mc_threshold_basis": _choices(THRESHOLD_BASIS_CHOICES),
    "mc_behavior_check_draws": _int,
    "cf_pref_draws": _int,
    "cf_lottery_draws": _int,
    "cf_group": _text,
    "cf_attributes": _names,
    "outside_option": _bool,
    "list_cap": _optional_int,
}


def parse_tau_grid(value: str) -> Tuple[float, ...]:
    try:
        return _tau_grid(value)
    except ValueError as e:
        raise ConfigError(f"TAU_GRID inválido: {e}")


def config_from_mapping(values: Mapping[str, Optional[str]]) -> RunConfig:
    """
    Construye y valida un RunConfig desde pares clave=valor en texto.

    Raises:
        ConfigError: Clave desconocida o valor inválido.
    """
    known = {f.name for f in fields(RunConfig)}
    parsed: Dict[str, Any] = {}
    for key, raw in values.items():
        name = key.strip().lower()
        if name not in known:
            raise ConfigError(f"Clave de configuración desconocida: '{key}'.")
        try:
            parsed[name] = _PARSERS[name]("" if raw is None else str(raw))
        except ValueError as e:
            raise ConfigError(f"Valor inválido para {key}: {e}")
    return RunConfig(**parsed).validate()


def load_config(path: Optional[str] = None) -> RunConfig:
    """
    Lee la configuración desde `path`, desde la variable TEPS_CONFIG o usa los valores por defecto.

    Raises:
        ConfigError: Archivo inexistente, clave desconocida o valor inválido.
    """
    path = path or os.getenv(CONFIG_ENV_VAR)
    if not path:
        return RunConfig().validate()
    if not os.path.isfile(path):
        raise ConfigError(f"No se encontró el archivo de configuración: '{path}'.")
    return config_from_mapping(dotenv_values(path))


def config_from_manifest(manifest: Mapping[str, Any]) -> RunConfig:
    """Reconstruye el RunConfig registrado en un manifiesto."""
    recorded = manifest.get("config")
    if not isinstance(recorded, Mapping):
        raise ConfigError("El manifiesto no contiene una configuración.")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(recorded) - known
    if unknown:
        raise ConfigError(f"Claves desconocidas en el manifiesto: {sorted(unknown)}.")
    values = {key: tuple(value) if isinstance(value, list) else value for key, value in recorded.items()}
    return RunConfig(**values).validate()
