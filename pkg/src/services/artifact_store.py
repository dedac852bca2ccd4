# src/services/artifact_store.py

import json
import logging
import os
from importlib import metadata
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd

from core.config import RunConfig
from core.economy import Rol
from core.errors import DependencyMissingError, ValidationError
from core.inference import Pair, RelationSet
from core.uncertainty import FeasibleClass, StudentPartition, programs_bitmask

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
VERSIONED_PACKAGES = ("numpy", "scipy", "pandas", "networkx", "python-dotenv", "tqdm")
RELATION_COLUMNS = ("method", "student_id", "preferred_program", "dispreferred_program")


class ArtifactStore:
    """
    Persistencia de los artefactos de cada etapa en `output_dir`.

    Todo archivo escrito lleva la semilla y el hash de configuración que lo
    produjeron: los JSON como claves y los CSV/TXT en una línea de comentario
    inicial. Cada ejecución deja además un manifiesto que permite repetirla.
    """

    def __init__(self, output_dir: str, config: RunConfig, command: str = ""):
        self.output_dir = output_dir
        self.config = config
        self.command = command
        self.config_hash = config.config_hash()
        self.produced: List[str] = []
        os.makedirs(output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def exists(self, name: str) -> bool:
        return os.path.isfile(self.path(name))

    def _stamp(self) -> str:
        return f"# seed={self.config.seed} config_hash={self.config_hash}\n"

    def _record(self, name: str):
        if name not in self.produced:
            self.produced.append(name)

    def write_json(self, name: str, payload: Mapping[str, Any]) -> str:
        document = {"seed": self.config.seed, "config_hash": self.config_hash, **payload}
        with open(self.path(name), "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        self._record(name)
        logger.info("Artefacto escrito: %s", name)
        return self.path(name)

    def read_json(self, name: str) -> Dict[str, Any]:
        """
        Raises:
            DependencyMissingError: Si la etapa que produce el archivo no se ha ejecutado.
        """
        if not self.exists(name):
            raise DependencyMissingError(f"Falta el artefacto '{name}'; ejecute antes la etapa que lo produce.")
        with open(self.path(name), "r", encoding="utf-8") as f:
            return json.load(f)

    def write_csv(self, name: str, frame: pd.DataFrame) -> str:
        with open(self.path(name), "w", encoding="utf-8", newline="") as f:
            f.write(self._stamp())
            frame.to_csv(f, index=False, lineterminator="\n")
        self._record(name)
        logger.info("Tabla escrita: %s (%d filas)", name, len(frame))
        return self.path(name)

    def read_csv(self, name: str) -> pd.DataFrame:
        if not self.exists(name):
            raise DependencyMissingError(f"Falta el artefacto '{name}'; ejecute antes la etapa que lo produce.")
        return pd.read_csv(self.path(name), comment="#")

    def write_text(self, name: str, text: str) -> str:
        with open(self.path(name), "w", encoding="utf-8") as f:
            f.write(self._stamp())
            f.write(text)
        self._record(name)
        return self.path(name)

    def write_manifest(self, options: Optional[Mapping[str, Any]] = None) -> str:
        """
        Manifiesto de la ejecución: subcomando, configuración, opciones, versiones y archivos producidos.

        Se escribe dos veces: `manifest_<etapa>.json` queda para cada etapa y
        `manifest.json` apunta siempre a la última ejecutada.
        """
        manifest = {
            "command": self.command,
            "config": self.config.to_dict(),
            "options": dict(options or {}),
            "versions": package_versions(),
            "files": sorted(self.produced),
        }
        if self.command:
            self.write_json(stage_manifest_name(self.command), manifest)
        return self.write_json(MANIFEST_NAME, manifest)


def stage_manifest_name(command: str) -> str:
    """`partition` -> `manifest_partition.json`; `simulate-cutoffs` -> `manifest_simulate_cutoffs.json`."""
    return f"manifest_{command.replace('-', '_')}.json"


def package_versions(packages: Sequence[str] = VERSIONED_PACKAGES) -> Dict[str, Optional[str]]:
    versions = {}
    for package in packages:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = None
    return versions


def partitions_to_json(partitions: Sequence[StudentPartition], rols: Sequence[Rol], n_programs: int,
                       student_ids: Optional[Sequence[Any]] = None) -> Dict[str, Any]:
    """
    Cada clase se escribe como {bitmask, assigned, prob}; `count` conserva la
    frecuencia exacta para que τ se compare sin redondeo al releer.
    """
    students = []
    for i, (partition, rol) in enumerate(zip(partitions, rols)):
        students.append({
            "student_id": _plain(student_ids[i]) if student_ids is not None else i,
            "rol": list(rol),
            "n_draws": partition.n_draws,
            "classes": [
                {"bitmask": int(cls.feasible), "assigned": cls.assigned,
                 "prob": cls.count / partition.n_draws, "count": cls.count}
                for cls in partition.classes
            ],
        })
    return {"n_programs": int(n_programs), "students": students}


def _read_class(item: Mapping[str, Any], n_draws: int) -> FeasibleClass:
    if "bitmask" in item:
        feasible = int(item["bitmask"])
    elif "feasible" in item:
        feasible = programs_bitmask(item["feasible"])
    else:
        raise ValidationError("Cada clase debe traer 'bitmask' o 'feasible'.")
    if "count" in item:
        count = int(item["count"])
    elif "prob" in item:
        count = int(round(float(item["prob"]) * n_draws))
    else:
        raise ValidationError("Cada clase debe traer 'prob' o 'count'.")
    return FeasibleClass(feasible=feasible, assigned=int(item["assigned"]), count=count)


def partitions_from_json(document: Mapping[str, Any]):
    """
    Acepta clases con `bitmask` o con la lista `feasible`, y con `count` o `prob`
    (en ese caso el conteo es prob × n_draws redondeado).

    Returns:
        Tuple[List[StudentPartition], List[Rol], int]: Particiones, ROLs en el orden del archivo y número de programas.

    Raises:
        ValidationError: Si alguna clase está incompleta o los conteos no suman n_draws.
    """
    if "n_programs" not in document:
        raise ValidationError("El archivo de particiones no declara n_programs.")
    partitions, rols = [], []
    for entry in document.get("students", []):
        n_draws = int(entry["n_draws"])
        classes = tuple(_read_class(item, n_draws) for item in entry["classes"])
        if sum(cls.count for cls in classes) != n_draws:
            raise ValidationError(f"Partición del estudiante {entry.get('student_id')}: los conteos no suman n_draws.")
        partitions.append(StudentPartition(classes=classes, n_draws=n_draws))
        rols.append(tuple(int(c) for c in entry["rol"]))
    return partitions, rols, int(document["n_programs"])


def partition_student_ids(document: Mapping[str, Any]) -> List[Any]:
    return [entry.get("student_id", i) for i, entry in enumerate(document.get("students", []))]


def relations_to_json(relations: Mapping[str, Sequence[RelationSet]]) -> Dict[str, Any]:
    return {"methods": {label: [[list(pair) for pair in rel] for rel in sets] for label, sets in relations.items()}}


def relations_from_json(document: Mapping[str, Any]) -> Dict[str, List[RelationSet]]:
    methods = document.get("methods")
    if not isinstance(methods, Mapping):
        raise ValidationError("El archivo de relaciones no contiene 'methods'.")
    return {
        label: [RelationSet.of((tuple(pair) for pair in pairs), closed=True) for pairs in sets]
        for label, sets in methods.items()
    }


def relations_to_frame(relations: Mapping[str, Sequence[RelationSet]], student_ids: Sequence[Any]) -> pd.DataFrame:
    """Una fila (method, student_id, preferred_program, dispreferred_program) por relación inferida."""
    rows = [
        (label, _plain(student_ids[i]), x, y)
        for label, sets in relations.items()
        for i, rel in enumerate(sets)
        for x, y in rel
    ]
    return pd.DataFrame(rows, columns=list(RELATION_COLUMNS))


def relations_from_frame(frame: pd.DataFrame, student_ids: Sequence[Any]) -> Dict[str, List[RelationSet]]:
    """
    Inverso de `relations_to_frame`; los estudiantes sin filas quedan con el conjunto vacío
    y un método sin ninguna relación no aparece.

    Raises:
        ValidationError: Columna faltante o estudiante desconocido.
    """
    missing = [column for column in RELATION_COLUMNS if column not in frame.columns]
    if missing:
        raise ValidationError(f"Tabla de relaciones: faltan las columnas {missing}.")
    index = {str(sid): i for i, sid in enumerate(student_ids)}
    relations: Dict[str, List[List[Pair]]] = {}
    for record in frame.to_dict("records"):
        key = str(_plain(record["student_id"]))
        if key not in index:
            raise ValidationError(f"Tabla de relaciones: estudiante desconocido {record['student_id']}.")
        sets = relations.setdefault(record["method"], [[] for _ in student_ids])
        sets[index[key]].append((int(record["preferred_program"]), int(record["dispreferred_program"])))
    return {label: [RelationSet.of(pairs, closed=True) for pairs in sets] for label, sets in relations.items()}


def _plain(value: Any) -> Any:
    return value.item() if hasattr(value, "item") else value


def label_slug(label: str) -> str:
    """Nombre de archivo para una etiqueta de método: "TEPS^top" -> "teps_top"."""
    return label.lower().replace("^", "_").replace("{", "").replace("}", "")
