# src/services/dataset_store.py

import logging
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.economy import Economy, Program, Rol, RuleMode, TieBreak
from core.errors import DependencyMissingError, ValidationError

logger = logging.getLogger(__name__)

PROGRAM_COLUMNS = ("id", "school_id", "capacity", "rule_mode", "n_groups")
OPTIONAL_PROGRAM_COLUMNS = ("variance_type",)
ROL_COLUMNS = ("student_id", "rank", "program_id")
PRIORITY_COLUMNS = ("student_id", "program_id", "group")
OPTIONAL_PRIORITY_COLUMNS = ("known_score", "zone_group", "distance")
GROUP_PREFIX = "t_"
RANKINGS_FILE = "rankings.csv"
RANKING_COLUMNS = ("program_id", "student_id", "rank")
ESTIMATED_SCORES_FILE = "priority_scores.csv"
ESTIMATED_SCORE_COLUMNS = ("student_id", "program_id", "known_score")


class DatasetStore:
    """
    Lectura y escritura del formato de datos CSV de un mercado.

    Archivos en `data_dir`:
        programs.csv   (id, school_id, capacity, rule_mode, n_groups[, variance_type], atributos...)
        students.csv   (id, covariables...[, t_<programa>...])
        priorities.csv (student_id, program_id, group[, known_score, zone_group, distance]), opcional
                       si students.csv trae las columnas t_<programa>
        rols.csv       (student_id, rank, program_id)
        rankings.csv   (program_id, student_id, rank), opcional: orden de los programas con selección
    """

    def __init__(self, data_dir: str, tiebreak: TieBreak = TieBreak.STB):
        self.data_dir = data_dir
        self.tiebreak = TieBreak(tiebreak)

    def _path(self, name: str) -> str:
        return os.path.join(self.data_dir, name)

    def _read(self, name: str, required: Tuple[str, ...]) -> pd.DataFrame:
        path = self._path(name)
        if not os.path.isfile(path):
            raise DependencyMissingError(f"No se encontró el archivo de datos '{path}'.")
        frame = pd.read_csv(path)
        missing = [column for column in required if column not in frame.columns]
        if missing:
            raise ValidationError(f"{name}: faltan las columnas {missing}.")
        return frame

    def parse_inputs(self, estimated_scores: Optional[pd.DataFrame] = None) -> Tuple[Economy, List[Rol]]:
        """
        Carga y valida la economía y los ROLs.

        Args:
            estimated_scores (pd.DataFrame, optional): Puntajes (student_id, program_id, known_score)
                estimados por `priority-logit`; completan los programas DETERMINISTIC sin puntaje conocido.

        Returns:
            Tuple[Economy, List[Rol]]: Economía validada y un ROL por estudiante (en índices densos).

        Raises:
            DependencyMissingError: Si falta algún archivo.
            ValidationError: Columna faltante, id colgante, rango duplicado o capacidad negativa.
        """
        programs = self.read_programs()
        students, student_index = self._read_students()
        n, n_programs = len(student_index), len(programs)

        matrices = self._parse_priorities(students, student_index, n, n_programs)
        if estimated_scores is not None:
            matrices["known_score"] = self._fill_known_scores(matrices.get("known_score"), estimated_scores,
                                                              programs, student_index)
        covariate_columns = [c for c in students.columns if c != "id" and not c.startswith(GROUP_PREFIX)]
        covariates = {c: students[c].to_numpy(dtype=float) for c in covariate_columns}

        economy = Economy(
            programs=programs,
            intrinsic=matrices["group"].astype(np.int64),
            known_scores=matrices.get("known_score"),
            tiebreak=self.tiebreak,
            student_ids=students["id"].to_numpy(),
            covariates=covariates,
            zone_groups=None if matrices.get("zone_group") is None else matrices["zone_group"].astype(np.int64),
            distances=matrices.get("distance"),
        )
        rols = self._parse_rols(self._read("rols.csv", ROL_COLUMNS), student_index, n_programs)
        logger.info("Datos cargados: %d estudiantes, %d programas.", n, n_programs)
        return economy, rols

    def read_programs(self) -> List[Program]:
        return self._parse_programs(self._read("programs.csv", PROGRAM_COLUMNS))

    def _read_students(self) -> Tuple[pd.DataFrame, Dict]:
        students = self._read("students.csv", ("id",))
        if students["id"].duplicated().any():
            row = int(np.flatnonzero(students["id"].duplicated().to_numpy())[0]) + 2
            raise ValidationError(f"students.csv fila {row}: id de estudiante duplicado.")
        return students, {sid: i for i, sid in enumerate(students["id"].tolist())}

    def read_covariates(self) -> Tuple[np.ndarray, pd.DataFrame]:
        """
        Returns:
            Tuple[np.ndarray, pd.DataFrame]: Ids de estudiantes y sus covariables (sin las columnas t_*).
        """
        students, _ = self._read_students()
        columns = [c for c in students.columns if c != "id" and not c.startswith(GROUP_PREFIX)]
        return students["id"].to_numpy(), students[columns].astype(float)

    def read_rankings(self) -> Dict[int, List[int]]:
        """
        Orden de cada programa con selección sobre sus postulantes, de mejor a peor.

        Returns:
            Dict[int, List[int]]: Programa -> índices densos de estudiantes.

        Raises:
            DependencyMissingError: Si falta rankings.csv.
            ValidationError: Estudiante o programa desconocido, o rango repetido dentro de un programa.
        """
        frame = self._read(RANKINGS_FILE, RANKING_COLUMNS)
        _, student_index = self._read_students()
        n_programs = len(self.read_programs())
        entries: Dict[int, List[Tuple[int, int]]] = {}
        seen = set()
        for row_number, record in enumerate(frame.to_dict("records"), start=2):
            if record["student_id"] not in student_index:
                raise ValidationError(f"{RANKINGS_FILE} fila {row_number}: estudiante desconocido {record['student_id']}.")
            c = int(record["program_id"])
            if not 0 <= c < n_programs:
                raise ValidationError(f"{RANKINGS_FILE} fila {row_number}: programa desconocido {c}.")
            key = (c, int(record["rank"]))
            if key in seen:
                raise ValidationError(f"{RANKINGS_FILE} fila {row_number}: rango repetido en el programa {c}.")
            seen.add(key)
            entries.setdefault(c, []).append((int(record["rank"]), student_index[record["student_id"]]))
        return {c: [i for _, i in sorted(items)] for c, items in sorted(entries.items())}

    def _fill_known_scores(self, known: Optional[np.ndarray], estimated: pd.DataFrame, programs: List[Program],
                           student_index: Dict) -> Optional[np.ndarray]:
        missing = [column for column in ESTIMATED_SCORE_COLUMNS if column not in estimated.columns]
        if missing:
            raise ValidationError(f"{ESTIMATED_SCORES_FILE}: faltan las columnas {missing}.")
        deterministic = {p.id for p in programs if p.rule_mode == RuleMode.DETERMINISTIC}
        if not deterministic:
            return known
        filled = np.full((len(student_index), len(programs)), np.nan) if known is None else known.copy()
        by_text = {str(sid): i for sid, i in student_index.items()}
        for record in estimated.to_dict("records"):
            c = int(record["program_id"])
            if c not in deterministic:
                continue
            i = by_text.get(str(record["student_id"]))
            if i is None:
                raise ValidationError(f"{ESTIMATED_SCORES_FILE}: estudiante desconocido {record['student_id']}.")
            if np.isnan(filled[i, c]):
                filled[i, c] = float(record["known_score"])
        holes = [c for c in sorted(deterministic) if np.isnan(filled[:, c]).any()]
        if holes:
            raise ValidationError(f"Programas DETERMINISTIC sin puntaje para algunos estudiantes: {holes}.")
        return filled

    def _parse_programs(self, frame: pd.DataFrame) -> List[Program]:
        frame = frame.sort_values("id", kind="stable").reset_index(drop=True)
        attribute_columns = [c for c in frame.columns if c not in PROGRAM_COLUMNS + OPTIONAL_PROGRAM_COLUMNS]
        programs = []
        for row_number, record in enumerate(frame.to_dict("records"), start=2):
            if int(record["id"]) != row_number - 2:
                raise ValidationError(f"programs.csv: los ids deben ser 0..C-1; falta el id {row_number - 2}.")
            if int(record["capacity"]) < 0:
                raise ValidationError(f"programs.csv fila {row_number}: capacidad negativa.")
            try:
                mode = RuleMode(str(record["rule_mode"]).strip().upper())
            except ValueError:
                raise ValidationError(f"programs.csv fila {row_number}: rule_mode inválido '{record['rule_mode']}'.")
            programs.append(Program(
                id=int(record["id"]),
                capacity=int(record["capacity"]),
                school_id=int(record["school_id"]),
                attributes={c: float(record[c]) for c in attribute_columns},
                rule_mode=mode,
                n_groups=int(record["n_groups"]),
                variance_type=int(record.get("variance_type", 0)),
            ))
        return programs

    def _parse_priorities(self, students: pd.DataFrame, student_index: Dict, n: int,
                          n_programs: int) -> Dict[str, Optional[np.ndarray]]:
        group_columns = [f"{GROUP_PREFIX}{c}" for c in range(n_programs)]
        if all(c in students.columns for c in group_columns):
            return {"group": students[group_columns].to_numpy(dtype=np.int64)}

        frame = self._read("priorities.csv", PRIORITY_COLUMNS)
        matrices: Dict[str, Optional[np.ndarray]] = {"group": np.full((n, n_programs), -1, dtype=float)}
        for column in OPTIONAL_PRIORITY_COLUMNS:
            if column in frame.columns:
                matrices[column] = np.full((n, n_programs), np.nan)
        seen = set()
        for row_number, record in enumerate(frame.to_dict("records"), start=2):
            if record["student_id"] not in student_index:
                raise ValidationError(f"priorities.csv fila {row_number}: estudiante desconocido {record['student_id']}.")
            c = int(record["program_id"])
            if not 0 <= c < n_programs:
                raise ValidationError(f"priorities.csv fila {row_number}: programa desconocido {c}.")
            i = student_index[record["student_id"]]
            if (i, c) in seen:
                raise ValidationError(f"priorities.csv fila {row_number}: par (estudiante, programa) duplicado.")
            seen.add((i, c))
            for column, matrix in matrices.items():
                matrix[i, c] = record[column]
        if len(seen) != n * n_programs:
            raise ValidationError("priorities.csv debe tener una fila por cada par (estudiante, programa).")
        return {column: (None if np.isnan(matrix).all() else matrix) for column, matrix in matrices.items()}

    def _parse_rols(self, frame: pd.DataFrame, student_index: Dict, n_programs: int) -> List[Rol]:
        entries: List[List[Tuple[int, int]]] = [[] for _ in range(len(student_index))]
        seen = set()
        for row_number, record in enumerate(frame.to_dict("records"), start=2):
            if record["student_id"] not in student_index:
                raise ValidationError(f"rols.csv fila {row_number}: estudiante desconocido {record['student_id']}.")
            c = int(record["program_id"])
            if not 0 <= c < n_programs:
                raise ValidationError(f"rols.csv fila {row_number}: programa desconocido {c}.")
            key = (record["student_id"], int(record["rank"]))
            if key in seen:
                raise ValidationError(f"rols.csv fila {row_number}: rango duplicado para el estudiante {key[0]}.")
            seen.add(key)
            entries[student_index[record["student_id"]]].append((int(record["rank"]), c))
        rols = []
        for i, items in enumerate(entries):
            rol = tuple(c for _, c in sorted(items))
            if len(set(rol)) != len(rol):
                raise ValidationError(f"rols.csv: el estudiante {i} repite programas.")
            rols.append(rol)
        return rols

    def export(self, economy: Economy, rols: List[Rol]):
        """Escribe la economía y los ROLs en `data_dir` con el mismo formato que lee `parse_inputs`."""
        os.makedirs(self.data_dir, exist_ok=True)
        attribute_names = sorted({name for p in economy.programs for name in p.attributes})
        pd.DataFrame([
            {"id": p.id, "school_id": p.school_id, "capacity": p.capacity, "rule_mode": p.rule_mode.value,
             "n_groups": p.n_groups, "variance_type": p.variance_type,
             **{name: p.attributes.get(name, 0.0) for name in attribute_names}}
            for p in economy.programs
        ]).to_csv(self._path("programs.csv"), index=False)

        students = pd.DataFrame({"id": economy.student_ids})
        for name, column in economy.covariates.items():
            students[name] = column
        students.to_csv(self._path("students.csv"), index=False)

        ids = np.asarray(economy.student_ids)
        n, n_programs = economy.intrinsic.shape
        priorities = pd.DataFrame({
            "student_id": np.repeat(ids, n_programs),
            "program_id": np.tile(np.arange(n_programs), n),
            "group": economy.intrinsic.ravel(),
        })
        for name, matrix in (("known_score", economy.known_scores), ("zone_group", economy.zone_groups),
                             ("distance", economy.distances)):
            if matrix is not None:
                priorities[name] = np.asarray(matrix).ravel()
        priorities.to_csv(self._path("priorities.csv"), index=False)

        pd.DataFrame(
            [(ids[i], rank, c) for i, rol in enumerate(rols) for rank, c in enumerate(rol, start=1)],
            columns=list(ROL_COLUMNS),
        ).to_csv(self._path("rols.csv"), index=False)
        logger.info("Datos exportados en '%s'.", self.data_dir)
