# tests/test_artifact_store.py

import json
import os

import pandas as pd
import pytest

from core.config import RunConfig
from core.errors import DependencyMissingError, ValidationError
from core.inference import RelationSet
from services.artifact_store import (
    MANIFEST_NAME,
    ArtifactStore,
    label_slug,
    partition_student_ids,
    partitions_from_json,
    partitions_to_json,
    relations_from_frame,
    relations_from_json,
    relations_to_frame,
    relations_to_json,
)


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(str(tmp_path / "salida"), RunConfig(seed=11), command="partition")


def test_files_are_stamped(store):
    store.write_json("a.json", {"x": 1})
    store.write_csv("b.csv", pd.DataFrame({"c": [1, 2]}))
    store.write_text("c.txt", "hola\n")
    document = store.read_json("a.json")
    assert document["seed"] == 11 and document["config_hash"] == store.config_hash and document["x"] == 1
    with open(store.path("b.csv"), encoding="utf-8") as f:
        assert f.readline() == f"# seed=11 config_hash={store.config_hash}\n"
    assert store.read_csv("b.csv")["c"].tolist() == [1, 2]
    assert store.produced == ["a.json", "b.csv", "c.txt"]


def test_missing_artifacts_raise(store):
    with pytest.raises(DependencyMissingError):
        store.read_json("selection.json")
    with pytest.raises(DependencyMissingError):
        store.read_csv("cutoffs.csv")


def test_manifest_lists_config_options_and_files(store):
    store.write_json("a.json", {})
    store.write_manifest(options={"tau": 95})
    with open(store.path(MANIFEST_NAME), encoding="utf-8") as f:
        manifest = json.load(f)
    assert manifest["command"] == "partition"
    assert manifest["config"]["seed"] == 11
    assert manifest["options"] == {"tau": 95}
    assert manifest["files"] == ["a.json"]
    assert "numpy" in manifest["versions"]


def test_partitions_json(four_class_partition):
    document = partitions_to_json([four_class_partition], [(4, 3, 2, 1)], 6, student_ids=["s1"])
    assert document["students"][0]["classes"][0] == {"bitmask": 24, "assigned": 4, "prob": 0.4, "count": 40}
    partitions, rols, n_programs = partitions_from_json(json.loads(json.dumps(document)))
    assert partitions == [four_class_partition] and rols == [(4, 3, 2, 1)] and n_programs == 6
    assert partition_student_ids(document) == ["s1"]

    document["students"][0]["classes"][0]["count"] = 41
    with pytest.raises(ValidationError):
        partitions_from_json(document)
    with pytest.raises(ValidationError):
        partitions_from_json({"students": []})


def test_partitions_json_accepts_probabilities_or_program_lists(four_class_partition, fixtures_dir):
    with open(os.path.join(fixtures_dir, "four_classes", "partitions.json"), encoding="utf-8") as f:
        partitions, _, _ = partitions_from_json(json.load(f))
    assert partitions == [four_class_partition]

    listed = {"n_programs": 6, "students": [{"rol": [4, 3], "n_draws": 10, "classes": [
        {"feasible": [3, 4], "assigned": 4, "count": 10}]}]}
    partitions, _, _ = partitions_from_json(listed)
    assert partitions[0].classes[0].feasible == 24
    assert partition_student_ids(listed) == [0]

    listed["students"][0]["classes"][0] = {"assigned": 4, "count": 10}
    with pytest.raises(ValidationError):
        partitions_from_json(listed)


def test_relations_json():
    relations = {"TEPS^all": [RelationSet.of([(2, 1), (1, 0), (2, 0)]), RelationSet()]}
    document = relations_to_json(relations)
    assert document["methods"]["TEPS^all"][0] == [[1, 0], [2, 0], [2, 1]]
    restored = relations_from_json(json.loads(json.dumps(document)))
    assert restored["TEPS^all"][0].pairs == relations["TEPS^all"][0].pairs
    assert restored["TEPS^all"][0].closed
    with pytest.raises(ValidationError):
        relations_from_json({})


def test_relations_table_rows(store):
    relations = {
        "WTT": [RelationSet.of([(4, 3), (4, 1)]), RelationSet.of([(0, 2)])],
        "TEPS^top": [RelationSet.of([(4, 3)]), RelationSet()],
    }
    frame = relations_to_frame(relations, ["s1", "s2"])
    assert list(frame.columns) == ["method", "student_id", "preferred_program", "dispreferred_program"]
    assert frame.values.tolist() == [
        ["WTT", "s1", 4, 1], ["WTT", "s1", 4, 3], ["WTT", "s2", 0, 2], ["TEPS^top", "s1", 4, 3],
    ]

    store.write_csv("relations.csv", frame)
    restored = relations_from_frame(store.read_csv("relations.csv"), ["s1", "s2"])
    for label, sets in relations.items():
        assert [rel.pairs for rel in restored[label]] == [rel.pairs for rel in sets]
    assert restored["WTT"][0].closed

    with pytest.raises(ValidationError):
        relations_from_frame(frame, ["s1"])
    with pytest.raises(ValidationError):
        relations_from_frame(frame.drop(columns="preferred_program"), ["s1", "s2"])


def test_label_slug():
    assert label_slug("TEPS^top") == "teps_top"
    assert label_slug("TEPS^60") == "teps_60"
    assert label_slug("WTT") == "wtt"
