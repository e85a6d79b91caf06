import json

import numpy as np
import pytest

from hybridrisk.errors import (ClassAbsent, EmptyFile, MissingColumn, OutcomeNotBinary)
from hybridrisk.synthetic import primary_like
from hybridrisk.tabular import (Column, Dataset, Schema, class_distribution, load_csv,
                                load_schema, save_csv, split_from_indices, split_train_test)


def toy_schema():
    return Schema((Column("x", "continuous"), Column("c", "categorical", {"a": 0, "b": 1}),
                   Column("y", "outcome")))


def test_builtin_schemas_have_one_outcome():
    for name in ("builtin:primary", "builtin:pima"):
        s = load_schema(name)
        assert sum(c.kind == "outcome" for c in s.columns) == 1
    primary = load_schema("builtin:primary")
    assert len(primary.columns) == 9
    assert dict(primary.column("gender").levels) == {"female": 0, "male": 1, "other": 2}
    smoking = primary.column("smoking_history").levels
    assert sorted(smoking.values()) == [0, 1, 2, 3, 4, 5]
    assert len(load_schema("builtin:pima").columns) == 9


def test_schema_rejects_non_injective_levels_and_duplicates():
    with pytest.raises(ValueError):
        Column("c", "categorical", {"a": 0, "b": 0})
    with pytest.raises(ValueError):
        Schema((Column("x", "continuous"), Column("x", "binary"), Column("y", "outcome")))
    with pytest.raises(ValueError):
        Schema((Column("x", "continuous"),))


def test_load_csv_tokens_missing_and_case_insensitive_header(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(" X ,C,Y,extra\n1.5,a,0,zz\nNA,B,1,zz\nabc,,1,zz\n")
    ds = load_csv(p, toy_schema())
    assert len(ds) == 3
    x = ds.columns["x"]
    assert x[0] == 1.5 and np.isnan(x[1]) and np.isnan(x[2])
    assert list(ds.columns["c"]) == ["a", "B", None]
    assert list(ds.labels) == [0, 1, 1]


def test_load_csv_errors(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x,c,y\n")
    with pytest.raises(EmptyFile):
        load_csv(p, toy_schema())
    p.write_text("x,y\n1,0\n")
    with pytest.raises(MissingColumn) as exc:
        load_csv(p, toy_schema())
    assert exc.value.name == "c"
    p.write_text("x,c,y\n1,a,0\n2,b,2\n")
    with pytest.raises(OutcomeNotBinary) as exc:
        load_csv(p, toy_schema())
    assert exc.value.row == 1  # zero-based data row


def test_csv_round_trip(tmp_path):
    ds = primary_like(300, seed=2, missing=0.1)
    save_csv(ds, tmp_path / "a.csv")
    back = load_csv(tmp_path / "a.csv", ds.schema)
    assert back.fingerprint() == ds.fingerprint()
    save_csv(back, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_split_sizes_disjoint_and_order_preserved():
    ds = primary_like(1000, seed=3)
    sp = split_train_test(ds, 0.7, seed=9)
    assert len(sp.train) == 700 and len(sp.test) == 300
    tr, te = sp.train_indices, sp.test_indices
    assert not set(tr) & set(te)
    assert sorted(np.r_[tr, te].tolist()) == list(range(1000))
    assert np.all(np.diff(tr) > 0) and np.all(np.diff(te) > 0)
    neg, pos, prev = class_distribution(ds)
    for part in (sp.train, sp.test):
        n0, n1, _ = class_distribution(part)
        assert abs(n1 - prev * len(part)) <= 1
        assert abs(n0 - (1 - prev) * len(part)) <= 1


def test_split_small_symmetric_case_and_determinism():
    cols = {"x": np.arange(10.0), "c": np.array(["a"] * 10, dtype=object),
            "y": np.array([1, 0] * 5)}
    ds = Dataset(toy_schema(), cols)
    sp = split_train_test(ds, 0.5, seed=1)
    assert len(sp.train) == len(sp.test) == 5
    assert 2 <= sp.train.labels.sum() <= 3
    again = split_train_test(ds, 0.5, seed=1)
    assert sp.to_json() == again.to_json()
    record = json.loads(sp.to_json())
    assert set(record) >= {"seed", "fraction", "train_indices", "test_indices"}
    replay = split_from_indices(ds, record)
    assert np.array_equal(replay.train.row_ids, sp.train.row_ids)
    assert sp.train.partition == "train" and sp.test.partition == "test"


def test_split_class_absent():
    cols = {"x": np.arange(4.0), "c": np.array(["a"] * 4, dtype=object), "y": np.ones(4)}
    ds = Dataset(toy_schema(), cols)
    with pytest.raises(ClassAbsent):
        split_train_test(ds, 0.5, seed=0, stratified=True)
    assert class_distribution(ds) == (0, 4, 1.0)


def test_dataset_is_immutable():
    ds = primary_like(50, seed=0)
    with pytest.raises(ValueError):
        ds.columns["age"][0] = 1.0
    with pytest.raises(TypeError):
        ds.columns["age"] = None
