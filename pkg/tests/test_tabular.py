from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strike.tabular import (MISSING_LEVEL, PreprocessStats, SchemaError, apply_preprocess, fit_preprocess, load_csv,
                            stratified_kfold, stratified_split_indices)


def test_load_csv_infers_kinds(write_csv):
    raw = load_csv(write_csv("a,b,target\n1,x,0\n2,y,1\n"), "target")
    assert raw.kinds == {"a": "numeric", "b": "categorical"}
    assert raw.labels.tolist() == [0, 1]
    assert raw.columns["a"].tolist() == [1.0, 2.0]


def test_load_csv_empty_and_na_are_missing(write_csv):
    raw = load_csv(write_csv("c,d,target\n1.5,NA,0\n,q,1\n"), "target")
    assert raw.kinds["c"] == "numeric"
    assert np.isnan(raw.columns["c"][1])
    assert raw.columns["d"].tolist() == [None, "q"]


def test_mixed_column_becomes_categorical(write_csv):
    raw, _ = None, None
    raw = load_csv(write_csv("c,target\n1.5,0\nabc,1\n"), "target")
    assert raw.kinds["c"] == "categorical"
    _, stats = fit_preprocess(raw)
    assert stats.levels["c"] == ["1.5", "abc"]


@pytest.mark.parametrize("text, message", [
    ("a,b\n1,2\n", "label column"),
    ("a,target\n1,2\n", "not 0 or 1"),
    ("a,target\n1,0,3\n", "cells"),
])
def test_load_csv_schema_errors(write_csv, text, message):
    with pytest.raises(SchemaError, match=message):
        load_csv(write_csv(text), "target")


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv", "target")


def test_sentinel_is_part_of_scaling_range(write_csv):
    ds, stats = fit_preprocess(load_csv(write_csv("x,target\n,0\n0,1\n1,0\n"), "target"))
    assert ds.X[:, 0].tolist() == pytest.approx([0.0, 0.999, 1.0], abs=1e-15)
    assert stats.mins[0] == -999.0


def test_constant_column_maps_to_zero(write_csv):
    ds, _ = fit_preprocess(load_csv(write_csv("x,target\n5,0\n5,1\n5,0\n"), "target"))
    assert ds.X[:, 0].tolist() == [0.0, 0.0, 0.0]


def test_one_hot_with_missing_level(write_csv):
    ds, _ = fit_preprocess(load_csv(write_csv("c,target\nA,0\n,1\nB,0\n"), "target"))
    assert ds.feature_names == ["c=A", "c=B", f"c={MISSING_LEVEL}"]
    assert ds.X.tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 0]]


def test_apply_preprocess_scales_clamps_and_zeroes_unseen(write_csv):
    train = load_csv(write_csv("x,c,target\n0,A,0\n10,B,1\n", "train.csv"), "target")
    _, stats = fit_preprocess(train)
    test = load_csv(write_csv("x,c,target\n5,Z,0\n20,A,1\n", "test.csv"), "target", kinds=stats.kinds)
    ds = apply_preprocess(test, stats)
    assert ds.X.tolist() == [[0.5, 0.0, 0.0], [1.0, 1.0, 0.0]]


def test_apply_preprocess_missing_column(write_csv):
    _, stats = fit_preprocess(load_csv(write_csv("x,y2,target\n0,1,0\n1,2,1\n", "a.csv"), "target"))
    with pytest.raises(SchemaError, match="y2"):
        apply_preprocess(load_csv(write_csv("x,target\n0,0\n", "b.csv"), "target"), stats)


def test_fit_then_apply_reproduces_training_matrix(write_csv):
    rng = np.random.default_rng(3)
    lines = ["a,b,c,target"]
    for i in range(50):
        a = "" if i % 7 == 0 else repr(float(rng.normal()))
        b = rng.choice(["u", "v", "w", ""])
        lines.append(f"{a},{b},{rng.integers(0, 9)},{i % 2}")
    raw = load_csv(write_csv("\n".join(lines) + "\n"), "target")
    ds, stats = fit_preprocess(raw)
    again = apply_preprocess(raw, PreprocessStats.from_dict(stats.to_dict()))
    assert np.array_equal(ds.X, again.X)
    lo, hi = ds.X.min(axis=0), ds.X.max(axis=0)
    assert np.all((lo == 0) & ((hi == 1) | (hi == 0)))


def test_split_counts_use_half_up_rounding():
    y = np.array([1] * 271 + [0] * 6756)
    train, test = stratified_split_indices(y, 0.7, seed=0)
    assert (y[train] == 1).sum() == 190 and (y[train] == 0).sum() == 4729
    y = np.array([0, 1] * 5)
    train, _ = stratified_split_indices(y, 0.5, seed=1)
    assert (y[train] == 1).sum() == 3 and (y[train] == 0).sum() == 3


@pytest.mark.parametrize("frac", [0.0, 1.0])
def test_split_rejects_degenerate_fraction(frac):
    with pytest.raises(ValueError):
        stratified_split_indices(np.array([0, 1, 0, 1]), frac)


def test_kfold_identity_deal():
    fa = stratified_kfold(np.array([1, 0, 1, 0, 1, 0]), K=3, shuffle=False)
    for f in range(3):
        assert sorted(np.array([1, 0, 1, 0, 1, 0])[fa.rows(f)].tolist()) == [0, 1]


def test_kfold_positive_counts():
    y = np.array([1] * 271 + [0] * 1000)
    fa = stratified_kfold(y, K=5, seed=4)
    counts = [int(y[fa.rows(f)].sum()) for f in range(5)]
    assert set(counts) <= {54, 55} and sum(counts) == 271


def test_kfold_rejects_tiny_class():
    with pytest.raises(ValueError):
        stratified_kfold(np.array([1, 0, 0, 0]), K=2)


@settings(max_examples=60, deadline=None)
@given(n_pos=st.integers(2, 60), n_neg=st.integers(2, 60), frac=st.floats(0.05, 0.95), seed=st.integers(0, 2**31))
def test_split_partitions_rows(n_pos, n_neg, frac, seed):
    y = np.random.default_rng(seed).permutation(np.array([1] * n_pos + [0] * n_neg))
    train, test = stratified_split_indices(y, frac, seed)
    assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(len(y)))
    assert np.all(np.diff(train) > 0) and np.all(np.diff(test) > 0)
    for c, n in ((1, n_pos), (0, n_neg)):
        assert (y[train] == c).sum() == int(np.floor(frac * n + 0.5))
    again, _ = stratified_split_indices(y, frac, seed)
    assert np.array_equal(train, again)


@settings(max_examples=60, deadline=None)
@given(n_pos=st.integers(5, 80), n_neg=st.integers(5, 80), K=st.integers(2, 5), seed=st.integers(0, 2**31))
def test_kfold_invariants(n_pos, n_neg, K, seed):
    y = np.random.default_rng(seed).permutation(np.array([1] * n_pos + [0] * n_neg))
    fa = stratified_kfold(y, K, seed)
    assert set(fa.folds.tolist()) == set(range(K))
    for f in range(K):
        for c, n in ((1, n_pos), (0, n_neg)):
            assert abs((y[fa.rows(f)] == c).sum() - n / K) < 1
