"""Evaluation metric oracles, hand-computed."""

from __future__ import annotations

import pytest

from stackrca.evaluation import (
    causal_chain_accuracy,
    feature_importance_accuracy,
    localization_prf,
    type_f1,
)


def test_localization_prf_half_overlap():
    # predicted {a,b} vs actual {b,c}: tp=1, fp=1, fn=1
    p, r, f1 = localization_prf({"a", "b"}, {"b", "c"})
    assert (p, r, f1) == (0.5, 0.5, 0.5)


def test_localization_prf_empty_cases():
    # both empty is a vacuous perfect match; one-sided emptiness earns
    # no credit on any component
    assert localization_prf(set(), set()) == (1.0, 1.0, 1.0)
    assert localization_prf({"a"}, set()) == (0.0, 0.0, 0.0)
    assert localization_prf(set(), {"a"}) == (0.0, 0.0, 0.0)


def test_type_f1_macro_oracle():
    # class A: precision 1/2, recall 1/1 -> F1 2/3; class C: no
    # prediction -> F1 0; macro over {A, C} = 1/3.  micro: 1 correct of
    # 2 entities in the union -> 0.5
    macro, micro = type_f1({"e1": "A", "e2": "A"}, {"e1": "A", "e2": "C"})
    assert macro == pytest.approx(1 / 3)
    assert micro == pytest.approx(0.5)


def test_type_f1_perfect():
    macro, micro = type_f1({"e1": "A", "e2": "B"}, {"e1": "A", "e2": "B"})
    assert macro == 1.0 and micro == 1.0


def test_chain_accuracy_edge_set_f1():
    # 1 matching edge of 1 predicted and 2 actual: P=1, R=0.5, F1=2/3
    got = causal_chain_accuracy({("a", "b")}, {("a", "b"), ("b", "c")})
    assert got == pytest.approx(2 / 3)


def test_chain_accuracy_direction_sensitive():
    assert causal_chain_accuracy({("b", "a")}, {("a", "b")}) == 0.0


def test_chain_accuracy_empty_cases():
    assert causal_chain_accuracy(set(), set()) == 1.0
    assert causal_chain_accuracy({("a", "b")}, set()) == 0.0
    assert causal_chain_accuracy(set(), {("a", "b")}) == 0.0


def test_feature_importance_top_k():
    # top-3 of the ranking intersected with the annotated set, over
    # min(k, |annotated|)
    got = feature_importance_accuracy(["f1", "f2", "f3", "f4"], {"f2", "f9"})
    assert got == pytest.approx(1 / 2)
    assert feature_importance_accuracy(["f9", "f2", "x"], {"f2", "f9"}) == 1.0
    assert feature_importance_accuracy([], {"f1"}) == 0.0
    assert feature_importance_accuracy(["f1"], set()) is None
