from __future__ import annotations

import pytest

from jetvar.suites import SUITES, run_suite, homotopy_bidegrees

FAST = ["lemma19", "lemma21", "bicomplex", "group", "exchange", "contact", "theorem22"]


@pytest.mark.parametrize("name", FAST)
def test_suite_passes_small(name):
    res = run_suite(name, seed=3, trials=12)
    assert res.passed, res.failures


@pytest.mark.parametrize("name", ["lemma26", "theorem33", "firstvariation"])
def test_slow_suites_pass_small(name):
    res = run_suite(name, seed=1, trials=4)
    assert res.passed, res.failures


def test_suite_is_deterministic_under_seed():
    a = run_suite("group", seed=9, trials=10).to_json()
    b = run_suite("group", seed=9, trials=10).to_json()
    a.pop("elapsed")
    b.pop("elapsed")
    assert a == b


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("lemma99")
    assert "theorem22" in SUITES


def test_homotopy_bidegrees():
    assert homotopy_bidegrees(1) == [(1, 0)]
    assert (2, 1) in homotopy_bidegrees(3) and all(s <= 3 for _, s in homotopy_bidegrees(3))
