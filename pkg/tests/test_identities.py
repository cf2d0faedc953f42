import dataclasses

import pytest

from fitgadget import identities as ids
from fitgadget.groups import builtin


@pytest.mark.parametrize("name", ["S3", "C2xS3"])
def test_exhaustive_suite(name):
    reports = ids.exhaustive_suite(builtin(name))
    assert len(reports) == 5
    for r in reports:
        assert r.passed, r
        assert r.checked > 0


def test_sampled_suite_s4():
    reports = ids.sampled_suite(builtin("S4"), samples=100_000)
    for r in reports:
        assert r.passed, r
    assert sum(r.checked >= 100_000 for r in reports) == 4


@pytest.mark.parametrize("name", ["S3", "S4", "D4", "Q8", "C2xS3", "D6", "A4"])
def test_product_rules_on_small_catalog(name):
    assert ids.product_rules(builtin(name)).passed


def corrupted(G):
    """Same group with one commutator value swapped out."""
    H = dataclasses.replace(G)
    bad = G.comm.copy()
    x, y = 1, 2
    bad[x, y] = G.identity if bad[x, y] != G.identity else 1
    H.__dict__["comm"] = bad
    return H


def test_checks_detect_a_broken_commutator_table():
    G = corrupted(builtin("S3"))
    assert not ids.product_rules(G).passed
    assert not ids.centralizing_factor(G).passed or not ids.coset_stability(G).passed


def test_report_json():
    r = ids.product_rules(builtin("S3"))
    assert r.to_json()["passed"] and r.to_json()["checked"] == 216
