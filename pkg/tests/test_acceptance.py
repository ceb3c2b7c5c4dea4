"""One pass/fail line per acceptance criterion, at its stated tolerance."""

import json

import pytest

from ringvortex import acceptance
from ringvortex.array_field import TruncationPolicy


def check(result):
    print(result.line())
    assert result.passed, result.line()
    assert result.measured <= result.tolerance or result.number == 9


def test_1_series_sum_identity():
    r = acceptance.series_sum_identity()
    check(r)
    assert r.tolerance == 1e-10


def test_1_forced_truncation_is_reported_as_failure():
    r = acceptance.series_sum_identity(TruncationPolicy(max_lattice_index=1))
    print(r.line())
    assert not r.passed and r.measured > r.tolerance


def test_2_continuum_limit():
    r = acceptance.continuum_limit()
    check(r)
    assert r.tolerance == 1e-3


def test_3_analytic_polarization_limits():
    r = acceptance.analytic_limits()
    check(r)
    assert r.tolerance == 2e-3


def test_4_same_sign_saturation():
    r = acceptance.same_sign_saturation()
    check(r)
    assert r.tolerance == 1e-3


def test_5_propagation_invariance():
    r = acceptance.propagation_invariance()
    check(r)
    assert r.tolerance == 1e-3


def test_6_minimum_n_thresholds():
    check(acceptance.minimum_n_thresholds())


def test_7_sparse_anomaly():
    check(acceptance.sparse_anomaly())


def test_8_flux_symmetry_and_bounds():
    r = acceptance.symmetry_and_bounds()
    check(r)
    assert r.tolerance == 1e-12


def test_9_lattice_to_ring_transition():
    r = acceptance.lattice_to_ring()
    print(r.line())
    # measured is the variance ratio N=3 over N=12, required to exceed 10
    assert r.passed and r.measured > r.tolerance == 10.0


def test_verify_prints_lines_and_summary(capsys, monkeypatch):
    monkeypatch.setattr(acceptance, "CRITERIA", (acceptance.series_sum_identity, acceptance.same_sign_saturation))
    assert acceptance.verify() is True
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("[PASS] 1.") and lines[1].startswith("[PASS] 4.")
    body = out.split("BEGIN SUMMARY JSON\n")[1].split("END SUMMARY JSON")[0]
    summary = json.loads(body)
    assert summary["passed"] is True
    assert [c["number"] for c in summary["criteria"]] == [1, 4]
