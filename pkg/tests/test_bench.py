"""Harness: power-law fits, false-positive scoring, CSV/report emission."""

from __future__ import annotations

import os

import pytest

from hyperpam.bench import (
    CSV_HEADER,
    build_workload,
    emit_csv,
    emit_report,
    fit_power_law,
    measure_fp,
    read_csv,
    run_sweep,
    workload_to_json,
)
from hyperpam.engine import EvaluationContext
from hyperpam.errors import ConfigInvalid, DegenerateInput
from hyperpam.generator import EVAL_TS, GenConfig, config_for_scale, generate

CTX = EvaluationContext(EVAL_TS, "")


def test_fit_recovers_planted_exponents():
    cubic = [(n, float(n) ** 3) for n in range(100, 1100, 100)]
    fit = fit_power_law(cubic)
    assert abs(fit.b - 3.0) < 1e-9
    assert abs(fit.r2 - 1.0) < 1e-12
    linear = [(n, 2.5 * n) for n in range(100, 1100, 100)]
    fit = fit_power_law(linear)
    assert abs(fit.b - 1.0) < 1e-9
    assert abs(fit.a - 2.5) < 1e-9


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        fit_power_law([(1, 1.0), (2, 2.0)])
    with pytest.raises(DegenerateInput):
        fit_power_law([(1, 1.0), (2, 0.0), (3, 3.0)])
    with pytest.raises(DegenerateInput):
        fit_power_law([(2, 1.0), (2, 2.0), (2, 3.0)])


def test_workload_is_deterministic_and_per_user():
    cfg = GenConfig(n_users=20, n_roles=5, n_resources=30, seed=2)
    policy, gt = generate(cfg)
    w1 = build_workload(policy, gt, "per_user", seed=9)
    w2 = build_workload(policy, gt, "per_user", seed=9)
    assert workload_to_json(w1) == workload_to_json(w2)
    assert len(w1) == 20
    assert workload_to_json(build_workload(policy, gt, "per_user", seed=10)) != workload_to_json(w1)
    capped = build_workload(policy, gt, "per_user", queries_per_n=7, seed=9)
    assert len(capped) == 7
    pairs = build_workload(policy, gt, "all_pairs_sampled", seed=9)
    assert len(pairs) == 20 * 30
    with pytest.raises(ConfigInvalid):
        build_workload(policy, gt, "bogus")


def test_measure_fp_hypergraph_exact_and_ladder():
    cfg = GenConfig(
        n_users=24,
        n_roles=6,
        n_resources=30,
        pct_temporal=0.3,
        pct_scoped=0.2,
        injected_chains=1,
        injected_excess=1,
        seed=31,
    )
    policy, gt = generate(cfg)
    fp_h = measure_fp("hyper", policy, gt, CTX)
    fp_d = measure_fp("dag", policy, gt, CTX)
    fp_a = measure_fp("abac", policy, gt, CTX)
    assert fp_h == 0.0
    assert fp_a >= fp_d >= fp_h
    assert fp_a > 0.0  # expired + scoped canaries guarantee a gap


def test_measure_fp_zero_over_zero():
    cfg = GenConfig(
        n_users=4, n_roles=2, n_resources=6,
        pct_temporal=0.0, pct_scoped=0.0, seed=1,
    )
    policy, gt = generate(cfg)
    assert measure_fp("hyper", policy, gt, CTX) == 0.0


def test_sweep_cardinality_and_csv(tmp_path):
    result = run_sweep(
        ["hyper"], 200, 400, 200, repeats=3, seed=5, queries_per_n=40
    )
    assert len(result.records) == 2  # one median record per (model, n)
    for r in result.records:
        assert r.model == "hyper" and r.queries == 40
        assert r.fp_rate == 0.0
    path = tmp_path / "out.csv"
    emit_csv(result.records, str(path))
    text = path.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    rows = read_csv(str(path))
    assert rows[0]["model"] == "hyper" and rows[0]["n"] == "200"
    assert ":" in rows[0]["seed"]  # seed plus policy/workload hashes


def test_sweep_identical_inputs_across_models():
    result = run_sweep(
        ["hyper", "dag", "abac"], 200, 200, 200, repeats=1, seed=5, queries_per_n=30
    )
    fingerprints = {r.fingerprint for r in result.records}
    assert len(fingerprints) == 1
    assert len(result.records) == 3


def test_sweep_respects_abac_cap():
    result = run_sweep(
        ["hyper", "abac"], 200, 600, 200, repeats=1, seed=5,
        queries_per_n=20, abac_max_n=400,
    )
    abac_ns = sorted(r.n for r in result.records if r.model == "abac")
    hyper_ns = sorted(r.n for r in result.records if r.model == "hyper")
    assert abac_ns == [200, 400]
    assert hyper_ns == [200, 400, 600]


def test_sweep_determinism_modulo_timing(tmp_path):
    kwargs = dict(repeats=1, seed=11, queries_per_n=25)
    r1 = run_sweep(["hyper", "dag"], 200, 400, 200, **kwargs)
    r2 = run_sweep(["hyper", "dag"], 200, 400, 200, **kwargs)
    for p1, p2 in zip(r1.points, r2.points):
        assert p1.policy_json == p2.policy_json
        assert p1.workload_json == p2.workload_json
        assert p1.decisions == p2.decisions
        assert p1.per_query_ops == p2.per_query_ops
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(r1.records, str(a))
    emit_csv(r2.records, str(b))

    def strip_timing(text: str) -> list[str]:
        out = []
        for line in text.strip().splitlines()[1:]:
            cols = line.split(",")
            out.append(",".join(cols[:3] + cols[5:]))
        return out

    assert strip_timing(a.read_text()) == strip_timing(b.read_text())


def test_thread_cap_env(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERPAM_THREADS", "2")
    result = run_sweep(["hyper"], 200, 600, 200, repeats=1, seed=3, queries_per_n=10)
    assert [r.n for r in result.records] == [200, 400, 600]


def test_report_contains_fits_and_speedup(tmp_path):
    result = run_sweep(
        ["hyper", "dag", "abac"], 200, 600, 200, repeats=1, seed=5, queries_per_n=50
    )
    fits = {
        m: {"detect_time_s": result.fit(m, "detect_time_s")}
        for m in ("hyper", "dag", "abac")
    }
    path = tmp_path / "report.md"
    emit_report(result.records, fits, str(path))
    text = path.read_text()
    assert "Power-law fits" in text
    assert "| abac | detect_time_s |" in text
    assert "Comparison at n=600" in text
