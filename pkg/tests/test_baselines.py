"""Baseline models: lossy projections, fidelity ladder, measurement envelope."""

from __future__ import annotations

from datetime import timedelta

import pytest

from hyperpam.baselines import (
    abac_check,
    build_abac,
    build_dag,
    dag_check,
    detect_all,
)
from hyperpam.core import PolicyHypergraph, TimeWindow, VertexKind
from hyperpam.engine import EvaluationContext, PrivilegeQuery, check_privilege
from hyperpam.errors import CycleDetected
from hyperpam.generator import EPOCH, GenConfig, generate, make_fixture_usecase
from hyperpam.rng import Rng

from .builders import random_context, random_policy

CTX = EvaluationContext(EPOCH + timedelta(days=45), "acct-0")


def test_abac_flattens_hierarchy_to_tag_closure():
    policy, gt = make_fixture_usecase()
    g = build_abac(policy)
    alice = policy.vertex_named(VertexKind.USER, "Alice").id
    dev = policy.vertex_named(VertexKind.USER_ATTR, "Developer").id
    power = policy.vertex_named(VertexKind.USER_ATTR, "PowerUser").id
    # brute-force closure oracle over assignment edges
    from hyperpam.core import HyperedgeKind

    up = {}
    for e in policy.edges():
        if e.kind is HyperedgeKind.ASSIGNMENT and e.active:
            up.setdefault(e.tail, set()).add(e.head)
    expected, frontier = set(), {alice}
    while frontier:
        v = frontier.pop()
        for w in up.get(v, ()):
            if w not in expected:
                expected.add(w)
                frontier.add(w)
    assert g.user_tags[alice] == expected
    assert {dev, power} <= g.user_tags[alice]


def test_abac_without_associations_denies_everything():
    p = PolicyHypergraph()
    u = p.add_vertex(VertexKind.USER, "u")
    ua = p.add_vertex(VertexKind.USER_ATTR, "ua")
    r = p.add_vertex(VertexKind.RESOURCE, "r")
    p.add_assignment(u, ua)
    g = build_abac(p)
    assert g.grants == {}
    assert not abac_check(g, PrivilegeQuery(u, "Read", r, CTX)).allowed


def test_abac_ignores_constraints_hypergraph_does_not():
    p = PolicyHypergraph()
    pc = p.add_vertex(VertexKind.POLICY_CLASS, "pc")
    u = p.add_vertex(VertexKind.USER, "u", "a")
    ua = p.add_vertex(VertexKind.USER_ATTR, "ua", "a")
    r = p.add_vertex(VertexKind.RESOURCE, "r", "a")
    ra = p.add_vertex(VertexKind.RESOURCE_ATTR, "ra", "a")
    p.add_assignment(u, ua)
    p.add_assignment(r, ra)
    p.add_association(
        [ua], [ra], pc, ["Read"], [TimeWindow(EPOCH, EPOCH + timedelta(hours=2))]
    )
    late = EvaluationContext(EPOCH + timedelta(days=2), "a")
    q = PrivilegeQuery(u, "Read", r, late)
    assert not check_privilege(p, q).allowed
    assert abac_check(build_abac(p), q).allowed  # the controlled false positive
    assert dag_check(build_dag(p), q).allowed  # time windows dropped here too


def test_dag_evaluates_scoping_but_not_time():
    p = PolicyHypergraph()
    pc = p.add_vertex(VertexKind.POLICY_CLASS, "pc")
    u = p.add_vertex(VertexKind.USER, "u", "a")
    ua = p.add_vertex(VertexKind.USER_ATTR, "ua", "b")
    r = p.add_vertex(VertexKind.RESOURCE, "r", "a")
    ra = p.add_vertex(VertexKind.RESOURCE_ATTR, "ra", "b")
    p.add_assignment(u, ua)
    p.add_assignment(r, ra)
    from hyperpam.core import SameAccount

    p.add_association([ua], [ra], pc, ["Read"], [SameAccount()])
    q_wrong = PrivilegeQuery(u, "Read", r, EvaluationContext(EPOCH, "a"))
    q_right = PrivilegeQuery(u, "Read", r, EvaluationContext(EPOCH, "b"))
    d = build_dag(p)
    assert not dag_check(d, q_wrong).allowed
    assert dag_check(d, q_right).allowed
    assert abac_check(build_abac(p), q_wrong).allowed


def test_dag_rejects_cyclic_assignments():
    p = PolicyHypergraph()
    a = p.add_vertex(VertexKind.USER_ATTR, "a")
    b = p.add_vertex(VertexKind.USER_ATTR, "b")
    p.add_assignment(a, b)
    p.add_assignment(b, a)
    with pytest.raises(CycleDetected):
        build_dag(p)


def test_fidelity_ladder_on_random_policies():
    for seed in range(40):
        rng = Rng(60_000 + seed)
        policy = random_policy(rng, allow_ua_cycles=False)
        ctx = random_context(rng)
        abac = build_abac(policy)
        dag = build_dag(policy)
        users = [v.id for v in policy.vertices_of_kind(VertexKind.USER)]
        resources = [v.id for v in policy.vertices_of_kind(VertexKind.RESOURCE)]
        for u in users[:3]:
            for r in resources[:3]:
                for op in ("Read", "Write"):
                    q = PrivilegeQuery(u, op, r, ctx)
                    h = check_privilege(policy, q, 10).allowed
                    d = dag_check(dag, q).allowed
                    a = abac_check(abac, q).allowed
                    assert h <= d <= a  # dropping constraints only adds allows


def test_three_way_equivalence_on_constraint_free_policies():
    cfg = GenConfig(
        n_users=25,
        n_roles=6,
        n_resources=30,
        pct_temporal=0.0,
        pct_scoped=0.0,
        injected_chains=1,
        injected_excess=1,
        seed=77,
    )
    policy, gt = generate(cfg)
    assert all(not e.constraints for e in policy.edges())
    abac = build_abac(policy)
    dag = build_dag(policy)
    users = [v.id for v in policy.vertices_of_kind(VertexKind.USER)]
    resources = [v.id for v in policy.vertices_of_kind(VertexKind.RESOURCE)]
    for u in users:
        ctx = gt.context_for(u)
        for r in resources[:10]:
            for op in ("Read", "Write", "Delete"):
                q = PrivilegeQuery(u, op, r, ctx)
                h = check_privilege(policy, q).allowed
                assert dag_check(dag, q).allowed == h
                assert abac_check(abac, q).allowed == h


def test_detect_all_uniform_envelope():
    cfg = GenConfig(n_users=15, n_roles=4, n_resources=20, seed=3)
    policy, gt = generate(cfg)
    users = sorted(v.id for v in policy.vertices_of_kind(VertexKind.USER))
    resources = sorted(v.id for v in policy.vertices_of_kind(VertexKind.RESOURCE))
    workload = [
        PrivilegeQuery(u, "Read", resources[i % len(resources)], gt.context_for(u))
        for i, u in enumerate(users)
    ]
    runs = {m: detect_all(m, policy, workload) for m in ("hyper", "dag", "abac")}
    for m, run in runs.items():
        assert len(run.decisions) == len(workload)
        assert run.total_traversal_ops == sum(run.per_query_ops)
        assert run.detect_time_s >= 0 and run.build_time_s >= 0
        assert run.graph_size > 0
    # singleton workload: totals equal that query's counter
    single = detect_all("hyper", policy, workload[:1])
    assert single.total_traversal_ops == single.per_query_ops[0]
    # fidelity ladder aggregated
    for h, d, a in zip(
        runs["hyper"].decisions, runs["dag"].decisions, runs["abac"].decisions
    ):
        assert h <= d <= a


def test_abac_quadratic_dag_linear_sizes():
    sizes = {}
    for n in (200, 400, 800):
        cfg = GenConfig(
            n_users=n,
            n_roles=n // 10,
            n_resources=n // 2,
            injected_chains=0,
            injected_excess=0,
            seed=1,
        )
        policy, _ = generate(cfg)
        sizes[n] = (build_abac(policy).edge_count, build_dag(policy).edge_count)
    abac_growth = sizes[800][0] / sizes[200][0]
    dag_growth = sizes[800][1] / sizes[200][1]
    assert abac_growth > 8  # super-quadratic-ish over a 4x scale step
    assert dag_growth < 6  # roughly linear
