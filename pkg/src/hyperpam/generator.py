"""Seeded synthetic policy generator with labeled ground truth.

Produces AWS-flavored policies: users assigned to roles (1-5 each,
uniform), roles granted permission sets (Zipf-sized) over resource types,
resources bucketed into a fixed type census, entities spread over a few
synthetic accounts, and a slice of grants carrying time-window or
same-account constraints. Every policy ships with a ground-truth ledger:
what each principal is supposed to reach (derived arithmetically from the
construction, never from the query engine) plus full provenance for every
injected violation, so detector output can be scored for false positives.

Two profiles:

* ``standard`` — roles scale as a fixed ratio of users, resources as half;
  the shape used for detection benchmarks.
* ``sqrt-grouping`` — ceil(sqrt(n)) user and resource groups with each
  entity assigned to about a quarter of them and all group pairs cross
  associated; the shape that exhibits superlinear hyperedge growth for the
  size study.

Injected violations keep attribution exact by construction: escalation
chains land on reserved grant-free elevated roles and target production
types that ordinary grants never touch, and excess grants use permissions
withheld from the ordinary pool. When constrained grants are enabled, one
deliberately expired grant and one cross-account scoped grant are placed
on reserved types so that at least one unambiguous false-positive source
exists for the lossy baseline models.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Iterator, Optional

from .core import (
    PolicyHypergraph,
    SameAccount,
    TimeWindow,
    VertexId,
    VertexKind,
)
from .detect import RequiredPermissions
from .engine import EvaluationContext
from .errors import ConfigInvalid, InsufficientEntities
from .perm import DEFAULT_PERMISSIONS
from .rng import Rng, zipf_sample

EPOCH = datetime(2025, 6, 1, tzinfo=timezone.utc)
EVAL_TS = EPOCH + timedelta(days=45)
ACTIVE_WINDOW = (EPOCH, EPOCH + timedelta(days=365))
EXPIRED_WINDOW = (EPOCH, EPOCH + timedelta(days=10))

# Ordinary role grants draw from the first six permissions; Delete and
# RunInstances are reserved for injected excess so that excess facts can
# never collide with intended ones.
BASE_PERM_POOL = ("Read", "Write", "Execute", "List", "PassRole", "AssumeRole")
EXCESS_PERM_CYCLE = (("Delete",), ("RunInstances",), ("Delete", "RunInstances"))

PROFILES = ("standard", "sqrt-grouping")


@dataclass
class GenConfig:
    n_users: int
    n_roles: int
    n_resources: int
    assignments_per_user: tuple[int, int] = (1, 5)
    perms_per_role: tuple[int, int] = (1, 10)
    zipf_s: float = 1.0
    attr_ratio: float = 0.1
    n_resource_types: int = 15
    types_per_role: tuple[int, int] = (4, 9)
    pct_temporal: float = 0.2
    pct_scoped: float = 0.1
    injected_chains: int = 0
    injected_excess: int = 0
    n_accounts: int = 4
    profile: str = "standard"
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_users, self.n_roles, self.n_resources) < 0:
            raise ConfigInvalid("entity counts must be >= 0")
        for name in ("assignments_per_user", "perms_per_role", "types_per_role"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ConfigInvalid(f"{name} range [{lo},{hi}] is empty or non-positive")
        if self.zipf_s <= 0:
            raise ConfigInvalid("zipf_s must be > 0")
        for name in ("pct_temporal", "pct_scoped"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigInvalid(f"{name} must be in [0, 1]")
        if self.attr_ratio <= 0:
            raise ConfigInvalid("attr_ratio must be > 0")
        if self.n_resource_types < 1:
            raise ConfigInvalid("need at least one resource type")
        if self.n_accounts < 1:
            raise ConfigInvalid("need at least one account")
        if self.injected_chains < 0 or self.injected_excess < 0:
            raise ConfigInvalid("injection counts must be >= 0")
        if self.profile not in PROFILES:
            raise ConfigInvalid(f"unknown profile {self.profile!r}")
        if self.injected_chains and self.n_roles < self.injected_chains + 1:
            raise ConfigInvalid("chains need a spare role each plus one base role")


def config_for_scale(n: int, seed: int = 0, profile: str = "standard", **overrides) -> GenConfig:
    """Scale-parameter template: n users, attr_ratio*n roles, n/2 resources."""
    cfg = GenConfig(
        n_users=n,
        n_roles=max(1, round(0.1 * n)),
        n_resources=max(1, n // 2),
        injected_chains=2,
        injected_excess=2,
        profile=profile,
        seed=seed,
    )
    return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class Grant:
    """One role-to-type association, with the facts needed to re-evaluate
    its constraints arithmetically (no graph search)."""

    role: VertexId
    type_id: VertexId
    mask: int
    edge: int
    window: Optional[tuple[datetime, datetime]] = None
    same_account: bool = False
    member_accounts: tuple[str, ...] = ()

    def satisfied(self, ctx: EvaluationContext) -> bool:
        if self.window is not None:
            if not (self.window[0] <= ctx.timestamp <= self.window[1]):
                return False
        if self.same_account:
            if any(a != ctx.acting_account for a in self.member_accounts):
                return False
        return True


@dataclass(frozen=True)
class ChainRecord:
    assignment_edge: int
    association_edge: int
    source_role: VertexId
    target_role: VertexId
    type_id: VertexId
    mask: int
    finding_users: tuple[VertexId, ...]
    fact_users: tuple[VertexId, ...]


@dataclass(frozen=True)
class ExcessRecord:
    role: VertexId
    type_id: VertexId
    mask: int
    association_edge: int
    users: tuple[VertexId, ...]


@dataclass
class GroundTruth:
    """Construction ledger: intended grants plus injected violations."""

    eval_timestamp: datetime
    user_roles: dict[VertexId, tuple[VertexId, ...]]
    user_account: dict[VertexId, str]
    grants: list[Grant]
    resource_types: dict[VertexId, tuple[VertexId, ...]]
    resources_by_type: dict[VertexId, tuple[VertexId, ...]]
    chains: list[ChainRecord] = field(default_factory=list)
    excess: list[ExcessRecord] = field(default_factory=list)
    _grants_by_role: dict[VertexId, list[Grant]] = field(default_factory=dict)

    def __post_init__(self):
        if not self._grants_by_role:
            for g in self.grants:
                self._grants_by_role.setdefault(g.role, []).append(g)

    def context_for(self, user: VertexId, approvals: frozenset[str] = frozenset()) -> EvaluationContext:
        """Canonical evaluation context: generation epoch, acting as the user."""
        return EvaluationContext(
            self.eval_timestamp, self.user_account.get(user, ""), approvals
        )

    def is_intended(self, user: VertexId, opbit: int, resource: VertexId,
                    ctx: Optional[EvaluationContext] = None) -> bool:
        ctx = ctx or self.context_for(user)
        types = self.resource_types.get(resource, ())
        if not types:
            return False
        for role in self.user_roles.get(user, ()):
            for g in self._grants_by_role.get(role, ()):
                if g.type_id in types and g.mask & opbit and g.satisfied(ctx):
                    return True
        return False

    def is_violation_fact(self, user: VertexId, opbit: int, resource: VertexId) -> bool:
        types = self.resource_types.get(resource, ())
        for c in self.chains:
            if c.type_id in types and c.mask & opbit and user in c.fact_users:
                return True
        for e in self.excess:
            if e.type_id in types and e.mask & opbit and user in e.users:
                return True
        return False

    def required_permissions(self, ctx: EvaluationContext) -> RequiredPermissions:
        """Required masks per role and per user at resource granularity."""
        by_subject: dict[VertexId, dict[VertexId, int]] = {}
        role_masks: dict[VertexId, dict[VertexId, int]] = {}
        for role, grants in self._grants_by_role.items():
            acc: dict[VertexId, int] = {}
            for g in grants:
                if not g.satisfied(ctx):
                    continue
                for rid in self.resources_by_type.get(g.type_id, ()):
                    acc[rid] = acc.get(rid, 0) | g.mask
            role_masks[role] = acc
            by_subject[role] = acc
        for user, roles in self.user_roles.items():
            acc = {}
            for role in roles:
                for rid, mask in role_masks.get(role, {}).items():
                    acc[rid] = acc.get(rid, 0) | mask
            by_subject[user] = acc
        return RequiredPermissions(by_subject)

    def intended_facts(self, universe_names: tuple[str, ...]) -> Iterator[tuple[int, str, int]]:
        """Materialized (user, op, resource) facts under per-user canonical contexts."""
        for user in sorted(self.user_roles):
            ctx = self.context_for(user)
            acc: dict[VertexId, int] = {}
            for role in self.user_roles[user]:
                for g in self._grants_by_role.get(role, ()):
                    if not g.satisfied(ctx):
                        continue
                    for rid in self.resources_by_type.get(g.type_id, ()):
                        acc[rid] = acc.get(rid, 0) | g.mask
            for rid in sorted(acc):
                mask = acc[rid]
                for i, name in enumerate(universe_names):
                    if mask >> i & 1:
                        yield (user, name, rid)

    def to_obj(self, universe_names: tuple[str, ...]) -> dict:
        return {
            "intended": [list(f) for f in self.intended_facts(universe_names)],
            "violations": {
                "chains": [
                    {
                        "assignment_edge": c.assignment_edge,
                        "association_edge": c.association_edge,
                        "source_role": c.source_role,
                        "target_role": c.target_role,
                        "type": c.type_id,
                        "permissions": [
                            n for i, n in enumerate(universe_names) if c.mask >> i & 1
                        ],
                        "finding_users": list(c.finding_users),
                        "fact_users": list(c.fact_users),
                    }
                    for c in self.chains
                ],
                "excess": [
                    {
                        "association_edge": e.association_edge,
                        "role": e.role,
                        "type": e.type_id,
                        "permissions": [
                            n for i, n in enumerate(universe_names) if e.mask >> i & 1
                        ],
                        "users": list(e.users),
                    }
                    for e in self.excess
                ],
            },
        }

    def dumps(self, universe_names: tuple[str, ...]) -> str:
        return json.dumps(self.to_obj(universe_names), separators=(",", ":"))


def _accounts(n: int) -> list[str]:
    return [f"acct-{i}" for i in range(n)]


def _type_census(cfg: GenConfig) -> tuple[int, int]:
    """(production type count, reserved dev canary count)."""
    n = cfg.n_resource_types
    want_prod = cfg.injected_chains > 0
    prod = max(3, round(0.2 * n)) if n >= 5 else (1 if want_prod else 0)
    reserved = (1 if cfg.pct_temporal > 0 else 0) + (1 if cfg.pct_scoped > 0 else 0)
    if n - prod - reserved < 1:
        raise ConfigInvalid(
            f"{n} resource types cannot host {prod} production + "
            f"{reserved} reserved types and still leave one for ordinary grants"
        )
    return prod, reserved


def generate(cfg: GenConfig) -> tuple[PolicyHypergraph, GroundTruth]:
    """Deterministic policy + ground truth for the config's seed."""
    cfg.validate()
    if cfg.profile == "sqrt-grouping":
        return _generate_sqrt(cfg)
    return _generate_standard(cfg)


def _generate_standard(cfg: GenConfig) -> tuple[PolicyHypergraph, GroundTruth]:
    root = Rng(cfg.seed)
    accounts = _accounts(cfg.n_accounts)
    policy = PolicyHypergraph()
    pc = policy.add_vertex(VertexKind.POLICY_CLASS, "cloud")

    prod_count, _reserved = _type_census(cfg)
    rng_t = root.split("types")
    type_ids: list[VertexId] = []
    prod_types: list[VertexId] = []
    for i in range(cfg.n_resource_types):
        prod = i >= cfg.n_resource_types - prod_count
        env = "production" if prod else "development"
        tid = policy.add_vertex(
            VertexKind.RESOURCE_ATTR,
            f"type-{i:02d}",
            account=rng_t.choice(accounts),
            tags={"env": env},
        )
        type_ids.append(tid)
        if prod:
            prod_types.append(tid)
    dev_types = [t for t in type_ids if t not in prod_types]
    jit_type = dev_types[0] if cfg.pct_temporal > 0 else None
    scoped_type = dev_types[1 if cfg.pct_temporal > 0 else 0] if cfg.pct_scoped > 0 else None
    base_types = [t for t in dev_types if t not in (jit_type, scoped_type)]

    rng_r = root.split("resources")
    resource_types: dict[VertexId, tuple[VertexId, ...]] = {}
    resources_by_type: dict[VertexId, list[VertexId]] = {t: [] for t in type_ids}
    width = max(4, len(str(max(cfg.n_resources, 1))))
    for i in range(cfg.n_resources):
        tid = type_ids[i % len(type_ids)]
        env = policy.vertex(tid).tags["env"]
        rid = policy.add_vertex(
            VertexKind.RESOURCE,
            f"res-{i:0{width}d}",
            account=rng_r.choice(accounts),
            tags={"env": env, "type": policy.vertex(tid).name},
        )
        policy.add_assignment(rid, tid)
        resource_types[rid] = (tid,)
        resources_by_type[tid].append(rid)

    rng_role = root.split("roles")
    role_ids: list[VertexId] = []
    for i in range(cfg.n_roles):
        role_ids.append(
            policy.add_vertex(
                VertexKind.USER_ATTR,
                f"role-{i:03d}",
                account=rng_role.choice(accounts),
            )
        )
    elevated = role_ids[len(role_ids) - cfg.injected_chains :] if cfg.injected_chains else []
    base_roles = [r for r in role_ids if r not in elevated]

    rng_u = root.split("users")
    rng_assign = root.split("assignments")
    user_ids: list[VertexId] = []
    user_roles: dict[VertexId, tuple[VertexId, ...]] = {}
    user_account: dict[VertexId, str] = {}
    role_users: dict[VertexId, list[VertexId]] = {r: [] for r in role_ids}
    uwidth = max(4, len(str(max(cfg.n_users, 1))))
    for i in range(cfg.n_users):
        acct = rng_u.choice(accounts)
        uid = policy.add_vertex(
            VertexKind.USER, f"user-{i:0{uwidth}d}", account=acct
        )
        user_ids.append(uid)
        user_account[uid] = acct
        if base_roles:
            lo, hi = cfg.assignments_per_user
            k = rng_assign.randint(lo, min(hi, len(base_roles)))
            mine = sorted(rng_assign.sample(base_roles, k))
            for role in mine:
                policy.add_assignment(uid, role)
                role_users[role].append(uid)
            user_roles[uid] = tuple(mine)
        else:
            user_roles[uid] = ()

    universe = policy.universe
    base_pool = [p for p in BASE_PERM_POOL if p in universe]
    rng_grant = root.split("grants")
    grants: list[Grant] = []

    def add_grant(role, tid, mask, constraints, window, scoped) -> Grant:
        eid = policy.add_association([role], [tid], pc, _names(universe, mask), constraints)
        g = Grant(
            role,
            tid,
            mask,
            eid,
            window=window,
            same_account=scoped,
            member_accounts=(
                (policy.vertex(role).account, policy.vertex(tid).account)
                if scoped
                else ()
            ),
        )
        grants.append(g)
        return g

    for role in base_roles:
        if not base_types:
            break
        p = min(zipf_sample(rng_grant, cfg.perms_per_role[1], cfg.zipf_s), len(base_pool))
        p = max(p, cfg.perms_per_role[0])
        mask = universe.mask_of(rng_grant.sample(base_pool, min(p, len(base_pool))))
        lo, hi = cfg.types_per_role
        t = rng_grant.randint(lo, max(lo, min(hi, len(base_types))))
        t = min(t, len(base_types))
        for tid in sorted(rng_grant.sample(base_types, t)):
            constraints = []
            window = None
            scoped = False
            if rng_grant.random() < cfg.pct_temporal:
                window = ACTIVE_WINDOW if rng_grant.random() < 0.5 else EXPIRED_WINDOW
                constraints.append(TimeWindow(*window))
            if rng_grant.random() < cfg.pct_scoped:
                scoped = True
                constraints.append(SameAccount())
            add_grant(role, tid, mask, constraints, window, scoped)

    # Canary constrained grants on reserved types: deterministic false-positive
    # sources for the constraint-dropping baselines (see module docstring).
    roles_with_users = [r for r in base_roles if role_users[r]]
    read_mask = universe.mask_of(["Read"])
    if jit_type is not None and roles_with_users:
        add_grant(
            roles_with_users[0],
            jit_type,
            read_mask,
            [TimeWindow(*EXPIRED_WINDOW)],
            EXPIRED_WINDOW,
            False,
        )
    if scoped_type is not None and roles_with_users:
        target_acct = policy.vertex(scoped_type).account
        pick = next(
            (r for r in roles_with_users if policy.vertex(r).account != target_acct),
            roles_with_users[0],
        )
        add_grant(pick, scoped_type, read_mask, [SameAccount()], None, True)

    gt = GroundTruth(
        eval_timestamp=EVAL_TS,
        user_roles=user_roles,
        user_account=user_account,
        grants=grants,
        resource_types=resource_types,
        resources_by_type={t: tuple(rs) for t, rs in resources_by_type.items()},
    )

    rng_chain = root.split("chains")
    for i in range(cfg.injected_chains):
        _inject_chain(
            policy,
            gt,
            rng_chain,
            pc,
            source_pool=roles_with_users,
            target=elevated[i],
            prod_types=prod_types,
            role_users=role_users,
        )

    rng_excess = root.split("excess")
    eligible = [r for r in base_roles if any(g.role == r for g in grants)]
    if cfg.injected_excess > len(eligible):
        raise InsufficientEntities(
            f"cannot inject {cfg.injected_excess} excess grants over "
            f"{len(eligible)} granted roles"
        )
    for i, role in enumerate(sorted(rng_excess.sample(eligible, cfg.injected_excess))):
        role_grants = [g for g in gt.grants if g.role == role]
        g = rng_excess.choice(role_grants)
        mask = universe.mask_of(EXCESS_PERM_CYCLE[i % len(EXCESS_PERM_CYCLE)])
        eid = policy.add_association([role], [g.type_id], pc, _names(universe, mask))
        gt.excess.append(
            ExcessRecord(role, g.type_id, mask, eid, tuple(role_users[role]))
        )

    assert not policy.validate(), "generator produced an invalid policy"
    return policy, gt


def _names(universe, mask: int) -> tuple[str, ...]:
    return universe.names_of(mask)


def _inject_chain(
    policy: PolicyHypergraph,
    gt: GroundTruth,
    rng: Rng,
    pc: VertexId,
    source_pool: list[VertexId],
    target: VertexId,
    prod_types: list[VertexId],
    role_users: dict[VertexId, list[VertexId]],
) -> ChainRecord:
    if not source_pool:
        raise InsufficientEntities("no role with assigned users to chain from")
    populated = [t for t in prod_types if gt.resources_by_type.get(t)]
    if not populated:
        raise InsufficientEntities("no production type with resources to target")
    source = rng.choice(source_pool)
    tid = rng.choice(populated)
    mask = policy.universe.mask_of(["Read", "Write"])
    assoc = policy.add_association([target], [tid], pc, _names(policy.universe, mask))
    assign = policy.add_assignment(source, target)
    affected = tuple(sorted(set(role_users.get(source, ())) | set(role_users.get(target, ()))))
    record = ChainRecord(
        assignment_edge=assign,
        association_edge=assoc,
        source_role=source,
        target_role=target,
        type_id=tid,
        mask=mask,
        finding_users=tuple(sorted(role_users.get(source, ()))),
        fact_users=affected,
    )
    gt.chains.append(record)
    return record


def inject_escalation_chain(
    policy: PolicyHypergraph, gt: GroundTruth, rng: Rng
) -> ChainRecord:
    """Add a role-hierarchy link plus a production grant some user can chain to.

    Picks a source role that has users and a target role that is free of
    grants, and records full provenance in the ground truth.
    """
    role_users: dict[VertexId, list[VertexId]] = {}
    for uid, roles in gt.user_roles.items():
        for r in roles:
            role_users.setdefault(r, []).append(uid)
    for users in role_users.values():
        users.sort()
    sources = sorted(r for r, us in role_users.items() if us)
    granted = {g.role for g in gt.grants} | {c.target_role for c in gt.chains}
    granted |= {c.source_role for c in gt.chains}
    all_roles = sorted(v.id for v in policy.vertices_of_kind(VertexKind.USER_ATTR))
    targets = [r for r in all_roles if r not in granted and not role_users.get(r)]
    if not sources or not targets:
        raise InsufficientEntities(
            "chain injection needs a role with users and a spare grant-free role"
        )
    prod_types = sorted(
        t
        for t, rs in gt.resources_by_type.items()
        if rs and policy.vertex(t).tags.get("env") == "production"
    )
    if not prod_types:
        raise InsufficientEntities("no production-tagged resources to target")
    pcs = policy.vertices_of_kind(VertexKind.POLICY_CLASS)
    if not pcs:
        raise InsufficientEntities("no policy class to scope the association")
    return _inject_chain(
        policy,
        gt,
        rng,
        min(p.id for p in pcs),
        source_pool=[sources[0]],
        target=targets[0],
        prod_types=prod_types[:1],
        role_users=role_users,
    )


def _generate_sqrt(cfg: GenConfig) -> tuple[PolicyHypergraph, GroundTruth]:
    """sqrt-grouping profile: ceil(sqrt(n)) groups each side, cross associated."""
    root = Rng(cfg.seed)
    accounts = _accounts(cfg.n_accounts)
    policy = PolicyHypergraph()
    pc = policy.add_vertex(VertexKind.POLICY_CLASS, "cloud")
    g = max(1, math.isqrt(cfg.n_users - 1) + 1) if cfg.n_users > 1 else 1
    per_entity = max(1, round(g / 4))

    rng_g = root.split("groups")
    ua_groups = [
        policy.add_vertex(
            VertexKind.USER_ATTR, f"ua-group-{i:03d}", account=rng_g.choice(accounts)
        )
        for i in range(g)
    ]
    ra_groups = [
        policy.add_vertex(
            VertexKind.RESOURCE_ATTR,
            f"ra-group-{i:03d}",
            account=rng_g.choice(accounts),
            tags={"env": "development"},
        )
        for i in range(g)
    ]

    rng_r = root.split("resources")
    resource_types: dict[VertexId, tuple[VertexId, ...]] = {}
    resources_by_group: dict[VertexId, list[VertexId]] = {r: [] for r in ra_groups}
    width = max(4, len(str(max(cfg.n_resources, 1))))
    for i in range(cfg.n_resources):
        rid = policy.add_vertex(
            VertexKind.RESOURCE,
            f"res-{i:0{width}d}",
            account=rng_r.choice(accounts),
            tags={"env": "development"},
        )
        mine = sorted(rng_r.sample(ra_groups, min(per_entity, len(ra_groups))))
        for gid in mine:
            policy.add_assignment(rid, gid)
            resources_by_group[gid].append(rid)
        resource_types[rid] = tuple(mine)

    rng_u = root.split("users")
    user_roles: dict[VertexId, tuple[VertexId, ...]] = {}
    user_account: dict[VertexId, str] = {}
    uwidth = max(4, len(str(max(cfg.n_users, 1))))
    for i in range(cfg.n_users):
        acct = rng_u.choice(accounts)
        uid = policy.add_vertex(VertexKind.USER, f"user-{i:0{uwidth}d}", account=acct)
        user_account[uid] = acct
        mine = sorted(rng_u.sample(ua_groups, min(per_entity, len(ua_groups))))
        for gid in mine:
            policy.add_assignment(uid, gid)
        user_roles[uid] = tuple(mine)

    universe = policy.universe
    base_pool = [p for p in BASE_PERM_POOL if p in universe]
    rng_grant = root.split("grants")
    grants: list[Grant] = []
    for ua in ua_groups:
        for ra in ra_groups:
            p = min(
                zipf_sample(rng_grant, cfg.perms_per_role[1], cfg.zipf_s),
                len(base_pool),
            )
            mask = universe.mask_of(rng_grant.sample(base_pool, p))
            eid = policy.add_association([ua], [ra], pc, _names(universe, mask))
            grants.append(Grant(ua, ra, mask, eid))

    gt = GroundTruth(
        eval_timestamp=EVAL_TS,
        user_roles=user_roles,
        user_account=user_account,
        grants=grants,
        resource_types=resource_types,
        resources_by_type={t: tuple(rs) for t, rs in resources_by_group.items()},
    )
    assert not policy.validate(), "generator produced an invalid policy"
    return policy, gt


FIXTURE_TYPE_NAMES = (
    "s3-bucket-dev-a",
    "s3-bucket-dev-b",
    "s3-bucket-dev-c",
    "s3-bucket-dev-d",
    "s3-bucket-dev-e",
    "s3-bucket-dev-f",
    "ec2-instance-dev-a",
    "ec2-instance-dev-b",
    "ec2-instance-dev-c",
    "ec2-instance-dev-d",
    "ec2-instance-dev-e",
    "shared-services",
    "s3-bucket-prod",
    "ec2-instance-prod",
    "rds-database",
)
FIXTURE_PROD_TYPES = ("s3-bucket-prod", "ec2-instance-prod", "rds-database")


def make_fixture_usecase(excess_roles: int = 8) -> tuple[PolicyHypergraph, GroundTruth]:
    """Deterministic multi-account fixture: 250 users, 45 roles, 400
    resources over 15 types, with one injected role-chaining escalation
    (Alice, Developer -> PowerUser -> ProductionDB) and ``excess_roles``
    injected over-privilege grants."""
    rng = Rng(0x20250601)
    accounts = _accounts(4)
    policy = PolicyHypergraph()
    pc = policy.add_vertex(VertexKind.POLICY_CLASS, "aws")

    type_ids: dict[str, VertexId] = {}
    for name in FIXTURE_TYPE_NAMES:
        env = "production" if name in FIXTURE_PROD_TYPES else "development"
        type_ids[name] = policy.add_vertex(
            VertexKind.RESOURCE_ATTR,
            name,
            account=rng.choice(accounts),
            tags={"env": env},
        )
    dev_type_names = [n for n in FIXTURE_TYPE_NAMES if n not in FIXTURE_PROD_TYPES]

    resource_types: dict[VertexId, tuple[VertexId, ...]] = {}
    resources_by_type: dict[VertexId, list[VertexId]] = {
        t: [] for t in type_ids.values()
    }

    def add_resource(name: str, type_name: str) -> VertexId:
        tid = type_ids[type_name]
        env = policy.vertex(tid).tags["env"]
        rid = policy.add_vertex(
            VertexKind.RESOURCE,
            name,
            account=rng.choice(accounts),
            tags={"env": env, "type": type_name},
        )
        policy.add_assignment(rid, tid)
        resource_types[rid] = (tid,)
        resources_by_type[tid].append(rid)
        return rid

    add_resource("ProductionDB", "rds-database")
    s3_dev = [n for n in dev_type_names if n.startswith("s3-")]
    for i in range(1, 171):
        add_resource(f"bucket-{i:03d}", s3_dev[(i - 1) % len(s3_dev)])
    for i in range(171, 181):
        add_resource(f"bucket-{i:03d}", "s3-bucket-prod")
    ec2_dev = [n for n in dev_type_names if n.startswith("ec2-")]
    for i in range(1, 211):
        add_resource(f"instance-{i:03d}", ec2_dev[(i - 1) % len(ec2_dev)])
    for i in range(211, 220):
        add_resource(f"instance-{i:03d}", "ec2-instance-prod")

    developer = policy.add_vertex(VertexKind.USER_ATTR, "Developer", account=accounts[0])
    power_user = policy.add_vertex(VertexKind.USER_ATTR, "PowerUser", account=accounts[0])
    other_roles = [
        policy.add_vertex(
            VertexKind.USER_ATTR, f"role-{i:02d}", account=rng.choice(accounts)
        )
        for i in range(2, 45)
    ]

    alice = policy.add_vertex(VertexKind.USER, "Alice", account=accounts[0])
    users = [alice]
    for i in range(1, 250):
        users.append(
            policy.add_vertex(
                VertexKind.USER, f"user-{i:03d}", account=rng.choice(accounts)
            )
        )

    user_roles: dict[VertexId, tuple[VertexId, ...]] = {}
    user_account = {u: policy.vertex(u).account for u in users}
    role_users: dict[VertexId, list[VertexId]] = {
        r: [] for r in [developer, power_user] + other_roles
    }
    dev_users = users[:12]  # Alice plus eleven colleagues hold Developer
    for uid in dev_users:
        policy.add_assignment(uid, developer)
        role_users[developer].append(uid)
        user_roles[uid] = (developer,)
    for uid in users[12:]:
        k = rng.randint(1, 3)
        mine = sorted(rng.sample(other_roles, k))
        for role in mine:
            policy.add_assignment(uid, role)
            role_users[role].append(uid)
        user_roles[uid] = tuple(mine)

    universe = policy.universe
    grants: list[Grant] = []

    def add_grant(role: VertexId, type_name: str, perms: tuple[str, ...]) -> None:
        tid = type_ids[type_name]
        mask = universe.mask_of(perms)
        eid = policy.add_association([role], [tid], pc, perms)
        grants.append(Grant(role, tid, mask, eid))

    add_grant(developer, "s3-bucket-dev-a", ("Read", "List"))
    add_grant(developer, "s3-bucket-dev-b", ("Read", "Write", "List"))
    perm_menu = (("Read",), ("Read", "List"), ("Read", "Write"), ("Read", "Write", "List"))
    for role in other_roles:
        for type_name in sorted(rng.sample(dev_type_names, rng.randint(2, 4))):
            add_grant(role, type_name, perm_menu[rng.u64() % len(perm_menu)])

    gt = GroundTruth(
        eval_timestamp=EVAL_TS,
        user_roles=user_roles,
        user_account=user_account,
        grants=grants,
        resource_types=resource_types,
        resources_by_type={t: tuple(rs) for t, rs in resources_by_type.items()},
    )

    # The unintended role inheritance: Developer chains into the grant-free
    # PowerUser role, which alone reaches the production database type.
    _inject_chain(
        policy,
        gt,
        rng,
        pc,
        source_pool=[developer],
        target=power_user,
        prod_types=[type_ids["rds-database"]],
        role_users=role_users,
    )

    eligible = sorted({g.role for g in grants} - {developer})
    for i, role in enumerate(sorted(rng.sample(eligible, min(excess_roles, len(eligible))))):
        role_grants = [g for g in grants if g.role == role]
        g = rng.choice(role_grants)
        mask = universe.mask_of(EXCESS_PERM_CYCLE[i % len(EXCESS_PERM_CYCLE)])
        eid = policy.add_association(
            [role], [g.type_id], pc, universe.names_of(mask)
        )
        gt.excess.append(ExcessRecord(role, g.type_id, mask, eid, tuple(role_users[role])))

    assert not policy.validate(), "fixture must be well-formed"
    return policy, gt
