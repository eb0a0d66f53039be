"""Shared instance generators and independent brute-force references.

The enumerators here evaluate the cost definitions directly from the
domain data (no calls into the oracle or evaluation modules) so they can
serve as the other side of equality checks.
"""
from __future__ import annotations

import itertools
import random

from placer.common import INFINITE
from placer.gdp import Arc, ViewClass, ViewDag, make_view, validate_view_dag
from placer.reduction import PartGraph
from placer.workload import Query, QueryRef, Server, Table, Workload


def random_workload(
    rng: random.Random,
    max_tables: int = 8,
    max_queries: int = 6,
    max_servers: int = 3,
    max_size: int = 10,
    headroom: int = 3,
) -> Workload:
    n_t = rng.randint(1, max_tables)
    n_q = rng.randint(0, max_queries)
    l = rng.randint(1, max_servers)
    tables = [Table(f"T{j}", rng.randint(0, max_size)) for j in range(1, n_t + 1)]
    queries = []
    for i in range(1, n_q + 1):
        picked = rng.sample(range(n_t), rng.randint(1, n_t))
        refs = tuple(
            QueryRef(tables[j].id, rng.randint(0, max_size)) for j in sorted(picked)
        )
        queries.append(Query(f"Q{i}", refs, rng.choice([1, 1, 1, 2, 3])))
    total = sum(t.size for t in tables)
    largest = max(t.size for t in tables)
    base = max(largest, -(-total // l))
    servers = [
        Server(f"S{k}", base + rng.randint(0, headroom)) for k in range(1, l + 1)
    ]
    return Workload(tuple(tables), tuple(queries), tuple(servers))


def random_view_dag(
    rng: random.Random, max_views: int = 6, max_servers: int = 2
) -> ViewDag:
    n = rng.randint(1, max_views)
    l = rng.randint(1, max_servers)
    kinds = [
        rng.choice(
            [
                ViewClass.BASE_TABLE,
                ViewClass.QUERY,
                ViewClass.MATERIALIZED_VIEW,
                ViewClass.INTERMEDIATE,
            ]
        )
        for _ in range(n)
    ]
    views = []
    for i, kind in enumerate(kinds):
        vid = f"V{i + 1}"
        if kind in (ViewClass.BASE_TABLE, ViewClass.MATERIALIZED_VIEW):
            size = rng.randint(0, 8)
            move = None
            if kind is ViewClass.MATERIALIZED_VIEW and rng.random() < 0.4:
                move = rng.choice([0, rng.randint(0, 10), INFINITE])
            views.append(make_view(vid, kind, size, move))
        elif kind is ViewClass.QUERY:
            views.append(make_view(vid, kind, 0, rng.choice([None, 0, rng.randint(0, 10)])))
        else:
            views.append(
                make_view(vid, kind, 0, rng.choice([0, rng.randint(0, 10), INFINITE]))
            )
    arcs = []
    for i in range(n):
        if kinds[i] is ViewClass.BASE_TABLE:
            continue
        for j in range(i):
            if kinds[j] is ViewClass.QUERY:
                continue
            if rng.random() < 0.5:
                arcs.append(Arc(f"V{i + 1}", f"V{j + 1}", rng.randint(0, 10)))
    total = sum(v.size for v in views)
    largest = max([v.size for v in views] + [1])
    servers = [
        Server(f"S{k}", max(largest, -(-total // l)) + rng.randint(0, 4))
        for k in range(1, l + 1)
    ]
    d = ViewDag(tuple(views), tuple(arcs), tuple(servers))
    validate_view_dag(d)
    return d


def brute_force_placement_cost(w: Workload) -> int | None:
    """Optimal cost straight from the definition: enumerate every table
    assignment, keep the legal ones, site each query at its min-cost
    server.  None when no legal placement exists."""
    l = len(w.servers)
    if l == 0:
        return 0 if not w.tables and not w.queries else None
    best = None
    for combo in itertools.product(range(l), repeat=len(w.tables)):
        used = [0] * l
        for t, k in zip(w.tables, combo):
            used[k] += t.size
        if any(used[k] > w.servers[k].storage_capacity for k in range(l)):
            continue
        where = {t.id: k for t, k in zip(w.tables, combo)}
        cost = 0
        for q in w.queries:
            cost += q.frequency * min(
                sum(r.cost for r in q.refs if where[r.table] != k) for k in range(l)
            )
        if best is None or cost < best:
            best = cost
    return best


def brute_force_gdp_cost(d: ViewDag) -> int | None:
    """Optimal generalized cost over every (storage, computation) pair,
    straight from the objective."""
    l = len(d.servers)
    if l == 0:
        return 0 if not d.views else None
    views = d.views
    best = None
    for ss in itertools.product(range(l), repeat=len(views)):
        ssm = {v.id: ss[i] for i, v in enumerate(views)}
        used = [0] * l
        for v in views:
            used[ssm[v.id]] += v.size
        if any(used[k] > d.servers[k].storage_capacity for k in range(l)):
            continue
        for cs in itertools.product(range(l), repeat=len(views)):
            csm = {v.id: cs[i] for i, v in enumerate(views)}
            if any(
                v.transfer_cost == INFINITE and csm[v.id] != ssm[v.id] for v in views
            ):
                continue
            cost = sum(a.cost for a in d.arcs if ssm[a.producer] != csm[a.consumer])
            cost += sum(
                v.transfer_cost for v in views if csm[v.id] != ssm[v.id]
            )
            if best is None or cost < best:
                best = cost
    return best


def brute_force_partition_cut(g: PartGraph) -> int | None:
    """Minimum legal cut by enumerating every ordered partition."""
    l = len(g.part_capacities)
    nodes = sorted(g.nodes, key=lambda n: n.id)
    if l == 0:
        return 0 if not nodes else None
    ncon = g.ncon
    best = None
    index = {n.id: i for i, n in enumerate(nodes)}
    for combo in itertools.product(range(l), repeat=len(nodes)):
        used = [[0] * ncon for _ in range(l)]
        for n, k in zip(nodes, combo):
            for d in range(ncon):
                used[k][d] += n.weights[d]
        legal = all(
            g.part_capacities[k][d] == INFINITE or used[k][d] <= g.part_capacities[k][d]
            for k in range(l)
            for d in range(ncon)
        )
        if not legal:
            continue
        cut = 0
        infinite = False
        for e in g.edges:
            if combo[index[e.u]] != combo[index[e.v]]:
                if e.weight == INFINITE:
                    infinite = True
                    break
                cut += e.weight
        if infinite:
            continue
        if best is None or cut < best:
            best = cut
    return best
