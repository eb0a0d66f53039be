"""Branch-and-bound optimal solvers for small instances.

These exist to verify: they are the ground truth for the exactness tests
of the two reductions and for partitioner quality checks.  They do not
scale past roughly a dozen objects and are not meant to.
"""
from __future__ import annotations

from dataclasses import dataclass

from .common import INFINITE, ValidationError
from .evaluate import Placement, best_site
from .gdp import ViewDag
from .reduction import PartGraph, PartitionAssignment
from .workload import Workload

__all__ = [
    "OracleLimit",
    "OracleResult",
    "optimal_placement",
    "optimal_gdp",
    "optimal_partition",
]


@dataclass(frozen=True)
class OracleLimit:
    max_assignments: int = 100_000_000  # leaf-evaluation budget

    def __post_init__(self) -> None:
        if self.max_assignments < 1:
            raise ValidationError("max_assignments must be positive")


@dataclass(frozen=True)
class OracleResult:
    """`solution` is a Placement for the placement oracles and a
    PartitionAssignment for the partition oracle; None when infeasible
    or when the budget ran out before anything was found."""

    solution: object | None
    cost: int | None
    complete: bool  # search finished within budget
    feasible: bool  # at least one legal solution exists/was found


class _Budget:
    __slots__ = ("left",)

    def __init__(self, limit: OracleLimit):
        self.left = limit.max_assignments

    def spend(self) -> bool:
        if self.left <= 0:
            return False
        self.left -= 1
        return True


def optimal_placement(w: Workload, limit: OracleLimit = OracleLimit()) -> OracleResult:
    """Exact minimum-cost legal placement (tables to servers obeying
    storage capacities, each query sited at its cheapest server).

    Search assigns tables in descending size order and prunes with the
    partial best-site bound: the sum over queries of the cheapest cost
    counting only already-assigned references never exceeds the final
    cost.
    """
    l = len(w.servers)
    if l == 0:
        if w.tables or w.queries:
            return OracleResult(None, None, True, False)
        return OracleResult(Placement({}, {}), 0, True, True)
    order = sorted(w.tables, key=lambda t: (-t.size, t.id))
    remaining = [s.storage_capacity for s in w.servers]
    queries = list(w.queries)
    refs_by_table: dict[str, list[tuple[int, int]]] = {t.id: [] for t in w.tables}
    for qi, q in enumerate(queries):
        for r in q.refs:
            refs_by_table[r.table].append((qi, q.frequency * r.cost))
    miss = [[0] * l for _ in queries]  # cost at server k over assigned refs
    budget = _Budget(limit)
    state = {"best": None, "assign": None, "truncated": False}
    chosen = [0] * len(order)

    def bound() -> int:
        return sum(min(row) for row in miss)

    def dfs(i: int) -> None:
        if state["truncated"]:
            return
        if i == len(order):
            if not budget.spend():
                state["truncated"] = True
                return
            cost = bound()
            if state["best"] is None or cost < state["best"]:
                state["best"] = cost
                state["assign"] = chosen[:]
            return
        if state["best"] is not None and bound() >= state["best"]:
            return
        t = order[i]
        touched = refs_by_table[t.id]
        for k in range(l):
            if remaining[k] < t.size:
                continue
            remaining[k] -= t.size
            chosen[i] = k
            for qi, cost in touched:
                row = miss[qi]
                for k2 in range(l):
                    if k2 != k:
                        row[k2] += cost
            dfs(i + 1)
            for qi, cost in touched:
                row = miss[qi]
                for k2 in range(l):
                    if k2 != k:
                        row[k2] -= cost
            remaining[k] += t.size

    dfs(0)
    if state["assign"] is None:
        return OracleResult(None, None, not state["truncated"], False)
    store = {order[i].id: (state["assign"][i],) for i in range(len(order))}
    partial = Placement(store, {})
    compute = {q.id: best_site(q, partial, w)[0] for q in queries}
    return OracleResult(
        Placement(store, compute), state["best"], not state["truncated"], True
    )


def optimal_gdp(d: ViewDag, limit: OracleLimit = OracleLimit()) -> OracleResult:
    """Exact optimum over all (computation, storage) server pairs obeying
    storage capacities.

    Only the storage side is branched on: once every producer of a view
    has a storage server, the view's cheapest computation server is
    determined independently, so leaves price computation sites by
    direct minimization.
    """
    l = len(d.servers)
    if l == 0:
        if d.views:
            return OracleResult(None, None, True, False)
        return OracleResult(Placement({}, {}), 0, True, True)
    views = list(d.views)
    order = sorted(views, key=lambda v: (-v.size, v.id))
    pos = {v.id: i for i, v in enumerate(order)}
    producers: dict[str, list[tuple[str, int]]] = {v.id: [] for v in views}
    for a in d.arcs:
        producers[a.consumer].append((a.producer, a.cost))
    remaining = [s.storage_capacity for s in d.servers]
    ss = [-1] * len(order)
    budget = _Budget(limit)
    state = {"best": None, "assign": None, "truncated": False}

    def view_contribution(v, storage_of) -> tuple[int, int]:
        """(cost, chosen compute server) for a view with all inputs stored."""
        own = storage_of[v.id]
        best_cost, best_k = None, 0
        for k in range(l):
            if v.transfer_cost == INFINITE and k != own:
                continue
            cost = 0 if k == own else v.transfer_cost
            for pid, c in producers[v.id]:
                if storage_of[pid] != k:
                    cost += c
            if best_cost is None or cost < best_cost:
                best_cost, best_k = cost, k
        return best_cost, best_k

    def bound(depth: int) -> int:
        storage_of = {order[i].id: ss[i] for i in range(depth)}
        total = 0
        for i in range(depth):
            v = order[i]
            if all(pos[pid] < depth for pid, _ in producers[v.id]):
                total += view_contribution(v, storage_of)[0]
        return total

    def dfs(i: int) -> None:
        if state["truncated"]:
            return
        if i == len(order):
            if not budget.spend():
                state["truncated"] = True
                return
            cost = bound(i)
            if state["best"] is None or cost < state["best"]:
                state["best"] = cost
                state["assign"] = ss[:]
            return
        if state["best"] is not None and bound(i) >= state["best"]:
            return
        v = order[i]
        for k in range(l):
            if remaining[k] < v.size:
                continue
            remaining[k] -= v.size
            ss[i] = k
            dfs(i + 1)
            remaining[k] += v.size
        ss[i] = -1

    dfs(0)
    if state["assign"] is None:
        return OracleResult(None, None, not state["truncated"], False)
    storage_of = {order[i].id: state["assign"][i] for i in range(len(order))}
    store = {vid: (k,) for vid, k in storage_of.items()}
    compute = {v.id: view_contribution(v, storage_of)[1] for v in views}
    return OracleResult(
        Placement(store, compute), state["best"], not state["truncated"], True
    )


def optimal_partition(g: PartGraph, limit: OracleLimit = OracleLimit()) -> OracleResult:
    """Exact minimum-cut legal ordered partition: the other side of the
    reduction-exactness equalities."""
    if g.has_infinite_edges():
        raise ValidationError("contract infinite edges before the partition oracle")
    l = len(g.part_capacities)
    if l == 0:
        if g.nodes:
            return OracleResult(None, None, True, False)
        return OracleResult(PartitionAssignment({}), 0, True, True)
    ncon = g.ncon
    order = sorted(g.nodes, key=lambda n: (-n.weights[0], n.id))
    index = {n.id: i for i, n in enumerate(order)}
    adj: list[list[tuple[int, int]]] = [[] for _ in order]
    for e in g.edges:
        u, v = index[e.u], index[e.v]
        adj[u].append((v, e.weight))
        adj[v].append((u, e.weight))
    remaining = [list(vec) for vec in g.part_capacities]
    part = [-1] * len(order)
    # miss[u][k]: cut paid if unassigned u eventually lands in part k,
    # counting only edges to already-assigned neighbors.
    miss = [[0] * l for _ in order]
    budget = _Budget(limit)
    state = {"best": None, "assign": None, "truncated": False}
    partial = [0]

    def lower_bound() -> int:
        lb = partial[0]
        for u in range(len(order)):
            if part[u] == -1:
                lb += min(miss[u])
        return lb

    def dfs(i: int) -> None:
        if state["truncated"]:
            return
        if i == len(order):
            if not budget.spend():
                state["truncated"] = True
                return
            if state["best"] is None or partial[0] < state["best"]:
                state["best"] = partial[0]
                state["assign"] = part[:]
            return
        if state["best"] is not None and lower_bound() >= state["best"]:
            return
        weights = order[i].weights
        for k in range(l):
            room = remaining[k]
            if any(
                room[d] != INFINITE and room[d] < weights[d] for d in range(ncon)
            ):
                continue
            for d in range(ncon):
                if room[d] != INFINITE:
                    room[d] -= weights[d]
            part[i] = k
            partial[0] += miss[i][k]
            for v, w in adj[i]:
                if part[v] == -1:
                    row = miss[v]
                    for k2 in range(l):
                        if k2 != k:
                            row[k2] += w
            dfs(i + 1)
            for v, w in adj[i]:
                if part[v] == -1:
                    row = miss[v]
                    for k2 in range(l):
                        if k2 != k:
                            row[k2] -= w
            partial[0] -= miss[i][k]
            part[i] = -1
            for d in range(ncon):
                if room[d] != INFINITE:
                    room[d] += weights[d]

    dfs(0)
    if state["assign"] is None:
        return OracleResult(None, None, not state["truncated"], False)
    assignment = PartitionAssignment(
        {order[i].id: state["assign"][i] for i in range(len(order))}
    )
    return OracleResult(assignment, state["best"], not state["truncated"], True)
