"""Replication heuristics built on repeated unreplicated planning.

Heuristic 1 plans once with every server shrunk to floor(s/r), then
replays that plan under r permutations of the server set (the first is
the identity so r=1 reproduces the plain plan); coinciding copies
collapse, so tables end up with between 1 and r replicas.

Heuristic 2 splits the servers into r blocks of floor(l/r) (the last
block takes the remainder), plans all tables on each block in turn for
the queries still under consideration, and drops the floor(m/r) cheapest
queries after each round; every table lands exactly once per block, so
each has exactly r replicas.  Final query sites are chosen replica-aware
over all copies.

Both assume roughly equal server capacities; unequal capacities are
tolerated with a warning.
"""
from __future__ import annotations

import random
import warnings as _warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .common import ValidationError
from .evaluate import Placement, best_site
from .partition import PartitionConfig
from .pipeline import plan_workload
from .workload import Server, Workload

__all__ = [
    "ReplicationConfig",
    "heuristic1",
    "heuristic2",
    "max_part_size",
]


@dataclass(frozen=True)
class ReplicationConfig:
    factor: int  # desired replicas per table
    rng_seed: int = 0
    partition: PartitionConfig = field(default_factory=PartitionConfig)


def _check_factor(factor: int, l: int) -> None:
    if factor < 1:
        raise ValidationError("replication factor must be >= 1")
    if factor >= l:
        raise ValidationError(
            f"replication factor {factor} needs more than {l} servers "
            "(with r >= l every table would land on a single server)"
        )


def _warn_capacity(caps: list[int], w: Workload, context: str) -> None:
    if len(set(s.storage_capacity for s in w.servers)) > 1:
        _warnings.warn(
            f"{context}: server capacities are unequal; proceeding with "
            "per-server floors",
            stacklevel=3,
        )
    total = w.total_size()
    if sum(caps) < total:
        _warnings.warn(
            f"{context}: one copy of all tables ({total}) may not fit in the "
            f"round capacity ({sum(caps)})",
            stacklevel=3,
        )
    largest = max((t.size for t in w.tables), default=0)
    if caps and max(caps) < largest:
        _warnings.warn(
            f"{context}: largest table ({largest}) exceeds every round "
            f"capacity (max {max(caps)})",
            stacklevel=3,
        )


def heuristic1(w: Workload, cfg: ReplicationConfig) -> Placement:
    l = len(w.servers)
    _check_factor(cfg.factor, l)
    caps = [s.storage_capacity // cfg.factor for s in w.servers]
    _warn_capacity(caps, w, "heuristic 1")
    shrunk = Workload(
        w.tables,
        w.queries,
        tuple(Server(s.id, c, s.load_capacity) for s, c in zip(w.servers, caps)),
    )
    base = plan_workload(shrunk, cfg.partition).placement
    rng = random.Random(cfg.rng_seed)
    permutations = [list(range(l))]
    for _ in range(cfg.factor - 1):
        perm = list(range(l))
        rng.shuffle(perm)
        permutations.append(perm)
    store = {}
    for t in w.tables:
        home = base.store[t.id][0]
        store[t.id] = tuple(sorted({perm[home] for perm in permutations}))
    partial = Placement(store, {})
    compute = {q.id: best_site(q, partial, w)[0] for q in w.queries}
    return Placement(store, compute)


def heuristic2(w: Workload, cfg: ReplicationConfig) -> Placement:
    l = len(w.servers)
    _check_factor(cfg.factor, l)
    r = cfg.factor
    block_size = l // r
    if block_size == 0:
        raise ValidationError("not enough servers per replication round")
    m = len(w.queries)
    drop = m // r
    remaining = list(w.queries)
    replica_sets: dict[str, list[int]] = {t.id: [] for t in w.tables}
    for i in range(1, r + 1):
        start = (i - 1) * block_size
        end = i * block_size if i < r else l
        block = list(range(start, end))
        block_servers = tuple(w.servers[k] for k in block)
        _warn_capacity(
            [s.storage_capacity for s in block_servers], w, f"heuristic 2 round {i}"
        )
        sub = Workload(w.tables, tuple(remaining), block_servers)
        round_placement = plan_workload(sub, cfg.partition).placement
        for t in w.tables:
            replica_sets[t.id].append(block[round_placement.store[t.id][0]])
        if i < r and remaining:
            costs = {
                q.id: best_site(q, round_placement, sub)[1] for q in remaining
            }
            remaining.sort(key=lambda q: (costs[q.id], q.id))
            remaining = remaining[drop:]
    store = {tid: tuple(sorted(copies)) for tid, copies in replica_sets.items()}
    partial = Placement(store, {})
    compute = {q.id: best_site(q, partial, w)[0] for q in w.queries}
    return Placement(store, compute)


def max_part_size(p: Placement, w: Workload, factor: int = 1) -> tuple[int, Fraction]:
    """Largest per-server stored size, and the ideal r * total / l for
    comparison."""
    l = len(w.servers)
    usage = [0] * l
    sizes = {t.id: t.size for t in w.tables}
    for tid, copies in p.store.items():
        for k in copies:
            usage[k] += sizes.get(tid, 0)
    desired = Fraction(factor * w.total_size(), l) if l else Fraction(0)
    return (max(usage) if usage else 0, desired)
