"""Balanced k-way partitioning with per-part capacity vectors.

Multilevel scheme: coarsen by heavy-edge matching, build an initial
assignment by greedy weighted-bin growth over parts in descending
capacity order, then refine with move-based local search at every level.
Because exact feasibility is NP-hard the solver never fails on an
overfull instance: it sweeps a set of capacity slack factors (and seeds)
and returns the cheapest result that respects the true capacities,
falling back to the least-violating one, with violations itemized.

Ties are always broken by lowest node id, then lowest part index, so a
given (graph, config) pair yields one reproducible result.
"""
from __future__ import annotations

import heapq
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .common import INFINITE, DocumentError, ValidationError
from .reduction import GraphEdge, GraphNode, PartGraph, PartitionAssignment

__all__ = [
    "DEFAULT_SLACK_FACTORS",
    "PartitionConfig",
    "PartitionResult",
    "partition",
    "recompute_cut",
    "balance_ratio",
    "export_graph",
    "import_partition",
    "parse_graph",
    "capacity_fractions",
]

# Ten slack factors spanning 0..50% extra capacity, mirroring a sweep of
# roughly ten balance tolerances with the best capacity-respecting
# result kept.
DEFAULT_SLACK_FACTORS = tuple(Fraction(i, 18) for i in range(10))


@dataclass(frozen=True)
class PartitionConfig:
    slack_factors: tuple[Fraction, ...] = DEFAULT_SLACK_FACTORS
    seeds: tuple[int, ...] = (0, 1, 2, 3)
    refinement_passes: int = 10
    coarsen_floor: int = 64

    def __post_init__(self) -> None:
        factors = tuple(Fraction(s) for s in self.slack_factors)
        if not factors:
            raise ValidationError("slack_factors must be nonempty")
        if list(factors) != sorted(factors):
            raise ValidationError("slack_factors must be sorted ascending")
        if factors[0] < 0:
            raise ValidationError("slack_factors must be nonnegative")
        object.__setattr__(self, "slack_factors", factors)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValidationError("seeds must be nonempty")
        if self.refinement_passes < 1:
            raise ValidationError("refinement_passes must be positive")
        if self.coarsen_floor < 1:
            raise ValidationError("coarsen_floor must be positive")


@dataclass(frozen=True)
class PartitionResult:
    assignment: PartitionAssignment
    cut_weight: int
    per_part_loads: tuple[tuple[int, ...], ...]
    part_capacities: tuple[tuple[int | float, ...], ...]
    violations: tuple[tuple[int, int, int], ...]  # (part, constraint, excess)
    slack: Fraction
    seed: int


class _Mesh:
    """Integer-indexed view of a PartGraph; index order = sorted node ids."""

    __slots__ = ("n", "ncon", "ids", "weights", "adj", "edges")

    def __init__(self, n, ncon, ids, weights, adj, edges):
        self.n = n
        self.ncon = ncon
        self.ids = ids
        self.weights = weights
        self.adj = adj  # adj[u] = list of (v, weight), sorted by v
        self.edges = edges  # list of (u, v, weight) with u < v

    @classmethod
    def from_part_graph(cls, g: PartGraph) -> "_Mesh":
        order = sorted(g.nodes, key=lambda n: n.id)
        index = {n.id: i for i, n in enumerate(order)}
        ncon = g.ncon
        weights = [n.weights for n in order]
        adj: list[list[tuple[int, int]]] = [[] for _ in order]
        edges = []
        seen: set[tuple[int, int]] = set()
        for e in g.edges:
            u, v = index[e.u], index[e.v]
            if u == v:
                raise ValidationError(f"self-loop on node {e.u!r}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValidationError(f"parallel edge {e.u!r}-{e.v!r}")
            seen.add(key)
            edges.append((key[0], key[1], e.weight))
            adj[u].append((v, e.weight))
            adj[v].append((u, e.weight))
        for lst in adj:
            lst.sort()
        return cls(len(order), ncon, [n.id for n in order], weights, adj, edges)


def _coarsen_once(mesh: _Mesh, rng: random.Random) -> tuple[list[int], _Mesh]:
    n = mesh.n
    order = list(range(n))
    rng.shuffle(order)
    mate = [-1] * n
    for u in order:
        if mate[u] != -1:
            continue
        best_v, best_w = -1, -1
        for v, w in mesh.adj[u]:
            if mate[v] == -1 and (w > best_w or (w == best_w and v < best_v)):
                best_v, best_w = v, w
        if best_v == -1:
            mate[u] = u
        else:
            mate[u] = best_v
            mate[best_v] = u
    cmap = [-1] * n
    nc = 0
    for u in range(n):
        if cmap[u] != -1:
            continue
        cmap[u] = nc
        cmap[mate[u]] = nc
        nc += 1
    weights = [[0] * mesh.ncon for _ in range(nc)]
    for u in range(n):
        cu = cmap[u]
        for d in range(mesh.ncon):
            weights[cu][d] += mesh.weights[u][d]
    acc: dict[tuple[int, int], int] = {}
    for u, v, w in mesh.edges:
        cu, cv = cmap[u], cmap[v]
        if cu == cv:
            continue
        key = (cu, cv) if cu < cv else (cv, cu)
        acc[key] = acc.get(key, 0) + w
    edges = [(u, v, w) for (u, v), w in sorted(acc.items())]
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nc)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    for lst in adj:
        lst.sort()
    coarse = _Mesh(nc, mesh.ncon, [str(i) for i in range(nc)],
                   [tuple(w) for w in weights], adj, edges)
    return cmap, coarse


def _coarsen(mesh: _Mesh, seed: int, floor: int) -> list[tuple[_Mesh, list[int] | None]]:
    levels: list[tuple[_Mesh, list[int] | None]] = [(mesh, None)]
    rng = random.Random(seed)
    cur = mesh
    while cur.n > floor:
        cmap, coarse = _coarsen_once(cur, rng)
        if coarse.n >= cur.n:
            break
        levels.append((coarse, cmap))
        cur = coarse
    return levels


def _scaled_caps(caps, slack: Fraction):
    num, den = slack.numerator + slack.denominator, slack.denominator
    out = []
    for vec in caps:
        out.append(tuple(c if c == INFINITE else (c * num) // den for c in vec))
    return out


def _fits(load, weight, cap) -> bool:
    for d in range(len(weight)):
        c = cap[d]
        if c != INFINITE and load[d] + weight[d] > c:
            return False
    return True


def _initial_assign(mesh: _Mesh, caps, rng: random.Random) -> list[int]:
    """Greedy weighted-bin growth over parts in descending capacity order.

    The seed node of each growth round is drawn from the few heaviest
    unassigned nodes, which is what differentiates the sweep's seeds on
    graphs too small to coarsen.
    """
    n, ncon, l = mesh.n, mesh.ncon, len(caps)
    part = [-1] * n
    loads = [[0] * ncon for _ in range(l)]
    by_weight = sorted(range(n), key=lambda u: (tuple(-w for w in mesh.weights[u]), u))
    part_order = sorted(range(l), key=lambda k: (tuple(-c for c in caps[k]), k))
    unassigned = n
    conn = [0] * n
    stamp = [-1] * n  # conn[u] valid only when stamp[u] == current part
    for k in part_order:
        if unassigned == 0:
            break
        heap: list[tuple[int, int, int]] = []  # (-conn, -weight0, node)
        while True:
            pick = -1
            while heap:
                negc, negw, u = heapq.heappop(heap)
                if part[u] != -1 or stamp[u] != k or -negc != conn[u]:
                    continue
                if _fits(loads[k], mesh.weights[u], caps[k]):
                    pick = u
                break
            if pick == -1:
                fitting = [
                    u for u in by_weight
                    if part[u] == -1 and _fits(loads[k], mesh.weights[u], caps[k])
                ]
                if not fitting:
                    break
                pick = rng.choice(fitting[: max(1, min(4, len(fitting)))])
            part[pick] = k
            unassigned -= 1
            for d in range(ncon):
                loads[k][d] += mesh.weights[pick][d]
            for v, w in mesh.adj[pick]:
                if part[v] != -1:
                    continue
                if stamp[v] != k:
                    stamp[v] = k
                    conn[v] = 0
                conn[v] += w
                heapq.heappush(heap, (-conn[v], -mesh.weights[v][0], v))
    # Whatever could not be fitted lands on the part with the most headroom;
    # the resulting overload is reported, not rejected.
    for u in by_weight:
        if part[u] != -1:
            continue
        best_k, best_margin = 0, None
        for k in range(l):
            margin = INFINITE
            for d in range(ncon):
                c = caps[k][d]
                if c != INFINITE:
                    m = c - loads[k][d] - mesh.weights[u][d]
                    if m < margin:
                        margin = m
            if best_margin is None or margin > best_margin:
                best_k, best_margin = k, margin
        part[u] = best_k
        for d in range(ncon):
            loads[best_k][d] += mesh.weights[u][d]
    return part


def _loads_of(mesh: _Mesh, part: list[int], l: int) -> list[list[int]]:
    loads = [[0] * mesh.ncon for _ in range(l)]
    for u in range(mesh.n):
        for d in range(mesh.ncon):
            loads[part[u]][d] += mesh.weights[u][d]
    return loads


def _repair_overloads(mesh: _Mesh, part, loads, caps) -> bool:
    """Move nodes out of overfull parts; may raise the cut to gain room."""
    l = len(caps)
    ncon = mesh.ncon
    changed = False
    while True:
        worst_p, worst_excess = -1, 0
        for k in range(l):
            excess = 0
            for d in range(ncon):
                c = caps[k][d]
                if c != INFINITE and loads[k][d] > c:
                    excess += loads[k][d] - c
            if excess > worst_excess:
                worst_p, worst_excess = k, excess
        if worst_p == -1:
            break
        over_dims = [
            d for d in range(ncon)
            if caps[worst_p][d] != INFINITE and loads[worst_p][d] > caps[worst_p][d]
        ]
        best = None  # (gain, -u, -q)
        best_u = best_q = -1
        for u in range(mesh.n):
            if part[u] != worst_p:
                continue
            wu = mesh.weights[u]
            if not any(wu[d] > 0 for d in over_dims):
                continue
            conn: dict[int, int] = {}
            for v, w in mesh.adj[u]:
                conn[part[v]] = conn.get(part[v], 0) + w
            base = conn.get(worst_p, 0)
            for q in range(l):
                if q == worst_p or not _fits(loads[q], wu, caps[q]):
                    continue
                key = (conn.get(q, 0) - base, -u, -q)
                if best is None or key > best:
                    best, best_u, best_q = key, u, q
        if best is None:
            break
        wu = mesh.weights[best_u]
        for d in range(ncon):
            loads[worst_p][d] -= wu[d]
            loads[best_q][d] += wu[d]
        part[best_u] = best_q
        changed = True
    return changed


def _sequence_pass(mesh: _Mesh, part, loads, caps) -> bool:
    """One move-sequence pass: tentatively apply the best feasible move
    (even a worsening one), lock the node, and finally roll back to the
    best prefix seen.  Returns True when the kept prefix improves the
    cut.

    Candidate moves live in a lazily invalidated heap keyed by
    (-gain, node, part), so equal gains pop the lowest node id first and
    then the lowest part index; moves target only adjacent parts.  The
    pass aborts once a long run of tentative moves fails to find a new
    best prefix, which keeps large levels cheap without hurting the
    short escape sequences that matter.
    """
    ncon = mesh.ncon
    adj = mesh.adj
    n = mesh.n
    stall_limit = 64 + n // 8
    locked = [False] * n
    gen = [0] * n
    heap: list[tuple[int, int, int, int]] = []

    def gains_of(u: int) -> dict[int, int]:
        conn: dict[int, int] = {}
        for v, w in adj[u]:
            pv = part[v]
            conn[pv] = conn.get(pv, 0) + w
        base = conn.pop(part[u], 0)
        return {q: c - base for q, c in conn.items()}

    def push(u: int) -> None:
        for q, gain in gains_of(u).items():
            heapq.heappush(heap, (-gain, u, q, gen[u]))

    for u in range(n):
        if adj[u]:
            push(u)
    trail: list[tuple[int, int, int]] = []  # (node, from, to)
    cum_gain = 0
    best_gain = 0
    best_len = 0
    stall = 0
    while heap and stall < stall_limit:
        neg_gain, u, q, stamp = heapq.heappop(heap)
        if locked[u] or stamp != gen[u] or part[u] == q:
            continue
        gain = gains_of(u).get(q)
        if gain is None:
            continue
        if gain != -neg_gain:
            gen[u] += 1
            push(u)
            continue
        wu = mesh.weights[u]
        if not _fits(loads[q], wu, caps[q]):
            continue
        ku = part[u]
        for d in range(ncon):
            loads[ku][d] -= wu[d]
            loads[q][d] += wu[d]
        part[u] = q
        locked[u] = True
        cum_gain += gain
        trail.append((u, ku, q))
        if cum_gain > best_gain:
            best_gain = cum_gain
            best_len = len(trail)
            stall = 0
        else:
            stall += 1
        for v, _ in adj[u]:
            if not locked[v]:
                gen[v] += 1
                push(v)
    for u, frm, to in reversed(trail[best_len:]):
        wu = mesh.weights[u]
        for d in range(ncon):
            loads[to][d] -= wu[d]
            loads[frm][d] += wu[d]
        part[u] = frm
    return best_gain > 0


def _refine(mesh: _Mesh, part, loads, caps, passes: int) -> None:
    """Move-based local search; never raises the cut while feasibility is
    unchanged (overload repair is the only cut-increasing step)."""
    for _ in range(passes):
        repaired = _repair_overloads(mesh, part, loads, caps)
        improved = _sequence_pass(mesh, part, loads, caps)
        if not improved and not repaired:
            break


def _run_candidate(
    levels, caps_scaled, passes: int, seed: int
) -> tuple[list[int], list[list[int]]]:
    rng = random.Random(seed)
    coarse = levels[-1][0]
    part = _initial_assign(coarse, caps_scaled, rng)
    loads = _loads_of(coarse, part, len(caps_scaled))
    _refine(coarse, part, loads, caps_scaled, passes)
    for li in range(len(levels) - 1, 0, -1):
        cmap = levels[li][1]
        fine = levels[li - 1][0]
        part = [part[cmap[u]] for u in range(fine.n)]
        _refine(fine, part, loads, caps_scaled, passes)
    return part, loads


def _cut_of(mesh: _Mesh, part) -> int:
    total = 0
    for u, v, w in mesh.edges:
        if part[u] != part[v]:
            total += w
    return total


def _violations_of(loads, caps_raw):
    out = []
    for k, vec in enumerate(caps_raw):
        for d, c in enumerate(vec):
            if c != INFINITE and loads[k][d] > c:
                out.append((k, d, loads[k][d] - c))
    return tuple(out)


def _sweep_workers() -> int:
    try:
        return max(1, int(os.environ.get("PLACER_THREADS", "1")))
    except ValueError:
        return 1


def partition(g: PartGraph, cfg: PartitionConfig | None = None) -> PartitionResult:
    """Best assignment across the seed x slack sweep, deterministically.

    Candidates that respect the true capacities win over violating ones;
    within a feasibility class the lowest cut wins, then the smallest and
    fewest violations, then the earliest (slack, seed) pair.
    """
    cfg = cfg or PartitionConfig()
    l = len(g.part_capacities)
    if l == 0:
        raise ValidationError("at least one part capacity is required")
    ncon = len(g.part_capacities[0])
    if any(len(vec) != ncon for vec in g.part_capacities):
        raise ValidationError("part capacity vectors must share one length")
    if any(len(n.weights) != ncon for n in g.nodes):
        raise ValidationError(
            f"node weight vectors must have {ncon} components to match capacities"
        )
    if g.has_infinite_edges():
        raise ValidationError("contract infinite edges before partitioning")

    mesh = _Mesh.from_part_graph(g)
    caps_raw = g.part_capacities
    if mesh.n == 0:
        return PartitionResult(
            PartitionAssignment({}), 0,
            tuple((0,) * ncon for _ in range(l)), caps_raw, (), cfg.slack_factors[0],
            cfg.seeds[0],
        )

    hierarchies = [ _coarsen(mesh, seed, cfg.coarsen_floor) for seed in cfg.seeds ]
    jobs = [
        (si, fi)
        for si in range(len(cfg.seeds))
        for fi in range(len(cfg.slack_factors))
    ]

    def run(job):
        si, fi = job
        caps_scaled = _scaled_caps(caps_raw, cfg.slack_factors[fi])
        part, loads = _run_candidate(
            hierarchies[si], caps_scaled, cfg.refinement_passes,
            cfg.seeds[si] * 8191 + fi,
        )
        cut = _cut_of(mesh, part)
        violations = _violations_of(loads, caps_raw)
        excess = sum(v[2] for v in violations)
        key = (1 if violations else 0, cut, excess, len(violations), fi, si)
        return key, part, loads, violations

    workers = _sweep_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    best_i = min(range(len(outcomes)), key=lambda i: outcomes[i][0])
    key, part, loads, violations = outcomes[best_i]
    si, fi = jobs[best_i]
    assignment = PartitionAssignment({mesh.ids[u]: part[u] for u in range(mesh.n)})
    return PartitionResult(
        assignment=assignment,
        cut_weight=key[1],
        per_part_loads=tuple(tuple(v) for v in loads),
        part_capacities=caps_raw,
        violations=violations,
        slack=cfg.slack_factors[fi],
        seed=cfg.seeds[si],
    )


def recompute_cut(g: PartGraph, a: PartitionAssignment) -> int | float:
    """Exact cut weight of an assignment; infinite when an infinite edge
    crosses parts."""
    part = a.part_of
    total: int | float = 0
    infinite_cut = False
    for e in g.edges:
        try:
            pu, pv = part[e.u], part[e.v]
        except KeyError as exc:
            raise ValidationError(f"unassigned node: {exc.args[0]!r}") from exc
        if pu != pv:
            if e.weight == INFINITE:
                infinite_cut = True
            else:
                total += e.weight
    return INFINITE if infinite_cut else total


def balance_ratio(result: PartitionResult, constraint: int = 0) -> Fraction | None:
    """Min-to-max load ratio over parts with nonzero capacity on the
    constraint; None when every such part is empty."""
    loads = [
        result.per_part_loads[k][constraint]
        for k in range(len(result.per_part_loads))
        if result.part_capacities[k][constraint] != 0
    ]
    if not loads or max(loads) == 0:
        return None
    return Fraction(min(loads), max(loads))


def export_graph(g: PartGraph) -> str:
    """Standard partitioner graph file: header "n m fmt ncon" with
    fmt=011, then one line per node (weights, then neighbor/weight
    pairs, 1-based, ordered by node id)."""
    if g.has_infinite_edges():
        raise ValidationError("apply big-M encoding before exporting infinite edges")
    order = sorted(g.nodes, key=lambda n: n.id)
    index = {n.id: i + 1 for i, n in enumerate(order)}
    ncon = g.ncon
    adj: dict[int, list[tuple[int, int]]] = {i + 1: [] for i in range(len(order))}
    for e in g.edges:
        u, v = index[e.u], index[e.v]
        adj[u].append((v, e.weight))
        adj[v].append((u, e.weight))
    lines = [f"{len(order)} {len(g.edges)} 011 {ncon}"]
    for i, node in enumerate(order, start=1):
        fields = [str(w) for w in node.weights]
        for v, w in sorted(adj[i]):
            fields.append(str(v))
            fields.append(str(w))
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def capacity_fractions(g: PartGraph) -> list[tuple[Fraction, ...]]:
    """Capacities as target fractions of the total, per constraint.

    External tools balance toward part-weight fractions rather than hard
    heterogeneous capacities, so s_k maps to s_k / sum(s); this is an
    approximation of intent, documented here for export call sites.
    Unbounded components map to an even split.
    """
    ncon = g.ncon
    out = []
    for d in range(ncon):
        col = [vec[d] for vec in g.part_capacities]
        if any(c == INFINITE for c in col) or sum(col) == 0:
            out.append(tuple(Fraction(1, len(col)) for _ in col))
        else:
            total = sum(col)
            out.append(tuple(Fraction(c, total) for c in col))
    return [tuple(out[d][k] for d in range(ncon)) for k in range(len(g.part_capacities))]


def import_partition(text: str, g: PartGraph) -> PartitionAssignment:
    """Read one part index per line, node order matching export_graph."""
    order = sorted(g.nodes, key=lambda n: n.id)
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != len(order):
        raise DocumentError(
            f"partition file has {len(lines)} entries for {len(order)} nodes"
        )
    l = len(g.part_capacities)
    part_of = {}
    for node, line in zip(order, lines):
        try:
            p = int(line)
        except ValueError:
            raise DocumentError(f"invalid part index {line!r}") from None
        if not 0 <= p < l:
            raise DocumentError(f"part index {p} out of range for {l} parts")
        part_of[node.id] = p
    return PartitionAssignment(part_of)


def parse_graph(text: str, part_capacities) -> PartGraph:
    """Read a graph file produced by export_graph back into a PartGraph.

    Node ids are synthesized from the 1-based line position (zero padded
    so id order equals file order).
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("%")]
    if not lines:
        raise DocumentError("empty graph file")
    header = lines[0].split()
    if len(header) not in (2, 3, 4):
        raise DocumentError(f"malformed graph header: {lines[0]!r}")
    n, m = int(header[0]), int(header[1])
    fmt = header[2] if len(header) > 2 else "000"
    ncon = int(header[3]) if len(header) > 3 else (1 if fmt.endswith("10") else 0)
    if fmt not in ("011", "11"):
        raise DocumentError(f"unsupported graph format {fmt!r} (need node+edge weights)")
    ncon = ncon or 1
    if len(lines) - 1 != n:
        raise DocumentError(f"graph file has {len(lines) - 1} node lines for n={n}")
    width = len(str(n))
    ids = [f"v{str(i).zfill(width)}" for i in range(1, n + 1)]
    nodes = []
    half_edges: dict[tuple[int, int], int] = {}
    for i, line in enumerate(lines[1:], start=1):
        fields = line.split()
        if len(fields) < ncon or (len(fields) - ncon) % 2 != 0:
            raise DocumentError(f"malformed node line {i}: {line!r}")
        weights = tuple(int(x) for x in fields[:ncon])
        nodes.append(GraphNode(ids[i - 1], weights, ((ids[i - 1], "storage"),)))
        rest = fields[ncon:]
        for j in range(0, len(rest), 2):
            v, w = int(rest[j]), int(rest[j + 1])
            if not 1 <= v <= n:
                raise DocumentError(f"node line {i} references node {v} out of range")
            key = (min(i, v), max(i, v))
            if key in half_edges and half_edges[key] != w:
                raise DocumentError(f"edge {key} has asymmetric weights")
            half_edges[key] = w
    if len(half_edges) != m:
        raise DocumentError(f"graph file lists {len(half_edges)} edges, header says {m}")
    edges = tuple(
        GraphEdge(ids[u - 1], ids[v - 1], w) for (u, v), w in sorted(half_edges.items())
    )
    caps = tuple(tuple(vec) for vec in part_capacities)
    if caps and any(len(vec) != ncon for vec in caps):
        raise DocumentError("part capacity vectors do not match the graph's ncon")
    return PartGraph(tuple(nodes), edges, caps)
