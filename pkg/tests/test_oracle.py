import json
import random

import pytest

from placer.common import ValidationError
from placer.evaluate import dp_cost, gdp_cost
from placer.oracle import (
    OracleLimit,
    optimal_gdp,
    optimal_partition,
    optimal_placement,
)
from placer.reduction import (
    GraphEdge,
    GraphNode,
    PartGraph,
    build_dp_graph,
    build_gdp_graph,
    contract_infinite_edges,
)
from placer.workload import parse_workload

from helpers import (
    brute_force_gdp_cost,
    brute_force_partition_cut,
    brute_force_placement_cost,
    random_view_dag,
    random_workload,
)


def test_fig2_optimum(fig2):
    result = optimal_placement(fig2)
    assert result.complete and result.feasible
    # The pictured partition costs 5; plain enumeration puts the true
    # optimum at 4.
    assert result.cost == brute_force_placement_cost(fig2) == 4
    assert dp_cost(result.solution, fig2).total_cost == 4
    assert not dp_cost(result.solution, fig2).violations


def test_no_queries_zero_cost():
    w = parse_workload(json.dumps({
        "tables": [{"id": "T1", "size": 2}, {"id": "T2", "size": 1}],
        "queries": [],
        "servers": [{"id": "S1", "storage_capacity": 3}],
    }))
    result = optimal_placement(w)
    assert result.cost == 0 and result.feasible


def test_pigeonhole_infeasible():
    w = parse_workload(json.dumps({
        "tables": [{"id": "T1", "size": 3}, {"id": "T2", "size": 3},
                    {"id": "T3", "size": 1}],
        "queries": [],
        "servers": [{"id": "S1", "storage_capacity": 3},
                     {"id": "S2", "storage_capacity": 3}],
    }))
    result = optimal_placement(w)
    assert result.complete and not result.feasible
    assert result.solution is None


def test_budget_exhaustion_flags_incomplete(fig2):
    result = optimal_placement(fig2, OracleLimit(1))
    assert not result.complete


def test_branch_and_bound_equals_enumeration():
    rng = random.Random(7)
    for _ in range(80):
        w = random_workload(rng, max_tables=5, max_queries=4, max_servers=3)
        expected = brute_force_placement_cost(w)
        result = optimal_placement(w)
        if expected is None:
            assert not result.feasible
        else:
            assert result.cost == expected
            report = dp_cost(result.solution, w)
            assert report.total_cost == expected
            assert not report.violations


def test_gdp_example_optimum(gdp_example):
    result = optimal_gdp(gdp_example)
    assert result.complete and result.feasible
    # Enumerating all sided assignments puts the optimum at 16; the
    # worked solution (46) is feasible but far from it.
    assert result.cost == brute_force_gdp_cost(gdp_example) == 16
    assert result.cost <= 46
    report = gdp_cost(result.solution, gdp_example)
    assert report.total_cost == 16
    assert not report.violations


def test_gdp_single_server():
    from placer.gdp import parse_gdp

    d = parse_gdp(json.dumps({
        "views": [{"id": "V1", "class": "base_table", "size": 2},
                   {"id": "V2", "class": "query"}],
        "arcs": [{"consumer": "V2", "producer": "V1", "cost": 2}],
        "servers": [{"id": "S1", "storage_capacity": 2}],
    }))
    result = optimal_gdp(d)
    assert result.cost == 0


def test_gdp_oracle_equals_enumeration():
    rng = random.Random(17)
    for _ in range(60):
        d = random_view_dag(rng)
        expected = brute_force_gdp_cost(d)
        result = optimal_gdp(d)
        if expected is None:
            assert not result.feasible
        else:
            assert result.cost == expected
            assert gdp_cost(result.solution, d).total_cost == expected


def _node(nid, *weights):
    return GraphNode(nid, tuple(weights), ((nid, "storage"),))


def test_partition_oracle_path_graph():
    g = PartGraph(
        (_node("a", 1), _node("b", 1), _node("c", 1)),
        (GraphEdge("a", "b", 1), GraphEdge("b", "c", 1)),
        ((2,), (1,)),
    )
    result = optimal_partition(g)
    assert result.cost == brute_force_partition_cut(g) == 1


def test_partition_oracle_single_part():
    g = PartGraph(
        (_node("a", 2), _node("b", 3)),
        (GraphEdge("a", "b", 9),),
        ((5,),),
    )
    result = optimal_partition(g)
    assert result.cost == 0


def test_partition_oracle_infeasible():
    g = PartGraph((_node("a", 1),), (), ((0,),))
    result = optimal_partition(g)
    assert result.complete and not result.feasible


def test_partition_oracle_rejects_infinite_edges():
    g = PartGraph(
        (_node("a", 1), _node("b", 1)),
        (GraphEdge("a", "b", float("inf")),),
        ((2,), (2,)),
    )
    with pytest.raises(ValidationError):
        optimal_partition(g)


def test_partition_oracle_equals_enumeration():
    rng = random.Random(23)
    for _ in range(60):
        n = rng.randint(1, 7)
        l = rng.randint(1, 3)
        nodes = tuple(_node(f"n{i}", rng.randint(0, 4)) for i in range(n))
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.4:
                    edges.append(GraphEdge(f"n{i}", f"n{j}", rng.randint(1, 8)))
        total = sum(x.weights[0] for x in nodes)
        caps = tuple((rng.randint(0, max(total, 1)),) for _ in range(l))
        g = PartGraph(nodes, tuple(edges), caps)
        expected = brute_force_partition_cut(g)
        result = optimal_partition(g)
        if expected is None:
            assert not result.feasible
        else:
            assert result.cost == expected


def test_theorem1_equality_random_suite():
    rng = random.Random(1)
    for _ in range(100):
        w = random_workload(rng)
        placement_side = optimal_placement(w)
        partition_side = optimal_partition(build_dp_graph(w))
        assert placement_side.feasible == partition_side.feasible
        if placement_side.feasible:
            assert placement_side.cost == partition_side.cost


def test_theorem2_equality_random_suite():
    rng = random.Random(2)
    for _ in range(60):
        d = random_view_dag(rng)
        gdp_side = optimal_gdp(d)
        contracted, _ = contract_infinite_edges(build_gdp_graph(d))
        partition_side = optimal_partition(contracted)
        assert gdp_side.feasible == partition_side.feasible
        if gdp_side.feasible:
            assert gdp_side.cost == partition_side.cost
