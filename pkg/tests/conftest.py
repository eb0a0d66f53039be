import json

import pytest

from placer import parse_gdp, parse_workload

# Six tables sized (2,2,2,2,1,1), four queries, three servers of
# capacity 4, transfer costs equal to table sizes.
FIG2_DOC = json.dumps(
    {
        "tables": [
            {"id": "T1", "size": 2},
            {"id": "T2", "size": 2},
            {"id": "T3", "size": 2},
            {"id": "T4", "size": 2},
            {"id": "T5", "size": 1},
            {"id": "T6", "size": 1},
        ],
        "queries": [
            {"id": "Q1", "refs": [
                {"table": "T1", "cost": 2},
                {"table": "T4", "cost": 2},
                {"table": "T5", "cost": 1},
            ]},
            {"id": "Q2", "refs": [
                {"table": "T1", "cost": 2},
                {"table": "T3", "cost": 2},
                {"table": "T6", "cost": 1},
            ]},
            {"id": "Q3", "refs": [
                {"table": "T1", "cost": 2},
                {"table": "T5", "cost": 1},
            ]},
            {"id": "Q4", "refs": [{"table": "T4", "cost": 2}]},
        ],
        "servers": [
            {"id": "S1", "storage_capacity": 4},
            {"id": "S2", "storage_capacity": 4},
            {"id": "S3", "storage_capacity": 4},
        ],
    }
)

# Seven views over two servers of capacity 18: three base tables
# (8, 5, 4), one intermediate pinned to its computation site, two
# materialized views (10, 7) and one query whose result moves for free.
GDP_EXAMPLE_DOC = json.dumps(
    {
        "views": [
            {"id": "V1", "class": "base_table", "size": 8},
            {"id": "V2", "class": "base_table", "size": 5},
            {"id": "V3", "class": "base_table", "size": 4},
            {"id": "V4", "class": "intermediate", "transfer_cost": "inf"},
            {"id": "V5", "class": "materialized_view", "size": 10},
            {"id": "V6", "class": "materialized_view", "size": 7},
            {"id": "V7", "class": "query", "transfer_cost": 0},
        ],
        "arcs": [
            {"consumer": "V4", "producer": "V1", "cost": 8},
            {"consumer": "V4", "producer": "V2", "cost": 5},
            {"consumer": "V5", "producer": "V1", "cost": 8},
            {"consumer": "V5", "producer": "V3", "cost": 4},
            {"consumer": "V6", "producer": "V2", "cost": 5},
            {"consumer": "V6", "producer": "V3", "cost": 4},
            {"consumer": "V7", "producer": "V4", "cost": 8},
            {"consumer": "V7", "producer": "V5", "cost": 10},
            {"consumer": "V7", "producer": "V6", "cost": 7},
        ],
        "servers": [
            {"id": "S1", "storage_capacity": 18},
            {"id": "S2", "storage_capacity": 18},
        ],
    }
)

# The worked solution: V2, V3, V6 and the compute sides of V2, V3, V5 on
# the first server, everything else on the second.
GDP_EXAMPLE_PARTS = {
    **{f"s:{v}": 0 for v in ("V2", "V3", "V6")},
    **{f"s:{v}": 1 for v in ("V1", "V4", "V5", "V7")},
    **{f"c:{v}": 0 for v in ("V2", "V3", "V5")},
    **{f"c:{v}": 1 for v in ("V1", "V4", "V6", "V7")},
}


@pytest.fixture
def fig2():
    return parse_workload(FIG2_DOC)


@pytest.fixture
def gdp_example():
    return parse_gdp(GDP_EXAMPLE_DOC)
