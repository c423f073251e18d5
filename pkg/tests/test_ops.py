import numpy as np
import pytest

from adaptive_htucker import OpCounter, counting, recount_operations
from adaptive_htucker import _htensor as ht
from adaptive_htucker import _ops
from adaptive_htucker._ops import active_counter, count, rule_ops

from ._common import hsvd_from_dense, random_dense


@pytest.mark.parametrize(
    "kind, shape, expected",
    [
        ("matmul", (2, 3, 4), 24),
        ("qr", (10, 3), 180),
        ("qr", (3, 10), 180),
        ("svd", (10, 3), 1260),
        ("sparse", (7, 2), 14),
        ("contraction", (2, 3, 4, 5), 120),
        ("rhs", (9,), 9),
    ],
)
def test_rules(kind, shape, expected):
    assert rule_ops(kind, shape) == expected


def test_no_counter_outside_context():
    assert active_counter() is None
    count("matmul", 2, 2, 2)  # silently ignored


def test_counting_context():
    with counting() as counter:
        assert active_counter() is counter
        count("matmul", 2, 3, 4)
        count("rhs_eval", 100)

    assert active_counter() is None
    assert counter.total == 24
    assert counter.by_kind == {"matmul": 24, "rhs_eval": 100}
    assert counter.events == [("matmul", (2, 3, 4)), ("rhs_eval", (100,))]


def test_nested_contexts():
    outer = OpCounter()
    with counting(outer):
        count("rhs", 5)
        with counting() as inner:
            count("rhs", 7)
        count("rhs", 1)

    assert outer.total == 6
    assert inner.total == 7


def test_continue_counter():
    counter = OpCounter()
    with counting(counter):
        count("rhs", 2)
    with counting(counter):
        count("rhs", 3)
    assert counter.total == 5


def test_recount_matches_total():
    values = random_dense((4, 5, 3), seed=0)
    with counting() as counter:
        v = hsvd_from_dense(values)
        ht.norm(ht.add(v, v))
        count("rhs_eval", 1000)

    assert counter.total > 0
    assert recount_operations(counter.events) == counter.total
    assert counter.by_kind["rhs_eval"] == 1000


def test_counting_is_deterministic():
    values = random_dense((6, 6, 6), seed=1)
    totals = []
    for _ in range(2):
        with counting() as counter:
            v = hsvd_from_dense(values)
            ht.hsvd(ht.add(v, ht.scale(v, 2.0)))
        totals.append(counter.total)
    assert totals[0] == totals[1]


def test_events_can_be_skipped():
    counter = OpCounter(record_events=False)
    with counting(counter):
        _ops.count("matmul", 1, 2, 3)
    assert counter.total == 6
    assert counter.events == []


def test_shapes_are_converted():
    with counting() as counter:
        count("matmul", np.int64(2), 2.0, 3)
    assert counter.events == [("matmul", (2, 2, 3))]
