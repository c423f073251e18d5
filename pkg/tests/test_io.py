import io as _io
import json

import hypothesis
import numpy as np
import pytest

import adaptive_htucker as aht
from adaptive_htucker import _htensor as ht
from adaptive_htucker import io

from ._common import (
    dense_shapes,
    full_indices,
    hsvd_from_dense,
    random_dense,
    seeds,
    tree_shapes,
)


@hypothesis.given(shape=dense_shapes(), seed=seeds, tree_shape=tree_shapes)
def test_round_trip(shape, seed, tree_shape):
    values = random_dense(shape, seed)
    v = hsvd_from_dense(values, tree_shape)
    w = io.loads(io.dumps(v))

    assert w.tree == v.tree
    assert w.state == v.state
    np.testing.assert_array_equal(
        ht.to_dense(w, full_indices(shape)), ht.to_dense(v, full_indices(shape))
    )
    for node in v.tree.non_root:
        np.testing.assert_array_equal(w.sigma[node], v.sigma[node])


def test_round_trip_sparse_raw():
    tree = aht.build_tree(3)
    frames = [
        ht.ModeFrame([2, 2 ** 40], [[1.5], [-2.0]]),
        ht.ModeFrame([7], [[1.0]]),
        ht.ModeFrame([0, 1, 9], [[1.0], [0.5], [0.25]]),
    ]
    transfers = {node: np.ones((1, 1, 1)) for node in tree.interior}
    v = ht.HTRep(tree, frames, transfers)

    buf = _io.StringIO()
    io.dump(v, buf)
    buf.seek(0)
    w = io.load(buf)
    assert w.state == ht.RAW
    assert w.sigma is None
    for a, b in zip(v.frames, w.frames):
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.values, b.values)


def test_zero_round_trip():
    z = ht.zeros(aht.build_tree(4, "linear"))
    w = io.loads(io.dumps(z))
    assert w.is_zero
    assert w.tree == z.tree


def test_dumps_is_stable():
    v = hsvd_from_dense(random_dense((3, 4, 5), 0))
    assert io.dumps(v) == io.dumps(io.loads(io.dumps(v)))


def test_array_records_are_wrapped():
    record = io.encode_array(np.arange(1000, dtype=float))
    assert record["shape"] == [1000]
    assert all(len(line) <= 70 for line in record["data"])
    np.testing.assert_array_equal(io.decode_array(record), np.arange(1000))


def _record():
    return io.to_dict(hsvd_from_dense(random_dense((2, 3), 0)))


def _broken_frame(obj):
    obj["frames"][0]["values"]["data"] = ["not base64!"]
    return obj


def _wrong_shape(obj):
    obj["frames"][0]["values"]["shape"] = [5, 5]
    return obj


def _missing_transfer(obj):
    obj["transfers"] = {}
    return obj


def _bad_rank(obj):
    obj["transfers"]["0,1"] = io.encode_array(np.ones((1, 5, 5)))
    return obj


def _wrong_version(obj):
    obj["version"] = 99
    return obj


def _wrong_format(obj):
    obj["format"] = "something.else"
    return obj


def _bad_state(obj):
    obj["state"] = "compressed"
    return obj


@pytest.mark.parametrize(
    "corrupt",
    [
        _broken_frame,
        _wrong_shape,
        _missing_transfer,
        _bad_rank,
        _wrong_version,
        _wrong_format,
        _bad_state,
    ],
)
def test_malformed_records(corrupt):
    obj = corrupt(_record())
    with pytest.raises(aht.FormatError):
        io.from_dict(obj)


@pytest.mark.parametrize("text", ["", "{", "[1, 2]", json.dumps({"a": 1})])
def test_malformed_text(text):
    with pytest.raises(aht.FormatError):
        io.loads(text)
