"""
Reading and writing representations as JSON.

Numeric arrays are stored as zlib-compressed little-endian bytes, base64
encoded and wrapped into lines of 70 characters, so files stay diffable and
reasonably small.
"""
import base64
import binascii
import json
import textwrap
import zlib

import numpy as np

from . import _htensor as ht
from ._dimtree import build_tree
from ._exceptions import FormatError

FORMAT_NAME = "adaptive_htucker.htrep"
FORMAT_VERSION = 1

_DTYPES = {"float64": "<f8", "int64": "<i8"}


def encode_array(arr, dtype="float64"):
    arr = np.ascontiguousarray(arr, dtype=_DTYPES[dtype])
    raw = base64.b64encode(zlib.compress(arr.tobytes())).decode("utf-8")
    return {
        "dtype": dtype,
        "shape": list(arr.shape),
        "data": textwrap.wrap(raw, width=70),
    }


def decode_array(obj):
    try:
        dtype = _DTYPES[obj["dtype"]]
        shape = tuple(int(n) for n in obj["shape"])
        raw = zlib.decompress(base64.b64decode("".join(obj["data"])))
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    except (KeyError, TypeError, ValueError, zlib.error, binascii.Error) as e:
        raise FormatError("malformed array record: %s" % e)


def _node_key(node):
    return ",".join(str(i) for i in node)


def to_dict(v):
    """The JSON-compatible form of a representation."""
    tree = v.tree
    out = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "tree": {"m": tree.m, "shape": tree.shape},
        "state": v.state,
        "frames": [
            {
                "indices": encode_array(frame.indices, "int64"),
                "values": encode_array(frame.values),
            }
            for frame in v.frames
        ],
        "transfers": {
            _node_key(node): encode_array(v.transfers[node])
            for node in tree.interior
        },
        "sigma": None,
    }
    if v.sigma is not None:
        out["sigma"] = {
            _node_key(node): encode_array(v.sigma[node])
            for node in tree.non_root
        }
    return out


def from_dict(obj):
    """Rebuilds a representation from :func:`to_dict` output.

    :raises FormatError:
        If the record is not a valid serialized representation.
    """
    if not isinstance(obj, dict) or obj.get("format") != FORMAT_NAME:
        raise FormatError("not a serialized representation")
    if obj.get("version") != FORMAT_VERSION:
        raise FormatError("unsupported format version %r" % obj.get("version"))
    try:
        tree = build_tree(obj["tree"]["m"], obj["tree"]["shape"])
        frames = [
            ht.ModeFrame(
                decode_array(frame["indices"]), decode_array(frame["values"])
            )
            for frame in obj["frames"]
        ]
        transfers = {
            node: decode_array(obj["transfers"][_node_key(node)])
            for node in tree.interior
        }
        sigma = obj["sigma"]
        if sigma is not None:
            sigma = {
                node: decode_array(sigma[_node_key(node)])
                for node in tree.non_root
            }
        return ht.HTRep(
            tree, frames, transfers, state=obj["state"], sigma=sigma
        )
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError("invalid representation record: %s" % e)


def dumps(v):
    return json.dumps(to_dict(v), indent=2, sort_keys=True)


def loads(s):
    try:
        obj = json.loads(s)
    except ValueError as e:
        raise FormatError("invalid JSON: %s" % e)
    return from_dict(obj)


def dump(v, fp):
    """Writes a representation to a text file object."""
    json.dump(to_dict(v), fp, indent=2, sort_keys=True)


def load(fp):
    """Reads a representation written by :func:`dump`.

    :raises FormatError:
        For malformed input.
    """
    return loads(fp.read())
