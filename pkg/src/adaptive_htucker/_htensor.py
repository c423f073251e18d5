"""
Tensors in hierarchical Tucker form.

A representation stores, for every leaf mode, a :class:`ModeFrame` of sparse
mode vectors (a sorted array of index codes plus a dense ``n x r`` block of
values) and, for every interior node ``a`` with children ``c1, c2``, a dense
transfer tensor of shape ``(r_a, r_c1, r_c2)``. The root transfer tensor has
leading dimension 1.
"""
import logging

import attr
import numpy as np
import scipy.linalg

from . import _ops
from ._common import INDEX_DTYPE, MAX_DENSE_SIZE, revealed_rank
from ._exceptions import (
    DenseSizeError,
    RankError,
    RepresentationStateError,
    TreeMismatchError,
)

logger = logging.getLogger(__name__)

RAW = "raw"
ORTHONORMAL = "orthonormal"
HSVD = "hsvd"
STATES = (RAW, ORTHONORMAL, HSVD)


def _as_indices(indices):
    return np.ascontiguousarray(indices, dtype=INDEX_DTYPE).reshape(-1)


@attr.s(frozen=True, eq=False)
class ModeFrame(object):
    """The mode vectors of one leaf, stored row-sparse.

    ``values[q, k]`` is the entry of column ``k`` at index code
    ``indices[q]``; ``indices`` is strictly increasing.
    """

    indices = attr.ib(converter=_as_indices)
    values = attr.ib(converter=lambda a: np.asarray(a, dtype=float))

    def __attrs_post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.indices.size:
            raise ValueError(
                "frame values must be (n, r) with n matching the indices"
            )
        if self.indices.size > 1 and np.any(np.diff(self.indices) <= 0):
            raise ValueError("frame indices must be strictly increasing")

    @property
    def size(self):
        return self.indices.size

    @property
    def rank(self):
        return self.values.shape[1]

    def rows_at(self, codes):
        """Rows of the frame at arbitrary codes, zero where not stored."""
        codes = _as_indices(codes)
        out = np.zeros((codes.size, self.rank))
        if self.size == 0 or codes.size == 0:
            return out
        pos = np.searchsorted(self.indices, codes)
        pos_c = np.minimum(pos, self.size - 1)
        hit = self.indices[pos_c] == codes
        out[hit] = self.values[pos_c[hit]]
        return out

    def select(self, mask):
        return ModeFrame(self.indices[mask], self.values[mask])

    def with_values(self, values):
        return ModeFrame(self.indices, values)

    def pruned(self):
        """Drops rows that are exactly zero."""
        if self.rank == 0:
            return ModeFrame(self.indices[:0], self.values[:0])
        keep = np.any(self.values != 0, axis=1)
        if keep.all():
            return self
        return self.select(keep)


@attr.s(frozen=True, eq=False)
class HTRep(object):
    """An immutable hierarchical Tucker representation.

    :attr:`state` is one of ``"raw"``, ``"orthonormal"`` or ``"hsvd"``. In
    the hsvd state :attr:`sigma` maps every non-root node to its
    non-increasing, positive singular values.
    """

    tree = attr.ib()
    frames = attr.ib(converter=tuple)
    transfers = attr.ib()
    state = attr.ib(default=RAW)
    sigma = attr.ib(default=None)

    def __attrs_post_init__(self):
        tree = self.tree
        if len(self.frames) != tree.m:
            raise TreeMismatchError(
                "expected %d leaf frames, got %d" % (tree.m, len(self.frames))
            )
        if self.state not in STATES:
            raise ValueError("unknown representation state", self.state)
        if self.state == HSVD and self.sigma is None:
            raise ValueError("hsvd state requires singular values")
        for node in tree.interior:
            c1, c2 = tree.children(node)
            shape = self.transfers[node].shape
            if len(shape) != 3 or shape[1:] != (self.rank(c1), self.rank(c2)):
                raise RankError(
                    "transfer tensor at %r has shape %r" % (node, shape)
                )
            if node == tree.root and shape[0] != 1:
                raise RankError("the root transfer tensor must have rank 1")

    def rank(self, node):
        if len(node) == 1:
            return self.frames[node[0]].rank
        if node == self.tree.root:
            return 1
        return self.transfers[node].shape[0]

    @property
    def is_zero(self):
        return any(self.rank(node) == 0 for node in self.tree.non_root)

    def supports(self):
        """Per-mode number of stored indices."""
        return tuple(frame.size for frame in self.frames)

    @property
    def root_transfer(self):
        return self.transfers[self.tree.root]


def zeros(tree, state=HSVD):
    """The zero tensor: all ranks 0 and empty frames."""
    frames = [
        ModeFrame(np.zeros(0, dtype=INDEX_DTYPE), np.zeros((0, 0)))
        for _ in range(tree.m)
    ]
    transfers = {node: np.zeros((0, 0, 0)) for node in tree.interior}
    transfers[tree.root] = np.zeros((1, 0, 0))
    sigma = None
    if state == HSVD:
        sigma = {node: np.zeros(0) for node in tree.non_root}
    return HTRep(tree, frames, transfers, state=state, sigma=sigma)


def ranks(v):
    """The rank vector of a representation, keyed by non-root node."""
    return {node: v.rank(node) for node in v.tree.non_root}


def max_rank(v):
    return max(ranks(v).values())


def check_admissible(tree, r):
    """Validates a rank vector against the nestedness constraints.

    :param r:
        A mapping from every non-root node of ``tree`` to a nonnegative
        integer.

    :raises RankError:
        If a node is missing or ``r[a] > r[c1] * r[c2]`` for an interior
        ``a``.
    """
    missing = [node for node in tree.non_root if node not in r]
    if missing:
        raise RankError("rank vector misses nodes %r" % (missing,))
    for node in tree.non_root:
        if int(r[node]) != r[node] or r[node] < 0:
            raise RankError("invalid rank %r at %r" % (r[node], node))
    for node in tree.interior[1:]:
        c1, c2 = tree.children(node)
        if r[node] > r[c1] * r[c2]:
            raise RankError(
                "rank %d at %r exceeds %d * %d"
                % (r[node], node, r[c1], r[c2])
            )


def _check_dense_size(size):
    if size > MAX_DENSE_SIZE:
        raise DenseSizeError(
            "dense size %d exceeds the limit of %d" % (size, MAX_DENSE_SIZE)
        )


def _check_same_tree(a, b):
    if a.tree != b.tree:
        raise TreeMismatchError("operands use different dimension trees")


def _require_hsvd(v):
    if v.state != HSVD:
        raise RepresentationStateError(
            "operation requires the hsvd state, got %r" % v.state
        )


def _svd(mat):
    _ops.count("svd", *mat.shape)
    return scipy.linalg.svd(
        mat, full_matrices=False, lapack_driver="gesvd", check_finite=False
    )


def _matricize(values, node):
    shape = values.shape
    lead = int(np.prod(shape[: node[0]], dtype=np.int64))
    mid = int(np.prod(shape[node[0] : node[-1] + 1], dtype=np.int64))
    moved = values.reshape(lead, mid, -1).transpose(1, 0, 2)
    return moved.reshape(mid, -1)


def from_dense(values, tree):
    """Builds the exact hsvd representation of a dense array.

    Array position ``q`` along a mode maps to index code ``q``.

    :param values:
        An array with ``tree.m`` dimensions and at most
        :data:`MAX_DENSE_SIZE` entries.

    :raises TreeMismatchError:
        If the array does not have one dimension per tree mode.

    :raises DenseSizeError:
        For arrays beyond the dense size guard.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != tree.m:
        raise TreeMismatchError(
            "array has %d dimensions, tree has %d modes"
            % (values.ndim, tree.m)
        )
    _check_dense_size(values.size)
    if not np.any(values):
        return zeros(tree)

    bases = {}
    sigma = {}
    for node in tree.non_root:
        u, s, _ = _svd(_matricize(values, node))
        k = revealed_rank(s)
        bases[node] = u[:, :k]
        sigma[node] = s[:k]

    # The root children share their singular values.
    c1, c2 = tree.children(tree.root)
    k = min(sigma[c1].size, sigma[c2].size)
    for child in (c1, c2):
        bases[child] = bases[child][:, :k]
        sigma[child] = sigma[c1][:k]

    frames = [
        ModeFrame(np.arange(values.shape[i]), bases[(i,)])
        for i in range(tree.m)
    ]

    transfers = {}
    for node in tree.interior:
        c1, c2 = tree.children(node)
        u1, u2 = bases[c1], bases[c2]
        if node == tree.root:
            block = values.reshape(u1.shape[0], u2.shape[0])
            transfers[node] = (u1.T @ block @ u2)[np.newaxis]
        else:
            ua = bases[node].reshape(u1.shape[0], u2.shape[0], -1)
            transfers[node] = np.einsum("xa,xyk,yb->kab", u1, ua, u2)

    frames = [frame.pruned() for frame in frames]
    return HTRep(tree, frames, transfers, state=HSVD, sigma=sigma)


def _default_indices(v):
    out = []
    for frame in v.frames:
        top = int(frame.indices[-1]) + 1 if frame.size else 0
        out.append(np.arange(top, dtype=INDEX_DTYPE))
    return out


def to_dense(v, indices=None):
    """Materializes a representation as a dense array.

    :param indices:
        Optional per-mode sequences of index codes selecting the block to
        materialize. By default mode ``i`` covers codes ``0 .. max`` of its
        frame.

    :raises DenseSizeError:
        If the block exceeds :data:`MAX_DENSE_SIZE` entries.
    """
    tree = v.tree
    if indices is None:
        indices = _default_indices(v)
    if len(indices) != tree.m:
        raise TreeMismatchError("need one index list per mode")
    indices = [_as_indices(idx) for idx in indices]
    shape = tuple(idx.size for idx in indices)
    _check_dense_size(int(np.prod(shape, dtype=np.int64)))

    mats = {}
    for i, frame in enumerate(v.frames):
        mats[(i,)] = frame.rows_at(indices[i])

    for node in reversed(tree.interior):
        c1, c2 = tree.children(node)
        m1, m2 = mats.pop(c1), mats.pop(c2)
        transfer = v.transfers[node]
        mats[node] = np.einsum("xa,kab,yb->xyk", m1, transfer, m2).reshape(
            m1.shape[0] * m2.shape[0], transfer.shape[0]
        )

    return mats[tree.root][:, 0].reshape(shape)


def _block_diag3(x, y):
    out = np.zeros(tuple(a + b for a, b in zip(x.shape, y.shape)))
    out[: x.shape[0], : x.shape[1], : x.shape[2]] = x
    out[x.shape[0] :, x.shape[1] :, x.shape[2] :] = y
    return out


def add(a, b):
    """The exact formal sum of two representations.

    Ranks add up node by node and the result is in the raw state.

    :raises TreeMismatchError:
        If ``a`` and ``b`` use different dimension trees.
    """
    _check_same_tree(a, b)
    tree = a.tree

    frames = []
    for fa, fb in zip(a.frames, b.frames):
        union = np.union1d(fa.indices, fb.indices)
        frames.append(
            ModeFrame(union, np.hstack([fa.rows_at(union), fb.rows_at(union)]))
        )

    transfers = {}
    for node in tree.interior:
        ta, tb = a.transfers[node], b.transfers[node]
        if node == tree.root:
            root = np.zeros(
                (1, ta.shape[1] + tb.shape[1], ta.shape[2] + tb.shape[2])
            )
            root[0, : ta.shape[1], : ta.shape[2]] = ta[0]
            root[0, ta.shape[1] :, ta.shape[2] :] = tb[0]
            transfers[node] = root
        else:
            transfers[node] = _block_diag3(ta, tb)

    return HTRep(tree, frames, transfers, state=RAW)


def scale(a, c):
    """Multiplies a representation by a real scalar.

    Scaling by zero returns the zero tensor. The state is kept; in the hsvd
    state the singular values are scaled by ``|c|``.
    """
    c = float(c)
    if c == 0 or a.is_zero:
        return zeros(a.tree, state=a.state if a.state != RAW else HSVD)
    transfers = dict(a.transfers)
    transfers[a.tree.root] = a.root_transfer * c
    sigma = None
    if a.sigma is not None:
        sigma = {node: s * abs(c) for node, s in a.sigma.items()}
    return HTRep(a.tree, a.frames, transfers, state=a.state, sigma=sigma)


def _contract_gram(transfer_a, g1, g2, transfer_b):
    ka, x, y = transfer_a.shape
    kb, p, q = transfer_b.shape
    _ops.count("contraction", ka, x, y, p)
    tmp = np.tensordot(transfer_a, g1, axes=(1, 0))
    _ops.count("contraction", ka, y, p, q)
    tmp = np.tensordot(tmp, g2, axes=(1, 0))
    _ops.count("contraction", ka, p, q, kb)
    return np.tensordot(tmp, transfer_b, axes=([1, 2], [1, 2]))


def inner(a, b):
    """The Euclidean inner product of two represented tensors.

    :raises TreeMismatchError:
        If ``a`` and ``b`` use different dimension trees.
    """
    _check_same_tree(a, b)
    tree = a.tree
    if a.is_zero or b.is_zero:
        return 0.0

    grams = {}
    for i, (fa, fb) in enumerate(zip(a.frames, b.frames)):
        _, pa, pb = np.intersect1d(
            fa.indices, fb.indices, assume_unique=True, return_indices=True
        )
        _ops.count("matmul", fa.rank, pa.size, fb.rank)
        grams[(i,)] = fa.values[pa].T @ fb.values[pb]

    for node in reversed(tree.interior):
        c1, c2 = tree.children(node)
        grams[node] = _contract_gram(
            a.transfers[node],
            grams.pop(c1),
            grams.pop(c2),
            b.transfers[node],
        )

    return float(grams[tree.root][0, 0])


def norm(a):
    """The Euclidean norm of a represented tensor.

    Orthonormal representations read it off the root transfer tensor; raw
    ones are orthonormalized first.
    """
    if a.is_zero:
        return 0.0
    if a.state == RAW:
        a = orthonormalize(a)
    return float(np.linalg.norm(a.root_transfer))


def _qr_reveal(mat):
    """Orthonormal basis ``q`` and coefficients ``f`` with ``mat ~ q @ f``."""
    n, r = mat.shape
    if n == 0 or r == 0:
        return np.zeros((n, 0)), np.zeros((0, r))
    _ops.count("qr", n, r)
    q, rfac = scipy.linalg.qr(mat, mode="economic", check_finite=False)
    w, s, zt = _svd(rfac)
    k = revealed_rank(s)
    _ops.count("matmul", n, q.shape[1], k)
    return q @ w[:, :k], s[:k, np.newaxis] * zt[:k]


def orthonormalize(v):
    """Returns an orthonormal representation of the same tensor.

    Leaf frames get orthonormal columns and interior transfer tensors become
    pairwise orthonormal. Each block is QR factorized and its triangular
    factor rank-revealed by an SVD (threshold :data:`RANK_TOL`), so redundant
    columns are removed on the way up.
    """
    tree = v.tree
    if v.is_zero:
        return zeros(tree, state=ORTHONORMAL)

    frames = []
    factors = {}
    for i, frame in enumerate(v.frames):
        q, f = _qr_reveal(frame.values)
        frames.append(frame.with_values(q))
        factors[(i,)] = f

    transfers = {}
    for node in reversed(tree.interior):
        c1, c2 = tree.children(node)
        f1, f2 = factors.pop(c1), factors.pop(c2)
        if f1.shape[0] == 0 or f2.shape[0] == 0:
            return zeros(tree, state=ORTHONORMAL)
        transfer = v.transfers[node]
        _ops.count("contraction", transfer.shape[0], *f1.shape, f2.shape[1])
        _ops.count("contraction", transfer.shape[0], f1.shape[0], *f2.shape)
        moved = np.einsum("ia,kab,jb->kij", f1, transfer, f2)
        if node == tree.root:
            if not np.any(moved):
                return zeros(tree, state=ORTHONORMAL)
            transfers[node] = moved
            continue
        r, k1, k2 = moved.shape
        q, f = _qr_reveal(moved.reshape(r, k1 * k2).T)
        if q.shape[1] == 0:
            return zeros(tree, state=ORTHONORMAL)
        transfers[node] = q.T.reshape(q.shape[1], k1, k2)
        factors[node] = f

    return HTRep(tree, frames, transfers, state=ORTHONORMAL)


def hsvd(v):
    """Returns the hierarchical SVD of a representation.

    After orthonormalization the root transfer matrix is diagonalized, and
    every interior node then diagonalizes the Gram matrices of its children
    from its own singular values and transfer tensor, top-down. The resulting
    frames are nested and orthonormal, and :attr:`HTRep.sigma` holds the
    singular values of every matricization of the represented tensor.
    """
    if v.state == HSVD:
        return v
    tree = v.tree
    w = orthonormalize(v) if v.state == RAW else v
    if w.is_zero:
        return zeros(tree)

    c1, c2 = tree.children(tree.root)
    x, s, yt = _svd(w.root_transfer[0])
    k = revealed_rank(s)
    if k == 0:
        return zeros(tree)

    transfers = {tree.root: np.diag(s[:k])[np.newaxis]}
    rotations = {c1: x[:, :k], c2: yt[:k].T}
    sigma = {c1: s[:k], c2: s[:k].copy()}

    for node in tree.interior[1:]:
        rot = rotations.pop(node)
        s_node = sigma[node]
        transfer = np.tensordot(rot.T, w.transfers[node], axes=(1, 0))
        _ops.count("matmul", rot.shape[1], rot.shape[0], transfer[0].size)
        weighted = transfer * s_node[:, np.newaxis, np.newaxis]
        k_node, r1, r2 = weighted.shape

        n1, n2 = tree.children(node)
        x1, s1, _ = _svd(weighted.transpose(1, 0, 2).reshape(r1, -1))
        x2, s2, _ = _svd(weighted.transpose(2, 0, 1).reshape(r2, -1))
        k1, k2 = revealed_rank(s1), revealed_rank(s2)
        x1, x2 = x1[:, :k1], x2[:, :k2]

        _ops.count("contraction", k_node, r1, r2, k1)
        _ops.count("contraction", k_node, k1, r2, k2)
        transfers[node] = np.einsum("kab,ai,bj->kij", transfer, x1, x2)
        rotations[n1], rotations[n2] = x1, x2
        sigma[n1], sigma[n2] = s1[:k1], s2[:k2]

    frames = []
    for i, frame in enumerate(w.frames):
        rot = rotations.pop((i,))
        _ops.count("matmul", frame.size, *rot.shape)
        frames.append(frame.with_values(frame.values @ rot))

    return HTRep(tree, frames, transfers, state=HSVD, sigma=sigma)


def _check_rank_vector(v, r):
    check_admissible(v.tree, r)
    for node in v.tree.non_root:
        if r[node] > v.rank(node):
            raise RankError(
                "rank %d at %r exceeds the representation rank %d"
                % (r[node], node, v.rank(node))
            )
    return {node: int(r[node]) for node in v.tree.non_root}


def excluded_root_child(tree, r):
    """The root child whose tail does not enter the error estimate."""
    c1, c2 = tree.children(tree.root)
    return c2 if r[c1] <= r[c2] else c1


def lambda_estimate(v, r):
    """The computable truncation error estimate of an hsvd representation.

    The squared discarded singular values of all non-root nodes are summed,
    except for the root child with the larger retained rank (``c2`` on
    ties), whose spectrum duplicates its sibling's.

    :raises RepresentationStateError:
        If ``v`` is not in the hsvd state.

    :raises RankError:
        For inadmissible ``r`` or ``r`` exceeding the ranks of ``v``.
    """
    _require_hsvd(v)
    r = _check_rank_vector(v, r)
    excluded = excluded_root_child(v.tree, r)
    total = 0.0
    for node in v.tree.non_root:
        if node != excluded:
            tail = v.sigma[node][r[node] :]
            total += float(np.dot(tail, tail))
    return float(np.sqrt(total))


def truncate(v, r):
    """Projects an hsvd representation onto the ranks ``r``.

    With nested hsvd frames the root-first sequence of projections amounts to
    keeping the leading block of every frame and transfer tensor. The result
    is brought back to hsvd form, and its distance to ``v`` is at most
    ``lambda_estimate(v, r)``.
    """
    _require_hsvd(v)
    r = _check_rank_vector(v, r)
    tree = v.tree
    if any(rank == 0 for rank in r.values()):
        return zeros(tree)

    frames = [
        frame.with_values(frame.values[:, : r[(i,)]]).pruned()
        for i, frame in enumerate(v.frames)
    ]
    transfers = {}
    for node in tree.interior:
        c1, c2 = tree.children(node)
        lead = 1 if node == tree.root else r[node]
        transfers[node] = v.transfers[node][:lead, : r[c1], : r[c2]]

    logger.debug("truncating to max rank %d", max(r.values()))
    return hsvd(HTRep(tree, frames, transfers, state=RAW))
