"""
Operators in hierarchical low-rank form and their adaptive application.

An operator on ``m`` modes is stored like a hierarchical Tucker tensor whose
leaf "frames" are lists of per-mode factors: mode ``i`` carries factors
``A[i][0 .. R_i - 1]`` and every interior node ``a`` a core tensor of shape
``(R_a, R_c1, R_c2)`` with leading dimension 1 at the root. Applying such an
operator to a representation with ranks ``r`` gives ranks ``R_a * r_a``.
"""
import logging
import math

import attr
import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import _alpert, _ops
from . import _htensor as ht
from ._common import (
    EXACT_SORT,
    INDEX_DTYPE,
    check_sorting_mode,
    check_tolerance,
)
from ._dimtree import DimensionTree, build_tree
from ._exceptions import (
    LevelOverflowError,
    ParameterError,
    RankError,
    TreeMismatchError,
)
from ._index import decode, encode
from ._reduce import ContractionSet, contractions, selection_order

logger = logging.getLogger(__name__)

# Upper end of the linear search for the compression level.
_MAX_COMPRESSION_LEVEL = 64


class CompressibleMatrix(object):
    """Interface of a bi-infinite matrix with a compression ladder.

    Subclasses implement :meth:`columns`, :meth:`alpha`,
    :meth:`compression_error` and :attr:`norm_bound`. The compressed matrix
    ``A_j`` has at most ``alpha(j) * 2**j`` entries per row and column and
    satisfies ``norm(A - A_j) <= compression_error(j)``.
    """

    is_identity = False

    #: Compressibility exponent ``s`` used for ``beta(j)``.
    s = 1.0

    @property
    def pattern_key(self):
        """Matrices with equal keys have equal entries."""
        return id(self)

    @property
    def norm_bound(self):
        raise NotImplementedError

    def columns(self, codes, j):
        """Entries of ``A_j`` in the columns ``codes``.

        :return:
            A tuple ``(rows, positions, values)``: row codes, positions into
            ``codes`` and the nonzero values.
        """
        raise NotImplementedError

    def alpha(self, j):
        raise NotImplementedError

    def compression_error(self, j):
        raise NotImplementedError

    def beta(self, j):
        return self.compression_error(j) * 2.0 ** (self.s * j)

    @property
    def compressed_norm_bound(self):
        """A common bound for the norms of ``A`` and every ``A_j``."""
        tail = math.sqrt(
            sum(self.compression_error(j) ** 2 for j in range(256))
        )
        return self.norm_bound + tail


class Identity(object):
    """The identity factor, applied exactly."""

    is_identity = True
    norm_bound = 1.0
    compressed_norm_bound = 1.0
    pattern_key = "identity"

    def compression_error(self, j):
        return 0.0

    def __repr__(self):
        return "IDENTITY"


IDENTITY = Identity()


class VolterraMatrix(CompressibleMatrix):
    """The Volterra operator ``(T v)(t) = int_0^t v`` in multiwavelet
    coordinates.

    ``A_j`` keeps the couplings with level distance at most ``j``, the
    scaling layer counting as level 0. Its error is bounded from the
    closed-form entries: only slot-0 wavelets couple to coarser functions,
    with entries decaying like ``2**(-(p + 1/2) * distance)``.
    """

    norm_bound = 2 / math.pi

    def __init__(self, basis):
        self.basis = basis
        p = basis.p
        self.s = p - 0.5
        lead = max(
            2.0 ** (p - 1) * float(np.max(np.abs(basis.wavelet_lead))),
            float(np.max(np.abs(basis.scaling_lead))),
        )
        self._kappa = abs(basis.moment) / p * lead

    def __repr__(self):
        return "VolterraMatrix(p=%d)" % self.basis.p

    @property
    def p(self):
        return self.basis.p

    @property
    def pattern_key(self):
        return ("volterra", self.basis.p)

    def alpha(self, j):
        return (self.p * (j + 2) + 2.0 ** (j + 1)) * 2.0 ** -j

    def compression_error(self, j):
        s = self.s
        q = 1 / (1 - 2.0 ** -s)
        kappa = self._kappa
        return kappa * 2.0 ** (-(j + 1) * s) * q + self.p * kappa * 2.0 ** (
            -(j + 1) * (s + 1)
        ) * (1 + q)

    def columns(self, codes, j):
        p = self.p
        codes = np.asarray(codes, dtype=INDEX_DTYPE).reshape(-1)
        scaling, level, trans, slot = decode(codes, p)
        slots = np.arange(p, dtype=INDEX_DTYPE)
        rows, cols = [], []

        def emit(row_codes, positions):
            row_codes, positions = np.broadcast_arrays(row_codes, positions)
            rows.append(row_codes.reshape(-1))
            cols.append(positions.reshape(-1))

        pos = np.arange(codes.size, dtype=INDEX_DTYPE)
        wav = ~scaling

        # scaling rows
        couples = scaling | (wav & (slot == 0) & (level <= j))
        emit(slots[np.newaxis], pos[couples][:, np.newaxis])

        # same support
        sel = pos[wav]
        emit(encode(level[sel, None], trans[sel, None], slots, p), sel[:, None])

        # coarser wavelet rows
        for delta in range(1, j + 1):
            sel = pos[wav & (slot == 0) & (level >= delta)]
            if sel.size == 0:
                break
            emit(
                encode(
                    level[sel, None] - delta,
                    trans[sel, None] >> delta,
                    slots,
                    p,
                ),
                sel[:, None],
            )

        # finer slot-0 rows
        wav_pos, scaling_pos = pos[wav], pos[scaling]
        for delta in range(1, j + 1):
            offsets = np.arange(2 ** delta, dtype=INDEX_DTYPE)
            if wav_pos.size:
                emit(
                    encode(
                        level[wav_pos, None] + delta,
                        (trans[wav_pos, None] << delta) + offsets,
                        0,
                        p,
                    ),
                    wav_pos[:, None],
                )
        for finer in range(j + 1):
            offsets = np.arange(2 ** finer, dtype=INDEX_DTYPE)
            if scaling_pos.size:
                emit(
                    encode(finer, offsets, 0, p)[np.newaxis],
                    scaling_pos[:, None],
                )

        rows = np.concatenate(rows)
        positions = np.concatenate(cols)
        values = _alpert.volterra_entries(self.basis, rows, codes[positions])
        keep = values != 0
        return rows[keep], positions[keep], values[keep]

    def section(self, level):
        """The dense section over all functions up to wavelet ``level``."""
        size = self.p * 2 ** (level + 1)
        ht._check_dense_size(size * size)
        codes = np.arange(size, dtype=INDEX_DTYPE)
        return _alpert.volterra_entries(
            self.basis, codes[:, np.newaxis], codes[np.newaxis, :]
        )

    def section_norm(self, level):
        """Spectral norm of :meth:`section`.

        The section spans the piecewise polynomials on ``2**(level + 1)``
        cells, where the operator is ``2**-n (I (x) S + N (x) e0 e0^T)`` with
        ``N`` the strictly lower triangular matrix of ones.
        """
        p = self.p
        cells = 2 ** (level + 1)
        table = self.basis.scaling_table
        scale = 1.0 / cells

        def matvec(x):
            x = np.asarray(x).reshape(cells, p)
            y = x @ table.T
            y[1:, 0] += np.cumsum(x[:-1, 0])
            return scale * y.reshape(-1)

        def rmatvec(x):
            x = np.asarray(x).reshape(cells, p)
            y = x @ table
            y[:-1, 0] += np.cumsum(x[:0:-1, 0])[::-1]
            return scale * y.reshape(-1)

        n = cells * p
        if n <= 512:
            dense = np.column_stack([matvec(e) for e in np.eye(n)])
            return float(np.linalg.norm(dense, 2))
        op = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=matvec, rmatvec=rmatvec, dtype=float
        )
        return float(
            scipy.sparse.linalg.svds(
                op, k=1, tol=1e-12, return_singular_vectors=False
            )[0]
        )


def experiment_omega(m):
    """The scaling ``omega_d = (pi / 2)**d / 2`` of the experiment operator."""
    return 0.5 * (math.pi / 2) ** m


@attr.s(frozen=True, eq=False, repr=False)
class LowRankOp(object):
    """An operator in hierarchical low-rank form.

    :attr:`factors` holds one tuple of factors per mode, either
    :data:`IDENTITY` or :class:`CompressibleMatrix` instances;
    :attr:`cores` maps every interior node to its core tensor.
    """

    tree = attr.ib()
    factors = attr.ib(converter=lambda fs: tuple(tuple(f) for f in fs))
    cores = attr.ib()
    _constants = attr.ib(init=False, factory=dict)

    def __attrs_post_init__(self):
        tree = self.tree
        if len(self.factors) != tree.m:
            raise TreeMismatchError(
                "expected %d factor lists, got %d"
                % (tree.m, len(self.factors))
            )
        for node in tree.interior:
            c1, c2 = tree.children(node)
            shape = np.shape(self.cores[node])
            if len(shape) != 3 or shape[1:] != (self.rank(c1), self.rank(c2)):
                raise RankError("core at %r has shape %r" % (node, shape))
            if node == tree.root and shape[0] != 1:
                raise RankError("the root core must have rank 1")

    def __repr__(self):
        return "LowRankOp(m=%d, max_rank=%d)" % (self.tree.m, self.max_rank)

    def rank(self, node):
        if len(node) == 1:
            return len(self.factors[node[0]])
        if node == self.tree.root:
            return 1
        return np.shape(self.cores[node])[0]

    @property
    def max_rank(self):
        return max(self.rank(node) for node in self.tree.non_root)

    @property
    def constants(self):
        if "C" not in self._constants:
            self._constants["C"] = operator_constants(self)
        return self._constants["C"]


def _as_tree(tree):
    if isinstance(tree, DimensionTree):
        return tree
    return build_tree(tree)


def _diagonal_cores(tree, root):
    cores = {}
    for node in tree.interior:
        if node == tree.root:
            cores[node] = np.asarray(root, dtype=float)[np.newaxis]
        else:
            core = np.zeros((2, 2, 2))
            core[0, 0, 0] = 1
            core[1, 1, 1] = 1
            cores[node] = core
    return cores


def volterra_operator(tree, basis=None, omega=None):
    """The experiment operator ``I - omega (x)_i T`` with ranks 2.

    :param tree:
        A :class:`DimensionTree` or a mode count (balanced tree).

    :param omega:
        Defaults to :func:`experiment_omega`.
    """
    tree = _as_tree(tree)
    if basis is None:
        basis = _alpert.get_basis()
    if omega is None:
        omega = experiment_omega(tree.m)
    factor = VolterraMatrix(basis)
    factors = [(IDENTITY, factor)] * tree.m
    cores = _diagonal_cores(tree, np.diag([1.0, -omega]))
    return LowRankOp(tree, factors, cores)


def sum_operator(tree, factor):
    """The operator ``sum_i I (x) .. (x) B (x) .. (x) I``.

    Interior cores are ``e1 e1^T`` (no ``B`` in the subtree) and the swap
    ``[[0, 1], [1, 0]]`` (exactly one ``B``), the root core is the swap.
    """
    tree = _as_tree(tree)
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    cores = {}
    for node in tree.interior:
        if node == tree.root:
            cores[node] = swap[np.newaxis]
        else:
            core = np.zeros((2, 2, 2))
            core[0, 0, 0] = 1
            core[1] = swap
            cores[node] = core
    return LowRankOp(tree, [(IDENTITY, factor)] * tree.m, cores)


def _absolute_contraction(op, leaf_vectors):
    tree = op.tree
    z = {(i,): vec for i, vec in enumerate(leaf_vectors)}
    for node in reversed(tree.interior):
        c1, c2 = tree.children(node)
        core = np.abs(np.asarray(op.cores[node]))
        z[node] = np.einsum("nab,a,b->n", core, z.pop(c1), z.pop(c2))
    return float(z[tree.root][0])


def operator_constants(op):
    """Conservative constants ``C[i][n]`` bounding the operator around factor
    ``n`` of mode ``i``.

    The error of the compressed application in factor ``(i, n)`` is at most
    ``C[i][n]`` times the error of that factor alone. The constant is the
    core contraction with absolute core entries, the unit vector ``e_n`` at
    leaf ``i`` and factor norm bounds at all other leaves.
    """
    norms = [
        np.array([f.compressed_norm_bound for f in factors])
        for factors in op.factors
    ]
    out = []
    for i, factors in enumerate(op.factors):
        consts = np.zeros(len(factors))
        for n in range(len(factors)):
            leaf = list(norms)
            leaf[i] = np.eye(len(factors))[n]
            consts[n] = _absolute_contraction(op, leaf)
        out.append(consts)
    return tuple(out)


@attr.s(frozen=True)
class OperatorLadder(object):
    """A sequence of operator approximations with decreasing errors.

    ``errors[N]`` bounds the distance of ``operators[N]`` to the operator
    being approximated, and the sequence is assumed non-increasing.
    """

    operators = attr.ib(converter=tuple)
    errors = attr.ib(converter=lambda es: tuple(float(e) for e in es))

    @errors.validator
    def _check_errors(self, attribute, value):
        if len(value) != len(self.operators) or not value:
            raise ParameterError("need one error bound per operator")

    @property
    def tree(self):
        return self.operators[0].tree

    def select(self, tol):
        """The first approximation with error at most ``tol``.

        :raises ParameterError:
            If no member of the ladder is accurate enough.
        """
        for operator, error in zip(self.operators, self.errors):
            if error <= tol:
                return operator
        raise ParameterError(
            "no operator approximation within %g (best %g)"
            % (tol, self.errors[-1])
        )


@attr.s(frozen=True, eq=False)
class SupportPartition(object):
    """Per-mode dyadic shells of a contraction support.

    ``shells[i][p]`` holds the sorted index codes of shell ``p`` of mode
    ``i``, ``p = 0 .. J + 1``, and ``norms[i][p]`` the norm of the
    contraction restricted to it.
    """

    J = attr.ib()
    shells = attr.ib(converter=tuple)
    norms = attr.ib(converter=tuple)

    def support(self, i):
        return sum(shell.size for shell in self.shells[i])


def build_partition(c, J, mode=EXACT_SORT):
    """Splits every contraction support into the shells of its best
    ``2**p``-term approximations.

    Shell 0 holds the largest entry, shell ``p`` the entries ranked
    ``2**(p-1) .. 2**p - 1`` and shell ``J + 1`` all remaining ones. Zero
    entries are not part of the support.
    """
    if int(J) != J or J < 0:
        raise ParameterError("J must be a nonnegative integer", J)
    check_sorting_mode(mode)
    bounds = [0, 1] + [2 ** p for p in range(1, J + 1)]
    shells, norms = [], []
    for idx, vals in zip(c.indices, c.values):
        nonzero = vals > 0
        idx, vals = idx[nonzero], vals[nonzero]
        _, positions, ordered = selection_order(
            ContractionSet([idx], [vals]), mode
        )
        ordered_idx = idx[positions]
        mode_shells, mode_norms = [], []
        for p in range(J + 2):
            lo = bounds[p]
            hi = bounds[p + 1] if p + 1 < len(bounds) else ordered.size
            mode_shells.append(np.sort(ordered_idx[lo:hi]))
            mode_norms.append(float(np.linalg.norm(ordered[lo:hi])))
        shells.append(tuple(mode_shells))
        norms.append(np.array(mode_norms))
    return SupportPartition(J=int(J), shells=shells, norms=norms)


def _check_operands(op, v):
    if op.tree.m != v.tree.m:
        raise TreeMismatchError(
            "operator has %d modes, tensor has %d" % (op.tree.m, v.tree.m)
        )
    if op.tree != v.tree:
        raise TreeMismatchError("operator and tensor use different trees")


def _partition_bound(op, partition):
    J = partition.J
    total = 0.0
    for i, factors in enumerate(op.factors):
        shell_norms = partition.norms[i]
        for n, factor in enumerate(factors):
            if factor.is_identity:
                continue
            inner = sum(
                factor.compression_error(J - p) * shell_norms[p]
                for p in range(J + 1)
            )
            inner += factor.norm_bound * shell_norms[J + 1]
            total += op.constants[i][n] * inner
    return total


def error_bound(op, v, J, mode=EXACT_SORT):
    """Certified bound for the error of the compressed application at
    compression level ``J``.

    :param v:
        An hsvd representation.
    """
    _check_operands(op, v)
    if v.is_zero:
        return 0.0
    return _partition_bound(op, build_partition(contractions(v), J, mode))


def support_bound(op, partition, equi_compressible=False):
    """Per-mode bounds for the support of the compressed application.

    A compressible factor contributes ``2**J * sum_{j <= J} alpha(j)``, an
    identity factor the support of the partition. With
    ``equi_compressible`` factors of a mode with equal patterns are counted
    once.
    """
    J = partition.J
    out = []
    for i, factors in enumerate(op.factors):
        seen = set()
        bound = 0
        for factor in factors:
            key = factor.pattern_key
            if equi_compressible and key in seen:
                continue
            seen.add(key)
            if factor.is_identity:
                bound += partition.support(i)
            else:
                bound += 2 ** J * sum(factor.alpha(j) for j in range(J + 1))
        out.append(int(math.floor(bound + 1e-9)))
    return tuple(out)


def _compressed_block(factor, codes, j):
    rows, positions, values = factor.columns(codes, j)
    out_rows, inverse = np.unique(rows, return_inverse=True)
    mat = scipy.sparse.coo_matrix(
        (values, (inverse.reshape(-1), positions)),
        shape=(out_rows.size, codes.size),
    ).tocsr()
    return out_rows, mat


def _apply_factor(factor, frame, partition, i, cache):
    if factor.is_identity:
        keep = np.isin(frame.indices, np.concatenate(partition.shells[i]))
        return frame.indices[keep], frame.values[keep]

    J = partition.J
    row_parts, value_parts = [], []
    for p in range(J + 1):
        codes = partition.shells[i][p]
        if codes.size == 0:
            continue
        key = (factor.pattern_key, J - p, codes.tobytes())
        if cache is not None and key in cache:
            out_rows, mat = cache[key]
        else:
            out_rows, mat = _compressed_block(factor, codes, J - p)
            if cache is not None:
                cache[key] = (out_rows, mat)
        _ops.count("sparse", mat.nnz, frame.rank)
        row_parts.append(out_rows)
        value_parts.append(mat @ frame.rows_at(codes))

    if not row_parts:
        return np.zeros(0, dtype=INDEX_DTYPE), np.zeros((0, frame.rank))
    rows = np.concatenate(row_parts)
    values = np.vstack(value_parts)
    out_rows, inverse = np.unique(rows, return_inverse=True)
    out = np.zeros((out_rows.size, frame.rank))
    np.add.at(out, inverse.reshape(-1), values)
    return out_rows, out


def _compression_level(op, c, budget, mode):
    for J in range(_MAX_COMPRESSION_LEVEL):
        partition = build_partition(c, J, mode)
        bound = _partition_bound(op, partition)
        if bound <= budget:
            return partition, bound
    raise LevelOverflowError(
        "no compression level up to %d meets the tolerance %g"
        % (_MAX_COMPRESSION_LEVEL, budget)
    )


def apply_adaptive(
    op, v, eta, mode=EXACT_SORT, equi_compressible=False, ladder=None
):
    """Applies ``op`` to ``v`` up to a certified error ``eta``.

    The compression level ``J`` is the smallest one whose
    :func:`error_bound` is within the budget. Shell ``p`` of every mode is
    multiplied with the compressed factor ``A_{J-p}`` and the shell beyond
    ``J`` is dropped. The ranks of the result are ``R_a * r_a``.

    :param ladder:
        An optional :class:`OperatorLadder`; half of ``eta`` is then spent
        on replacing ``op`` by a ladder member.

    :param equi_compressible:
        Reuse compressed blocks between factors with equal patterns.

    :raises ParameterError:
        For nonpositive ``eta``.

    :raises TreeMismatchError:
        If operator and tensor disagree in their modes.

    :return:
        A raw representation.
    """
    eta = check_tolerance(eta, strict=True)
    _check_operands(op, v)
    tree = v.tree
    h = ht.hsvd(v)
    if h.is_zero:
        return ht.zeros(tree, state=ht.RAW)

    budget = eta
    if ladder is not None:
        budget = eta / 2
        op = ladder.select(budget / ht.norm(h))
        _check_operands(op, v)

    c = contractions(h)
    partition, bound = _compression_level(op, c, budget, mode)
    logger.debug(
        "compression level J=%d, bound %g <= %g", partition.J, bound, budget
    )

    cache = {} if equi_compressible else None
    frames = []
    for i, (factors, frame) in enumerate(zip(op.factors, h.frames)):
        results = [
            _apply_factor(factor, frame, partition, i, cache)
            for factor in factors
        ]
        union = np.unique(np.concatenate([rows for rows, _ in results]))
        blocks = [
            ht.ModeFrame(rows, vals).rows_at(union) for rows, vals in results
        ]
        frames.append(ht.ModeFrame(union, np.hstack(blocks)))

    transfers = {}
    for node in tree.interior:
        core = np.asarray(op.cores[node], dtype=float)
        transfer = h.transfers[node]
        _ops.count("contraction", *(core.shape + transfer.shape))
        product = np.einsum("nab,kij->nkaibj", core, transfer)
        shape = tuple(x * y for x, y in zip(core.shape, transfer.shape))
        transfers[node] = product.reshape(shape)

    return ht.HTRep(tree, frames, transfers, state=ht.RAW)


RANK1 = "rank1"
SERIES = "series"
RHS_KINDS = (RANK1, SERIES)


@attr.s(frozen=True)
class RHSSpec(object):
    """The experiment right-hand side ``sum_k c_k (x)_i f_k``.

    ``rank1`` keeps only ``f_0`` with coefficient 1; ``series`` uses
    ``c_k = (1 - tau) * tau**k`` for all ``k >= 0``.
    """

    tree = attr.ib(converter=_as_tree)
    kind = attr.ib(default=RANK1)
    tau = attr.ib(default=0.5, converter=float)
    p = attr.ib(default=4)

    @kind.validator
    def _check_kind(self, attribute, value):
        if value not in RHS_KINDS:
            raise ParameterError("unknown right-hand side kind %r" % (value,))

    @tau.validator
    def _check_tau(self, attribute, value):
        if not 0 < value < 1:
            raise ParameterError("tau must lie in (0, 1), got %r" % value)

    @property
    def m(self):
        return self.tree.m

    def coefficient(self, k):
        if self.kind == RANK1:
            return 1.0 if k == 0 else 0.0
        return (1 - self.tau) * self.tau ** k

    @property
    def norm(self):
        """The exact norm, using that the ``f_k`` are orthonormal."""
        if self.kind == RANK1:
            return 1.0
        return math.sqrt((1 - self.tau) / (1 + self.tau))

    @property
    def nominal_norm(self):
        return 1.0

    def tail(self, K):
        """Norm of the terms beyond ``k = K``."""
        if self.kind == RANK1:
            return 0.0
        tau = self.tau
        return (1 - tau) * tau ** (K + 1) / math.sqrt(1 - tau * tau)

    def terms(self, eta):
        """The smallest ``K`` with ``tail(K) <= eta``."""
        K = 0
        while self.tail(K) > eta:
            K += 1
        return K


def rhs_assemble(rhs, eta):
    """A representation of the right-hand side within ``eta``.

    Half the tolerance goes to truncating the series and half to truncating
    the wavelet expansions of the retained ``f_k``. Every mode shares the
    same frame, whose columns are the truncated expansions.

    :raises ParameterError:
        For nonpositive ``eta``.
    """
    eta = check_tolerance(eta, strict=True)
    tree = rhs.tree
    if eta >= rhs.norm:
        return ht.zeros(tree)

    K = rhs.terms(eta / 2)
    coeffs = np.array([rhs.coefficient(k) for k in range(K + 1)])
    mode_tol = eta / (2 * math.sqrt(tree.m) * float(np.sum(coeffs)))

    basis = _alpert.get_basis(rhs.p)
    vectors = [
        _alpert.fk_coeffs(basis, _alpert.PiecewiseCosSpec(k), mode_tol)
        for k in range(K + 1)
    ]
    union = np.unique(np.concatenate([vec.indices for vec in vectors]))
    values = np.zeros((union.size, K + 1))
    for k, vec in enumerate(vectors):
        values[np.searchsorted(union, vec.indices), k] = vec.values
    frame = ht.ModeFrame(union, values)
    _ops.count("rhs", sum(vec.size for vec in vectors) * tree.m)

    rank = K + 1
    cube = np.zeros((rank, rank, rank))
    cube[np.arange(rank), np.arange(rank), np.arange(rank)] = 1
    transfers = {node: cube for node in tree.interior}
    transfers[tree.root] = np.diag(coeffs)[np.newaxis]
    logger.debug("right-hand side with %d terms, support %d", rank, union.size)
    return ht.HTRep(tree, [frame] * tree.m, transfers, state=ht.RAW)
