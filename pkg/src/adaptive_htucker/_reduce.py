"""
Complexity reduction: rank recompression and mode-frame coarsening.
"""
import logging
import math

import attr
import numpy as np

from . import _htensor as ht
from ._common import (
    BINARY_BINNING,
    EXACT_SORT,
    INDEX_DTYPE,
    check_sorting_mode,
    check_tolerance,
)
from ._exceptions import ParameterError

logger = logging.getLogger(__name__)


def kappa_p(m):
    """Quasi-optimality constant of hsvd truncation on ``m`` modes."""
    return math.sqrt(2 * m - 3)


def kappa_c(m, binning=False):
    """Quasi-optimality constant of contraction-based coarsening."""
    base = math.sqrt(m)
    return 2 * base if binning else base


@attr.s(frozen=True, eq=False)
class ContractionSet(object):
    """Per-mode contraction sequences.

    ``values[i][q]`` is the contraction of mode ``i`` at index code
    ``indices[i][q]``.
    """

    indices = attr.ib(converter=tuple)
    values = attr.ib(converter=tuple)


@attr.s(frozen=True, eq=False)
class ProductSet(object):
    """Per-mode index sets whose Cartesian product is kept."""

    indices = attr.ib(converter=tuple)

    @property
    def size(self):
        return sum(idx.size for idx in self.indices)


@attr.s(frozen=True)
class GrowthSequence(object):
    """The exponential growth sequence ``gamma(n) = exp(d * n**(1/b))``."""

    d = attr.ib(converter=float)
    b = attr.ib(default=1.0, converter=float)

    @d.validator
    def _check_d(self, attribute, value):
        if not value > 0:
            raise ParameterError("growth parameter d must be positive")

    @b.validator
    def _check_b(self, attribute, value):
        if not value >= 1:
            raise ParameterError("growth parameter b must be at least 1")

    def __call__(self, n):
        return np.exp(self.d * np.power(np.asarray(n, dtype=float), 1 / self.b))

    @property
    def rho(self):
        """``sup gamma(n) / gamma(n - 1)``, attained at ``n = 1``."""
        return math.exp(self.d)


def contractions(v):
    """Computes the contractions of an hsvd representation.

    For mode ``i`` the contraction at index ``nu`` is the root-sum-square of
    all entries sharing that index, which for nested orthonormal frames is
    ``sqrt(sum_k (U[nu, k] * sigma_k)**2)``.
    """
    ht._require_hsvd(v)
    indices = []
    values = []
    for i, frame in enumerate(v.frames):
        if v.is_zero:
            indices.append(np.zeros(0, dtype=INDEX_DTYPE))
            values.append(np.zeros(0))
            continue
        weighted = frame.values * v.sigma[(i,)]
        indices.append(frame.indices)
        values.append(np.sqrt(np.einsum("nk,nk->n", weighted, weighted)))
    return ContractionSet(indices, values)


def selection_order(c, mode=EXACT_SORT):
    """Orders all contraction entries across modes for budgeted selection.

    :return:
        A tuple ``(modes, positions, values)`` of arrays in selection order.
        ``exact_sort`` orders by decreasing value; ``binary_binning`` only
        groups values into bins ``(max / 2**(b+1), max / 2**b]``. Both break
        ties by mode and index.
    """
    check_sorting_mode(mode)
    modes = np.concatenate(
        [
            np.full(vals.size, i, dtype=INDEX_DTYPE)
            for i, vals in enumerate(c.values)
        ]
    )
    positions = np.concatenate(
        [np.arange(vals.size, dtype=INDEX_DTYPE) for vals in c.values]
    )
    values = np.concatenate(c.values)
    if values.size == 0:
        return modes, positions, values

    if mode == EXACT_SORT:
        primary = -values
    else:
        top = values.max()
        with np.errstate(divide="ignore"):
            ratio = np.where(values > 0, top / values, np.inf)
        primary = np.where(
            np.isfinite(ratio), np.floor(np.log2(ratio)), np.iinfo(np.int32).max
        )

    order = np.lexsort((positions, modes, primary))
    return modes[order], positions[order], values[order]


def _product_set_from_order(c, modes, positions, n):
    out = []
    for i, idx in enumerate(c.indices):
        chosen = positions[:n][modes[:n] == i]
        out.append(np.sort(idx[chosen]))
    return ProductSet(out)


def select_product_set(c, n, mode=EXACT_SORT):
    """Keeps the ``n`` largest contraction entries across all modes.

    :param n:
        The total budget, summed over modes.

    :param mode:
        ``"exact_sort"`` or ``"binary_binning"``.
    """
    if n < 0:
        raise ParameterError("budget must be nonnegative", n)
    modes, positions, _ = selection_order(c, mode)
    return _product_set_from_order(c, modes, positions, int(n))


def mu_estimate(c, s):
    """Root-sum-square of the contraction entries outside a product set."""
    total = 0.0
    for idx, vals, kept in zip(c.indices, c.values, s.indices):
        dropped = vals[~np.isin(idx, kept, assume_unique=True)]
        total += float(np.dot(dropped, dropped))
    return math.sqrt(total)


def restrict(v, s):
    """Restricts a representation to the product set ``s``.

    Frame rows outside ``s`` are removed; the ranks are unchanged and the
    result is raw.
    """
    frames = []
    for frame, kept in zip(v.frames, s.indices):
        frames.append(frame.select(np.isin(frame.indices, kept)))
    if any(frame.size == 0 for frame in frames):
        return ht.zeros(v.tree)
    return ht.HTRep(v.tree, frames, v.transfers, state=ht.RAW)


def _tail(v, node, r):
    tail = v.sigma[node][r:]
    return float(np.dot(tail, tail))


def _capped_ranks(v, cap):
    return {node: min(cap, v.rank(node)) for node in v.tree.non_root}


def _lambda_sq(v, r):
    excluded = ht.excluded_root_child(v.tree, r)
    return sum(
        _tail(v, node, r[node]) for node in v.tree.non_root if node != excluded
    )


def _can_lower(tree, r, node):
    if r[node] <= 1:
        return False
    parent = tree.parent(node)
    if parent != tree.root:
        if r[parent] > (r[node] - 1) * r[tree.sibling(node)]:
            return False
    return True


def recompression_ranks(v, eta):
    """The rank vector used by :func:`recompress`.

    The maximal rank is minimized first by bisection over a common rank cap;
    then single node ranks are lowered, always at the node discarding the
    smallest singular value, as long as the error estimate stays within
    ``eta``. The two root children are always lowered together.
    """
    ht._require_hsvd(v)
    tree = v.tree
    eta_sq = eta * eta
    full = ht.ranks(v)

    lo, hi = 1, max(full.values())
    while lo < hi:
        mid = (lo + hi) // 2
        if _lambda_sq(v, _capped_ranks(v, mid)) <= eta_sq:
            hi = mid
        else:
            lo = mid + 1
    r = _capped_ranks(v, lo)

    c1, c2 = tree.children(tree.root)
    root_pair = (c1, c2)
    budget = eta_sq - _lambda_sq(v, r)
    while True:
        best = None
        for node in tree.non_root:
            if node == c2:
                continue
            if node == c1:
                if r[c1] != r[c2] or not all(
                    _can_lower(tree, r, child) for child in root_pair
                ):
                    continue
            elif not _can_lower(tree, r, node):
                continue
            cost = v.sigma[node][r[node] - 1] ** 2
            if cost <= budget and (best is None or cost < best[0]):
                best = (cost, node)
        if best is None:
            break
        cost, node = best
        budget -= cost
        if node == c1:
            r[c1] -= 1
            r[c2] -= 1
        else:
            r[node] -= 1

    logger.debug("recompression ranks %r for eta=%g", r, eta)
    return r


def recompress(v, eta):
    """Rank recompression to near-minimal ranks within tolerance ``eta``.

    :raises ParameterError:
        For negative ``eta``.

    :return:
        An hsvd representation ``w`` with ``norm(v - w) <= eta``.
    """
    eta = check_tolerance(eta)
    h = ht.hsvd(v)
    if h.is_zero or eta == 0:
        return h
    if eta >= ht.norm(h):
        return ht.zeros(h.tree)
    return ht.truncate(h, recompression_ranks(h, eta))


def coarsening_budget(c, eta, mode=EXACT_SORT):
    """Minimal total budget ``N`` with ``mu_N <= eta`` in selection order."""
    _, _, values = selection_order(c, mode)
    if values.size == 0:
        return 0
    squares = values * values
    # remaining[n] is the dropped mass when keeping the first n entries
    remaining = np.concatenate([np.cumsum(squares[::-1])[::-1], [0.0]])
    return int(np.argmax(remaining <= eta * eta))


def coarsen(v, eta, mode=EXACT_SORT):
    """Coarsens mode frames to the smallest product set with ``mu <= eta``.

    :raises ParameterError:
        For negative ``eta``.
    """
    eta = check_tolerance(eta)
    h = ht.hsvd(v)
    if h.is_zero:
        return h
    if eta >= ht.norm(h):
        return ht.zeros(h.tree)
    c = contractions(h)
    n = coarsening_budget(c, eta, mode)
    logger.debug("coarsening to budget %d of %d", n, sum(h.supports()))
    if n == sum(h.supports()):
        return h
    modes, positions, _ = selection_order(c, mode)
    return restrict(h, _product_set_from_order(c, modes, positions, n))


def combined_reduce(v, eta, alpha, kp, kc, mode=EXACT_SORT):
    """Recompression followed by coarsening with the scaled tolerances
    ``kp * (1 + alpha) * eta`` and ``kc * (kp + 1) * (1 + alpha) * eta``.

    :raises ParameterError:
        For nonpositive ``eta`` or ``alpha``.
    """
    eta = check_tolerance(eta, strict=True)
    alpha = check_tolerance(alpha, name="alpha", strict=True)
    recompressed = recompress(v, kp * (1 + alpha) * eta)
    return coarsen(recompressed, kc * (kp + 1) * (1 + alpha) * eta, mode)
