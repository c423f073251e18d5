"""
Alpert multiwavelets of order ``p`` on ``[0, 1]``.

The scaling layer consists of the orthonormal Legendre polynomials of degree
``< p`` on ``[0, 1]``. Wavelet slot ``s`` on level 0 is piecewise polynomial
on the two halves of ``[0, 1]``, orthogonal to all polynomials of degree
``< p + s`` and to the other slots. Level ``j`` wavelets are the dilates
``2**(j/2) * psi_s(2**j * x - k)``.

All tables are computed once per order in exact rational arithmetic and only
then rounded to floating point.
"""
import functools
import heapq
import logging
import math
import threading

import attr
import numpy as np
import sympy

from . import _ops
from ._common import INDEX_DTYPE, check_tolerance
from ._exceptions import LevelOverflowError
from ._index import check_level, decode, encode, max_level

logger = logging.getLogger(__name__)

_PRECISION = 40


def _num(expr):
    return float(sympy.N(expr, _PRECISION))


def _poly_coeffs(expr, var, p):
    coeffs = sympy.Poly(sympy.expand(expr), var).all_coeffs()[::-1]
    return list(coeffs) + [sympy.Integer(0)] * (p - len(coeffs))


def _unnormalized_wavelets(p, u):
    """Rational coefficient vectors of the wavelets, slot by slot.

    Entries ``0 .. p-1`` are the left piece and ``p .. 2p-1`` the right piece,
    both in the local coordinate ``u`` of their half.
    """
    gram = sympy.zeros(2 * p, 2 * p)
    for h in range(2):
        for q in range(p):
            for r in range(p):
                gram[h * p + q, h * p + r] = sympy.Rational(1, 2 * (q + r + 1))

    def moment_row(n):
        row = []
        for h in range(2):
            for q in range(p):
                integrand = ((u + h) / 2) ** n * u ** q
                row.append(sympy.integrate(integrand, (u, 0, 1)) / 2)
        return row

    wavelets = {}
    for slot in reversed(range(p)):
        rows = [moment_row(n) for n in range(p + slot)]
        for other in wavelets.values():
            rows.append(list(gram * other))
        null = sympy.Matrix(rows).nullspace()
        if len(null) != 1:  # pragma: nocover
            raise RuntimeError("degenerate multiwavelet construction")
        vec = null[0]
        ordered = list(vec[p:]) + list(vec[:p])
        lead = next(c for c in ordered if c != 0)
        if lead < 0:
            vec = -vec
        wavelets[slot] = vec
    return [wavelets[slot] for slot in range(p)], gram


@attr.s(frozen=True, eq=False, repr=False)
class MultiwaveletBasis(object):
    """Floating point tables of the order-``p`` Alpert basis.

    :attr:`scaling_coeffs` holds monomial coefficients in ``x`` on ``[0, 1]``,
    :attr:`wavelet_coeffs` monomial coefficients per half (axis 0) in the
    local coordinate of that half. :attr:`filters_h` and :attr:`filters_g`
    are the two-scale relations of the scaling functions and wavelets.
    :attr:`scaling_table` and :attr:`wavelet_table` are the level-0 entries
    ``<T phi_a, phi_b>`` and ``<T psi_a, psi_b>`` (row ``b``, column ``a``)
    of the Volterra operator, and :attr:`moment` is ``int x**p psi_0``.
    """

    p = attr.ib()
    scaling_coeffs = attr.ib()
    wavelet_coeffs = attr.ib()
    filters_h = attr.ib()
    filters_g = attr.ib()
    scaling_table = attr.ib()
    wavelet_table = attr.ib()
    moment = attr.ib()

    def __repr__(self):
        return "MultiwaveletBasis(p=%d)" % self.p

    @property
    def max_level(self):
        return max_level(self.p)

    @property
    def scaling_lead(self):
        return self.scaling_coeffs[:, -1]

    @property
    def wavelet_lead(self):
        return self.wavelet_coeffs[:, :, -1]

    def evaluate(self, codes, x):
        """Values of the basis functions ``codes`` at the points ``x``.

        Wavelets are taken as right-continuous; the result has shape
        ``(len(codes), len(x))``.
        """
        codes = np.asarray(codes, dtype=INDEX_DTYPE).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        scaling, level, trans, slot = decode(codes, self.p)
        out = np.zeros((codes.size, x.size))

        sc = np.flatnonzero(scaling)
        if sc.size:
            out[sc] = _horner(self.scaling_coeffs[slot[sc]], x[np.newaxis])

        wv = np.flatnonzero(~scaling)
        if wv.size:
            scale = np.exp2(level[wv].astype(float))[:, np.newaxis]
            y = scale * x[np.newaxis] - trans[wv][:, np.newaxis]
            inside = (y >= 0) & (y < 1)
            half = (y >= 0.5).astype(INDEX_DTYPE)
            local = 2 * y - half
            left = _horner(self.wavelet_coeffs[0, slot[wv]], local)
            right = _horner(self.wavelet_coeffs[1, slot[wv]], local)
            vals = np.where(half == 1, right, left) * np.sqrt(scale)
            out[wv] = np.where(inside, vals, 0.0)
        return out


def _horner(coeffs, t):
    """Evaluates rows of monomial coefficients; ``coeffs`` is ``(n, p)``."""
    coeffs = np.asarray(coeffs)
    out = np.zeros(np.broadcast(coeffs[:, :1], t).shape)
    for q in reversed(range(coeffs.shape[1])):
        out = out * t + coeffs[:, q : q + 1]
    return out


@functools.lru_cache(maxsize=None)
def get_basis(p=4):
    """Builds (once per order) the order-``p`` multiwavelet basis."""
    if int(p) != p or p < 1:
        raise ValueError("multiwavelet order must be a positive integer", p)
    p = int(p)
    x = sympy.Symbol("x")
    u = sympy.Symbol("u")
    t = sympy.Symbol("t")
    half = sympy.Rational(1, 2)

    legendre = [sympy.expand(sympy.legendre(s, 2 * x - 1)) for s in range(p)]
    scaling_norms = [sympy.sqrt(2 * s + 1) for s in range(p)]
    wavelets, gram = _unnormalized_wavelets(p, u)
    wavelet_norms = [
        1 / sympy.sqrt((vec.T * gram * vec)[0, 0]) for vec in wavelets
    ]

    pieces = [
        [
            sum(vec[h * p + q] * u ** q for q in range(p))
            for vec in wavelets
        ]
        for h in range(2)
    ]

    scaling_coeffs = np.array(
        [
            [
                _num(c * scaling_norms[s])
                for c in _poly_coeffs(legendre[s], x, p)
            ]
            for s in range(p)
        ]
    )
    wavelet_coeffs = np.array(
        [
            [
                [_num(vec[h * p + q] * wavelet_norms[s]) for q in range(p)]
                for s, vec in enumerate(wavelets)
            ]
            for h in range(2)
        ]
    )

    sqrt2 = sympy.sqrt(2)
    filters_h = np.zeros((2, p, p))
    filters_g = np.zeros((2, p, p))
    for h in range(2):
        for r in range(p):
            phi_r = legendre[r].subs(x, u)
            for s in range(p):
                coarse = legendre[s].subs(x, (u + h) / 2)
                val = sympy.integrate(sympy.expand(coarse * phi_r), (u, 0, 1))
                filters_h[h, s, r] = _num(
                    val * scaling_norms[s] * scaling_norms[r] / sqrt2
                )
                val = sympy.integrate(
                    sympy.expand(pieces[h][s] * phi_r), (u, 0, 1)
                )
                filters_g[h, s, r] = _num(
                    val * wavelet_norms[s] * scaling_norms[r] / sqrt2
                )

    scaling_table = np.zeros((p, p))
    for a in range(p):
        antider = sympy.integrate(legendre[a].subs(x, t), (t, 0, x))
        for b in range(p):
            integrand = sympy.expand(legendre[b] * antider)
            val = sympy.integrate(integrand, (x, 0, 1))
            norm = scaling_norms[a] * scaling_norms[b]
            scaling_table[b, a] = _num(val * norm)

    left = [pieces[0][s].subs(u, 2 * x) for s in range(p)]
    right = [pieces[1][s].subs(u, 2 * x - 1) for s in range(p)]

    def halves(on_left, on_right):
        return sympy.integrate(
            sympy.expand(on_left), (x, 0, half)
        ) + sympy.integrate(sympy.expand(on_right), (x, half, 1))

    wavelet_table = np.zeros((p, p))
    for a in range(p):
        anti_left = sympy.integrate(left[a].subs(x, t), (t, 0, x))
        anti_right = anti_left.subs(x, half) + sympy.integrate(
            right[a].subs(x, t), (t, half, x)
        )
        for b in range(p):
            val = halves(left[b] * anti_left, right[b] * anti_right)
            norm = wavelet_norms[a] * wavelet_norms[b]
            wavelet_table[b, a] = _num(val * norm)

    moment = halves(x ** p * left[0], x ** p * right[0])

    logger.debug("constructed multiwavelet basis of order %d", p)
    return MultiwaveletBasis(
        p=p,
        scaling_coeffs=scaling_coeffs,
        wavelet_coeffs=wavelet_coeffs,
        filters_h=filters_h,
        filters_g=filters_g,
        scaling_table=scaling_table,
        wavelet_table=wavelet_table,
        moment=_num(moment * wavelet_norms[0]),
    )


def _coarse_lead(basis, scaling, level, slot, half):
    """Coefficient of ``t**(p-1)`` of a coarse function on one of its pieces."""
    p = basis.p
    lead = np.where(
        scaling,
        basis.scaling_lead[slot],
        basis.wavelet_lead[half, slot],
    )
    exponent = np.where(scaling, 0.0, level / 2 + (level + 1.0) * (p - 1))
    return lead, exponent


def _is_ancestor(l_coarse, k_coarse, sc_coarse, l_fine, k_fine, sc_fine):
    shift = np.maximum(l_fine - l_coarse, 0)
    nested = (l_coarse < l_fine) & ((k_fine >> shift) == k_coarse)
    return ~sc_fine & (sc_coarse | nested)


def _half_of(l_coarse, sc_coarse, l_fine, k_fine):
    shift = np.maximum(l_fine - l_coarse - 1, 0)
    return np.where(sc_coarse, 0, (k_fine >> shift) & 1)


def volterra_entries(basis, rows, cols):
    """Vectorized entries ``<T psi_cols, psi_rows>`` of the Volterra operator
    ``(T v)(t) = int_0^t v``.

    Disjoint supports give 0. Equal supports scale the level-0 tables. When
    one support lies inside a single polynomial piece of the other function,
    integration by parts leaves only the first non-vanishing moment of the
    finer function, which must be a slot-0 wavelet.
    """
    p = basis.p
    rows, cols = np.broadcast_arrays(
        np.asarray(rows, dtype=INDEX_DTYPE), np.asarray(cols, dtype=INDEX_DTYPE)
    )
    shape = rows.shape
    sr, lr, kr, slr = decode(rows.reshape(-1), p)
    sc, lc, kc, slc = decode(cols.reshape(-1), p)
    out = np.zeros(rows.size)

    both = sr & sc
    out[both] = basis.scaling_table[slr[both], slc[both]]

    same = ~sr & ~sc & (lr == lc) & (kr == kc)
    out[same] = np.exp2(-lr[same].astype(float)) * basis.wavelet_table[
        slr[same], slc[same]
    ]

    # column inside a piece of the row function
    inside = _is_ancestor(lr, kr, sr, lc, kc, sc) & (slc == 0)
    if np.any(inside):
        half = _half_of(lr[inside], sr[inside], lc[inside], kc[inside])
        lead, exponent = _coarse_lead(
            basis, sr[inside], lr[inside], slr[inside], half
        )
        exponent = exponent - lc[inside] * (p + 0.5)
        out[inside] = -lead / p * np.exp2(exponent) * basis.moment

    # row inside a piece of the column function
    inside = _is_ancestor(lc, kc, sc, lr, kr, sr) & (slr == 0)
    if np.any(inside):
        half = _half_of(lc[inside], sc[inside], lr[inside], kr[inside])
        lead, exponent = _coarse_lead(
            basis, sc[inside], lc[inside], slc[inside], half
        )
        exponent = exponent - lr[inside] * (p + 0.5)
        out[inside] = lead / p * np.exp2(exponent) * basis.moment

    return out.reshape(shape)


def volterra_entry(basis, nu, mu):
    """The entry ``<T psi_mu, psi_nu>`` for two :class:`WaveletIndex` values.

    :raises LevelOverflowError:
        If either index lies beyond the representable levels.
    """
    p = basis.p
    val = volterra_entries(
        basis, np.array([nu.code(p)]), np.array([mu.code(p)])
    )
    return float(val[0])


@attr.s(frozen=True)
class PiecewiseCosSpec(object):
    """``f_k(x) = amplitude * sqrt(2 pi) * cos(2 pi**2 (k+1) x)`` on
    ``[0, 1/pi]``, zero elsewhere."""

    k = attr.ib(default=0)
    amplitude = attr.ib(default=1.0, converter=float)

    @k.validator
    def _check_k(self, attribute, value):
        if int(value) != value or value < 0:
            raise ValueError("frequency index must be a nonnegative integer")

    @property
    def omega(self):
        return 2 * math.pi ** 2 * (self.k + 1)

    @property
    def cutoff(self):
        return 1 / math.pi

    @property
    def norm(self):
        """The L2 norm, which is ``|amplitude|`` for every ``k``."""
        return abs(self.amplitude)


@functools.lru_cache(maxsize=64)
def _gauss_legendre(n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return (nodes + 1) / 2, weights / 2


@attr.s(frozen=True, eq=False)
class SparseVector(object):
    """A sorted sparse sequence of index codes and values."""

    indices = attr.ib()
    values = attr.ib()

    @property
    def size(self):
        return self.indices.size

    def norm(self):
        return float(np.linalg.norm(self.values))


class _CosExpansion(object):
    """Greedy, resumable wavelet expansion of one :class:`PiecewiseCosSpec`.

    Dyadic intervals are refined in order of decreasing tail energy (the part
    of the function on the interval not captured by its polynomial
    projection). A refinement of interval ``I`` contributes the ``p`` wavelet
    coefficients of ``I``. The reconstruction from the scaling layer and the
    first ``n`` refinements has squared L2 error ``tails[n]``.
    """

    def __init__(self, basis, spec):
        self.basis = basis
        self.spec = spec
        self._lock = threading.Lock()
        self._heap = []
        self._counter = 0
        self._codes = []
        self._values = []
        self._evaluations = 0

        root = self._scaling_coeffs(0, 0)
        self._root = root
        # evaluations spent up to the scaling layer and after each refinement
        self._spent = [self._evaluations]
        tail = self._tail_sq(0, 0, root)
        self.tails = [tail]
        self._push(0, 0, root, tail)
        self._frontier = tail

    def _push(self, level, trans, coeffs, tail):
        if tail > 0:
            entry = (-tail, self._counter, level, trans, coeffs)
            heapq.heappush(self._heap, entry)
            self._counter += 1

    def _scaling_coeffs(self, level, trans):
        p = self.basis.p
        spec = self.spec
        width = 2.0 ** -level
        start = trans * width
        if start >= spec.cutoff:
            return np.zeros(p)
        upper = min(1.0, (spec.cutoff - start) / width)
        phase = spec.omega * width * upper
        nodes, weights = _gauss_legendre(32 + int(math.ceil(phase)))
        self._evaluations += nodes.size * p
        u = nodes * upper
        integrand = np.cos(spec.omega * (start + width * u))
        basis_vals = _horner(self.basis.scaling_coeffs, u[np.newaxis])
        integral = basis_vals @ (weights * integrand) * upper
        scale = spec.amplitude * math.sqrt(2 * math.pi) * math.sqrt(width)
        return scale * integral

    def _tail_sq(self, level, trans, coeffs):
        spec = self.spec
        p = self.basis.p
        width = 2.0 ** -level
        start = trans * width
        if start >= spec.cutoff:
            return 0.0
        end = min(start + width, spec.cutoff)
        w = spec.omega
        energy = (
            spec.amplitude ** 2
            * math.pi
            * (
                (end - start)
                + math.cos(w * (end + start)) * math.sin(w * (end - start)) / w
            )
        )
        tail = max(energy - float(np.dot(coeffs, coeffs)), 0.0)
        tail += 4 * np.finfo(float).eps * energy
        if start + width <= spec.cutoff:
            # Taylor remainder of degree p around the midpoint
            bound = (
                spec.amplitude ** 2
                * 2
                * math.pi
                * w ** (2 * p)
                / math.factorial(p) ** 2
                * 2
                * (width / 2) ** (2 * p + 1)
                / (2 * p + 1)
            )
            tail = min(tail, bound)
        return tail

    def _refine(self):
        neg_tail, _, level, trans, coeffs = heapq.heappop(self._heap)
        check_level(level + 1, self.basis.p)
        left = self._scaling_coeffs(level + 1, 2 * trans)
        right = self._scaling_coeffs(level + 1, 2 * trans + 1)
        g = self.basis.filters_g
        details = g[0] @ left + g[1] @ right
        p = self.basis.p
        self._codes.append(encode(level, trans, np.arange(p), p))
        self._values.append(details)

        tail_left = self._tail_sq(level + 1, 2 * trans, left)
        tail_right = self._tail_sq(level + 1, 2 * trans + 1, right)
        self._push(level + 1, 2 * trans, left, tail_left)
        self._push(level + 1, 2 * trans + 1, right, tail_right)
        self._frontier += tail_left + tail_right + neg_tail
        self._frontier = max(self._frontier, 0.0) if self._heap else 0.0
        self.tails.append(self._frontier)
        self._spent.append(self._evaluations)

    def coefficients(self, tol):
        """The coefficients of the shortest refinement prefix within ``tol``.

        The evaluations needed for that prefix are charged as ``rhs_eval``,
        whether or not they were cached.
        """
        tol_sq = tol * tol
        with self._lock:
            while self.tails[-1] > tol_sq:
                self._refine()
            steps = next(
                n for n, tail in enumerate(self.tails) if tail <= tol_sq
            )
            codes = [np.arange(self.basis.p, dtype=INDEX_DTYPE)]
            codes += self._codes[:steps]
            values = [self._root] + self._values[:steps]
            spent = self._spent[steps]
        _ops.count("rhs_eval", spent)
        codes = np.concatenate(codes)
        values = np.concatenate(values)
        order = np.argsort(codes)
        codes, values = codes[order], values[order]
        keep = values != 0
        return SparseVector(codes[keep], values[keep])


_EXPANSIONS = {}
_EXPANSIONS_LOCK = threading.Lock()


def _expansion(basis, spec):
    key = (basis.p, spec)
    with _EXPANSIONS_LOCK:
        expansion = _EXPANSIONS.get(key)
        if expansion is None:
            expansion = _EXPANSIONS[key] = _CosExpansion(basis, spec)
    return expansion


def fk_coeffs(basis, spec, tol):
    """Wavelet coefficients of a :class:`PiecewiseCosSpec` up to tolerance.

    :param tol:
        Positive L2 tolerance; the function reconstructed from the returned
        coefficients differs from the exact one by at most ``tol``.

    :raises ParameterError:
        If ``tol`` is not a positive finite number.

    :raises LevelOverflowError:
        If the tolerance requires levels beyond the representable range.

    :return:
        A :class:`SparseVector` sorted by index code.
    """
    tol = check_tolerance(tol, name="tol", strict=True)
    return _expansion(basis, spec).coefficients(tol)


@attr.s(frozen=True)
class SelfCheckReport(object):
    """Maximal deviations found by :func:`basis_selfcheck`."""

    level_cap = attr.ib()
    gram_deviation = attr.ib()
    moment_deviation = attr.ib()
    refinement_deviation = attr.ib()

    @property
    def max_deviation(self):
        return max(
            self.gram_deviation,
            self.moment_deviation,
            self.refinement_deviation,
        )


def basis_selfcheck(basis, level_cap):
    """Checks a basis by Gauss quadrature on the dyadic grid below
    ``level_cap``.

    Orthonormality covers all functions up to ``level_cap``; vanishing
    moments are checked for the level-0 wavelets up to order ``p + s``;
    the two-scale relations are checked pointwise.
    """
    p = basis.p
    fine = level_cap + 1
    if fine > basis.max_level:
        raise LevelOverflowError("self check level beyond representable range")
    nodes, weights = _gauss_legendre(2 * p)
    pieces = np.arange(2 ** fine)
    x = ((pieces[:, np.newaxis] + nodes) / 2 ** fine).reshape(-1)
    w = np.tile(weights, pieces.size) / 2 ** fine

    codes = np.arange(p * 2 ** (level_cap + 1), dtype=INDEX_DTYPE)
    values = basis.evaluate(codes, x)
    gram = (values * w) @ values.T
    gram_dev = float(np.max(np.abs(gram - np.eye(codes.size))))

    level0 = encode(0, 0, np.arange(p), p)
    psi = basis.evaluate(level0, x)
    moment_dev = 0.0
    for s in range(p):
        for q in range(p + s):
            moment_dev = max(moment_dev, abs(float(np.dot(psi[s] * x ** q, w))))

    phi = basis.evaluate(np.arange(p), x)
    refine_dev = 0.0
    for h in range(2):
        y = 2 * x - h
        inside = (y >= 0) & (y < 1)
        shifted = np.where(
            inside,
            basis.evaluate(np.arange(p), np.clip(y, 0, 1)) * math.sqrt(2),
            0.0,
        )
        phi = phi - basis.filters_h[h] @ shifted
        psi = psi - basis.filters_g[h] @ shifted
    refine_dev = float(max(np.max(np.abs(phi)), np.max(np.abs(psi))))

    return SelfCheckReport(
        level_cap=level_cap,
        gram_deviation=gram_dev,
        moment_deviation=moment_dev,
        refinement_deviation=refine_dev,
    )
