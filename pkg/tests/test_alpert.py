import math

import numpy as np
import pytest

import adaptive_htucker as aht
from adaptive_htucker._alpert import (
    PiecewiseCosSpec,
    volterra_entries,
)
from adaptive_htucker._index import WaveletIndex, encode
from adaptive_htucker._lowrank import VolterraMatrix

from ._common import QuadratureGrid, finest_cell_level, volterra_gram


@pytest.fixture(scope="module")
def basis():
    return aht.get_basis(4)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_selfcheck(p):
    report = aht.basis_selfcheck(aht.get_basis(p), 3)
    assert report.level_cap == 3
    assert report.max_deviation < 1e-9


def test_basis_is_cached():
    assert aht.get_basis(4) is aht.get_basis(4)


def test_haar():
    haar = aht.get_basis(1)
    psi = haar.evaluate([1], [0.25, 0.75])
    np.testing.assert_allclose(psi, [[-1.0, 1.0]])
    np.testing.assert_allclose(haar.evaluate([0], [0.1, 0.9]), [[1.0, 1.0]])
    # level 1, translation 1 lives on [1/2, 1)
    code = WaveletIndex(1, 1, 0).code(1)
    np.testing.assert_allclose(
        haar.evaluate([code], [0.3, 0.6, 0.9]),
        [[0.0, -math.sqrt(2), math.sqrt(2)]],
    )


def test_invalid_order():
    with pytest.raises(ValueError):
        aht.get_basis(0)


def test_wavelets_have_extra_vanishing_moments(basis):
    p = basis.p
    grid = QuadratureGrid(1, 2 * p)
    psi = basis.evaluate(encode(0, 0, np.arange(p), p), grid.points)
    for s in range(p):
        moments = [
            np.dot(psi[s] * grid.points ** q, grid.weights)
            for q in range(p + s)
        ]
        np.testing.assert_allclose(moments, 0.0, atol=1e-12)
    # slot 0 has a nonvanishing moment of order p
    moment = np.dot(psi[0] * grid.points ** p, grid.weights)
    assert moment == pytest.approx(basis.moment, rel=1e-10)
    assert abs(basis.moment) > 1e-6


@pytest.mark.parametrize("p", [1, 2, 4])
def test_volterra_entries_match_quadrature(p):
    basis = aht.get_basis(p)
    codes = np.arange(p * 2 ** 4)
    level = finest_cell_level(codes, p)
    expected = volterra_gram(basis, codes, level)
    actual = volterra_entries(basis, codes[:, None], codes[None, :])
    np.testing.assert_allclose(actual, expected, atol=1e-12)


def test_volterra_entry(basis):
    nu = WaveletIndex(0, 0, 0)
    mu = WaveletIndex(3, 5, 0)
    value = aht.volterra_entry(basis, nu, mu)
    codes = np.array([nu.code(4), mu.code(4)])
    expected = volterra_gram(basis, codes, finest_cell_level(codes, 4))
    assert value == pytest.approx(expected[0, 1], abs=1e-13)
    assert value != 0

    # slot 1 wavelets have one more vanishing moment
    assert aht.volterra_entry(basis, nu, WaveletIndex(3, 5, 1)) == 0
    # disjoint supports
    assert aht.volterra_entry(basis, WaveletIndex(1, 0, 0), mu) == 0


def test_volterra_entry_overflow(basis):
    with pytest.raises(aht.LevelOverflowError):
        aht.volterra_entry(basis, WaveletIndex(61, 0, 0), WaveletIndex(0, 0, 0))


def test_volterra_norm():
    matrix = VolterraMatrix(aht.get_basis(4))
    assert matrix.section_norm(10) == pytest.approx(2 / math.pi, abs=1e-3)


@pytest.mark.parametrize("level", [0, 2, 5])
def test_section_norm_matches_dense(level):
    matrix = VolterraMatrix(aht.get_basis(4))
    dense = np.linalg.norm(matrix.section(level), 2)
    assert matrix.section_norm(level) == pytest.approx(dense, rel=1e-10)


def test_section_norms_increase():
    matrix = VolterraMatrix(aht.get_basis(2))
    norms = [matrix.section_norm(level) for level in range(6)]
    assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))
    assert norms[-1] <= 2 / math.pi + 1e-12


def test_cos_spec():
    spec = PiecewiseCosSpec(k=2, amplitude=-3.0)
    assert spec.omega == pytest.approx(6 * math.pi ** 2)
    assert spec.cutoff == pytest.approx(1 / math.pi)
    assert spec.norm == 3.0
    with pytest.raises(ValueError):
        PiecewiseCosSpec(k=-1)


@pytest.mark.parametrize("k", [0, 1, 3])
@pytest.mark.parametrize("tol", [1e-1, 1e-3, 1e-6])
def test_fk_coeffs_tolerance(basis, k, tol):
    coeffs = aht.fk_coeffs(basis, PiecewiseCosSpec(k), tol)
    energy = float(np.dot(coeffs.values, coeffs.values))
    assert energy <= 1 + 1e-10
    assert 1 - energy <= tol ** 2 + 1e-10
    assert np.all(np.diff(coeffs.indices) > 0)
    assert np.all(coeffs.values != 0)


def test_fk_coeffs_nested(basis):
    spec = PiecewiseCosSpec(0)
    coarse = aht.fk_coeffs(basis, spec, 1e-2)
    fine = aht.fk_coeffs(basis, spec, 1e-4)
    assert fine.size >= coarse.size
    assert np.isin(coarse.indices, fine.indices).all()
    common = np.isin(fine.indices, coarse.indices)
    np.testing.assert_allclose(fine.values[common], coarse.values)


def test_fk_coeffs_match_quadrature(basis):
    spec = PiecewiseCosSpec(1)
    coeffs = aht.fk_coeffs(basis, spec, 1e-3)
    shown = coeffs.indices[coeffs.indices < 4 * 2 ** 3]

    # piecewise Gauss rule on the level-3 cells, cut at the support of f
    nodes, weights = np.polynomial.legendre.leggauss(60)
    nodes, weights = (nodes + 1) / 2, weights / 2
    x, w = [], []
    for cell in range(8):
        start, end = cell / 8, min((cell + 1) / 8, spec.cutoff)
        if start >= end:
            break
        x.append(start + (end - start) * nodes)
        w.append((end - start) * weights)
    x, w = np.concatenate(x), np.concatenate(w)
    f = math.sqrt(2 * math.pi) * np.cos(spec.omega * x)
    expected = basis.evaluate(shown, x) @ (w * f)
    actual = coeffs.values[np.isin(coeffs.indices, shown)]
    np.testing.assert_allclose(actual, expected, atol=1e-10)


def test_fk_coeffs_counts_evaluations(basis):
    spec = PiecewiseCosSpec(2)
    with aht.counting() as first:
        aht.fk_coeffs(basis, spec, 1e-3)
    with aht.counting() as second:
        aht.fk_coeffs(basis, spec, 1e-3)
    assert first.by_kind["rhs_eval"] > 0
    assert first.by_kind == second.by_kind
    assert first.total == 0


@pytest.mark.parametrize("k, other", [(0, 1), (0, 2), (1, 3)])
@pytest.mark.parametrize("tol", [1e-2, 1e-4])
def test_fk_coeffs_orthogonal(basis, k, other, tol):
    a = aht.fk_coeffs(basis, PiecewiseCosSpec(k), tol)
    b = aht.fk_coeffs(basis, PiecewiseCosSpec(other), tol)
    _, ia, ib = np.intersect1d(a.indices, b.indices, return_indices=True)
    assert abs(a.values[ia] @ b.values[ib]) <= 2 * tol
    assert a.values @ a.values == pytest.approx(1.0, abs=2 * tol)


@pytest.mark.parametrize("tol", [0.0, -1.0, math.nan, math.inf])
def test_fk_coeffs_rejects_invalid_tolerance(basis, tol):
    with pytest.raises(aht.ParameterError):
        aht.fk_coeffs(basis, PiecewiseCosSpec(0), tol)
