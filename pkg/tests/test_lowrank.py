import math

import numpy as np
import pytest

import adaptive_htucker as aht
from adaptive_htucker import _htensor as ht
from adaptive_htucker._alpert import PiecewiseCosSpec
from adaptive_htucker._index import decode
from adaptive_htucker._lowrank import (
    IDENTITY,
    VolterraMatrix,
    build_partition,
    experiment_omega,
)

from ._common import apply_error, hsvd_from_dense, random_dense


@pytest.fixture(scope="module")
def basis():
    return aht.get_basis(4)


def _decaying_coefficients(m, seed, n=16):
    """Random coefficients over the first ``n`` codes in every mode."""
    values = random_dense((n,) * m, seed)
    for i in range(m):
        shape = [1] * m
        shape[i] = -1
        values = values * (0.7 ** np.arange(n)).reshape(shape)
    return hsvd_from_dense(values)


def _smallest_level(op, v, eta):
    J = 0
    while aht.error_bound(op, v, J) > eta:
        J += 1
    return J


def test_volterra_operator_ranks():
    op = aht.volterra_operator(3)
    assert op.tree.m == 3
    assert op.max_rank == 2
    for node in op.tree.non_root:
        assert op.rank(node) == 2
    assert op.rank(op.tree.root) == 1
    assert op.cores[op.tree.root][0, 1, 1] == pytest.approx(
        -experiment_omega(3)
    )


def test_experiment_omega():
    assert experiment_omega(2) == pytest.approx(math.pi ** 2 / 8)
    assert experiment_omega(4) == pytest.approx(math.pi ** 4 / 32)


def test_low_rank_op_validation(basis):
    tree = aht.build_tree(2)
    factor = VolterraMatrix(basis)
    with pytest.raises(aht.TreeMismatchError):
        aht.LowRankOp(tree, [(IDENTITY,)], {tree.root: np.ones((1, 1, 1))})
    with pytest.raises(aht.RankError):
        aht.LowRankOp(
            tree,
            [(IDENTITY, factor), (IDENTITY,)],
            {tree.root: np.ones((1, 2, 2))},
        )
    with pytest.raises(aht.RankError):
        aht.LowRankOp(
            tree,
            [(IDENTITY,), (IDENTITY,)],
            {tree.root: np.ones((2, 1, 1))},
        )


@pytest.mark.parametrize("j", [0, 1, 3])
def test_columns_match_section(basis, j):
    matrix = VolterraMatrix(basis)
    level = 3
    size = basis.p * 2 ** (level + 1)
    codes = np.arange(size)
    section = matrix.section(level)

    rows, positions, values = matrix.columns(codes, j)
    inside = rows < size
    dense = np.zeros((size, size))
    # duplicates would be summed twice
    np.add.at(dense, (rows[inside], positions[inside]), values[inside])

    _, levels, _, _ = decode(codes, basis.p)
    near = np.abs(levels[:, None] - levels[None, :]) <= j
    np.testing.assert_allclose(dense, np.where(near, section, 0.0), atol=1e-14)


def test_columns_bounded_by_alpha(basis):
    matrix = VolterraMatrix(basis)
    codes = np.arange(basis.p * 2 ** 6)
    for j in range(4):
        rows, positions, _ = matrix.columns(codes, j)
        per_column = np.bincount(positions, minlength=codes.size)
        assert per_column.max() <= matrix.alpha(j) * 2 ** j


def test_compression_error_decreases(basis):
    matrix = VolterraMatrix(basis)
    errors = [matrix.compression_error(j) for j in range(10)]
    assert all(a > b for a, b in zip(errors, errors[1:]))
    assert matrix.compressed_norm_bound >= matrix.norm_bound


@pytest.mark.parametrize("level", [3, 5, 6])
def test_compression_error_bounds_section(basis, level):
    matrix = VolterraMatrix(basis)
    size = basis.p * 2 ** (level + 1)
    section = matrix.section(level)
    for j in range(level + 1):
        rows, positions, values = matrix.columns(np.arange(size), j)
        inside = rows < size
        dense = np.zeros((size, size))
        np.add.at(dense, (rows[inside], positions[inside]), values[inside])
        dropped = np.linalg.norm(section - dense, 2)
        assert dropped <= matrix.compression_error(j) + 1e-12


def test_operator_constants(basis):
    op = aht.volterra_operator(3, basis)
    nb = op.factors[0][1].compressed_norm_bound
    omega = experiment_omega(3)
    for consts in aht.operator_constants(op):
        assert consts[0] == pytest.approx(1.0)
        assert consts[1] == pytest.approx(omega * nb ** 2)
    assert op.constants is op.constants


def test_sum_operator_constants(basis):
    factor = VolterraMatrix(basis)
    op = aht.sum_operator(2, factor)
    nb = factor.compressed_norm_bound
    consts = aht.operator_constants(op)
    np.testing.assert_allclose(consts, [[nb, 1.0], [nb, 1.0]])


def test_operator_ladder(basis):
    tree = aht.build_tree(2)
    coarse = aht.volterra_operator(tree, basis, omega=1.0)
    fine = aht.volterra_operator(tree, basis)
    ladder = aht.OperatorLadder([coarse, fine], [1e-1, 1e-3])
    assert ladder.tree is tree
    assert ladder.select(0.5) is coarse
    assert ladder.select(1e-2) is fine
    with pytest.raises(aht.ParameterError):
        ladder.select(1e-4)
    with pytest.raises(aht.ParameterError):
        aht.OperatorLadder([coarse], [1e-1, 1e-2])


def test_build_partition():
    c = aht.contractions(hsvd_from_dense(random_dense((9, 3), 0)))
    partition = build_partition(c, 2)
    sizes = [shell.size for shell in partition.shells[0]]
    assert sizes == [1, 1, 2, 5]
    assert partition.support(0) == 9
    np.testing.assert_allclose(
        np.linalg.norm(partition.norms[0]), np.linalg.norm(c.values[0])
    )
    merged = np.sort(np.concatenate(partition.shells[0]))
    np.testing.assert_array_equal(merged, np.arange(9))
    with pytest.raises(aht.ParameterError):
        build_partition(c, -1)


@pytest.mark.parametrize(
    "m, eta",
    [
        (2, 1e-1),
        (2, 1e-2),
        (3, 1e-1),
        (3, 1e-2),
        pytest.param(2, 1e-4, marks=pytest.mark.slow),
    ],
)
def test_apply_adaptive_error(basis, m, eta):
    op = aht.volterra_operator(m, basis)
    v = _decaying_coefficients(m, seed=m)
    w = aht.apply_adaptive(op, v, eta)
    assert w.state == ht.RAW
    assert apply_error(op, v, w, basis) <= eta

    J = _smallest_level(op, v, eta)
    assert apply_error(op, v, w, basis) <= aht.error_bound(op, v, J) + 1e-12


@pytest.mark.parametrize("eta", [1e-1, 1e-2])
def test_apply_sum_operator(basis, eta):
    op = aht.sum_operator(2, VolterraMatrix(basis))
    v = _decaying_coefficients(2, seed=7)
    w = aht.apply_adaptive(op, v, eta)
    assert apply_error(op, v, w, basis) <= eta


def test_apply_ranks_and_supports(basis):
    op = aht.volterra_operator(3, basis)
    v = _decaying_coefficients(3, seed=1)
    eta = 1e-2
    w = aht.apply_adaptive(op, v, eta)
    for node in v.tree.non_root:
        assert w.rank(node) == op.rank(node) * v.rank(node)

    J = _smallest_level(op, v, eta)
    partition = build_partition(aht.contractions(v), J)
    bounds = aht.support_bound(op, partition)
    assert all(s <= b for s, b in zip(w.supports(), bounds))
    shared = aht.support_bound(op, partition, equi_compressible=True)
    assert shared == bounds


def test_apply_equi_compressible_matches(basis):
    op = aht.volterra_operator(2, basis)
    v = _decaying_coefficients(2, seed=3)
    a = aht.apply_adaptive(op, v, 1e-2)
    b = aht.apply_adaptive(op, v, 1e-2, equi_compressible=True)
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa.indices, fb.indices)
        np.testing.assert_allclose(fa.values, fb.values)


def test_apply_with_ladder(basis):
    tree = aht.build_tree(2)
    exact = aht.volterra_operator(tree, basis)
    perturbed = aht.volterra_operator(
        tree, basis, omega=experiment_omega(2) + 1e-3
    )
    # the perturbation is 1e-3 times a product of two Volterra operators
    ladder = aht.OperatorLadder([perturbed, exact], [1e-3, 0.0])
    v = _decaying_coefficients(2, seed=5)
    eta = 1e-1
    w = aht.apply_adaptive(exact, v, eta, ladder=ladder)
    assert apply_error(exact, v, w, basis) <= eta


def test_apply_edge_cases(basis):
    op = aht.volterra_operator(2, basis)
    z = aht.apply_adaptive(op, ht.zeros(op.tree), 1e-3)
    assert z.is_zero
    assert aht.error_bound(op, ht.zeros(op.tree), 0) == 0

    v = _decaying_coefficients(2, seed=0)
    with pytest.raises(aht.ParameterError):
        aht.apply_adaptive(op, v, 0.0)
    with pytest.raises(aht.TreeMismatchError):
        aht.apply_adaptive(aht.volterra_operator(3, basis), v, 1e-2)


def test_apply_counts_operations(basis):
    op = aht.volterra_operator(2, basis)
    v = _decaying_coefficients(2, seed=2)
    with aht.counting() as counter:
        aht.apply_adaptive(op, v, 1e-2)
    assert counter.by_kind["sparse"] > 0
    assert counter.by_kind["contraction"] > 0


def test_rhs_spec():
    tree = aht.build_tree(2)
    rank1 = aht.RHSSpec(tree)
    assert rank1.norm == 1.0
    assert rank1.tail(0) == 0.0
    assert rank1.terms(1e-8) == 0
    assert rank1.coefficient(0) == 1.0
    assert rank1.coefficient(3) == 0.0

    series = aht.RHSSpec(tree, kind="series", tau=0.5)
    assert series.norm == pytest.approx(math.sqrt(1 / 3))
    assert series.nominal_norm == 1.0
    total = math.sqrt(sum(series.coefficient(k) ** 2 for k in range(200)))
    assert series.norm == pytest.approx(total)
    for eta in (1e-1, 1e-3, 1e-6):
        K = series.terms(eta)
        assert series.tail(K) <= eta
        assert K == 0 or series.tail(K - 1) > eta

    assert aht.RHSSpec(3).m == 3
    with pytest.raises(aht.ParameterError):
        aht.RHSSpec(tree, kind="rank2")
    with pytest.raises(aht.ParameterError):
        aht.RHSSpec(tree, kind="series", tau=1.0)


@pytest.mark.parametrize("kind", ["rank1", "series"])
@pytest.mark.parametrize("m", [2, 4])
@pytest.mark.parametrize("eta", [1e-1, 1e-2, 1e-4])
def test_rhs_assemble_norm(kind, m, eta):
    rhs = aht.RHSSpec(m, kind=kind, tau=0.5)
    f = aht.rhs_assemble(rhs, eta)
    assert abs(ht.norm(f) - rhs.norm) <= eta


def _columns(vectors, union):
    out = np.zeros((union.size, len(vectors)))
    for k, (indices, values) in enumerate(vectors):
        out[np.searchsorted(union, indices), k] = values
    return out


@pytest.mark.parametrize("kind", ["rank1", "series"])
@pytest.mark.parametrize("m", [2, 4])
@pytest.mark.parametrize("eta", [1e-1, 1e-2, 1e-3])
def test_rhs_assemble_error(basis, kind, m, eta):
    rhs = aht.RHSSpec(m, kind=kind, tau=0.5)
    f = aht.rhs_assemble(rhs, eta)
    frame = f.frames[0]
    kept = [(frame.indices, frame.values[:, k]) for k in range(frame.rank)]
    kept_coeffs = np.diag(f.root_transfer[0])

    # reference expansions much finer than eta; the reference differs from
    # the exact right-hand side by at most eta / 25
    fine_tol = eta / (50 * math.sqrt(m))
    reference = []
    for k in range(rhs.terms(eta / 50) + 1):
        vec = aht.fk_coeffs(basis, PiecewiseCosSpec(k), fine_tol)
        reference.append((vec.indices, vec.values))
    ref_coeffs = np.array([rhs.coefficient(k) for k in range(len(reference))])

    union = np.unique(np.concatenate([i for i, _ in reference + kept]))
    g = _columns(kept, union)
    r = _columns(reference, union)

    # squared distance of sums of elementary tensors with shared factors
    error_sq = (
        ref_coeffs @ (r.T @ r) ** m @ ref_coeffs
        - 2 * ref_coeffs @ (r.T @ g) ** m @ kept_coeffs
        + kept_coeffs @ (g.T @ g) ** m @ kept_coeffs
    )
    assert math.sqrt(max(error_sq, 0.0)) <= eta * (1 + 1 / 25)


def test_rhs_assemble_structure():
    tree = aht.build_tree(4)
    f = aht.rhs_assemble(aht.RHSSpec(tree), 1e-3)
    assert set(ht.ranks(f).values()) == {1}
    assert f.frames[0] is f.frames[1]

    series = aht.RHSSpec(tree, kind="series", tau=0.5)
    g = aht.rhs_assemble(series, 1e-3)
    assert set(ht.ranks(g).values()) == {series.terms(5e-4) + 1}


def test_rhs_assemble_edge_cases():
    rhs = aht.RHSSpec(2)
    assert aht.rhs_assemble(rhs, 1.0).is_zero
    assert aht.rhs_assemble(rhs, 2.0).is_zero
    with pytest.raises(aht.ParameterError):
        aht.rhs_assemble(rhs, 0.0)

    with aht.counting() as counter:
        aht.rhs_assemble(rhs, 1e-2)
    assert counter.by_kind["rhs"] > 0
    assert counter.by_kind["rhs_eval"] > 0
