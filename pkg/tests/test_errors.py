import warnings

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as hst

import adaptive_htucker as aht
from adaptive_htucker import _htensor as ht
from adaptive_htucker._index import WaveletIndex


@pytest.mark.parametrize(
    "exc",
    [
        aht.ConfigError,
        aht.DenseSizeError,
        aht.FormatError,
        aht.ParameterError,
        aht.RankError,
        aht.RepresentationStateError,
        aht.TreeMismatchError,
    ],
)
def test_value_errors(exc):
    assert issubclass(exc, ValueError)


def test_level_overflow_is_overflow():
    assert issubclass(aht.LevelOverflowError, OverflowError)
    assert not issubclass(aht.LevelOverflowError, ValueError)


def test_normalization_warning_category():
    assert issubclass(aht.NormalizationWarning, RuntimeWarning)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        warnings.warn("norm", aht.NormalizationWarning)
    assert caught[0].category is aht.NormalizationWarning


def test_config_error_fields():
    e = aht.ConfigError("bad", fields=["d", "eps"])
    assert e.fields == ("d", "eps")
    assert str(e) == "bad"
    assert aht.ConfigError("bad").fields == ()


@hypothesis.given(
    eta=hst.one_of(
        hst.floats(max_value=-1e-300),
        hst.just(float("nan")),
        hst.just(float("inf")),
    )
)
def test_invalid_tolerances(eta):
    v = ht.zeros(aht.build_tree(2))
    with pytest.raises(aht.ParameterError):
        aht.recompress(v, eta)
    with pytest.raises(aht.ParameterError):
        aht.coarsen(v, eta)


@pytest.mark.parametrize("m", [0, 1, 2.5])
def test_invalid_trees(m):
    with pytest.raises(ValueError):
        aht.build_tree(m)


def test_errors_are_catchable_as_builtins():
    tree = aht.build_tree(2)
    with pytest.raises(ValueError):
        aht.from_dense(np.ones((2, 2, 2)), tree)
    with pytest.raises(OverflowError):
        aht.volterra_entry(
            aht.get_basis(1), WaveletIndex(70, 0, 0), WaveletIndex(0, 0, 0)
        )
