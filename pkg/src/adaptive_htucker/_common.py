import numpy as np

from ._exceptions import ParameterError

# Largest number of entries any dense conversion may allocate.
MAX_DENSE_SIZE = 10 ** 6

# Singular values below RANK_TOL * sigma_max are treated as zero.
RANK_TOL = 1e-14

INDEX_DTYPE = np.int64

EXACT_SORT = "exact_sort"
BINARY_BINNING = "binary_binning"
SORTING_MODES = (EXACT_SORT, BINARY_BINNING)


def check_sorting_mode(mode):
    if mode not in SORTING_MODES:
        raise ParameterError("unknown sorting mode %r" % (mode,))
    return mode


def check_tolerance(eta, name="eta", strict=False):
    """Validates a tolerance, returning it as a float."""
    eta = float(eta)
    if not np.isfinite(eta) or eta < 0 or (strict and eta == 0):
        bound = "positive" if strict else "nonnegative"
        raise ParameterError("%s must be %s, got %r" % (name, bound, eta))
    return eta


def revealed_rank(s, tol=RANK_TOL):
    """Number of singular values above ``tol`` relative to the largest."""
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))
