"""
This module runs the Volterra experiments and writes their results.

A run solves ``(I - omega_d (x)_i T) u = f`` on ``d`` modes and writes

* ``<name>.csv``: one row per inner iteration, fixed column order,
* ``<name>.json``: a summary of constants, certified bounds, ranks and
  operation counts,
* ``<name>.htrep.json``: the final iterate (see :mod:`adaptive_htucker.io`),
* ``<name>.timing.json``: wall times, kept apart so the other files are
  reproducible byte for byte.
"""
import csv
import json
import logging
import math
import pathlib
import warnings

import attr
import numpy as np

from . import _htensor as ht
from . import io
from ._alpert import get_basis
from ._common import EXACT_SORT, SORTING_MODES
from ._dimtree import TREE_SHAPES, build_tree
from ._exceptions import ConfigError, NormalizationWarning
from ._lowrank import RHS_KINDS, RHSSpec, experiment_omega, volterra_operator
from ._reduce import contractions
from ._solver import SolverParams, residual_certificate, solve

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "k",
    "j",
    "eta",
    "residual_norm",
    "error_estimate",
    "residual_rank",
    "intermediate_rank",
    "rank",
    "ops",
)

PLOT_COLUMNS = (
    "series",
    "d",
    "rhs",
    "k",
    "ops",
    "error_bound",
    "reference_slope",
)

#: Exponent of the reference line in the plot table, error ~ ops**(-1/4).
REFERENCE_EXPONENT = 0.25

#: Keys accepted in the ``assumptions`` mapping; they are recorded only.
ASSUMPTION_KEYS = ("d_u", "b_u", "d_A", "b_A", "b_f", "M_A")


def _check(condition, msg, field):
    if not condition:
        raise ConfigError(msg, fields=(field,))


def _as_int(field):
    def convert(value):
        try:
            ok = not isinstance(value, bool) and int(value) == value
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ConfigError("%s must be an integer" % field, fields=(field,))
        return int(value)

    return convert


def _as_float(field):
    def convert(value):
        if not isinstance(value, bool):
            try:
                return float(value)
            except (TypeError, ValueError):
                pass
        raise ConfigError("%s must be a number" % field, fields=(field,))

    return convert


@attr.s(frozen=True)
class ExperimentConfig(object):
    """Configuration of one experiment run.

    ``omega_d`` is derived from ``d`` and cannot be set.
    """

    d = attr.ib(converter=_as_int("d"))
    rhs = attr.ib(default="rank1")
    tau = attr.ib(default=0.5, converter=_as_float("tau"))
    eps = attr.ib(default=1e-3, converter=_as_float("eps"))
    p = attr.ib(default=4, converter=_as_int("p"))
    tree = attr.ib(default="balanced")
    sorting = attr.ib(default=EXACT_SORT)
    out = attr.ib(default="results", converter=str)
    seed = attr.ib(default=0, converter=_as_int("seed"))
    assumptions = attr.ib(factory=dict, converter=dict)

    @d.validator
    def _check_d(self, attribute, value):
        _check(value >= 2, "d must be at least 2", "d")

    @rhs.validator
    def _check_rhs(self, attribute, value):
        _check(
            value in RHS_KINDS, "rhs must be one of %r" % (RHS_KINDS,), "rhs"
        )

    @tau.validator
    def _check_tau(self, attribute, value):
        _check(0 < value < 1, "tau must lie in (0, 1)", "tau")

    @eps.validator
    def _check_eps(self, attribute, value):
        finite = value > 0 and math.isfinite(value)
        _check(finite, "eps must be positive", "eps")

    @p.validator
    def _check_p(self, attribute, value):
        _check(value >= 1, "p must be positive", "p")

    @tree.validator
    def _check_tree(self, attribute, value):
        _check(
            value in TREE_SHAPES,
            "tree must be one of %r" % (TREE_SHAPES,),
            "tree",
        )

    @sorting.validator
    def _check_sorting(self, attribute, value):
        _check(
            value in SORTING_MODES,
            "sorting must be one of %r" % (SORTING_MODES,),
            "sorting",
        )

    @assumptions.validator
    def _check_assumptions(self, attribute, value):
        unknown = sorted(set(value) - set(ASSUMPTION_KEYS))
        _check(
            not unknown,
            "unknown assumption parameters %r" % (unknown,),
            "assumptions",
        )

    @property
    def omega_d(self):
        return experiment_omega(self.d)

    @property
    def binning(self):
        return self.sorting != EXACT_SORT

    @property
    def name(self):
        name = "d%d_%s" % (self.d, self.rhs)
        if self.rhs == "series":
            name += "_tau%g" % self.tau
        return name + "_eps%g" % self.eps

    def to_dict(self):
        return attr.asdict(self)

    @classmethod
    def from_dict(cls, obj):
        """Builds a configuration from a mapping.

        :raises ConfigError:
            For unknown keys, missing ``d`` or invalid values; the offending
            keys are listed in :attr:`ConfigError.fields`.
        """
        if not isinstance(obj, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {a.name for a in attr.fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(
                "unknown configuration keys %r" % (unknown,), fields=unknown
            )
        if "d" not in obj:
            raise ConfigError("configuration needs d", fields=("d",))
        try:
            return cls(**obj)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(
                "invalid configuration: %s" % e, fields=sorted(obj)
            )

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, "r") as f:
                obj = json.load(f)
        except ValueError as e:
            raise ConfigError("invalid JSON in %s: %s" % (path, e))
        return cls.from_dict(obj)


@attr.s(eq=False)
class RunRecord(object):
    """Results of one run: per-iteration rows and the final summary."""

    config = attr.ib()
    rows = attr.ib()
    outer = attr.ib()
    summary = attr.ib()
    solution = attr.ib(default=None)

    @property
    def series(self):
        return "d=%d %s" % (self.config.d, self.config.rhs)


def _fmt(value):
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _node_key(node):
    return ",".join(str(i) for i in node)


def _summary(config, params, trace, rhs, u):
    ranks = {_node_key(node): r for node, r in ht.ranks(u).items()}
    return {
        "config": config.to_dict(),
        "omega_d": config.omega_d,
        "params": params.as_dict(),
        "delta": trace.delta,
        "rhs_norm": rhs.norm,
        "rhs_nominal_norm": rhs.nominal_norm,
        "termination": trace.termination,
        "outer_steps": len(trace.outer),
        "inner_steps": len(trace.inner),
        "certified_bounds": residual_certificate(trace),
        "total_ops": trace.total_ops,
        "ops_by_kind": dict(sorted(trace.counter.by_kind.items())),
        "ranks": ranks,
        "max_rank": max(ranks.values()),
        "supports": list(u.supports()),
        "max_intermediate_rank": max(
            (row.intermediate_rank for row in trace.inner), default=0
        ),
    }


def write_record(record, out_dir):
    """Writes the files of a :class:`RunRecord` into ``out_dir``."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = record.config.name

    with open(out_dir / (name + ".csv"), "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in record.rows:
            writer.writerow([_fmt(getattr(row, col)) for col in CSV_COLUMNS])

    with open(out_dir / (name + ".json"), "w") as f:
        json.dump(record.summary, f, indent=2, sort_keys=True)
        f.write("\n")

    if record.solution is not None:
        with open(out_dir / (name + ".htrep.json"), "w") as f:
            io.dump(record.solution, f)

    timing = {"wall_time": [row.wall_time for row in record.rows]}
    with open(out_dir / (name + ".timing.json"), "w") as f:
        json.dump(timing, f, indent=2, sort_keys=True)


def run_experiment(config, progress=None, write=True):
    """Solves the Volterra problem described by ``config``.

    :param progress:
        An optional text stream for line-delimited JSON progress records.

    :param write:
        Write the result files into ``config.out``.

    :return:
        The :class:`RunRecord`.
    """
    tree = build_tree(config.d, config.tree)
    basis = get_basis(config.p)
    op = volterra_operator(tree, basis)
    rhs = RHSSpec(tree, kind=config.rhs, tau=config.tau, p=config.p)
    if abs(rhs.norm - rhs.nominal_norm) > 1e-12:
        warnings.warn(
            "right-hand side has norm %.6g instead of %.6g"
            % (rhs.norm, rhs.nominal_norm),
            NormalizationWarning,
            stacklevel=2,
        )
    params = SolverParams.experiment(config.d, config.eps, config.binning)

    logger.info("running %s", config.name)
    u, trace = solve(op, rhs, params, progress=progress)
    record = RunRecord(
        config=config,
        rows=list(trace.inner),
        outer=list(trace.outer),
        summary=_summary(config, params, trace, rhs, u),
        solution=u,
    )
    logger.info(
        "finished %s: %s after %d outer steps, %d ops",
        config.name,
        trace.termination,
        len(trace.outer),
        trace.total_ops,
    )
    if write:
        write_record(record, config.out)
    return record


@attr.s(frozen=True)
class SparsityReport(object):
    """Finite-range sparsity estimates of a representation.

    All values are maxima over the available data only; the rank estimate
    uses the largest node-wise singular value tail, which is a lower bound
    for the best rank-``r`` error.
    """

    s = attr.ib()
    approximation = attr.ib()
    rank = attr.ib()
    finite_range = attr.ib(default=True)
    rank_is_lower_bound = attr.ib(default=True)


def _best_n_term_tails(values):
    squares = np.sort(values)[::-1] ** 2
    return np.sqrt(np.concatenate([np.cumsum(squares[::-1])[::-1], [0.0]]))


def sparsity_diagnostics(v, s, gamma):
    """Estimates the approximation class quasi-norms of ``v``.

    :param s:
        Exponent of the best ``N``-term estimate
        ``max_N (N + 1)**s * tail_N(pi_i(v))`` per mode.

    :param gamma:
        A :class:`GrowthSequence`; the rank estimate is
        ``max_r gamma(r) * sigma_r(v)``.
    """
    h = ht.hsvd(v)
    if h.is_zero:
        return SparsityReport(s=s, approximation=(0.0,) * v.tree.m, rank=0.0)

    approximation = []
    for values in contractions(h).values:
        tails = _best_n_term_tails(values)
        n = np.arange(tails.size)
        approximation.append(float(np.max((n + 1.0) ** s * tails)))

    top = max(h.rank(node) for node in h.tree.non_root)
    rank_tails = np.zeros(top + 1)
    for node in h.tree.non_root:
        tails = _best_n_term_tails(h.sigma[node])
        rank_tails[: tails.size] = np.maximum(rank_tails[: tails.size], tails)
    r = np.arange(top + 1)
    rank = float(np.max(gamma(r) * rank_tails))
    return SparsityReport(s=s, approximation=tuple(approximation), rank=rank)


def emit_plots_data(records, path):
    """Writes the merged operations-versus-error table of several runs.

    Every record contributes one series of outer steps. The reference column
    follows ``ops**(-1/4)`` through the first point of its series.
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        for record in records:
            if not record.outer:
                continue
            first = record.outer[0]
            for step in record.outer:
                ratio = step.ops / first.ops if first.ops else 1.0
                reference = first.bound * ratio ** -REFERENCE_EXPONENT
                writer.writerow(
                    [
                        record.series,
                        record.config.d,
                        record.config.rhs,
                        step.k,
                        step.ops,
                        _fmt(step.bound),
                        _fmt(reference),
                    ]
                )
    return path
