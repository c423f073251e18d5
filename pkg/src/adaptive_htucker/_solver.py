"""
The adaptive low-rank Richardson solver.

Each outer step ``k`` runs inner Richardson iterations with approximate
residuals of accuracy ``eta_j = rho**(j+1) * theta**k * delta`` and
recompresses every iterate; the outer step ends by recompressing and
coarsening, which reduces the certified error by the factor ``theta``.
"""
import json
import logging
import time

import attr

from . import _ops
from . import _htensor as ht
from ._common import BINARY_BINNING, EXACT_SORT, check_sorting_mode
from ._exceptions import (
    LevelOverflowError,
    ParameterError,
    TreeMismatchError,
)
from ._lowrank import apply_adaptive, rhs_assemble
from ._reduce import combined_reduce, kappa_c, kappa_p, recompress

logger = logging.getLogger(__name__)

CONVERGED = "converged"
LEVEL_OVERFLOW = "level_overflow"


def _positive(instance, attribute, value):
    if not value > 0:
        raise ParameterError(
            "%s must be positive, got %r" % (attribute.name, value)
        )


def _contraction_factor(instance, attribute, value):
    if not 0 < value < 1:
        raise ParameterError(
            "%s must lie in (0, 1), got %r" % (attribute.name, value)
        )


@attr.s(frozen=True)
class SolverParams(object):
    """Parameters of :func:`solve`.

    ``rho`` must bound ``norm(I - omega * A)`` and ``lambda_a`` the
    ellipticity of ``A`` from below; neither can be checked here. The
    constants :attr:`kappa1`, :attr:`kappa2`, :attr:`kappa3` and the inner
    iteration cap :attr:`inner_cap` are derived.
    """

    eps = attr.ib(converter=float, validator=_positive)
    kappa_p = attr.ib(converter=float, validator=_positive)
    kappa_c = attr.ib(converter=float, validator=_positive)
    omega = attr.ib(default=1.0, converter=float, validator=_positive)
    rho = attr.ib(default=0.5, converter=float, validator=_contraction_factor)
    theta = attr.ib(default=0.5, converter=float, validator=_contraction_factor)
    beta = attr.ib(default=1.0, converter=float)
    alpha = attr.ib(default=1.0, converter=float, validator=_positive)
    lambda_a = attr.ib(default=0.5, converter=float, validator=_positive)
    upper_lambda_a = attr.ib(default=1.5, converter=float, validator=_positive)
    mode = attr.ib(default=EXACT_SORT)

    @beta.validator
    def _check_beta(self, attribute, value):
        if value < 0:
            raise ParameterError("beta must be nonnegative, got %r" % value)

    @mode.validator
    def _check_mode(self, attribute, value):
        check_sorting_mode(value)

    @classmethod
    def experiment(cls, m, eps, binning=False):
        """The parameters of the Volterra experiment on ``m`` modes."""
        return cls(
            eps=eps,
            kappa_p=kappa_p(m),
            kappa_c=kappa_c(m, binning),
            mode=BINARY_BINNING if binning else EXACT_SORT,
        )

    @property
    def kappa1(self):
        kp, kc = self.kappa_p, self.kappa_c
        return 1 / (1 + (1 + self.alpha) * (kp + kc + kp * kc))

    @property
    def kappa2(self):
        return (1 + self.alpha) * self.kappa_p * self.kappa1

    @property
    def kappa3(self):
        kp, kc = self.kappa_p, self.kappa_c
        return kc * (kp + 1) * (1 + self.alpha) * self.kappa1

    @property
    def inner_cap(self):
        """The smallest ``j`` with ``rho**j * (1 + (omega + beta) j) <=
        kappa1 * theta``."""
        target = self.kappa1 * self.theta
        j = 0
        while self.rho ** j * (1 + (self.omega + self.beta) * j) > target:
            j += 1
        return j

    def as_dict(self):
        out = attr.asdict(self)
        out.update(
            kappa1=self.kappa1,
            kappa2=self.kappa2,
            kappa3=self.kappa3,
            inner_cap=self.inner_cap,
        )
        return out


@attr.s(frozen=True)
class InnerStep(object):
    k = attr.ib()
    j = attr.ib()
    eta = attr.ib()
    residual_norm = attr.ib()
    error_estimate = attr.ib()
    residual_rank = attr.ib()
    intermediate_rank = attr.ib()
    rank = attr.ib()
    ops = attr.ib()
    wall_time = attr.ib()

    def as_dict(self):
        return attr.asdict(self)


@attr.s(frozen=True)
class OuterStep(object):
    """Summary of outer step ``k``, which produced the iterate ``u_{k+1}``.

    :attr:`bound` is the certified bound for the error of that iterate.
    """

    k = attr.ib()
    inner_steps = attr.ib()
    inner_bound = attr.ib()
    bound = attr.ib()
    ranks = attr.ib()
    supports = attr.ib()
    ops = attr.ib()

    def as_dict(self):
        out = attr.asdict(self)
        out["ranks"] = {repr(node): r for node, r in self.ranks.items()}
        out["supports"] = list(self.supports)
        return out


@attr.s(eq=False)
class IterationTrace(object):
    """Everything :func:`solve` records about a run."""

    params = attr.ib()
    delta = attr.ib()
    inner = attr.ib(factory=list)
    outer = attr.ib(factory=list)
    termination = attr.ib(default=CONVERGED)
    counter = attr.ib(default=None)

    @property
    def total_ops(self):
        return self.counter.total if self.counter is not None else 0

    @property
    def events(self):
        return self.counter.events if self.counter is not None else []

    def recount(self):
        """Recounts the recorded operation events independently."""
        return _ops.recount_operations(self.events)


def _max_rank(v):
    return max(ht.ranks(v).values())


def _emit(progress, record):
    if progress is not None:
        progress.write(json.dumps(record, sort_keys=True) + "\n")
        progress.flush()


def _outer_step(op, rhs, params, u, k, delta, trace, progress, start):
    counter = trace.counter
    scale = params.theta ** k * delta
    target = params.kappa1 * params.theta ** (k + 1) * delta
    inv_lambda = 1 / params.lambda_a
    cap = params.inner_cap

    w = u
    j = 0
    inner_bound = target
    while True:
        eta = params.rho ** (j + 1) * scale
        applied = apply_adaptive(op, w, eta / 2, mode=params.mode)
        f = rhs_assemble(rhs, eta / 2)
        r = ht.add(applied, ht.scale(f, -1.0))
        r_norm = ht.norm(r)
        intermediate = ht.add(w, ht.scale(r, -params.omega))
        w = recompress(intermediate, params.beta * eta)

        step = InnerStep(
            k=k,
            j=j,
            eta=eta,
            residual_norm=r_norm,
            error_estimate=inv_lambda * (r_norm + eta),
            residual_rank=_max_rank(r),
            intermediate_rank=_max_rank(intermediate),
            rank=_max_rank(w),
            ops=counter.total,
            wall_time=time.perf_counter() - start,
        )
        trace.inner.append(step)
        _emit(progress, step.as_dict())
        logger.debug(
            "k=%d j=%d eta=%g |r|=%g ranks r/w=%d/%d",
            k,
            j,
            eta,
            r_norm,
            step.residual_rank,
            step.rank,
        )

        j += 1
        test = inv_lambda * params.rho * r_norm + (
            inv_lambda * params.rho + params.omega + params.beta
        ) * eta
        if test <= target:
            inner_bound = test
            break
        if j >= cap:
            break

    u_next = combined_reduce(
        w,
        target,
        params.alpha,
        params.kappa_p,
        params.kappa_c,
        mode=params.mode,
    )
    step_bound = params.theta ** (k + 1) * delta
    bound = min(
        step_bound,
        inner_bound + (params.kappa2 + params.kappa3) * step_bound,
    )
    outer = OuterStep(
        k=k,
        inner_steps=j,
        inner_bound=inner_bound,
        bound=bound,
        ranks=ht.ranks(u_next),
        supports=u_next.supports(),
        ops=counter.total,
    )
    return u_next, outer


def solve(op, rhs, params, progress=None, counter=None):
    """Solves ``op u = f`` for the right-hand side ``rhs`` up to
    ``params.eps``.

    :param progress:
        An optional text stream receiving one JSON record per inner step.

    :param counter:
        An optional :class:`OpCounter` to continue; a new one is used by
        default.

    :return:
        A tuple ``(u, trace)`` of the final iterate and its
        :class:`IterationTrace`. A wavelet level overflow ends the iteration
        early with ``trace.termination == "level_overflow"``.
    """
    if op.tree != rhs.tree:
        raise TreeMismatchError(
            "operator and right-hand side use different trees"
        )

    start = time.perf_counter()
    with _ops.counting(counter) as counter:
        tight = 1e-3 * params.eps
        f_norm = ht.norm(rhs_assemble(rhs, tight))
        delta = (f_norm + tight) / params.lambda_a
        trace = IterationTrace(params=params, delta=delta, counter=counter)
        logger.info("delta=%g, target eps=%g", delta, params.eps)

        u = ht.zeros(op.tree)
        k = 0
        try:
            while params.theta ** k * delta > params.eps:
                u, outer = _outer_step(
                    op, rhs, params, u, k, delta, trace, progress, start
                )
                trace.outer.append(outer)
                logger.info(
                    "outer step %d: bound %g, max rank %d, ops %d",
                    k,
                    outer.bound,
                    max(outer.ranks.values()),
                    outer.ops,
                )
                k += 1
        except LevelOverflowError as e:
            logger.warning("stopping at outer step %d: %s", k, e)
            trace.termination = LEVEL_OVERFLOW

    return u, trace


def residual_certificate(trace):
    """Certified error bounds of the outer iterates, starting with ``delta``
    for ``u_0 = 0``."""
    return [trace.delta] + [outer.bound for outer in trace.outer]


def a_posteriori_bound(op, rhs, u, eta, lambda_a=0.5):
    """An independent error bound ``(norm(A u - f) + eta) / lambda_a``.

    The residual is evaluated with accuracy ``eta``.
    """
    if not eta > 0:
        raise ParameterError("eta must be positive, got %r" % (eta,))
    applied = apply_adaptive(op, u, eta / 2)
    f = rhs_assemble(rhs, eta / 2)
    residual = ht.norm(ht.add(applied, ht.scale(f, -1.0)))
    return (residual + eta) / lambda_a
