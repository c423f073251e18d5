"""
Deterministic operation accounting.

Every counted primitive reports an event ``(kind, shape)`` to the counter that
is active in the current context; the number of operations charged for an
event is a pure function of its kind and shape (see :data:`RULES`), so a list
of recorded events can always be recounted independently of the run that
produced it.
"""
import contextlib
import contextvars

import attr

_ACTIVE = contextvars.ContextVar("adaptive_htucker_op_counter", default=None)


def _matmul(p, q, r):
    return p * q * r


def _qr(n, k):
    big, small = max(n, k), min(n, k)
    return 2 * big * small * small


def _svd(n, k):
    # Fixed convention for a thin SVD of an n x k matrix.
    big, small = max(n, k), min(n, k)
    return 14 * big * small * small


def _sparse(nnz, ncols):
    return nnz * ncols


def _contraction(*sizes):
    out = 1
    for size in sizes:
        out *= size
    return out


def _one_each(n):
    return n


RULES = {
    "matmul": _matmul,
    "qr": _qr,
    "svd": _svd,
    "sparse": _sparse,
    "contraction": _contraction,
    "rhs": _one_each,
    "rhs_eval": _one_each,
}

# Reported separately, never part of the headline total.
EXCLUDED_KINDS = frozenset({"rhs_eval"})


def rule_ops(kind, shape):
    return int(RULES[kind](*shape))


@attr.s(eq=False)
class OpCounter(object):
    """Tally of counted operations.

    :attr:`total` excludes the kinds in :data:`EXCLUDED_KINDS`; the full
    breakdown is available in :attr:`by_kind`.
    """

    total = attr.ib(default=0)
    by_kind = attr.ib(factory=dict)
    events = attr.ib(factory=list)
    record_events = attr.ib(default=True)

    def add(self, kind, shape):
        shape = tuple(int(s) for s in shape)
        ops = rule_ops(kind, shape)
        self.by_kind[kind] = self.by_kind.get(kind, 0) + ops
        if kind not in EXCLUDED_KINDS:
            self.total += ops
        if self.record_events:
            self.events.append((kind, shape))
        return ops


def recount_operations(events):
    """Recounts a list of ``(kind, shape)`` events from scratch."""
    return sum(
        rule_ops(kind, shape)
        for kind, shape in events
        if kind not in EXCLUDED_KINDS
    )


def active_counter():
    return _ACTIVE.get()


@contextlib.contextmanager
def counting(counter=None):
    """Activates an :class:`OpCounter` for the duration of the block.

    :param counter:
        An existing counter to continue; a fresh one is created if omitted.

    :return:
        The active counter.
    """
    if counter is None:
        counter = OpCounter()
    token = _ACTIVE.set(counter)
    try:
        yield counter
    finally:
        _ACTIVE.reset(token)


def count(kind, *shape):
    counter = active_counter()
    if counter is not None:
        counter.add(kind, shape)
