"""
Wavelet indices packed into signed 64-bit integers.

For a basis of order ``p`` the scaling layer occupies codes ``0 .. p-1`` and
the wavelet ``(level, translation, slot)`` has code
``p * (2**level + translation) + slot``. Sorting codes therefore sorts indices
by scaling layer first, then lexicographically by level, translation and slot.
"""
import attr
import numpy as np

from ._common import INDEX_DTYPE
from ._exceptions import LevelOverflowError

_INT64_LIMIT = 2 ** 63
_POWERS = np.array([2 ** q for q in range(63)], dtype=INDEX_DTYPE)


def max_level(p):
    """The deepest wavelet level whose codes fit into a signed 64-bit int."""
    level = 0
    while p * 2 ** (level + 2) <= _INT64_LIMIT:
        level += 1
    return level


def check_level(level, p):
    if level > max_level(p):
        raise LevelOverflowError(
            "wavelet level %d cannot be indexed for order %d" % (level, p)
        )


@attr.s(frozen=True)
class WaveletIndex(object):
    """A single basis index.

    ``scaling`` marks the level-0 scaling layer, for which ``level`` and
    ``translation`` are 0.
    """

    level = attr.ib(default=0)
    translation = attr.ib(default=0)
    slot = attr.ib(default=0)
    scaling = attr.ib(default=False)

    @translation.validator
    def _check_translation(self, attribute, value):
        if self.level < 0 or not 0 <= value < 2 ** self.level:
            raise ValueError("translation out of range", self.level, value)
        if self.scaling and (self.level or value):
            raise ValueError("scaling indices live on level 0")

    def code(self, p):
        if not 0 <= self.slot < p:
            raise ValueError("slot out of range", self.slot, p)
        if self.scaling:
            return self.slot
        check_level(self.level, p)
        return p * (2 ** self.level + self.translation) + self.slot


def encode(level, translation, slot, p):
    """Vectorized wavelet-layer encoding; inputs must be in range."""
    level = np.asarray(level, dtype=INDEX_DTYPE)
    if level.size and int(level.max()) > max_level(p):
        raise LevelOverflowError(
            "wavelet level %d cannot be indexed for order %d"
            % (int(level.max()), p)
        )
    return p * (_POWERS[level] + translation) + slot


def decode(codes, p):
    """Vectorized decoding.

    :return:
        A tuple ``(scaling, level, translation, slot)`` of arrays; scaling
        entries report level and translation 0.
    """
    codes = np.asarray(codes, dtype=INDEX_DTYPE)
    scaling = codes < p
    q, slot = np.divmod(codes, p)
    q = np.where(scaling, 1, q)
    level = np.searchsorted(_POWERS, q, side="right") - 1
    translation = q - _POWERS[level]
    return scaling, level, translation, slot
