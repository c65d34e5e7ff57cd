"""Row and block index selection rules.

All rules operate on the residual vector of the current iterate and are
pure; randomized rules take an explicit ``numpy.random.Generator``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ZeroResidual

GREEDY_THRESHOLD = "greedy_threshold"
CAPPED = "capped"
MAX_RESIDUAL = "max_residual"
UNIFORM_RANDOM = "uniform_random"
GREEDY_RANDOMIZED = "greedy_randomized"


@dataclass(frozen=True)
class SelectionRule:
    kind: str
    theta: float = 0.5

    def __post_init__(self):
        if self.kind not in (
            GREEDY_THRESHOLD,
            CAPPED,
            MAX_RESIDUAL,
            UNIFORM_RANDOM,
            GREEDY_RANDOMIZED,
        ):
            raise ValueError(f"unknown selection rule {self.kind!r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")


def _check_nonzero(r):
    r = np.asarray(r, dtype=float)
    if not np.any(r):
        raise ZeroResidual("selection from an all-zero residual")
    return r


def greedy_threshold_set(r, theta):
    """Indices i with |r_i|^2 >= theta * max_j |r_j|^2, ascending.

    theta = 1 keeps only the argmax rows (ties included); smaller theta
    admits more of the residual mass.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    r = _check_nonzero(r)
    sq = r * r
    return np.flatnonzero(sq >= theta * sq.max())


def capped_set(r, theta):
    """Relaxed greedy rule: |r_i|^2 >= theta * max + (1 - theta) * mean.

    The mean term is ||r||^2 / m, so the argmax always qualifies and the
    set is never smaller than the plain threshold set at the same theta.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    r = _check_nonzero(r)
    sq = r * r
    bound = theta * sq.max() + (1.0 - theta) * sq.sum() / r.size
    return np.flatnonzero(sq >= bound)


def max_residual_index(r):
    """Smallest index attaining max |r_i| (deterministic tie-break)."""
    r = _check_nonzero(r)
    return int(np.argmax(np.abs(r)))


def sample_index(r, rule, rng):
    """Draw one row index according to a randomized selection rule.

    UNIFORM_RANDOM draws uniformly over all rows; GREEDY_RANDOMIZED draws
    from the greedy threshold set with probability proportional to the
    squared residual of each member.
    """
    r = _check_nonzero(r)
    if rule.kind == UNIFORM_RANDOM:
        return int(rng.integers(r.size))
    if rule.kind == GREEDY_RANDOMIZED:
        members = greedy_threshold_set(r, rule.theta)
        weights = r[members] ** 2
        probs = weights / weights.sum()
        return int(rng.choice(members, p=probs))
    raise ValueError(f"rule {rule.kind!r} is not a sampling rule")
