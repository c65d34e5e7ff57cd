"""The five benchmark nonlinear systems plus synthetic linear systems.

Component formulas use 1-based row numbering k with period tests
mod(k, p); rows are stored 0-based, so the tests below apply to (i + 1).
Every system ships analytic row gradients (hand-derived, validated in the
test suite against the finite-difference oracle) and a vectorized block
evaluator.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentSystem, InvalidDimension
from .systems import CooRowBlock, DenseRowBlock, NonlinearSystem, SparseRow

MODIFIED_ROSENBROCK = "modified_rosenbrock"
EXTENDED_CRAGG_LEVY = "extended_cragg_levy"
CHANDRASEKHAR_H = "chandrasekhar_h"
AUGMENTED_ROSENBROCK = "augmented_rosenbrock"
EXTENDED_POWELL_BADLY_SCALED = "extended_powell_badly_scaled"

PROBLEM_NAMES = (
    MODIFIED_ROSENBROCK,
    EXTENDED_CRAGG_LEVY,
    CHANDRASEKHAR_H,
    AUGMENTED_ROSENBROCK,
    EXTENDED_POWELL_BADLY_SCALED,
)

PERIODS = {
    MODIFIED_ROSENBROCK: 2,
    EXTENDED_CRAGG_LEVY: 4,
    CHANDRASEKHAR_H: 1,
    AUGMENTED_ROSENBROCK: 4,
    EXTENDED_POWELL_BADLY_SCALED: 2,
}

# Dense-row problems get O(m) per row / O(m^2) per residual pass; cap the
# default size so a desk machine is not surprised.
DENSE_SIZE_CAP = 4000


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    m: int
    c: float = 0.9
    allow_large_dense: bool = False

    def __post_init__(self):
        if self.name not in PROBLEM_NAMES:
            raise InvalidDimension(f"unknown problem {self.name!r}")
        period = PERIODS[self.name]
        if self.m < 1 or self.m % period != 0:
            raise InvalidDimension(
                f"{self.name} needs m to be a positive multiple of {period}, got {self.m}"
            )
        if (
            self.name == CHANDRASEKHAR_H
            and self.m > DENSE_SIZE_CAP
            and not self.allow_large_dense
        ):
            raise InvalidDimension(
                f"{self.name} at m={self.m} exceeds the dense cap {DENSE_SIZE_CAP}; "
                "set allow_large_dense=True to override"
            )


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _modified_rosenbrock(m):
    def res(x):
        out = np.empty(m)
        out[0::2] = _sigmoid(x[0::2]) - 0.73
        out[1::2] = 10.0 * (x[1::2] - x[0::2] ** 2)
        return out

    def row(i, x):
        if i % 2 == 0:
            s = _sigmoid(x[i : i + 1])[0]
            return SparseRow([i], [s * (1.0 - s)], m)
        return SparseRow([i - 1, i], [-20.0 * x[i - 1], 10.0], m)

    def block(rows, x):
        pos = np.arange(rows.size)
        even = rows % 2 == 0
        er, ep = rows[even], pos[even]
        orr, op = rows[~even], pos[~even]
        s = _sigmoid(x[er])
        rp = np.concatenate([ep, op, op])
        cols = np.concatenate([er, orr - 1, orr])
        vals = np.concatenate([s * (1.0 - s), -20.0 * x[orr - 1], np.full(orr.size, 10.0)])
        return CooRowBlock(rp, cols, vals, rows.size, m)

    x0 = np.tile([-1.8, -1.0], m // 2)
    return NonlinearSystem(m, m, res, row, block, MODIFIED_ROSENBROCK), x0


def _extended_cragg_levy(m):
    def res(x):
        out = np.empty(m)
        out[0::4] = (np.exp(x[0::4]) - x[1::4]) ** 2
        out[1::4] = 10.0 * (x[1::4] - x[2::4]) ** 3
        out[2::4] = np.tan(x[2::4] - x[3::4]) ** 2
        out[3::4] = x[3::4] - 1.0
        return out

    def row(i, x):
        cls = i % 4
        if cls == 0:
            e = np.exp(x[i])
            w = e - x[i + 1]
            return SparseRow([i, i + 1], [2.0 * w * e, -2.0 * w], m)
        if cls == 1:
            w = x[i] - x[i + 1]
            return SparseRow([i, i + 1], [30.0 * w * w, -30.0 * w * w], m)
        if cls == 2:
            t = np.tan(x[i] - x[i + 1])
            g = 2.0 * t * (1.0 + t * t)
            return SparseRow([i, i + 1], [g, -g], m)
        return SparseRow([i], [1.0], m)

    def block(rows, x):
        pos = np.arange(rows.size)
        cls = rows % 4
        rp_parts, col_parts, val_parts = [], [], []

        r0, p0 = rows[cls == 0], pos[cls == 0]
        e = np.exp(x[r0])
        w = e - x[r0 + 1]
        rp_parts += [p0, p0]
        col_parts += [r0, r0 + 1]
        val_parts += [2.0 * w * e, -2.0 * w]

        r1, p1 = rows[cls == 1], pos[cls == 1]
        w = x[r1] - x[r1 + 1]
        rp_parts += [p1, p1]
        col_parts += [r1, r1 + 1]
        val_parts += [30.0 * w * w, -30.0 * w * w]

        r2, p2 = rows[cls == 2], pos[cls == 2]
        t = np.tan(x[r2] - x[r2 + 1])
        g = 2.0 * t * (1.0 + t * t)
        rp_parts += [p2, p2]
        col_parts += [r2, r2 + 1]
        val_parts += [g, -g]

        r3, p3 = rows[cls == 3], pos[cls == 3]
        rp_parts.append(p3)
        col_parts.append(r3)
        val_parts.append(np.ones(r3.size))

        return CooRowBlock(
            np.concatenate(rp_parts),
            np.concatenate(col_parts),
            np.concatenate(val_parts),
            rows.size,
            m,
        )

    x0 = np.tile([1.0, 2.0, 2.0, 2.0], m // 4)
    return NonlinearSystem(m, m, res, row, block, EXTENDED_CRAGG_LEVY), x0


def _chandrasekhar_h(m, c):
    # Midpoint-rule discretization of the radiative-transfer H-equation:
    # F_i(u) = u_i - 1 / (1 - sum_j K_ij u_j), K_ij = (c / 2m) t_i / (t_i + t_j).
    t = (np.arange(1, m + 1) - 0.5) / m
    kernel = (c / (2.0 * m)) * t[:, None] / (t[:, None] + t[None, :])

    def res(u):
        a = 1.0 - kernel @ u
        return u - 1.0 / a

    def row(i, u):
        a_i = 1.0 - kernel[i] @ u
        vals = -kernel[i] / (a_i * a_i)
        vals[i] += 1.0
        return SparseRow(np.arange(m), vals, m)

    def block(rows, u):
        a = 1.0 - kernel[rows] @ u
        d = -kernel[rows] / (a * a)[:, None]
        d[np.arange(rows.size), rows] += 1.0
        return DenseRowBlock(d)

    x0 = np.zeros(m)
    sys = NonlinearSystem(m, m, res, row, block, CHANDRASEKHAR_H, meta={"c": c})
    return sys, x0


def _augmented_rosenbrock(m):
    def res(x):
        out = np.empty(m)
        out[0::4] = 100.0 * (x[1::4] - x[0::4] ** 2)
        out[1::4] = 1.0 - 4.0 * x[0::4]
        out[2::4] = 1.25 * x[2::4] - 0.25 * x[2::4] ** 3
        out[3::4] = x[3::4]
        return out

    def row(i, x):
        cls = i % 4
        if cls == 0:
            return SparseRow([i, i + 1], [-200.0 * x[i], 100.0], m)
        if cls == 1:
            return SparseRow([i - 1], [-4.0], m)
        if cls == 2:
            return SparseRow([i], [1.25 - 0.75 * x[i] ** 2], m)
        return SparseRow([i], [1.0], m)

    def block(rows, x):
        pos = np.arange(rows.size)
        cls = rows % 4
        rp_parts, col_parts, val_parts = [], [], []

        r0, p0 = rows[cls == 0], pos[cls == 0]
        rp_parts += [p0, p0]
        col_parts += [r0, r0 + 1]
        val_parts += [-200.0 * x[r0], np.full(r0.size, 100.0)]

        r1, p1 = rows[cls == 1], pos[cls == 1]
        rp_parts.append(p1)
        col_parts.append(r1 - 1)
        val_parts.append(np.full(r1.size, -4.0))

        r2, p2 = rows[cls == 2], pos[cls == 2]
        rp_parts.append(p2)
        col_parts.append(r2)
        val_parts.append(1.25 - 0.75 * x[r2] ** 2)

        r3, p3 = rows[cls == 3], pos[cls == 3]
        rp_parts.append(p3)
        col_parts.append(r3)
        val_parts.append(np.ones(r3.size))

        return CooRowBlock(
            np.concatenate(rp_parts),
            np.concatenate(col_parts),
            np.concatenate(val_parts),
            rows.size,
            m,
        )

    x0 = np.tile([-1.2, 1.0, -1.0, 20.0], m // 4)
    return NonlinearSystem(m, m, res, row, block, AUGMENTED_ROSENBROCK), x0


def _extended_powell_badly_scaled(m):
    def res(x):
        out = np.empty(m)
        out[0::2] = 1e4 * x[0::2] * x[1::2] - 1.0
        out[1::2] = np.exp(-x[0::2]) + np.exp(-x[1::2]) - 1.0001
        return out

    def row(i, x):
        if i % 2 == 0:
            return SparseRow([i, i + 1], [1e4 * x[i + 1], 1e4 * x[i]], m)
        return SparseRow([i - 1, i], [-np.exp(-x[i - 1]), -np.exp(-x[i])], m)

    def block(rows, x):
        pos = np.arange(rows.size)
        even = rows % 2 == 0
        er, ep = rows[even], pos[even]
        orr, op = rows[~even], pos[~even]
        rp = np.concatenate([ep, ep, op, op])
        cols = np.concatenate([er, er + 1, orr - 1, orr])
        vals = np.concatenate(
            [1e4 * x[er + 1], 1e4 * x[er], -np.exp(-x[orr - 1]), -np.exp(-x[orr])]
        )
        return CooRowBlock(rp, cols, vals, rows.size, m)

    x0 = np.tile([0.0, 1.0], m // 2)
    return NonlinearSystem(m, m, res, row, block, EXTENDED_POWELL_BADLY_SCALED), x0


def make_problem(spec):
    """Construct a benchmark system and its prescribed initial point."""
    if spec.name == MODIFIED_ROSENBROCK:
        return _modified_rosenbrock(spec.m)
    if spec.name == EXTENDED_CRAGG_LEVY:
        return _extended_cragg_levy(spec.m)
    if spec.name == CHANDRASEKHAR_H:
        return _chandrasekhar_h(spec.m, spec.c)
    if spec.name == AUGMENTED_ROSENBROCK:
        return _augmented_rosenbrock(spec.m)
    if spec.name == EXTENDED_POWELL_BADLY_SCALED:
        return _extended_powell_badly_scaled(spec.m)
    raise InvalidDimension(f"unknown problem {spec.name!r}")


def make_linear_problem(a, b):
    """Wrap F(x) = A x - b as a NonlinearSystem, for linear-case oracles.

    Returns the system together with the minimum-norm solution (dense
    decomposition).  The right-hand side must be consistent.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    x_star, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.linalg.norm(a @ x_star - b) > 1e-10 * max(1.0, np.linalg.norm(b)):
        raise InconsistentSystem("b is not in range(A)")

    def res(x):
        return a @ x - b

    def row(i, x):
        return SparseRow(np.arange(n), a[i].copy(), n)

    def block(rows, x):
        return DenseRowBlock(a[rows])

    sys = NonlinearSystem(m, n, res, row, block, "linear_synthetic")
    return sys, x_star
