"""Nonlinear-system abstraction: residual + per-row Jacobian access.

A system is F: R^n -> R^m given by a vectorized residual evaluator and a
per-row gradient evaluator.  Row gradients travel as ``SparseRow`` (dense
rows simply carry every index).  Blocks of rows are served as ``CooRowBlock``
or ``DenseRowBlock``, both of which expose matvec / rmatvec / row norms so
the solvers never materialize a full Jacobian.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NonFiniteValue,
)


@dataclass(frozen=True)
class SparseRow:
    """One Jacobian row as (index, value) pairs over an ambient dimension.

    Indices are strictly increasing; values are finite; dense rows carry
    all indices 0..dim-1.
    """

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if idx.shape != val.shape or idx.ndim != 1:
            raise DimensionMismatch("indices and values must be 1-D and equally long")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise IndexOutOfRange(f"column index outside [0, {self.dim})")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("SparseRow indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise NonFiniteValue("non-finite gradient entry")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def squared_norm(self):
        return float(self.values @ self.values)

    def to_dense(self):
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


class CooRowBlock:
    """Rows of a Jacobian block in coordinate form.

    ``row_positions[t]`` is the block-local row of entry t (0..p-1),
    ``cols[t]`` its column, ``vals[t]`` its value.  Matvec products use
    ``np.bincount`` gathers, which keeps per-iteration cost at O(nnz).
    """

    def __init__(self, row_positions, cols, vals, num_rows, dim):
        self.row_positions = np.asarray(row_positions, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=float)
        if not (self.row_positions.shape == self.cols.shape == self.vals.shape):
            raise DimensionMismatch("COO arrays must share one shape")
        if not np.all(np.isfinite(self.vals)):
            raise NonFiniteValue("non-finite Jacobian entry in block")
        self.num_rows = int(num_rows)
        self.dim = int(dim)

    @property
    def shape(self):
        return (self.num_rows, self.dim)

    def matvec(self, v):
        return np.bincount(
            self.row_positions, weights=self.vals * v[self.cols], minlength=self.num_rows
        )

    def rmatvec(self, u):
        return np.bincount(
            self.cols, weights=self.vals * u[self.row_positions], minlength=self.dim
        )

    def row_squared_norms(self):
        return np.bincount(
            self.row_positions, weights=self.vals * self.vals, minlength=self.num_rows
        )

    def row(self, j):
        """Block-local row j as a SparseRow (test/introspection surface)."""
        mask = self.row_positions == j
        cols = self.cols[mask]
        vals = self.vals[mask]
        order = np.argsort(cols)
        return SparseRow(cols[order], vals[order], self.dim)

    def to_dense(self):
        out = np.zeros(self.shape)
        np.add.at(out, (self.row_positions, self.cols), self.vals)
        return out


class DenseRowBlock:
    """Dense Jacobian block (used where every row has full support)."""

    def __init__(self, array):
        self.array = np.asarray(array, dtype=float)
        if self.array.ndim != 2:
            raise DimensionMismatch("dense block must be 2-D")
        if not np.all(np.isfinite(self.array)):
            raise NonFiniteValue("non-finite Jacobian entry in block")

    @property
    def shape(self):
        return self.array.shape

    def matvec(self, v):
        return self.array @ v

    def rmatvec(self, u):
        return self.array.T @ u

    def row_squared_norms(self):
        return np.einsum("ij,ij->i", self.array, self.array)

    def row(self, j):
        n = self.array.shape[1]
        return SparseRow(np.arange(n), self.array[j].copy(), n)

    def to_dense(self):
        return self.array.copy()


def stack_rows(rows, dim):
    """Assemble a CooRowBlock from a list of SparseRow (in block order)."""
    counts = [r.indices.size for r in rows]
    row_positions = np.repeat(np.arange(len(rows)), counts)
    cols = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, np.int64)
    vals = np.concatenate([r.values for r in rows]) if rows else np.empty(0)
    return CooRowBlock(row_positions, cols, vals, len(rows), dim)


@dataclass(frozen=True)
class NonlinearSystem:
    """F: R^n -> R^m with per-row gradient access.

    ``residual_fn(x)`` returns the m-vector F(x); ``row_gradient_fn(i, x)``
    returns row i of F'(x) as a SparseRow; the optional ``block_fn(rows, x)``
    returns a RowBlock for an index array in one vectorized call.  All
    evaluators must be pure, so systems are shareable across threads.
    """

    m: int
    n: int
    residual_fn: object
    row_gradient_fn: object
    block_fn: object = None
    name: str = ""
    meta: dict = field(default_factory=dict)


def check_point(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({n},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("non-finite entry in point")
    return x


def residual(system, x):
    """Evaluate F(x), checking shape and finiteness."""
    x = check_point(x, system.n)
    f = np.asarray(system.residual_fn(x), dtype=float)
    if f.shape != (system.m,):
        raise DimensionMismatch(f"residual has shape {f.shape}, expected ({system.m},)")
    if not np.all(np.isfinite(f)):
        raise NonFiniteValue("residual evaluation left the problem's domain")
    return f


def jacobian_row(system, i, x):
    """Row i of F'(x) as a SparseRow."""
    if not 0 <= i < system.m:
        raise IndexOutOfRange(f"row {i} outside [0, {system.m})")
    x = check_point(x, system.n)
    return system.row_gradient_fn(i, x)


def jacobian_block(system, rows, x):
    """Jacobian rows for an index array, in the given order.

    Uses the system's vectorized block evaluator when present, otherwise
    stacks individual ``jacobian_row`` calls.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise IndexOutOfRange("empty block")
    if rows.min() < 0 or rows.max() >= system.m:
        raise IndexOutOfRange(f"block indices outside [0, {system.m})")
    x = check_point(x, system.n)
    if system.block_fn is not None:
        return system.block_fn(rows, x)
    return stack_rows([system.row_gradient_fn(int(i), x) for i in rows], system.n)


def fd_jacobian_row(system, i, x, h=1e-6):
    """Central-difference approximation of row i of F'(x), as a dense row.

    The step for coordinate j is h * max(1, |x_j|).  Test oracle only; the
    analytic rows are what the solvers consume.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    x = check_point(x, system.n)
    out = np.zeros(system.n)
    for j in range(system.n):
        step = h * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        out[j] = (residual(system, xp)[i] - residual(system, xm)[i]) / (2.0 * step)
    return out
