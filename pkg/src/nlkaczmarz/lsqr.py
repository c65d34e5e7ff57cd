"""Iterative least-squares engine over abstract linear operators.

Solves min ||A v - b||_2 by Golub-Kahan bidiagonalization (Paige and
Saunders 1982), undamped.  Iterates stay in range(A^T), so on consistent
or rank-deficient problems the exact-arithmetic limit is the minimum-norm
solution A^+ b.  Operators only need ``shape``, ``matvec`` and ``rmatvec``;
the Jacobian row blocks from :mod:`.systems` qualify directly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteValue

ATOL_BTOL_MET = "atol_btol_met"
MAX_INNER = "max_inner"


class MatrixOperator:
    """Dense matrix wrapped as a linear operator (test and oracle use)."""

    def __init__(self, array):
        self.array = np.asarray(array, dtype=float)

    @property
    def shape(self):
        return self.array.shape

    def matvec(self, v):
        return self.array @ v

    def rmatvec(self, u):
        return self.array.T @ u


@dataclass
class LsqrOutcome:
    solution: np.ndarray
    iterations: int
    relative_residual: float
    stop_reason: str


def lsqr_solve(op, b, atol=1e-10, btol=1e-10, max_inner=None):
    """Approximate the minimum-norm least-squares solution of A v ~= b.

    Stops when the standard LSQR estimates satisfy either
    ``||r|| <= btol*||b|| + atol*||A||*||v||`` (compatible system) or
    ``||A^T r|| <= atol*||A||*||r||`` (least-squares optimality), or when
    ``max_inner`` bidiagonalization steps have been taken (default
    2*(p+n)).  Raises NonFiniteValue if the recurrence breaks down into
    NaN/Inf.
    """
    if atol <= 0 or btol <= 0:
        raise ValueError("atol and btol must be positive")
    p, n = op.shape
    b = np.asarray(b, dtype=float)
    if b.shape != (p,):
        raise ValueError(f"b has shape {b.shape}, expected ({p},)")
    if max_inner is None:
        max_inner = 2 * (p + n)

    x = np.zeros(n)
    u = b.copy()
    bnorm = beta = float(np.linalg.norm(u))
    if beta == 0.0:
        return LsqrOutcome(x, 0, 0.0, ATOL_BTOL_MET)
    u /= beta
    v = op.rmatvec(u)
    alfa = float(np.linalg.norm(v))
    if alfa == 0.0:
        # A^T b = 0: zero vector already minimizes ||Av - b||.
        return LsqrOutcome(x, 0, 1.0, ATOL_BTOL_MET)
    v /= alfa

    w = v.copy()
    phibar = beta
    rhobar = alfa
    anorm2 = alfa * alfa
    itn = 0
    stop = MAX_INNER
    rnorm = beta

    while itn < max_inner:
        itn += 1

        # Next Golub-Kahan step.
        u = op.matvec(v) - alfa * u
        beta = float(np.linalg.norm(u))
        if beta > 0.0:
            u /= beta
            v = op.rmatvec(u) - beta * v
            alfa = float(np.linalg.norm(v))
            if alfa > 0.0:
                v /= alfa
        anorm2 += alfa * alfa + beta * beta

        # Givens rotation eliminating the subdiagonal.
        rho = math.hypot(rhobar, beta)
        c = rhobar / rho
        s = beta / rho
        theta = s * alfa
        rhobar = -c * alfa
        phi = c * phibar
        phibar = s * phibar

        x += (phi / rho) * w
        w = v - (theta / rho) * w

        rnorm = abs(phibar)
        arnorm = rnorm * alfa * abs(c)
        anorm = math.sqrt(anorm2)
        xnorm = float(np.linalg.norm(x))
        if not (math.isfinite(rnorm) and math.isfinite(arnorm) and math.isfinite(xnorm)):
            raise NonFiniteValue("LSQR recurrence broke down")

        test1 = rnorm / bnorm
        test2 = arnorm / (anorm * rnorm) if rnorm > 0.0 else 0.0
        if test1 <= btol + atol * anorm * xnorm / bnorm or test2 <= atol:
            stop = ATOL_BTOL_MET
            break
        if beta == 0.0:
            # Krylov space exhausted; the current iterate is exact.
            stop = ATOL_BTOL_MET
            break

    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("LSQR produced a non-finite solution")
    return LsqrOutcome(x, itn, rnorm / bnorm, stop)
