"""Iterative update rules and the outer solve loop.

Every method shares one state shape (current iterate, previous iterate,
current residual) and one loop; they differ in how rows are selected and
how the correction is built:

* averaged block steps move along d = sum_i w_i F_i grad F_i / ||grad F_i||^2
  over a greedy index block, with natural weights w_i proportional to
  ||grad F_i||^2 by default;
* the adaptive-momentum step picks the step size and momentum coefficient
  that realize the orthogonal projection of the (linearized) solution onto
  the plane spanned by d and the last displacement, guarded by the
  Cauchy-Schwarz gap Delta = ||d||^2 ||dx||^2 - <d, dx>^2;
* when the guard fails (or at the first iteration) all momentum methods
  fall back to the one-parameter extrapolated projection
  x - (s / ||d||^2) d, where s = sum_i w_i F_i^2 / ||grad F_i||^2;
* pseudoinverse block steps solve min ||J_block d - F_block|| by LSQR;
* row-action steps are the singleton-block specialization.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import stopping
from .errors import (
    NlkError,
    ZeroDirection,
    ZeroGradientRow,
)
from .lsqr import ATOL_BTOL_MET, lsqr_solve
from .selection import (
    GREEDY_RANDOMIZED,
    UNIFORM_RANDOM,
    SelectionRule,
    capped_set,
    greedy_threshold_set,
    max_residual_index,
    sample_index,
)
from .systems import check_point, jacobian_block, jacobian_row, residual

ABNKAM = "abnkam"
ABNKAM_IDEAL = "abnkam_ideal"
ABNK2 = "abnk2"
ABNKM_CONST = "abnkm_const"
NK = "nk"
NURK = "nurk"
MRNK = "mrnk"
NGRK = "ngrk"
NGRKM = "ngrkm"
MRBNK = "mrbnk"
RBCNK = "rbcnk"

METHODS = (
    ABNKAM,
    ABNKAM_IDEAL,
    ABNK2,
    ABNKM_CONST,
    NK,
    NURK,
    MRNK,
    NGRK,
    NGRKM,
    MRBNK,
    RBCNK,
)

NATURAL = "natural"
UNIFORM = "uniform"

CONVERGED = stopping.CONVERGED
MAX_ITERATIONS = stopping.MAX_ITERATIONS
EVALUATION_FAILURE = "evaluation_failure"


@dataclass(frozen=True)
class MethodConfig:
    """Method tag plus every tunable knob a step rule may consult.

    ``const_beta=None`` resolves to the method default: 0.3 for the
    momentum row method, 0 elsewhere.
    """

    method: str = ABNKAM
    theta: float = 0.5
    epsilon: float = 1e-16
    beta_max: float = math.inf
    const_alpha: float = 1.0
    const_beta: float = None
    weight_mode: str = NATURAL
    seed: int = 0
    lsqr_atol: float = 1e-10
    lsqr_btol: float = 1e-10
    lsqr_max_inner: int = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not self.beta_max > 0:
            raise ValueError("beta_max must be positive")
        if self.weight_mode not in (NATURAL, UNIFORM):
            raise ValueError(f"unknown weight mode {self.weight_mode!r}")
        if self.method == ABNKM_CONST and not 0.0 < self.const_alpha < 2.0:
            raise ValueError("constant step size must lie in (0, 2)")

    def resolved_const_beta(self):
        if self.const_beta is not None:
            return self.const_beta
        return 0.3 if self.method == NGRKM else 0.0


@dataclass(frozen=True)
class IterationState:
    """Loop-head snapshot: f always equals residual(system, x)."""

    x: np.ndarray
    x_prev: np.ndarray
    f: np.ndarray
    k: int


@dataclass(frozen=True)
class AdaptiveParams:
    alpha: float
    beta: float
    delta: float
    s: float


@dataclass(frozen=True)
class StepInfo:
    """What a single step did, for history records and tests."""

    branch: str = ""
    alpha: float = None
    beta: float = None
    delta: float = None
    block_size: int = None
    angle: float = None


@dataclass(frozen=True)
class HistoryRecord:
    k: int
    residual_norm: float
    error_norm: float = None
    alpha: float = None
    beta: float = None
    delta: float = None
    block_size: int = None
    branch: str = ""
    angle: float = None


@dataclass
class SolveReport:
    status: str
    iterations: int
    wall_seconds: float
    final_residual_norm: float
    history: list = None
    failure: str = None


def adaptive_params(d, dx, s):
    """Projection coefficients over span{d, dx} from the reduced normal
    equations: alpha = ||dx||^2 s / Delta, beta = <dx, d> s / Delta.

    Delta is returned even when it is zero or (by roundoff) slightly
    negative; in that regime no division is performed and alpha/beta are
    zero placeholders -- the caller's guard decides the branch.
    """
    d = np.asarray(d, dtype=float)
    dx = np.asarray(dx, dtype=float)
    dd = float(d @ d)
    xx = float(dx @ dx)
    cross = float(d @ dx)
    delta = dd * xx - cross * cross
    if delta <= 0.0:
        return AdaptiveParams(0.0, 0.0, delta, s)
    return AdaptiveParams(xx * s / delta, cross * s / delta, delta, s)


def momentum_angle(params, d, dx):
    """sin^2 of the angle between d and dx, from the Cauchy-Schwarz gap.

    Clamped to [0, 1] against roundoff; 0 means collinear (momentum adds
    nothing), 1 means orthogonal.
    """
    dd = float(np.asarray(d) @ np.asarray(d))
    xx = float(np.asarray(dx) @ np.asarray(dx))
    if dd <= 0.0 or xx <= 0.0:
        raise ZeroDirection("angle undefined for zero vectors")
    return min(1.0, max(0.0, params.delta / (dd * xx)))


def block_quantities(system, rows, x, weight_mode=NATURAL, f=None):
    """Aggregate one block into (d, s, block residual square).

    d is the weighted combination of per-row Kaczmarz directions,
    s the matching combination of squared row residuals over squared
    gradient norms (the reduced inner product the adaptive parameters
    consume).  Accumulation goes through sparse row gathers; the full
    Jacobian is never formed.
    """
    if f is None:
        f = residual(system, x)
    rows = np.asarray(rows, dtype=np.int64)
    fj = f[rows]
    block = jacobian_block(system, rows, x)
    g2 = block.row_squared_norms()
    if np.any(g2 == 0.0):
        raise ZeroGradientRow(
            f"zero gradient row in block (rows {rows[np.flatnonzero(g2 == 0)][:4]}...)"
        )
    block_sq = float(fj @ fj)
    if weight_mode == NATURAL:
        wsum = float(g2.sum())
        d = block.rmatvec(fj) / wsum
        s = block_sq / wsum
    elif weight_mode == UNIFORM:
        p = rows.size
        d = block.rmatvec(fj / g2) / p
        s = float((fj * fj / g2).sum()) / p
    else:
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    return d, s, block_sq


def _next_state(system, state, x_new):
    f_new = residual(system, x_new)
    return IterationState(x_new, state.x, f_new, state.k + 1)


def _extrapolated(x, d, s):
    dd = float(d @ d)
    if dd == 0.0:
        raise ZeroDirection("block direction vanished (stationary block objective)")
    return x - (s / dd) * d, s / dd


def _abnkam_family_step(state, system, config, truncate_beta):
    rows = greedy_threshold_set(state.f, config.theta)
    d, s, _ = block_quantities(system, rows, state.x, config.weight_mode, f=state.f)

    if state.x_prev is not None:
        dx = state.x - state.x_prev
        params = adaptive_params(d, dx, s)
        dd = float(d @ d)
        xx = float(dx @ dx)
        angle = (
            min(1.0, max(0.0, params.delta / (dd * xx))) if dd > 0 and xx > 0 else None
        )
        in_range = (0.0 < params.beta < config.beta_max) if truncate_beta else True
        # A negative gap can only be roundoff noise at collinearity, where
        # the projection system is singular: treat it as below the guard.
        if abs(params.delta) >= config.epsilon and params.delta > 0.0 and in_range:
            x_new = state.x - params.alpha * d + params.beta * dx
            info = StepInfo(
                branch="momentum",
                alpha=params.alpha,
                beta=params.beta,
                delta=params.delta,
                block_size=rows.size,
                angle=angle,
            )
            return _next_state(system, state, x_new), info
        x_new, alpha = _extrapolated(state.x, d, s)
        info = StepInfo(
            branch="fallback",
            alpha=alpha,
            beta=0.0,
            delta=params.delta,
            block_size=rows.size,
            angle=angle,
        )
        return _next_state(system, state, x_new), info

    # No displacement history yet: one-parameter projection.
    x_new, alpha = _extrapolated(state.x, d, s)
    info = StepInfo(branch="fallback", alpha=alpha, beta=0.0, block_size=rows.size)
    return _next_state(system, state, x_new), info


def abnkam_step(state, system, config):
    """Hybrid adaptive-momentum block step.

    Takes the two-parameter momentum update when the Cauchy-Schwarz gap
    clears epsilon and the momentum coefficient lies in (0, beta_max);
    otherwise applies the extrapolated fallback.
    """
    return _abnkam_family_step(state, system, config, truncate_beta=True)


def abnkam_ideal_step(state, system, config):
    """Adaptive-momentum step without the beta range guard: falls back only
    when the gap is below epsilon (or before any displacement exists)."""
    return _abnkam_family_step(state, system, config, truncate_beta=False)


def abnk2_step(state, system, config):
    """Momentum-free averaged block step with extrapolated step size."""
    rows = greedy_threshold_set(state.f, config.theta)
    d, s, _ = block_quantities(system, rows, state.x, config.weight_mode, f=state.f)
    x_new, alpha = _extrapolated(state.x, d, s)
    info = StepInfo(branch="fallback", alpha=alpha, beta=0.0, block_size=rows.size)
    return _next_state(system, state, x_new), info


def abnkm_const_step(state, system, config):
    """Averaged block step with constant step size and momentum weight."""
    rows = greedy_threshold_set(state.f, config.theta)
    d, _, _ = block_quantities(system, rows, state.x, config.weight_mode, f=state.f)
    beta = config.resolved_const_beta()
    x_new = state.x - config.const_alpha * d
    if state.x_prev is not None and beta != 0.0:
        x_new = x_new + beta * (state.x - state.x_prev)
    info = StepInfo(
        branch="const", alpha=config.const_alpha, beta=beta, block_size=rows.size
    )
    return _next_state(system, state, x_new), info


def row_step(state, system, i, alpha, beta):
    """Single-row Kaczmarz action with optional heavy-ball term.

    x <- x - alpha * F_i / ||grad F_i||^2 * grad F_i + beta * (x - x_prev);
    the momentum term is dropped while no previous iterate exists.
    """
    row = jacobian_row(system, i, state.x)
    g2 = row.squared_norm
    if g2 == 0.0:
        raise ZeroGradientRow(f"gradient of row {i} vanished")
    coeff = alpha * state.f[i] / g2
    if state.x_prev is not None and beta != 0.0:
        x_new = state.x + beta * (state.x - state.x_prev)
    else:
        x_new = state.x.copy()
    x_new[row.indices] -= coeff * row.values
    info = StepInfo(branch="row", alpha=alpha, beta=beta, block_size=1)
    return _next_state(system, state, x_new), info


def block_pseudoinverse_step(state, system, rows, config):
    """Block Newton-like step d = pinv(J_block) F_block, applied via LSQR.

    If the inner budget runs out the best iterate is still applied; the
    event is flagged through the step's branch label.
    """
    rows = np.asarray(rows, dtype=np.int64)
    block = jacobian_block(system, rows, state.x)
    fj = state.f[rows]
    max_inner = config.lsqr_max_inner
    if max_inner is None:
        max_inner = 2 * (rows.size + system.n)
    out = lsqr_solve(block, fj, config.lsqr_atol, config.lsqr_btol, max_inner)
    x_new = state.x - out.solution
    branch = "lsqr" if out.stop_reason == ATOL_BTOL_MET else "lsqr_budget"
    info = StepInfo(branch=branch, block_size=rows.size)
    return _next_state(system, state, x_new), info


def _make_stepper(system, config, rng):
    method = config.method
    if method == ABNKAM:
        return lambda st: abnkam_step(st, system, config)
    if method == ABNKAM_IDEAL:
        return lambda st: abnkam_ideal_step(st, system, config)
    if method == ABNK2:
        return lambda st: abnk2_step(st, system, config)
    if method == ABNKM_CONST:
        return lambda st: abnkm_const_step(st, system, config)
    if method == MRBNK:
        return lambda st: block_pseudoinverse_step(
            st, system, greedy_threshold_set(st.f, config.theta), config
        )
    if method == RBCNK:
        return lambda st: block_pseudoinverse_step(
            st, system, capped_set(st.f, config.theta), config
        )
    if method == MRNK:
        return lambda st: row_step(st, system, max_residual_index(st.f), 1.0, 0.0)
    if method == NK:
        return lambda st: row_step(st, system, st.k % system.m, 1.0, 0.0)
    if method == NURK:
        rule = SelectionRule(UNIFORM_RANDOM)
        return lambda st: row_step(st, system, sample_index(st.f, rule, rng), 1.0, 0.0)
    if method == NGRK:
        rule = SelectionRule(GREEDY_RANDOMIZED, config.theta)
        return lambda st: row_step(
            st, system, sample_index(st.f, rule, rng), config.const_alpha, 0.0
        )
    if method == NGRKM:
        rule = SelectionRule(GREEDY_RANDOMIZED, config.theta)
        beta = config.resolved_const_beta()
        return lambda st: row_step(
            st, system, sample_index(st.f, rule, rng), config.const_alpha, beta
        )
    raise ValueError(f"unknown method {method!r}")


def _record(state, info, x_ref):
    err = float(np.linalg.norm(state.x - x_ref)) if x_ref is not None else None
    return HistoryRecord(
        k=state.k,
        residual_norm=float(np.linalg.norm(state.f)),
        error_norm=err,
        alpha=info.alpha,
        beta=info.beta,
        delta=info.delta,
        block_size=info.block_size,
        branch=info.branch,
        angle=info.angle,
    )


def solve(system, x0, config, stop=None, history=False, x_ref=None):
    """Iterate the configured step rule from x0 until the stopping rule fires.

    Wall time covers the loop only.  Numeric failures inside a step
    (non-finite evaluation, vanishing gradients or directions) end the run
    with status 'evaluation_failure' and the offending iteration index in
    ``failure``; they are not raised.  With ``history=True`` one record per
    iteration (plus the k=0 baseline) is kept, including the iterate error
    against ``x_ref`` when a reference point is supplied.
    """
    if stop is None:
        stop = stopping.StoppingConfig()
    x0 = check_point(x0, system.n)
    rng = np.random.default_rng(config.seed)

    records = [] if history else None
    t0 = time.perf_counter()
    try:
        f0 = residual(system, x0)
    except NlkError as exc:
        wall = time.perf_counter() - t0
        return SolveReport(
            EVALUATION_FAILURE, 0, wall, math.nan, records, f"iteration 0: {exc}"
        )
    state = IterationState(x0, None, f0, 0)
    r0_norm = float(np.linalg.norm(f0))
    stepper = _make_stepper(system, config, rng)
    if history:
        records.append(_record(state, StepInfo(), x_ref))

    status = None
    failure = None
    while True:
        decision = stopping.should_stop(state.f, r0_norm, state.k, stop)
        if decision != stopping.CONTINUE:
            status = decision
            break
        try:
            state, info = stepper(state)
        except NlkError as exc:
            status = EVALUATION_FAILURE
            failure = f"iteration {state.k + 1}: {exc}"
            break
        if history:
            records.append(_record(state, info, x_ref))
    wall = time.perf_counter() - t0

    return SolveReport(
        status=status,
        iterations=state.k,
        wall_seconds=wall,
        final_residual_norm=float(np.linalg.norm(state.f)),
        history=records,
        failure=failure,
    )
