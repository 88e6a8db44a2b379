"""Accelerated proximal gradient solver with screening and relaxing.

Each iteration runs one accelerated projected gradient step on the
reduced problem, certifies the lifted (feasible) point with a duality
gap and safe-sphere radius, runs the identification tests the chosen
variant enables, and folds the outcome into the partition:

    variant "apg"   neither test (plain baseline)
    variant "apgs"  screening only
    variant "apgr"  relaxing only
    variant "sr"    both

Two structural facts keep the per-iteration cost at two reduced
matvecs plus vector work.  First, partial minimization makes the
coupling terms of the reduced gradient cancel against the reduced
lambda shift, so the prox step only needs A_free'(A_r v - y_r), and
that correlation at the extrapolated point is a linear combination of
cached correlations at the two latest iterates.  Second, the positive
block's dual correlations are lam_pos + eps*x_pos by the offset
identity, so certifying it costs O(|J|).

Identification is two-phase.  Tests certify indices immediately (they
count in the trace and are pinned/propagated from then on), but the
physical partition update is deferred to moments where it is free or
amortized: certified zeros leave once their coordinate is exactly 0 in
the two latest iterates (pure subsetting -- caches and the APG
trajectory carry over unchanged, so momentum survives), while
certified positives are applied in batches, since relaxing rebuilds
every coupled quantity.  A batch is flushed when it has grown past
``RELAX_FLUSH_MIN`` or when no untested candidate remains, and only if
its exact FLOP bill fits the remaining budget.

The certificate's dual penalty runs over the not-yet-certified-zero
atoms only: certified zeros provably have zero slack at the dual
optimum, so excluding them keeps the same maximizer and the sphere
stays safe while the gap tightens.  The primal side keeps the best
feasible value seen so far.  At every stop the returned point is
re-certified against the full problem (all n atoms), so the final
trace row matches ``core.duality_gap`` at the returned point.

Work is metered in FLOPs by a fixed table (see ``flop_cost``): every
stage of the loop -- descent, lift, certificate, tests, partition
update -- is charged; pure copies/subsetting cost nothing.  Step-size
(Lipschitz) estimation is housekeeping and is not charged: at the
default accuracy one estimate costs more than a typical whole budget,
which would make equal-budget comparisons meaningless.  Stopping, in
precedence order: every coordinate identified (closed-form finish),
certified gap at or below tolerance (confirmed on the full problem),
FLOP budget exhausted, iteration cap.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .backend import get_backend
from .identify import Sphere, TestOutcome, run_tests
from .reduce import finalize, init_partition, update_partition

__all__ = [
    "VARIANTS",
    "RELAX_FLUSH_MIN",
    "SolverConfig",
    "SolverState",
    "Trace",
    "TraceRecord",
    "flop_cost",
    "charge_flops",
    "estimate_lipschitz",
    "smooth_value",
    "smooth_gradient",
    "prepare_state",
    "install_iterate",
    "descent_step",
    "solve",
]

VARIANTS = ("apg", "apgs", "apgr", "sr")

# variant -> (screening enabled, relaxing enabled)
_VARIANT_TESTS = {
    "apg": (False, False),
    "apgs": (True, False),
    "apgr": (False, True),
    "sr": (True, True),
}

_LIPSCHITZ_INFLATION = 1.01

# flush a pending-positive batch once it reaches this size (or when no
# untested candidate remains); see the module docstring
RELAX_FLUSH_MIN = 8


def flop_cost(kind, dims):
    """FLOP cost of one primitive operation.

    The accounting table::

        matvec (r, c)          2*r*c     dense matrix-vector product
        matmul (r, k, c)       2*r*k*c   c stacked matvecs
        dot (n,)               2*n
        axpy (n,)              2*n       scale-and-add / subtract
        hinge (n,)             n         elementwise max(., 0) or compare
        factor_append (j,)     4*j*j+4*j grow a Cholesky factor by one
        tri_solve (j,) | (j,k) 2*j*j*k   triangular solve, k RHS

    ``prox`` is an alias for ``hinge``; ``power_step (r, c)`` is one
    matvec pair, 4*r*c.
    """
    if kind == "matvec":
        r, c = dims
        return 2 * r * c
    if kind == "matmul":
        r, k, c = dims
        return 2 * r * k * c
    if kind in ("dot", "axpy"):
        (n,) = dims
        return 2 * n
    if kind in ("hinge", "prox"):
        (n,) = dims
        return n
    if kind == "factor_append":
        (j,) = dims
        return 4 * j * j + 4 * j
    if kind == "tri_solve":
        if len(dims) == 1:
            (j,), k = dims, 1
        else:
            j, k = dims
        return 2 * j * j * k
    if kind == "power_step":
        r, c = dims
        return 4 * r * c
    raise ValueError(f"unknown FLOP kind {kind!r}")


def charge_flops(state, kind, dims):
    """Charge one primitive against the state's budget; returns state."""
    state.flops_spent += flop_cost(kind, dims)
    return state


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    Parameters
    ----------
    variant : str
        One of ``"apg"``, ``"apgs"``, ``"apgr"``, ``"sr"`` (case
        insensitive).
    flop_budget : int or None
        Stop once this many FLOPs were charged; None means unbounded.
    gap_tolerance : float
        Stop once the certified duality gap is at or below this value.
    max_iterations : int
        Hard cap on descent iterations.
    power_iterations : int
        Power-method steps for the step-size estimate.
    momentum_restart : bool
        Reset extrapolation when certified positives are applied (the
        reduced space genuinely changes).  Certified-zero removals are
        deferred until they provably do not alter the trajectory, so
        they never trigger a restart.
    """

    variant: str = "sr"
    flop_budget: int | None = None
    gap_tolerance: float = 0.0
    max_iterations: int = 100_000
    power_iterations: int = 20
    momentum_restart: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", str(self.variant).lower())
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.flop_budget is not None:
            if self.flop_budget < 0:
                raise ValueError("flop_budget must be >= 0")
            object.__setattr__(self, "flop_budget", int(self.flop_budget))
        if not self.gap_tolerance >= 0:
            raise ValueError("gap_tolerance must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.power_iterations < 1:
            raise ValueError("power_iterations must be >= 1")


class TraceRecord(NamedTuple):
    iteration: int
    flops: int
    gap: float
    card_zeros: int
    card_positives: int
    radius: float


class Trace:
    """Per-iteration history of (flops, gap, partition sizes, radius)."""

    def __init__(self):
        self.records = []
        self.status = None

    def append(self, *args):
        self.records.append(TraceRecord(*args))

    @property
    def final(self):
        return self.records[-1]

    def to_csv(self, path):
        """Write the trace with header iter,flops,gap,card_I,card_J,radius."""
        with open(path, "w") as fh:
            fh.write("iter,flops,gap,card_I,card_J,radius\n")
            for rec in self.records:
                fh.write(
                    f"{rec.iteration},{rec.flops},{rec.gap:.17g},"
                    f"{rec.card_zeros},{rec.card_positives},{rec.radius:.17g}\n"
                )


class SolverState:
    """Mutable loop state.

    The iterate ``x_r`` lives on the free block (prox keeps it >= 0);
    ``pend_zero`` / ``pend_pos`` mark free coordinates already certified
    but not yet physically removed (they count as identified in the
    trace and in ``certified_zeros`` / ``certified_positives``).  The
    residual/correlation caches at the two latest iterates feed the
    extrapolated gradient, so descent itself needs no matvec.
    """

    def __init__(self, problem, config, backend):
        self.problem = problem
        self.config = config
        self.backend = backend
        self.part, self.rp = init_partition(problem)
        n = problem.n
        self.x_r = np.zeros(n)
        self.x_prev = np.zeros(n)
        self.v_r = np.zeros(n)
        self.lam_act = problem.lam  # original lambdas on the free block
        self.pend_zero = np.zeros(n, dtype=bool)
        self.pend_pos = np.zeros(n, dtype=bool)
        self.momentum = 1
        self.lipschitz = None
        self.flops_spent = 0
        self.iteration = 0
        # caches at the two latest iterates (residuals at the unclamped lift)
        self.c_cur = None
        self.c_prev = None
        self.corr_cur = None
        self.corr_prev = None
        # positive-block data at the current iterate
        self.bx = np.empty(0)
        self.xj = np.empty(0)
        self.xjc = np.empty(0)
        self._dvec = None  # clamp correction A_neg @ (-xj[neg]), usually None
        # certificate of the latest iteration (clamped lift)
        self.x = np.zeros(n)
        self.center = None
        self.corr_free = None
        self.corr_full = None
        self.primal = np.inf
        self.best_primal = np.inf
        self.dual = -np.inf
        self.gap = np.inf
        self.radius = np.inf
        self._ynorm2 = None
        self._confirm_gate = np.inf
        self._full_iter = -1

    @property
    def certified_zeros(self):
        """Original indices certified zero (applied or pending)."""
        return np.union1d(self.part.zeros, self.part.free[self.pend_zero])

    @property
    def certified_positives(self):
        """Original indices certified positive (applied or pending)."""
        return np.union1d(self.part.positives, self.part.free[self.pend_pos])

    @property
    def card_zeros(self):
        return self.part.zeros.size + int(np.count_nonzero(self.pend_zero))

    @property
    def card_positives(self):
        return self.part.positives.size + int(np.count_nonzero(self.pend_pos))


def smooth_value(rp, eps, v):
    """Smooth part of the reduced cost (no linear/nonnegativity terms)."""
    res = rp.A_r @ v - rp.y_r
    return float(0.5 * (res @ res) + 0.5 * eps * rp.metric_quad(v))


def smooth_gradient(rp, eps, v):
    """Gradient of `smooth_value`: A_r'(A_r v - y_r) + eps*M v."""
    return rp.A_r.T @ (rp.A_r @ v - rp.y_r) + eps * rp.metric_vec(v)


def estimate_lipschitz(rp, epsilon, iters):
    """Largest-eigenvalue estimate of A_r'A_r + eps*M by power iteration.

    Deterministic start (normalized all-ones), inflated by 1.01 so the
    estimate errs on the safe side, floored at epsilon (the smallest
    the true value can be, since M has eigenvalues >= 1).  Not charged
    against the solve budget.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    n_r = rp.n_r
    if n_r == 0:
        return float(epsilon)
    w = np.full(n_r, 1.0 / np.sqrt(n_r))
    est = 0.0
    for _ in range(iters):
        z = rp.A_r.T @ (rp.A_r @ w) + epsilon * rp.metric_vec(w)
        est = float(np.linalg.norm(z))
        if est == 0.0:
            break
        w = z / est
    return max(_LIPSCHITZ_INFLATION * est, float(epsilon))


def prepare_state(problem, config, backend=None):
    """Validate, build the loop state and certify the start point x = 0.

    The initial certificate is a full-problem one (nothing is identified
    yet): residual y, correlations A'y, primal 0.5*||y||^2.  Charged:
    one adjoint matvec plus the norm/hinge vector ops.
    """
    if np.any(problem.lam < 0):
        raise ValueError("lam has negative entries")
    if not problem.eps > 0:
        raise ValueError("eps must be > 0")
    if backend is None:
        backend = get_backend()
    state = SolverState(problem, config, backend)
    state.lipschitz = estimate_lipschitz(
        state.rp, problem.eps, config.power_iterations
    )
    p = problem
    m, n = p.m, p.n
    state._ynorm2 = float(p.y @ p.y)
    charge_flops(state, "dot", (m,))
    c = p.y.copy()
    corr = backend.adjoint(p.A, c)
    charge_flops(state, "matvec", (n, m))
    state.c_cur = c
    state.c_prev = c
    state.corr_cur = corr
    state.corr_prev = corr
    state.center = c
    state.corr_free = corr
    state.primal = 0.5 * state._ynorm2
    state.best_primal = state.primal
    slack = corr - p.lam
    charge_flops(state, "axpy", (n,))
    pen = backend.hinge_sq(slack, None)
    charge_flops(state, "hinge", (n,))
    charge_flops(state, "dot", (n,))
    state.dual = 0.5 * state._ynorm2 - (0.5 / p.eps) * pen
    gap = state.primal - state.dual
    state.gap = gap if gap > 0.0 else 0.0
    state.radius = float(np.sqrt(2.0 * state.gap))
    return state


def install_iterate(state, x_r):
    """State surgery: jump to a given reduced iterate (momentum resets).

    Rebuilds the residual/correlation caches at the new point (charged:
    the same forward/adjoint pair a regular iteration pays).
    """
    x_r = np.asarray(x_r, dtype=np.float64)
    if x_r.shape != (state.rp.n_r,):
        raise ValueError(f"x_r has shape {x_r.shape}, expected ({state.rp.n_r},)")
    if np.any(x_r < 0):
        raise ValueError("x_r has negative entries")
    state.x_r = x_r.copy()
    state.x_prev = x_r.copy()
    state.v_r = x_r.copy()
    state.momentum = 1
    _rebuild_caches(state)
    m, n_r = state.problem.m, state.rp.n_r
    j = state.part.positives.size
    charge_flops(state, "matvec", (m, n_r))
    charge_flops(state, "axpy", (m,))
    charge_flops(state, "matvec", (n_r, m))
    if j:
        charge_flops(state, "matvec", (j, n_r))
        charge_flops(state, "axpy", (j,))
        charge_flops(state, "hinge", (j,))
    return state


def descent_step(state):
    """One accelerated projected gradient step on the reduced problem.

    Equivalent to x_new = [v - (grad f(v) + lam_r)/L]_+ with
    grad f(v) = A_r'(A_r v - y_r) + eps*M v and extrapolation
    v = x + omega*(x - x_prev), omega = (k-1)/(k+2): partial
    minimization cancels the coupling terms against the lam_r shift,
    leaving x_new = [v - (A_free'(A_r v - y_r) + eps*v + lam_free)/L]_+,
    and the correlation at v is a linear combination of the cached
    correlations at the two latest iterates.  Pending-zero coordinates
    are pinned at 0.  Charged: six length-n_r vector ops and a hinge
    (plus one hinge when pins are active); the iteration's matvecs live
    in the forward/certificate stages.
    """
    n_r = state.rp.n_r
    omega = (state.momentum - 1.0) / (state.momentum + 2.0)
    forced = state.pend_zero if state.pend_zero.any() else None
    x_new, v = state.backend.descent(
        state.corr_cur, state.corr_prev, state.x_r, state.x_prev,
        state.lam_act, forced, state.problem.eps, omega,
        1.0 / state.lipschitz,
    )
    state.v_r = v
    state.x_prev = state.x_r
    state.x_r = x_new
    state.momentum += 1
    for _ in range(6):
        charge_flops(state, "axpy", (n_r,))
    charge_flops(state, "hinge", (n_r,))
    if forced is not None:
        charge_flops(state, "hinge", (n_r,))
    return state


def _forward_stage(state):
    """Residual and positive-block data at the new iterate.

    c = y_r - A_r x is the full-space residual at the unclamped lift.
    The positive block x_J = coupling x + offset may have negative
    entries (rare, transient); the certificate point clamps them, and
    the residual gains the clamped mass: c_cl = c - A_neg (-x_J[neg]).
    Charged: matvec(m, n_r) + axpy(m), plus matvec(j, n_r) + axpy(j) +
    hinge(j) when positives exist, plus matvec(m, k) + axpy(m) when k
    entries clamp.
    """
    rp = state.rp
    p = state.problem
    m, n_r = p.m, rp.n_r
    j = state.part.positives.size
    c = state.backend.residual(rp.A_r, state.x_r, rp.y_r)
    charge_flops(state, "matvec", (m, n_r))
    charge_flops(state, "axpy", (m,))
    state.c_prev = state.c_cur
    state.c_cur = c
    state._dvec = None
    if j:
        bx = rp.coupling @ state.x_r
        xj = bx + rp.offset
        charge_flops(state, "matvec", (j, n_r))
        charge_flops(state, "axpy", (j,))
        neg = xj < 0.0
        charge_flops(state, "hinge", (j,))
        state.bx = bx
        state.xj = xj
        if neg.any():
            k = int(np.count_nonzero(neg))
            d = p.A[:, state.part.positives[neg]] @ (-xj[neg])
            charge_flops(state, "matvec", (m, k))
            charge_flops(state, "axpy", (m,))
            state._dvec = d
            state.center = c - d
            state.xjc = np.maximum(xj, 0.0)
        else:
            state.center = c
            state.xjc = xj
    else:
        state.bx = np.empty(0)
        state.xj = np.empty(0)
        state.xjc = np.empty(0)
        state.center = c
    # full-space clamped lift (scatter; its arithmetic is charged above)
    x_full = np.zeros(p.n)
    x_full[state.part.free] = state.x_r
    if j:
        x_full[state.part.positives] = state.xjc
    state.x = x_full
    return state


def _certificate_stage(state):
    """Correlations, primal/dual values, certified gap and safe sphere.

    The dual point is the residual at the clamped lift.  Its penalty
    runs over the not-yet-certified free atoms (certified zeros have
    zero slack at the dual optimum, so excluding them keeps the same
    maximizer and the sphere stays safe) plus the positive block, whose
    correlations are lam_pos + eps*x_J by the offset identity.  The
    primal bound is the best feasible value seen so far.  Charged: one
    adjoint matvec, the hinge/dot passes, and the clamp corrections on
    the rare iterations where the positive block clamps.
    """
    p = state.problem
    rp = state.rp
    m, n_r = p.m, rp.n_r
    j = state.part.positives.size
    corr = state.backend.adjoint(rp.A_free, state.c_cur)
    charge_flops(state, "matvec", (n_r, m))
    state.corr_prev = state.corr_cur
    state.corr_cur = corr
    lam_pos = p.lam[state.part.positives] if j else None
    if state._dvec is not None:
        corr_cl = corr - rp.A_free.T @ state._dvec
        charge_flops(state, "matvec", (n_r, m))
        charge_flops(state, "axpy", (n_r,))
        atpos = lam_pos + p.eps * state.xj \
            - p.A[:, state.part.positives].T @ state._dvec
        charge_flops(state, "matvec", (j, m))
        charge_flops(state, "axpy", (j,))
    else:
        corr_cl = corr
        atpos = None  # no clamp: the identity gives the penalty directly
    state.corr_free = corr_cl

    ccl = state.center
    ccl2 = float(ccl @ ccl)
    lx = float(state.lam_act @ state.x_r)
    xx = float(state.x_r @ state.x_r)
    charge_flops(state, "dot", (m,))
    charge_flops(state, "dot", (n_r,))
    charge_flops(state, "dot", (n_r,))
    if j:
        xjc2 = float(state.xjc @ state.xjc)
        ljx = float(lam_pos @ state.xjc)
        charge_flops(state, "dot", (j,))
        charge_flops(state, "dot", (j,))
    else:
        xjc2 = 0.0
        ljx = 0.0
    state.primal = 0.5 * ccl2 + lx + ljx + 0.5 * p.eps * (xx + xjc2)
    if state.primal < state.best_primal:
        state.best_primal = state.primal

    w = p.y - ccl
    wn = float(w @ w)
    charge_flops(state, "axpy", (m,))
    charge_flops(state, "dot", (m,))
    slack = corr_cl - state.lam_act
    charge_flops(state, "axpy", (n_r,))
    mask = None if not state.pend_zero.any() else ~state.pend_zero
    pen = state.backend.hinge_sq(slack, mask)
    charge_flops(state, "hinge", (n_r,))
    charge_flops(state, "dot", (n_r,))
    if j:
        if atpos is None:
            pen += (p.eps * p.eps) * xjc2
        else:
            hj = np.maximum(atpos - lam_pos, 0.0)
            pen += float(hj @ hj)
            charge_flops(state, "hinge", (j,))
            charge_flops(state, "dot", (j,))
    state.dual = 0.5 * state._ynorm2 - 0.5 * wn - (0.5 / p.eps) * pen
    gap = state.best_primal - state.dual
    state.gap = gap if gap > 0.0 else 0.0
    state.radius = float(np.sqrt(2.0 * state.gap))
    return Sphere(center=ccl, radius=state.radius)


def _tests_stage(state, sphere, screening, relaxing):
    """Run the enabled tests on the not-yet-certified candidates,
    reusing the certificate's correlations as scores; one elementwise
    compare charged per family."""
    cand = ~(state.pend_zero | state.pend_pos)
    k = int(np.count_nonzero(cand))
    if k == 0:
        return
    idx = state.part.free[cand]
    outcome = run_tests(
        state.problem, sphere, idx,
        scores=state.corr_free[cand],
        screening=screening, relaxing=relaxing,
    )
    if screening:
        charge_flops(state, "hinge", (k,))
    if relaxing:
        charge_flops(state, "hinge", (k,))
    if outcome.screened.size:
        state.pend_zero[np.searchsorted(state.part.free, outcome.screened)] = True
    if outcome.relaxed.size:
        state.pend_pos[np.searchsorted(state.part.free, outcome.relaxed)] = True


def _subset_state(state, keep):
    """Restrict the free-block arrays to ``keep`` (pure subsetting)."""
    state.x_r = state.x_r[keep]
    state.x_prev = state.x_prev[keep]
    state.v_r = state.v_r[keep]
    state.lam_act = state.lam_act[keep]
    state.pend_zero = state.pend_zero[keep]
    state.pend_pos = state.pend_pos[keep]


def _drop_stage(state):
    """Physically remove certified zeros that already sit at 0.

    Removal waits until the coordinate is exactly 0 in the two latest
    iterates; then every cache subsets exactly (the removed coordinates
    contribute nothing to any cached product) and the APG trajectory
    continues unchanged, so momentum survives.  Subsetting performs no
    floating-point work: zero charge.
    """
    drop = state.pend_zero & (state.x_r == 0.0) & (state.x_prev == 0.0)
    if not drop.any():
        return
    outcome = TestOutcome(
        screened=state.part.free[drop], relaxed=np.empty(0, dtype=np.intp)
    )
    update_partition(state.part, state.rp, state.problem, outcome)
    keep = ~drop
    _subset_state(state, keep)
    state.corr_cur = state.corr_cur[keep]
    state.corr_prev = state.corr_prev[keep]
    state.corr_free = state.corr_free[keep]
    # residual caches and the positive block are untouched: the removed
    # coordinates were exactly 0 in both cached iterates


def _flush_cost(m, n_f, j0, k, rebuild_prev=False):
    """Exact FLOP bill for applying k pending positives, n_f candidates
    left free afterwards (mirrors what _flush_stage performs)."""
    cost = 0
    j = j0
    for _ in range(k):
        if j:
            cost += flop_cost("matvec", (j, m))
        cost += 2 * flop_cost("dot", (m,))
        cost += flop_cost("factor_append", (j,))
        j += 1
    cost += flop_cost("axpy", (j,))             # offset right-hand side
    cost += flop_cost("tri_solve", (j, 2))      # offset
    cost += flop_cost("matvec", (m, j))         # y_r = y - A_pos offset
    cost += flop_cost("axpy", (m,))
    if n_f:
        cost += flop_cost("matmul", (k, m, n_f))      # new cross rows
        cost += flop_cost("tri_solve", (j, 2 * n_f))  # coupling
        cost += flop_cost("matmul", (m, j, n_f))      # A_pos @ coupling
        cost += flop_cost("hinge", (m * n_f,))        # + A_free (adds)
        cost += flop_cost("matvec", (n_f, j))         # lam_r shift
        cost += flop_cost("axpy", (j,))
        cost += flop_cost("axpy", (n_f,))
        # cache rebuild at the surviving iterate
        cost += flop_cost("matvec", (m, n_f)) + flop_cost("axpy", (m,))
        cost += flop_cost("matvec", (n_f, m))
        cost += flop_cost("matvec", (j, n_f)) + flop_cost("axpy", (j,))
        cost += flop_cost("hinge", (j,))
        if rebuild_prev:
            cost += flop_cost("matvec", (m, n_f)) + flop_cost("axpy", (m,))
            cost += flop_cost("matvec", (n_f, m))
    return cost


def _rebuild_caches(state):
    """Fresh residual/correlation caches at the current iterate (both
    slots), plus the positive-block data.  Charging is the caller's
    business (flush bills it wholesale, install_iterate itemizes)."""
    rp = state.rp
    c = state.backend.residual(rp.A_r, state.x_r, rp.y_r)
    corr = state.backend.adjoint(rp.A_free, c)
    state.c_cur = c
    state.c_prev = c
    state.corr_cur = corr
    state.corr_prev = corr
    state._dvec = None
    j = state.part.positives.size
    if j:
        state.bx = rp.coupling @ state.x_r
        state.xj = state.bx + rp.offset
        state.xjc = np.maximum(state.xj, 0.0)
    else:
        state.bx = np.empty(0)
        state.xj = np.empty(0)
        state.xjc = np.empty(0)
    state.center = c  # refreshed by the next certificate


def _flush_stage(state, endgame):
    """Apply every pending identification in one batch.

    Pending positives append to the factor and trigger the coupled-data
    refresh; pending zeros ride along (the restart makes their removal
    free of trajectory concerns).  Momentum restarts per config and the
    step size is re-estimated (the spectrum changed).  Charged: the
    exact `_flush_cost` bill, computed from the same dimensions the
    caller used to gate the flush against the remaining budget.
    """
    p = state.problem
    m = p.m
    keep = ~(state.pend_zero | state.pend_pos)
    n_f = int(np.count_nonzero(keep))
    k = int(np.count_nonzero(state.pend_pos))
    j0 = state.part.positives.size
    rebuild_prev = not state.config.momentum_restart
    state.flops_spent += _flush_cost(m, n_f, j0, k, rebuild_prev)
    outcome = TestOutcome(
        screened=state.part.free[state.pend_zero],
        relaxed=state.part.free[state.pend_pos],
    )
    update_partition(state.part, state.rp, p, outcome)
    _subset_state(state, keep)
    if state.config.momentum_restart:
        state.momentum = 1
        state.x_prev = state.x_r.copy()
        state.v_r = state.x_r.copy()
    if n_f:
        state.lipschitz = estimate_lipschitz(
            state.rp, p.eps, state.config.power_iterations
        )
        _rebuild_caches(state)
        if rebuild_prev:
            cp = state.backend.residual(state.rp.A_r, state.x_prev, state.rp.y_r)
            state.c_prev = cp
            state.corr_prev = state.backend.adjoint(state.rp.A_free, cp)


def _full_certificate(state):
    """Re-certify the current full-space point against the full problem.

    Every exit path runs this, so the final trace row's gap/radius match
    ``core.duality_gap`` at the returned point and its induced dual
    center.  Charged: two full matvecs plus the vector passes.
    """
    p = state.problem
    m, n = p.m, p.n
    c, corr, primal, dual = state.backend.certificate(p.A, p.y, p.lam, p.eps, state.x)
    state.center = c
    state.corr_full = corr
    state.primal = primal
    if primal < state.best_primal:
        state.best_primal = primal
    state.dual = dual
    gap = primal - dual
    state.gap = gap if gap > 0.0 else 0.0
    state.radius = float(np.sqrt(2.0 * state.gap))
    charge_flops(state, "matvec", (m, n))
    charge_flops(state, "matvec", (n, m))
    charge_flops(state, "axpy", (m,))
    for _ in range(3):
        charge_flops(state, "dot", (m,))
    for _ in range(3):
        charge_flops(state, "dot", (n,))
    charge_flops(state, "hinge", (n,))
    state._full_iter = state.iteration


def _confirm_optimal(state, tolerance):
    """The reduced certificate passed the tolerance; verify on the full
    problem (charged).  A failed confirmation halves the re-entry gate so
    confirmations are not re-paid every iteration."""
    if state.gap > state._confirm_gate:
        return False
    state._confirm_gate = state.gap / 2.0
    _full_certificate(state)
    return state.gap <= tolerance


def _record(state, trace, callback):
    trace.append(
        state.iteration, state.flops_spent, state.gap,
        state.card_zeros, state.card_positives, state.radius,
    )
    if callback is not None:
        callback(state)


def solve(problem, config, callback=None, backend=None):
    """Minimize the nonnegative elastic-net cost under a FLOP budget.

    Parameters
    ----------
    problem : Problem
    config : SolverConfig
    callback : callable, optional
        Called as ``callback(state)`` after every recorded iteration
        (including the initial certificate at x = 0).
    backend : Backend, optional
        Kernel implementation; resolved from SCRELAX_BACKEND when None.

    Returns
    -------
    x : ndarray
        Feasible point; the trace's final entry holds its certified
        full-problem gap.
    trace : Trace
        One record per iteration; ``trace.status`` is one of
        ``"optimal"``, ``"identified"``, ``"budget"``, ``"max_iterations"``.
    """
    state = prepare_state(problem, config, backend)
    screening, relaxing = _VARIANT_TESTS[config.variant]
    trace = Trace()
    budget = config.flop_budget
    tol = config.gap_tolerance

    _record(state, trace, callback)
    if state.gap <= tol:
        trace.status = "optimal"  # initial certificate is already full
        return state.x, trace
    if budget is not None and state.flops_spent >= budget:
        trace.status = "budget"
        return state.x, trace

    for it in range(1, config.max_iterations + 1):
        state.iteration = it
        descent_step(state)
        _forward_stage(state)
        sphere = _certificate_stage(state)
        if screening or relaxing:
            _tests_stage(state, sphere, screening, relaxing)
            if screening:
                _drop_stage(state)
            npend_pos = int(np.count_nonzero(state.pend_pos))
            npend_zero = int(np.count_nonzero(state.pend_zero))
            candidates_left = state.rp.n_r - npend_pos - npend_zero
            if npend_pos and (candidates_left == 0 or npend_pos >= RELAX_FLUSH_MIN):
                n_f = candidates_left
                cost = _flush_cost(
                    problem.m, n_f, state.part.positives.size, npend_pos,
                    rebuild_prev=not config.momentum_restart,
                )
                if budget is None or state.flops_spent + cost <= budget:
                    _flush_stage(state, endgame=candidates_left == 0)
            elif npend_zero and candidates_left == 0 and npend_pos == 0:
                # every remaining free coordinate is certified zero
                outcome = TestOutcome(
                    screened=state.part.free.copy(),
                    relaxed=np.empty(0, dtype=np.intp),
                )
                update_partition(state.part, state.rp, problem, outcome)
                _subset_state(state, np.zeros(state.pend_zero.size, dtype=bool))
        if state.part.fully_identified():
            state.x = finalize(state.part, state.rp)
            _full_certificate(state)
            _record(state, trace, callback)
            trace.status = "identified"
            return state.x, trace
        if state.gap <= tol and _confirm_optimal(state, tol):
            _record(state, trace, callback)
            trace.status = "optimal"
            return state.x, trace
        if budget is not None and state.flops_spent >= budget:
            if state._full_iter != it:
                _full_certificate(state)
            _record(state, trace, callback)
            trace.status = "budget"
            return state.x, trace
        if it == config.max_iterations:
            if state._full_iter != it:
                _full_certificate(state)
            _record(state, trace, callback)
            trace.status = "max_iterations"
            return state.x, trace
        _record(state, trace, callback)

    raise AssertionError("unreachable")
