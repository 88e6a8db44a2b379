"""Partition bookkeeping and on-the-fly problem reduction.

Certified indices split into ``zeros`` (coefficients proven 0) and
``positives`` (proven > 0); the remaining ``free`` coordinates carry the
reduced problem.  With G = A_pos'A_pos + eps*I, minimizing the cost over
the unconstrained positive block for fixed free coordinates x_f gives the
affine coupling

    x_pos = coupling @ x_f + offset,
    coupling = -G^{-1} A_pos'A_free,
    offset   =  G^{-1} (A_pos'y - lam_pos),

and substituting it back yields a problem of dimension ``n_r = |free|``
with the same shape as the original:

    min_{x_f >= 0}  0.5*||y_r - A_r x_f||^2 + lam_r'x_f
                    + 0.5*eps*(x_f' metric x_f),
    A_r    = A_free + A_pos @ coupling,
    lam_r  = lam_free + coupling'(lam_pos + eps*offset),
    y_r    = y - A_pos @ offset,
    metric = I + coupling'coupling.

``metric`` has eigenvalues >= 1, so reduction never hurts conditioning;
it is exposed as a derived property (the solver applies it through
``coupling``, never as a dense n_r x n_r product).  Two identities make
the reduction cheap to certify: the residual of the reduced system
equals the full residual at the (unclamped) lifted point, and by
optimality of ``offset``

    A_pos'y_r = lam_pos + eps*offset,

so the positive block's dual correlations at a lifted point x come out
to ``lam_pos + eps*(coupling x + offset)`` without touching A.

G is kept as a lower-triangular Cholesky factor grown by one row/column
per newly certified positive index; coupling/offset/A_r/lam_r/y_r are
refreshed after each change.  Screening-only changes are pure column
subsets and recompute nothing.
"""

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "FactorizationError",
    "Partition",
    "ReducedProblem",
    "init_partition",
    "update_partition",
    "reduced_objective",
    "lift",
    "finalize",
]


class FactorizationError(RuntimeError):
    """Non-positive pivot while growing the Gram factor (data corruption)."""


class Partition:
    """Disjoint index sets: certified zeros, certified positives, free.

    ``free`` is kept sorted; reduced coordinate ``i`` maps to original
    index ``free[i]``.  ``positives`` is kept in append order (ascending
    within each update), matching the growth order of the Gram factor.
    Indices never leave ``zeros`` or ``positives``.
    """

    def __init__(self, n):
        self.n = int(n)
        self.zeros = np.empty(0, dtype=np.intp)
        self.positives = np.empty(0, dtype=np.intp)
        self.free = np.arange(n, dtype=np.intp)

    @property
    def n_r(self):
        return self.free.size

    def fully_identified(self):
        return self.free.size == 0


class ReducedProblem:
    """Data of the reduced problem plus the incremental factorization.

    ``A_free`` keeps the plain free-column block (the certificate's
    adjoint runs against it), ``A_r`` the coupled dictionary.  ``cross``
    caches A_pos'A_free and ``pos_corr_y`` caches A_pos'y; both grow by
    one row per certified positive index.
    """

    def __init__(self, A_r, A_free, lam_r, y_r, coupling, offset, chol, cross, pos_corr_y):
        self.A_r = A_r
        self.A_free = A_free
        self.lam_r = lam_r
        self.y_r = y_r
        self.coupling = coupling
        self.offset = offset
        self.chol = chol
        self.cross = cross
        self.pos_corr_y = pos_corr_y

    @property
    def n_r(self):
        return self.A_r.shape[1]

    @property
    def metric(self):
        """Dense I + coupling'coupling (identity while nothing is relaxed).

        Materialized on demand only; iteration-time quadratics go through
        ``coupling`` directly.
        """
        eye = np.eye(self.n_r)
        if self.coupling.shape[0] == 0:
            return eye
        return eye + self.coupling.T @ self.coupling

    def metric_quad(self, v):
        """v' metric v without materializing the metric."""
        bv = self.coupling @ v
        return float(v @ v) + float(bv @ bv)

    def metric_vec(self, v):
        """metric @ v without materializing the metric."""
        return v + self.coupling.T @ (self.coupling @ v)


def _solve_factor(chol, rhs):
    """Solve (L L') z = rhs with the lower-triangular factor L."""
    if chol.shape[0] == 0:
        return np.zeros_like(rhs)
    z = solve_triangular(chol, rhs, lower=True)
    return solve_triangular(chol.T, z, lower=False)


def init_partition(problem):
    """Fresh partition: nothing identified, reduced problem == original."""
    n = problem.n
    part = Partition(n)
    rp = ReducedProblem(
        A_r=problem.A,
        A_free=problem.A,
        lam_r=problem.lam,
        y_r=problem.y,
        coupling=np.empty((0, n)),
        offset=np.empty(0),
        chol=np.empty((0, 0)),
        cross=np.empty((0, n)),
        pos_corr_y=np.empty(0),
    )
    return part, rp


def _append_to_factor(rp, problem, idx, positives):
    """Grow the Cholesky factor of A_pos'A_pos + eps*I by one index."""
    a_new = problem.A[:, idx]
    j = positives.size
    if j:
        g = problem.A[:, positives].T @ a_new
        l12 = solve_triangular(rp.chol, g, lower=True)
        d = float(a_new @ a_new) + problem.eps - float(l12 @ l12)
    else:
        l12 = np.empty(0)
        d = float(a_new @ a_new) + problem.eps
    if d <= 0.0:
        raise FactorizationError(
            f"non-positive pivot {d:.3g} appending index {idx}"
        )
    chol = np.zeros((j + 1, j + 1))
    chol[:j, :j] = rp.chol
    chol[j, :j] = l12
    chol[j, j] = np.sqrt(d)
    rp.chol = chol
    rp.pos_corr_y = np.append(rp.pos_corr_y, float(a_new @ problem.y))


def update_partition(part, rp, problem, outcome):
    """Fold a test outcome into the partition and refresh the reduction.

    Screened indices are dropped from ``free`` first, then relaxed ones
    are appended to ``positives`` in ascending original order, each via a
    rank-one growth of the Gram factor.  The coupled data is refreshed
    only when ``positives`` changed; screening alone subsets columns.
    """
    screened = np.sort(np.asarray(outcome.screened, dtype=np.intp))
    relaxed = np.sort(np.asarray(outcome.relaxed, dtype=np.intp))
    if screened.size == 0 and relaxed.size == 0:
        return part, rp
    gone = np.concatenate([screened, relaxed])
    if not np.all(np.isin(gone, part.free)):
        raise ValueError("outcome refers to indices not currently free")
    if np.intersect1d(screened, relaxed).size:
        raise ValueError("an index cannot be both screened and relaxed")

    keep = ~np.isin(part.free, gone)
    new_free = part.free[keep]
    part.zeros = np.union1d(part.zeros, screened)

    if relaxed.size == 0:
        # column subset only; offset, y_r and the factor are untouched
        part.free = new_free
        rp.A_r = np.asfortranarray(rp.A_r[:, keep])
        rp.A_free = np.asfortranarray(rp.A_free[:, keep])
        rp.lam_r = rp.lam_r[keep]
        rp.cross = rp.cross[:, keep]
        if rp.coupling.shape[0]:
            rp.coupling = rp.coupling[:, keep]
        return part, rp

    for idx in relaxed:
        _append_to_factor(rp, problem, idx, part.positives)
        part.positives = np.append(part.positives, idx)
    part.free = new_free

    cross_old = rp.cross[:, keep]
    new_rows = problem.A[:, relaxed].T @ problem.A[:, new_free]
    rp.cross = np.vstack([cross_old, new_rows])

    pos = part.positives
    lam_pos = problem.lam[pos]
    rp.offset = _solve_factor(rp.chol, rp.pos_corr_y - lam_pos)
    rp.coupling = -_solve_factor(rp.chol, rp.cross)
    A_pos = problem.A[:, pos]
    rp.A_free = np.asfortranarray(problem.A[:, new_free])
    rp.A_r = np.asfortranarray(rp.A_free + A_pos @ rp.coupling)
    rp.lam_r = problem.lam[new_free] + rp.coupling.T @ (lam_pos + problem.eps * rp.offset)
    rp.y_r = problem.y - A_pos @ rp.offset
    return part, rp


def reduced_objective(rp, problem, x_r):
    """Reduced cost; differs from the full cost at the lift by a constant."""
    x_r = np.asarray(x_r, dtype=np.float64)
    if x_r.shape != (rp.n_r,):
        raise ValueError(f"x_r has shape {x_r.shape}, expected ({rp.n_r},)")
    if np.any(x_r < 0):
        raise ValueError("x_r has negative entries")
    res = rp.y_r - rp.A_r @ x_r
    return float(0.5 * (res @ res) + rp.lam_r @ x_r + 0.5 * problem.eps * rp.metric_quad(x_r))


def lift(part, rp, x_r, clamp=True):
    """Embed a reduced point into the original space.

    Free coordinates copy over, certified zeros stay 0 and the positive
    block is the affine coupling.  With ``clamp`` the (possibly negative,
    at non-optimal x_r) positive block is floored at 0 so the result is a
    feasible point usable in gap certificates.
    """
    x_r = np.asarray(x_r, dtype=np.float64)
    x = np.zeros(part.n)
    x[part.free] = x_r
    if part.positives.size:
        block = rp.coupling @ x_r + rp.offset
        if clamp:
            np.maximum(block, 0.0, out=block)
        x[part.positives] = block
    return x


def finalize(part, rp):
    """Closed-form minimizer once every coordinate is identified.

    The positive block solves (A_pos'A_pos + eps*I) x = A_pos'y - lam_pos
    through the maintained factor (it equals ``offset`` at n_r = 0); all
    other coordinates are zero.
    """
    if part.free.size:
        raise ValueError(f"{part.free.size} coordinates are still unidentified")
    x = np.zeros(part.n)
    if part.positives.size:
        x[part.positives] = rp.offset
    return x
