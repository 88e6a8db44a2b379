"""Problem model for the non-negative Elastic-Net.

The problem solved by this package is

    min_{x >= 0}  0.5*||y - A x||^2 + lam' x + 0.5*eps*||x||^2

with a dictionary ``A`` whose columns have unit Euclidean norm, per-atom
nonnegative l1 weights ``lam`` and a ridge parameter ``eps > 0``.  The
associated dual problem is an unconstrained concave maximization over
``u`` in R^m,

    max_u  0.5*||y||^2 - 0.5*||y - u||^2 - (1/(2*eps))*||[A'u - lam]_+||^2,

and strong duality holds.  Primal points are plain nonnegative numpy
vectors of length n, dual points plain vectors of length m.
"""

from dataclasses import dataclass

import numpy as np

COLUMN_NORM_TOL = 1e-12


class ProblemFormatError(ValueError):
    """Raised when a problem file cannot be parsed.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Problem:
    """Immutable problem instance.

    Parameters
    ----------
    A : ndarray, shape (m, n)
        Dictionary with unit-norm columns (validated, not normalized here).
    y : ndarray, shape (m,)
        Observation.
    lam : ndarray, shape (n,)
        Entrywise nonnegative l1 weights.
    eps : float
        Ridge parameter, strictly positive.
    """

    A: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    eps: float

    def __post_init__(self):
        A = np.asfortranarray(self.A, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        lam = np.ascontiguousarray(self.lam, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("A must be a 2-d array")
        m, n = A.shape
        if y.shape != (m,):
            raise ValueError(f"y has shape {y.shape}, expected ({m},)")
        if lam.shape != (n,):
            raise ValueError(f"lam has shape {lam.shape}, expected ({n},)")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(y)):
            raise ValueError("A and y must be finite")
        if np.any(lam < 0):
            raise ValueError("lam must be entrywise nonnegative")
        eps = float(self.eps)
        if not eps > 0:
            raise ValueError("eps must be strictly positive")
        norms = np.sqrt(np.sum(A * A, axis=0))
        bad = np.abs(norms - 1.0) > COLUMN_NORM_TOL
        if np.any(bad):
            k = int(np.argmax(bad))
            raise ValueError(
                f"column {k} of A has norm {norms[k]:.17g}, expected 1"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "eps", eps)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def _check_feasible(x, n):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"x has shape {x.shape}, expected ({n},)")
    if np.any(x < 0):
        raise ValueError("x has negative entries; certificates need x >= 0")
    return x


def lambda_max(problem):
    """Largest correlation ``max_l a_l'y``; x* = 0 for any lam >= this."""
    return float(np.max(problem.A.T @ problem.y))


def primal_objective(problem, x):
    """Primal cost at a feasible point.

    Raises ``ValueError`` if ``x`` has negative entries: evaluating the
    primal at infeasible points would invalidate weak-duality certificates.
    """
    x = _check_feasible(x, problem.n)
    r = problem.y - problem.A @ x
    return float(
        0.5 * (r @ r) + problem.lam @ x + 0.5 * problem.eps * (x @ x)
    )


def dual_objective(problem, u):
    """Dual cost at any ``u`` in R^m (the dual is unconstrained)."""
    u = np.asarray(u, dtype=np.float64)
    y = problem.y
    d = y - u
    h = np.maximum(problem.A.T @ u - problem.lam, 0.0)
    return float(
        0.5 * (y @ y) - 0.5 * (d @ d) - (0.5 / problem.eps) * (h @ h)
    )


def duality_gap(problem, x, u):
    """Optimality certificate ``P(x) - D(u)``; nonnegative up to roundoff."""
    return primal_objective(problem, x) - dual_objective(problem, u)


def kkt_residual(problem, x):
    """Sup-norm violation of the stationarity fixed point.

    The residual ``||x - (1/eps)*[A'(y - A x) - lam]_+||_inf`` vanishes
    exactly at the unique minimizer.
    """
    x = _check_feasible(x, problem.n)
    u = problem.y - problem.A @ x
    h = np.maximum(problem.A.T @ u - problem.lam, 0.0)
    return float(np.max(np.abs(x - h / problem.eps)))


def _parse_row(tokens, count, lineno, what):
    if len(tokens) != count:
        raise ProblemFormatError(
            lineno, f"{what}: expected {count} entries, got {len(tokens)}"
        )
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError:
        raise ProblemFormatError(lineno, f"{what}: non-numeric entry") from None


def read_problem(path):
    """Parse a problem file.

    The format is plain text: a header line ``m n``, then m rows of n
    whitespace-separated entries for A, one row of m entries for y, one
    row of n entries for lam, and one line holding eps.  Scientific
    notation is accepted; the decimal separator is always a dot.

    Raises ``ProblemFormatError`` (with a line number) on malformed input
    and ``ValueError`` when the parsed data violates problem invariants.
    """
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, ln.split()) for i, ln in enumerate(raw) if ln.strip()]
    if not lines:
        raise ProblemFormatError(1, "empty file")
    lineno, header = lines[0]
    if len(header) != 2:
        raise ProblemFormatError(lineno, "header must be 'm n'")
    try:
        m, n = int(header[0]), int(header[1])
    except ValueError:
        raise ProblemFormatError(lineno, "header must hold two integers") from None
    if m < 1 or n < 1:
        raise ProblemFormatError(lineno, "m and n must be positive")
    if len(lines) != 1 + m + 3:
        raise ProblemFormatError(
            lines[-1][0], f"expected {1 + m + 3} non-empty lines, got {len(lines)}"
        )
    A = np.empty((m, n))
    for i in range(m):
        lineno, tokens = lines[1 + i]
        A[i] = _parse_row(tokens, n, lineno, f"row {i} of A")
    lineno, tokens = lines[1 + m]
    y = _parse_row(tokens, m, lineno, "y")
    lineno, tokens = lines[2 + m]
    lam = _parse_row(tokens, n, lineno, "lam")
    lineno, tokens = lines[3 + m]
    if len(tokens) != 1:
        raise ProblemFormatError(lineno, "eps line must hold a single value")
    try:
        eps = float(tokens[0])
    except ValueError:
        raise ProblemFormatError(lineno, "eps is not numeric") from None
    return Problem(A=A, y=y, lam=lam, eps=eps)


def write_problem(problem, path):
    """Write a problem in the format understood by :func:`read_problem`."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{problem.m} {problem.n}\n")
        for row in problem.A:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        fh.write(" ".join(f"{v:.17g}" for v in problem.y) + "\n")
        fh.write(" ".join(f"{v:.17g}" for v in problem.lam) + "\n")
        fh.write(f"{problem.eps:.17g}\n")
