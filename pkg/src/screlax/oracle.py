"""Exact reference solvers used as ground truth in tests.

`oracle_solve` enumerates candidate supports (practical up to n = 16):
a support S is certified when the linear solve

    x_S = (A_S'A_S + eps*I)^{-1} (A_S'y - lam_S)

is entrywise strictly positive and the complementary correlations
satisfy A'(y - A_S x_S) <= lam.  Strong convexity makes the certified
minimizer unique, so the first accepted support wins.

`reference_solve` handles larger instances: the cost equals a plain
nonnegative least-squares problem after a Cholesky change of variables
(with L L' = A'A + eps*I, minimize ||L'x - w||^2 where L w = A'y - lam),
which scipy's active-set NNLS solves; the support is then polished and
certified through the same KKT checks.

Both return a solution certified to duality gap <= 1e-10 or fail
loudly — they never return a best-effort point.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import nnls

from .core import duality_gap

__all__ = [
    "OracleError",
    "OracleSolution",
    "oracle_solve",
    "reference_solve",
    "kkt_margin",
]

STRICT_POSITIVE = 1e-11
DUAL_SLACK = 1e-9
CERTIFIED_GAP = 1e-10
ENUMERATION_LIMIT = 16


class OracleError(RuntimeError):
    """No support could be KKT-certified (usually a numerical tie)."""


@dataclass(frozen=True)
class OracleSolution:
    """A KKT-certified minimizer.

    Attributes
    ----------
    x_star : ndarray
        The minimizer; strictly positive exactly on `support`.
    support : ndarray
        Sorted indices of the strictly positive coefficients.
    u_star : ndarray
        The dual certificate y - A x_star.
    certified_gap : float
        Duality gap of the pair, guaranteed <= 1e-10.
    """

    x_star: np.ndarray
    support: np.ndarray
    u_star: np.ndarray
    certified_gap: float

    def __post_init__(self):
        if self.certified_gap > CERTIFIED_GAP:
            raise OracleError(
                f"gap {self.certified_gap:.3g} exceeds {CERTIFIED_GAP:g}"
            )
        on = np.zeros(self.x_star.size, dtype=bool)
        on[self.support] = True
        if not (np.all(self.x_star[on] > 0) and np.all(self.x_star[~on] == 0)):
            raise OracleError("x_star is not strictly positive exactly on support")


def _support_solve(problem, support):
    """Unconstrained minimizer restricted to a support."""
    A_s = problem.A[:, support]
    gram = A_s.T @ A_s + problem.eps * np.eye(support.size)
    return np.linalg.solve(gram, A_s.T @ problem.y - problem.lam[support])


def _certify(problem, support, x_s):
    """Build and validate the full solution for an accepted support."""
    x = np.zeros(problem.n)
    x[support] = x_s
    u = problem.y - problem.A @ x
    gap = duality_gap(problem, x, u)
    if gap > CERTIFIED_GAP:
        raise OracleError(
            f"accepted support {support.tolist()} certifies only to gap {gap:.3g}"
        )
    return OracleSolution(x, support, u, gap)


def oracle_solve(problem):
    """Exact solution by support enumeration (n <= 16).

    Supports are tried by increasing cardinality; the first one whose
    restricted solve is strictly positive (>= 1e-11) and whose
    complementary dual constraints hold within slack 1e-9 is returned.

    Raises
    ------
    OracleError
        If no support certifies — typically a boundary tie; regenerate
        the instance instead of loosening tolerances.
    """
    n = problem.n
    if n > ENUMERATION_LIMIT:
        raise ValueError(f"n = {n} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    for card in range(n + 1):
        for combo in combinations(range(n), card):
            support = np.asarray(combo, dtype=np.intp)
            if card:
                x_s = _support_solve(problem, support)
                if np.any(x_s < STRICT_POSITIVE):
                    continue
            else:
                x_s = np.empty(0)
            x = np.zeros(n)
            x[support] = x_s
            corr = problem.A.T @ (problem.y - problem.A @ x)
            off = np.ones(n, dtype=bool)
            off[support] = False
            if np.all(corr[off] <= problem.lam[off] + DUAL_SLACK):
                return _certify(problem, support, x_s)
    raise OracleError("no support passed the KKT checks (numerical tie?)")


def reference_solve(problem, max_polish=None):
    """Exact solution for any size via transformed NNLS plus polish.

    With L L' = A'A + eps*I and L w = A'y - lam, the cost is
    0.5*||L'x - w||^2 up to a constant, handed to scipy's NNLS.  The
    resulting support is polished: nonpositive coefficients are
    dropped, violated dual constraints pull their index in, until the
    KKT conditions certify.
    """
    A, y, lam = problem.A, problem.y, problem.lam
    n = problem.n
    gram = A.T @ A + problem.eps * np.eye(n)
    L = cholesky(gram, lower=True)
    w = solve_triangular(L, A.T @ y - lam, lower=True)
    x0, _ = nnls(L.T, w, maxiter=max(10 * n, 100))
    support = np.flatnonzero(x0 > STRICT_POSITIVE)
    if max_polish is None:
        max_polish = 2 * n + 2
    for _ in range(max_polish):
        x_s = _support_solve(problem, support) if support.size else np.empty(0)
        bad = x_s < STRICT_POSITIVE
        if np.any(bad):
            support = support[~bad]
            continue
        x = np.zeros(n)
        x[support] = x_s
        viol = A.T @ (y - A @ x) - lam
        viol[support] = -np.inf
        worst = int(np.argmax(viol)) if n else 0
        if n and viol[worst] > DUAL_SLACK:
            support = np.sort(np.append(support, worst))
            continue
        return _certify(problem, support, x_s)
    raise OracleError("support polish did not converge")


def kkt_margin(problem, solution):
    """Distance of a solution from the screening/relaxing boundaries.

    The minimum over eps*x_l on the support (how strictly positive) and
    lam_l - a_l'u* off it (how strictly inactive).  Near-zero margins
    flag tied instances that identification tests cannot decide; test
    fixtures regenerate such instances.
    """
    corr = problem.A.T @ solution.u_star
    on = np.zeros(problem.n, dtype=bool)
    on[solution.support] = True
    margins = []
    if solution.support.size:
        margins.append(float(np.min(problem.eps * solution.x_star[on])))
    if np.any(~on):
        margins.append(float(np.min(problem.lam[~on] - corr[~on])))
    return min(margins) if margins else np.inf
