"""Safe spheres and the screening / relaxing tests.

A safe sphere is a ball in dual space certified to contain the dual
optimum ``u*``.  Given such a sphere S(c, r), for every atom ``a_l``:

* screening test:  ``a_l'c + r <= lam_l``  implies  ``x*_l = 0``;
* relaxing test:   ``a_l'c - r >  lam_l``  implies  ``x*_l > 0``.

Spheres are built here from the duality gap: the dual cost has a
``-0.5*||y - u||^2`` term and is therefore 1-strongly concave, so
``0.5*||u* - u||^2 <= D(u*) - D(u) <= P(x) - D(u)`` for any feasible x,
which yields radius ``sqrt(2 * gap)`` around the residual ``u = y - Ax``.
"""

from dataclasses import dataclass

import numpy as np

from .core import duality_gap

__all__ = ["Sphere", "TestOutcome", "gap_sphere", "screen_test", "relax_test", "run_tests"]


@dataclass(frozen=True)
class Sphere:
    """Ball ``{u : ||u - center|| <= radius}`` in dual space."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")


@dataclass(frozen=True)
class TestOutcome:
    """Index sets produced by one round of tests (disjoint by construction)."""

    screened: np.ndarray
    relaxed: np.ndarray

    @property
    def empty(self):
        return self.screened.size == 0 and self.relaxed.size == 0


def gap_sphere(problem, x):
    """Safe sphere at the residual of a feasible point.

    Center is ``y - A x`` and the radius is ``sqrt(2 * gap)`` with the gap
    evaluated at that very center.  Tiny negative computed gaps (roundoff
    at near-optimal points) are clamped to zero before the square root.
    """
    center = problem.y - problem.A @ x
    gap = duality_gap(problem, x, center)
    return Sphere(center=center, radius=float(np.sqrt(2.0 * max(gap, 0.0))))


def screen_test(a, lambda_l, sphere):
    """True iff atom ``a`` is certified zero: worst-case score under the radius."""
    return float(a @ sphere.center) + sphere.radius <= lambda_l


def relax_test(a, lambda_l, sphere):
    """True iff atom ``a`` is certified positive (strict inequality)."""
    return float(a @ sphere.center) - sphere.radius > lambda_l


def run_tests(problem, sphere, candidates, scores=None, screening=True, relaxing=True):
    """Apply both tests to every candidate atom.

    Parameters
    ----------
    candidates : ndarray of int
        Indices still unidentified; already-identified atoms must not be
        re-tested.
    scores : ndarray, optional
        Precomputed ``A[:, candidates]'center``.  Callers that already
        paid for a full ``A'center`` product pass the relevant slice here;
        otherwise one shared evaluation per atom is done for both tests.
    screening, relaxing : bool
        Individually disable one family (solver variants).

    Returns
    -------
    TestOutcome with the newly certified zero and positive index sets.
    """
    candidates = np.asarray(candidates, dtype=np.intp)
    if scores is None:
        scores = problem.A[:, candidates].T @ sphere.center
    lam = problem.lam[candidates]
    r = sphere.radius
    screened = relaxed = np.empty(0, dtype=np.intp)
    if screening:
        screened = candidates[scores + r <= lam]
    if relaxing:
        relaxed = candidates[scores - r > lam]
    return TestOutcome(screened=screened, relaxed=relaxed)
