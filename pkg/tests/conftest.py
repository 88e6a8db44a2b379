"""Shared fixtures: the analytic identity instance and tie-free random draws."""

import numpy as np
import pytest

from screlax import Problem, build_instance, kkt_margin, reference_solve
from screlax.bench import DegenerateInstanceError
from screlax.oracle import OracleError

# analytic optimum of the identity instance (A = I2, y = (1, 0.2),
# lam = 0.3, eps = 0.1): x* = ((1 - 0.3)/1.1, 0), u* = y - x*
IDENTITY_X = np.array([7.0 / 11.0, 0.0])
IDENTITY_U = np.array([4.0 / 11.0, 0.2])

# offset between dictionary/observation seed streams used by fixtures;
# mirrors the campaign convention of bench (dict even, obs odd)
_SEED_STRIDE = 1_000_003

# verdict lines collected by the acceptance gate; replayed after the run
# so they stay visible under pytest's output capture
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def identity_problem():
    return Problem(np.eye(2), np.array([1.0, 0.2]), np.full(2, 0.3), 0.1)


def random_problem(seed, m=20, n=30, setup="gaussian", pair=(0.2, 0.5)):
    """One benchmark-style instance keyed by a single seed."""
    return build_instance(setup, m, n, 2 * seed, 2 * seed + 1, pair[0], pair[1])


def rebuild_from_scratch(problem, part):
    """Reference reduction computed directly from the partition."""
    pos, free = part.positives, part.free
    A_pos = problem.A[:, pos]
    A_free = problem.A[:, free]
    G = A_pos.T @ A_pos + problem.eps * np.eye(pos.size)
    offset = np.linalg.solve(G, A_pos.T @ problem.y - problem.lam[pos])
    coupling = -np.linalg.solve(G, A_pos.T @ A_free)
    return {
        "G": G,
        "offset": offset,
        "coupling": coupling,
        "A_r": A_free + A_pos @ coupling,
        "lam_r": problem.lam[free]
        + coupling.T @ (problem.lam[pos] + problem.eps * offset),
        "y_r": problem.y - A_pos @ offset,
    }


def certified_instance(seed, m=20, n=30, setup="gaussian", pair=(0.2, 0.5),
                       margin=1e-8):
    """(problem, exact solution) with KKT margins clear of ties.

    Draws whose reference solve fails or whose margin sits below the
    threshold are redrawn deterministically (same stride rule as the
    campaign runner), so fixtures are reproducible.
    """
    for attempt in range(50):
        base = 2 * seed + attempt * _SEED_STRIDE
        try:
            problem = build_instance(setup, m, n, base, base + 1, pair[0], pair[1])
            solution = reference_solve(problem)
        except (DegenerateInstanceError, OracleError):
            continue
        if kkt_margin(problem, solution) >= margin:
            return problem, solution
    raise RuntimeError(f"no tie-free instance near seed {seed} ({setup}, {pair})")
