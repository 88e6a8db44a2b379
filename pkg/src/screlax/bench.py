"""Synthetic benchmark families, campaign runner and performance profiles.

Four dictionary setups at unit column norm:

    gaussian  i.i.d. standard normal entries
    uniform   i.i.d. entries uniform on [0, 1] (coherent, nonnegative)
    dct       m rows of the orthonormal n x n DCT-II matrix, sampled
              uniformly without replacement, columns renormalized
    toeplitz  columns are one-sample shifts of a Gaussian pulse
              (sigma = m/20 samples by default), truncated at the
              window boundary; pulse centers span (m-n)//2 + l so the
              shifts straddle the window symmetrically

Observations are uniform on the unit sphere (normalized standard
normal); the uniform/toeplitz setups take entrywise absolute values
first, restricting to the positive orthant.  Per-instance weights are
lambda_frac * lambda_max * ones and epsilon_frac * lambda_max.

Randomness comes from numpy's default generator; instance i of a
campaign draws its dictionary from seed base+2i and its observation
from seed base+2i+1.  Degenerate draws (a zero column, or lambda_max
<= 0) are redrawn deterministically by adding a large fixed stride to
the offending seed, so campaigns are reproducible bit for bit.
Instances are embarrassingly parallel; set SCRELAX_WORKERS (or pass
``workers``) to fan out, the merged table is scheduling-independent.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import Problem
from .solve import VARIANTS, SolverConfig, solve

__all__ = [
    "SETUPS",
    "DEFAULT_TAU_GRID",
    "DegenerateInstanceError",
    "ExperimentConfig",
    "ResultRow",
    "ProfilePoint",
    "gen_dictionary",
    "gen_observation",
    "build_instance",
    "run_experiment",
    "dolan_more",
    "read_config",
    "write_results",
    "read_results",
    "write_profile",
]

SETUPS = ("gaussian", "uniform", "dct", "toeplitz")
DEFAULT_TAU_GRID = tuple(np.logspace(-16.0, 0.0, 33))

# seed stride for deterministic redraw of degenerate instances; far larger
# than any campaign's 2*n_instances stream span
_REDRAW_STRIDE = 1_000_003
_MAX_REDRAWS = 100


class DegenerateInstanceError(ValueError):
    """A draw produced unusable data (zero column or lambda_max <= 0)."""


def _normalize_columns(raw, setup):
    norms = np.sqrt(np.sum(raw * raw, axis=0))
    if np.any(norms == 0.0):
        k = int(np.argmax(norms == 0.0))
        raise DegenerateInstanceError(
            f"{setup}: column {k} is identically zero before normalization"
        )
    return raw / norms


def _dct_matrix(n):
    """Orthonormal DCT-II matrix; row k holds frequency k."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    d = np.cos(np.pi * (2 * j + 1) * k / (2.0 * n)) * np.sqrt(2.0 / n)
    d[0] *= 1.0 / np.sqrt(2.0)
    return d


def _toeplitz_raw(m, n, sigma):
    """Gaussian pulse shifted by one sample per column, window-truncated."""
    t = np.arange(m, dtype=np.float64)[:, None]
    centers = (m - n) // 2 + np.arange(n, dtype=np.float64)[None, :]
    return np.exp(-((t - centers) ** 2) / (2.0 * sigma * sigma))


def gen_dictionary(setup, m, n, seed, pulse_sigma=None):
    """Draw an m x n dictionary with unit-norm columns.

    Parameters
    ----------
    setup : str
        One of ``"gaussian"``, ``"uniform"``, ``"dct"``, ``"toeplitz"``.
    m, n : int
        Shape; dct requires m <= n (rows sampled without replacement).
    seed : int
        Generator seed; the toeplitz construction is seed-independent.
    pulse_sigma : float, optional
        Toeplitz pulse width in samples; defaults to m/20.

    Raises
    ------
    DegenerateInstanceError
        If a column is identically zero before normalization (the
        caller should regenerate with a different seed).
    """
    rng = np.random.default_rng(seed)
    if setup == "gaussian":
        raw = rng.standard_normal((m, n))
    elif setup == "uniform":
        raw = rng.random((m, n))
    elif setup == "dct":
        rows = np.sort(rng.choice(n, size=m, replace=False))
        raw = _dct_matrix(n)[rows]
    elif setup == "toeplitz":
        sigma = m / 20.0 if pulse_sigma is None else float(pulse_sigma)
        raw = _toeplitz_raw(m, n, sigma)
    else:
        raise ValueError(f"unknown setup {setup!r}")
    return _normalize_columns(raw, setup)


def gen_observation(setup, m, seed):
    """Draw a unit-norm observation; positive orthant for uniform/toeplitz."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m)
    if setup in ("uniform", "toeplitz"):
        v = np.abs(v)
    return v / np.linalg.norm(v)


def build_instance(setup, m, n, dict_seed, obs_seed, lambda_frac, epsilon_frac,
                   pulse_sigma=None):
    """Assemble one benchmark problem with weights scaled by lambda_max.

    Unlike ExperimentConfig, the fractions here may sit outside (0, 1)
    (lambda_frac >= 1 makes x = 0 optimal, which tests rely on).
    """
    A = gen_dictionary(setup, m, n, dict_seed, pulse_sigma=pulse_sigma)
    y = gen_observation(setup, m, obs_seed)
    lmax = float(np.max(A.T @ y))
    if lmax <= 0.0:
        raise DegenerateInstanceError("lambda_max <= 0; regenerate the observation")
    lam = lambda_frac * lmax * np.ones(n)
    return Problem(A=A, y=y, lam=lam, eps=epsilon_frac * lmax)


@dataclass(frozen=True)
class ExperimentConfig:
    """A benchmark campaign: one setup, one (lambda, epsilon) pair.

    Fractions must lie strictly in (0, 1); ``tau_grid`` defaults to 33
    log-spaced thresholds from 1e-16 to 1.
    """

    setup: str
    m: int
    n: int
    lambda_frac: float
    epsilon_frac: float
    n_instances: int
    flop_budget: int
    seed: int
    tau_grid: tuple = DEFAULT_TAU_GRID
    pulse_sigma: float | None = None

    def __post_init__(self):
        if self.setup not in SETUPS:
            raise ValueError(f"setup must be one of {SETUPS}, got {self.setup!r}")
        if self.m < 1 or self.n < 1 or self.n_instances < 1:
            raise ValueError("m, n and n_instances must be >= 1")
        for name in ("lambda_frac", "epsilon_frac"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")
        if self.flop_budget < 0:
            raise ValueError("flop_budget must be >= 0")
        object.__setattr__(self, "flop_budget", int(self.flop_budget))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        if not self.tau_grid:
            raise ValueError("tau_grid must be nonempty")


class ResultRow(NamedTuple):
    setup: str
    seed: int
    variant: str
    flops_budget: int
    final_gap: float


@dataclass(frozen=True)
class ProfilePoint:
    variant: str
    tau: float
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")


def _draw_instance(cfg, i):
    """Instance i of a campaign, redrawing degenerate draws in place."""
    dict_seed = cfg.seed + 2 * i
    obs_seed = cfg.seed + 2 * i + 1
    for attempt in range(_MAX_REDRAWS):
        shift = attempt * _REDRAW_STRIDE
        try:
            return build_instance(
                cfg.setup, cfg.m, cfg.n, dict_seed + shift, obs_seed + shift,
                cfg.lambda_frac, cfg.epsilon_frac, pulse_sigma=cfg.pulse_sigma,
            )
        except DegenerateInstanceError:
            continue
    raise DegenerateInstanceError(
        f"instance {i}: no valid draw in {_MAX_REDRAWS} attempts"
    )


def _run_instance(cfg, i):
    problem = _draw_instance(cfg, i)
    rows = []
    for variant in VARIANTS:
        scfg = SolverConfig(
            variant=variant, flop_budget=cfg.flop_budget, gap_tolerance=0.0
        )
        _, trace = solve(problem, scfg)
        rows.append(
            ResultRow(cfg.setup, cfg.seed + 2 * i, variant,
                      cfg.flop_budget, trace.final.gap)
        )
    return rows


def run_experiment(cfg, workers=None):
    """Run all four variants on every instance of a campaign.

    Returns one ResultRow per (instance, variant); the ``seed`` column
    keys the instance by its dictionary stream seed (base + 2i).  With
    ``workers`` > 1 (or SCRELAX_WORKERS set) instances run in separate
    processes; rows are merged in instance order, so the table does not
    depend on scheduling.
    """
    if workers is None:
        workers = int(os.environ.get("SCRELAX_WORKERS", "1"))
    indices = range(cfg.n_instances)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_instance = list(pool.map(_run_instance, [cfg] * cfg.n_instances, indices))
    else:
        per_instance = [_run_instance(cfg, i) for i in indices]
    return [row for rows in per_instance for row in rows]


def dolan_more(results, tau_grid=DEFAULT_TAU_GRID):
    """Performance profiles: rho(tau) = fraction of instances with gap <= tau.

    Returns ProfilePoints grouped by variant, in tau order within each
    variant; rho is nondecreasing in tau by construction.
    """
    if not results:
        raise ValueError("empty results")
    variants = [v for v in VARIANTS if any(r.variant == v for r in results)]
    for row in results:
        if row.variant not in variants:
            variants.append(row.variant)
    points = []
    for variant in variants:
        gaps = np.array([r.final_gap for r in results if r.variant == variant])
        for tau in tau_grid:
            rho = float(np.count_nonzero(gaps <= tau)) / gaps.size
            points.append(ProfilePoint(variant, float(tau), rho))
    return points


# -- file formats -------------------------------------------------------

_CONFIG_FIELDS = {
    "setup": str,
    "m": int,
    "n": int,
    "lambda_frac": float,
    "epsilon_frac": float,
    "n_instances": int,
    "flop_budget": lambda s: int(float(s)),
    "seed": int,
    "pulse_sigma": float,
}


def read_config(path):
    """Parse a ``key = value`` campaign file into an ExperimentConfig.

    Unknown keys and malformed lines raise ValueError with the line
    number; ``tau_grid`` may be given as comma-separated values.
    """
    fields = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, _, value = text.partition("=")
            key, value = key.strip(), value.strip()
            if key != "tau_grid" and key not in _CONFIG_FIELDS:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            try:
                if key == "tau_grid":
                    fields[key] = tuple(float(t) for t in value.split(","))
                else:
                    fields[key] = _CONFIG_FIELDS[key](value)
            except ValueError:
                raise ValueError(f"line {lineno}: bad value for {key!r}") from None
    try:
        return ExperimentConfig(**fields)
    except TypeError as exc:
        raise ValueError(f"incomplete config: {exc}") from None


def write_results(rows, path):
    """Results CSV with header setup,seed,variant,flops_budget,final_gap."""
    with open(path, "w") as fh:
        fh.write("setup,seed,variant,flops_budget,final_gap\n")
        for r in rows:
            fh.write(
                f"{r.setup},{r.seed},{r.variant},{r.flops_budget},{r.final_gap:.17g}\n"
            )


def read_results(path):
    """Parse a results CSV back into ResultRows; ValueError on bad lines."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "setup,seed,variant,flops_budget,final_gap":
            raise ValueError(f"line 1: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            try:
                rows.append(
                    ResultRow(parts[0], int(parts[1]), parts[2],
                              int(parts[3]), float(parts[4]))
                )
            except ValueError:
                raise ValueError(f"line {lineno}: malformed row") from None
    return rows


def write_profile(points, path):
    """Profile CSV with header variant,tau,rho."""
    with open(path, "w") as fh:
        fh.write("variant,tau,rho\n")
        for p in points:
            fh.write(f"{p.variant},{p.tau:.17g},{p.rho:.17g}\n")
