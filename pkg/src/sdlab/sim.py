"""Monte Carlo realization of the drift diffusion, cross-validated
against the deterministic semigroup.

The generator convention makes the expectation semigroup solve
du/dt = Lap u - b . grad u, so sample paths follow

    dX = -b(X) dt + sqrt(2) dW.

The minus sign is stated here once and carried by ``drift_sign``; a
sign-flip run is the designated mutation check and must fail the
cross-validation.  Drift fields are grid fields read off-grid by
trilinear torus interpolation, matching the field the semigroup side
uses.  Paths leaving the safety box are censored (frozen and counted);
runs with a censored fraction >= 0.1% are flagged invalid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import em_chunk, trilinear_at
from .grid import GridFunction, fourier_eval
from .semigroup import SemigroupParams, evolve

__all__ = [
    "SimParams",
    "SimResult",
    "simulate_paths",
    "mc_vs_semigroup",
    "strong_feller_probe",
]

CENSOR_LIMIT = 1e-3
CHUNK = 8192


@dataclass
class SimParams:
    """One Monte Carlo run: drift field, horizon, step, path count, start.

    The step count is round(t/dt) and the effective step is t/steps, so
    the horizon is hit exactly.  The safety box is the box shrunk by
    ``safety_margin`` (absolute length units) on every side.
    """

    drift: object  # GridVectorField (real-valued); zero field for pure diffusion
    t: float
    dt: float
    paths: int
    seed: int
    x0: np.ndarray
    safety_margin: float = 0.0

    def __post_init__(self):
        if self.dt <= 0 or self.t <= 0 or self.dt > self.t:
            raise ValueError("need 0 < dt <= t")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        self.x0 = np.asarray(self.x0, dtype=float)

    @property
    def steps(self):
        return max(1, int(round(self.t / self.dt)))

    @property
    def dt_effective(self):
        return self.t / self.steps


@dataclass
class SimResult:
    terminal: np.ndarray
    censored: int
    censored_fraction: float
    flagged_invalid: bool
    payoff_mean: float | None = None
    payoff_se: float | None = None
    extras: dict = field(default_factory=dict)


def _chunk_noise(seed, chunk_index, m, steps):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,)))
    return rng.standard_normal((m, steps, 3))


def simulate_paths(sp, payoff=None, drift_sign=-1.0):
    """Run Euler-Maruyama paths; returns terminal points and statistics.

    ``payoff`` may be a GridFunction (read at terminal points by
    trilinear interpolation) or a callable on (N, d) points.  Per-path
    randomness comes from streams derived from (seed, chunk index), so
    identical SimParams reproduce identical statistics bit for bit
    within a lane.
    """
    grid = sp.drift.grid
    if grid.d != 3:
        raise ValueError("the path simulator is implemented for d = 3")
    fieldarr = np.ascontiguousarray(sp.drift.values.real)
    n, h = grid.n, grid.h
    steps = sp.steps
    dt = sp.dt_effective
    sqrt2dt = np.sqrt(2.0 * dt)
    lo = sp.safety_margin
    hi = grid.length - sp.safety_margin
    if lo >= hi:
        raise ValueError("safety margin leaves no interior box")

    terminal = np.empty((sp.paths, 3))
    censored_total = 0
    start = 0
    chunk_index = 0
    while start < sp.paths:
        m = min(CHUNK, sp.paths - start)
        pos = np.tile(sp.x0, (m, 1))
        censored = np.zeros(m, dtype=np.bool_)
        noise = _chunk_noise(sp.seed, chunk_index, m, steps)
        em_chunk(pos, fieldarr, n, h, dt, sqrt2dt, noise, drift_sign, lo, hi, censored)
        terminal[start : start + m] = pos
        censored_total += int(censored.sum())
        start += m
        chunk_index += 1

    frac = censored_total / sp.paths
    result = SimResult(
        terminal=terminal,
        censored=censored_total,
        censored_fraction=frac,
        flagged_invalid=frac >= CENSOR_LIMIT,
    )
    if payoff is not None:
        if isinstance(payoff, GridFunction):
            vals = trilinear_at(payoff.values.real, terminal, n, h)
        else:
            vals = np.asarray(payoff(terminal), dtype=float)
        result.payoff_mean = float(np.mean(vals))
        result.payoff_se = float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
    return result


def mc_vs_semigroup(
    b,
    params,
    f,
    starts,
    t,
    dt,
    paths,
    pde_steps,
    seed=0,
    c_disc=None,
    drift_sign=-1.0,
    safety_margin=None,
    neumann_tol=1e-9,
    payoff_fn=None,
):
    """Compare MC payoff means against the evolved field at several starts.

    The tolerance budget per start is 3*SE + c_disc*(dt + 1/pde_steps);
    c_disc defaults to sup|f|.  When the payoff has a closed form, pass
    it as ``payoff_fn`` so the MC side avoids the trilinear read-off bias
    of the grid samples (the PDE side always evolves the grid samples
    and is read at the starts by exact trigonometric interpolation).
    Returns (rows, all_passed) with rows
    (start, mc_mean, mc_se, pde_value, |diff|, budget, pass, flagged).
    """
    grid = b.grid
    if c_disc is None:
        c_disc = float(np.max(np.abs(f.values.real)))
    if safety_margin is None:
        safety_margin = 2.0 * grid.h
    u = evolve(SemigroupParams(t, pde_steps), params, b, f, neumann_tol=neumann_tol)
    pde_vals = fourier_eval(u, starts).real
    rows = []
    all_pass = True
    for i, x0 in enumerate(starts):
        sp = SimParams(
            drift=b, t=t, dt=dt, paths=paths, seed=seed + 1000 * i, x0=x0,
            safety_margin=safety_margin,
        )
        res = simulate_paths(sp, payoff=payoff_fn if payoff_fn is not None else f,
                             drift_sign=drift_sign)
        budget = 3.0 * res.payoff_se + c_disc * (sp.dt_effective + 1.0 / pde_steps)
        diff = abs(res.payoff_mean - pde_vals[i])
        ok = diff <= budget and not res.flagged_invalid
        all_pass = all_pass and ok
        rows.append(
            (tuple(x0), res.payoff_mean, res.payoff_se, float(pde_vals[i]), diff, budget, ok,
             res.flagged_invalid)
        )
    return rows, all_pass


def strong_feller_probe(b, f, base_point, separations, t, dt, paths, seed=0, direction=None):
    """Modulus of continuity of x -> E f(X_t^x) at shrinking separations.

    Both starts of a pair share the random increments (the chunk streams
    depend only on the seed), so the difference of means is computed
    with common random numbers and survives far below the naive MC
    noise floor.  Returns (separations, diffs, fitted exponent).
    """
    grid = b.grid
    direction = np.array([1.0, 0.0, 0.0]) if direction is None else np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    base_point = np.asarray(base_point, float)

    def mean_at(x0):
        sp = SimParams(drift=b, t=t, dt=dt, paths=paths, seed=seed, x0=x0,
                       safety_margin=2.0 * grid.h)
        return simulate_paths(sp, payoff=f).payoff_mean

    m0 = mean_at(base_point)
    seps = np.asarray(separations, float)
    diffs = np.array([abs(mean_at(base_point + s * direction) - m0) for s in seps])
    good = diffs > 0
    if good.sum() >= 2:
        exponent = float(np.polyfit(np.log(seps[good]), np.log(diffs[good]), 1)[0])
    else:
        exponent = float("nan")
    return seps, diffs, exponent
