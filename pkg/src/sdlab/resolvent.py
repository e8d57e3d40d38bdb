"""Resolvent assembly for the singular-drift generator -Lap + b.grad.

The resolvent at zeta is assembled from three factors:

* input factor   (weighted gradient of the free resolvent),
* loop factor    (the composition whose p-norm stays below 1 under the
                  smallness guard m_d c_p delta < 1),
* output factor  (free resolvent of the weighted function),

inverted through a Neumann series:

    R(zeta) = (zeta - Lap)^(-1) - output (1 + loop)^(-1) input.

Four algebraically equivalent factorizations are provided and must
agree to series tolerance; they regroup the fractional multiplier
powers differently and so exercise the principal-branch arithmetic:

* ``direct``     -- the defining grouping above;
* ``fractional`` -- fractional powers peeled off both ends, exposing
                    the smoothing gain of the output side;
* ``split``      -- output factor split into two half-power multipliers;
* ``symmetric``  -- p = 2 only: quarter/three-quarter symmetric split
                    inverted through its own series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants as C
from .errors import (
    GuardViolationError,
    GridMismatchError,
    NeumannDivergenceError,
    NeumannMaxTermsError,
    SpectralDomainError,
)
from .grid import GridFunction, fftn, ifftn, lp_norm

__all__ = [
    "ResolventParams",
    "ResolventAssembly",
    "REPRESENTATIONS",
    "LinearOp",
    "estimate_op_norm",
    "pseudo_resolvent_residual",
    "strong_convergence_study",
    "mu_uniformity_study",
    "norm_bound_report",
    "zeta_ray_grid",
]

REPRESENTATIONS = ("direct", "fractional", "split", "symmetric")


@dataclass
class ResolventParams:
    """Exponents and spectral parameter for one resolvent assembly.

    Validity is checked at construction: the smallness guard
    m_d c_p delta < 1 (equivalent to p lying in the admissible interval),
    the half-plane condition Re zeta >= kappa_d * lam, and the exponent
    ordering 1 <= r < p < q used by the fractional factorization.
    """

    p: float
    zeta: complex
    delta: float
    lam: float
    d: int = 3
    q: float | None = None
    r: float | None = None

    def __post_init__(self):
        self.zeta = complex(self.zeta)
        if self.d < 3:
            raise ValueError(f"d must be >= 3, got {self.d}")
        if self.p <= 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        guard = C.neumann_guard_value(self.p, self.delta, self.d)
        if guard >= 1.0:
            raise GuardViolationError(
                f"m_d c_p delta = {guard:.6g} >= 1: exponent p={self.p} is outside "
                "the admissible interval; the series inverse is not guarded"
            )
        floor = C.kappa_d(self.d) * self.lam
        if self.zeta.real < floor * (1.0 - 1e-12):
            raise SpectralDomainError(
                f"Re zeta = {self.zeta.real:.6g} below the half-plane floor "
                f"kappa_d*lam = {floor:.6g}"
            )
        if self.q is None:
            self.q = 2.0 * self.p
        if self.r is None:
            self.r = 0.5 * (1.0 + self.p)
        if not 1.0 <= self.r < self.p < self.q:
            raise ValueError(
                f"need 1 <= r < p < q, got r={self.r}, p={self.p}, q={self.q}"
            )

    @property
    def p_conj(self):
        return C.holder_conjugate(self.p)

    @property
    def guard_value(self):
        return C.neumann_guard_value(self.p, self.delta, self.d)

    def with_zeta(self, zeta):
        return ResolventParams(
            p=self.p, zeta=zeta, delta=self.delta, lam=self.lam, d=self.d, q=self.q, r=self.r
        )


class LinearOp:
    """Matrix-free operator on grid value arrays with an adjoint."""

    def __init__(self, grid, forward, adjoint=None, name=""):
        self.grid = grid
        self.forward = forward
        self.adjoint = adjoint
        self.name = name

    def __call__(self, values):
        return self.forward(values)


class ResolventAssembly:
    """Precomputed factor arrays for one (params, field) pair.

    The assembly is immutable after construction; all apply_* methods
    are pure, so concurrent use on shared inputs is safe.
    """

    def __init__(self, params, b, representation="direct", neumann_tol=1e-10, neumann_kmax=200):
        if representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {representation!r}")
        if representation == "symmetric":
            if abs(params.p - 2.0) > 1e-12:
                raise ValueError("the symmetric factorization requires p = 2")
            if params.delta >= 1.0:
                raise GuardViolationError(
                    f"symmetric factorization needs delta < 1, got {params.delta}"
                )
        self.params = params
        self.b = b
        self.grid = b.grid
        if self.grid.d != params.d:
            raise GridMismatchError(f"grid dimension {self.grid.d} != params.d {params.d}")
        self.representation = representation
        self.neumann_tol = neumann_tol
        self.neumann_kmax = neumann_kmax

        p = params.p
        mag = b.magnitude()
        positive = mag > 0
        # |b|^(1/p - 1) b, with the removable singularity at b = 0 filled by 0.
        scale = np.where(positive, np.where(positive, mag, 1.0) ** (1.0 / p - 1.0), 0.0)
        self.weight_vec = b.values * scale
        self.weight_out = mag ** (1.0 / params.p_conj)
        self.weight_in_mag = mag ** (1.0 / p)

        z = params.zeta
        k2 = self.grid.k_squared
        self.sym_res = np.power(z + k2, -1.0)
        self.sym_grad_res = [1j * kc * self.sym_res for kc in self.grid.k_components]
        self._sym_cache = {}

    def _sym(self, alpha):
        key = float(alpha)
        if key not in self._sym_cache:
            self._sym_cache[key] = np.power(self.params.zeta + self.grid.k_squared, -key)
        return self._sym_cache[key]

    def _grad_sym(self, alpha):
        key = ("grad", float(alpha))
        if key not in self._sym_cache:
            base = np.power(self.params.zeta + self.grid.k_squared, -alpha)
            self._sym_cache[key] = [1j * kc * base for kc in self.grid.k_components]
        return self._sym_cache[key]

    # -- factor applications on raw value arrays ------------------------

    def _input_values(self, v, alpha=1.0):
        """weight_vec . grad (zeta - Lap)^(-alpha) v"""
        vhat = fftn(v)
        syms = self.sym_grad_res if alpha == 1.0 else self._grad_sym(alpha)
        acc = self.weight_vec[0] * ifftn(syms[0] * vhat)
        for j in range(1, self.grid.d):
            acc += self.weight_vec[j] * ifftn(syms[j] * vhat)
        return acc

    def _input_adjoint_values(self, v, alpha=1.0):
        syms = self.sym_grad_res if alpha == 1.0 else self._grad_sym(alpha)
        acc = np.conj(syms[0]) * fftn(np.conj(self.weight_vec[0]) * v)
        for j in range(1, self.grid.d):
            acc += np.conj(syms[j]) * fftn(np.conj(self.weight_vec[j]) * v)
        return ifftn(acc)

    def _output_values(self, v, alpha=1.0):
        """(zeta - Lap)^(-alpha) (weight_out * v)"""
        sym = self.sym_res if alpha == 1.0 else self._sym(alpha)
        return ifftn(sym * fftn(self.weight_out * v))

    def _output_adjoint_values(self, v, alpha=1.0):
        sym = self.sym_res if alpha == 1.0 else self._sym(alpha)
        return self.weight_out * ifftn(np.conj(sym) * fftn(v))

    def _loop_values(self, v):
        """weight_vec . grad (zeta - Lap)^(-1) (weight_out * v)"""
        vhat = fftn(self.weight_out * v)
        acc = self.weight_vec[0] * ifftn(self.sym_grad_res[0] * vhat)
        for j in range(1, self.grid.d):
            acc += self.weight_vec[j] * ifftn(self.sym_grad_res[j] * vhat)
        return acc

    def _loop_adjoint_values(self, v):
        acc = np.conj(self.sym_grad_res[0]) * fftn(np.conj(self.weight_vec[0]) * v)
        for j in range(1, self.grid.d):
            acc += np.conj(self.sym_grad_res[j]) * fftn(np.conj(self.weight_vec[j]) * v)
        return self.weight_out * ifftn(acc)

    def _weighted_resolvent_values(self, v):
        """|b|^(1/p) (zeta - Lap)^(-1) v"""
        return self.weight_in_mag * ifftn(self.sym_res * fftn(v))

    def _weighted_resolvent_adjoint_values(self, v):
        return ifftn(np.conj(self.sym_res) * fftn(self.weight_in_mag * v))

    def _symmetric_loop_values(self, v):
        """(zeta-Lap)^(-1/4) |b|^(1/2) (weight_vec . grad (zeta-Lap)^(-3/4) v)

        For p = 2 the transpose of the quarter-power weighted factor is
        realized with the same zeta (it coincides with the Hilbert
        adjoint for real zeta, and is what makes the factorization an
        exact identity for complex zeta).
        """
        inner = self._input_values(v, alpha=0.75)
        return ifftn(self._sym(0.25) * fftn(self.weight_out * inner))

    # -- public operator views ------------------------------------------

    def input_factor(self, alpha=1.0):
        return LinearOp(
            self.grid,
            lambda v: self._input_values(v, alpha),
            lambda v: self._input_adjoint_values(v, alpha),
            name="input_factor",
        )

    def output_factor(self, alpha=1.0):
        return LinearOp(
            self.grid,
            lambda v: self._output_values(v, alpha),
            lambda v: self._output_adjoint_values(v, alpha),
            name="output_factor",
        )

    def loop_factor(self):
        return LinearOp(self.grid, self._loop_values, self._loop_adjoint_values, name="loop_factor")

    def weighted_resolvent(self):
        return LinearOp(
            self.grid,
            self._weighted_resolvent_values,
            self._weighted_resolvent_adjoint_values,
            name="weighted_resolvent",
        )

    def apply_input_factor(self, f):
        return GridFunction(self.grid, self._input_values(f.values))

    def apply_output_factor(self, f):
        return GridFunction(self.grid, self._output_values(f.values))

    def apply_weighted_resolvent(self, f):
        return GridFunction(self.grid, self._weighted_resolvent_values(f.values))

    def apply_loop(self, f):
        return GridFunction(self.grid, self._loop_values(f.values))

    def apply_free_resolvent(self, f):
        return GridFunction(self.grid, ifftn(self.sym_res * fftn(f.values)))

    # -- series inversion -------------------------------------------------

    def _neumann(self, g_values, loop_values, tol=None, kmax=None):
        tol = self.neumann_tol if tol is None else tol
        kmax = self.neumann_kmax if kmax is None else kmax
        hd = self.grid.cell_volume()
        p = self.params.p

        def pnorm(v):
            return float((hd * np.sum(np.abs(v) ** p)) ** (1.0 / p))

        norm_g = pnorm(g_values)
        total = g_values.copy()
        term = g_values
        history = []
        if norm_g == 0.0:
            return total, history
        grow = 0
        for _ in range(kmax):
            term = -loop_values(term)
            inc = pnorm(term)
            total = total + term
            history.append(inc)
            if inc <= tol * norm_g:
                return total, history
            if len(history) >= 2 and history[-1] > history[-2]:
                grow += 1
                if grow >= 5:
                    raise NeumannDivergenceError(
                        "series increments grew 5 times in a row; the smallness "
                        "guard was evidently based on an underestimated delta",
                        history=history,
                    )
            else:
                grow = 0
        raise NeumannMaxTermsError(
            f"series did not reach tol={tol} within {kmax} terms", history=history
        )

    def neumann_inverse(self, g, tol=None, kmax=None):
        """(1 + loop)^(-1) g by partial sums; returns (result, increments)."""
        total, history = self._neumann(g.values, self._loop_values, tol=tol, kmax=kmax)
        return GridFunction(self.grid, total), history

    # -- the resolvent ----------------------------------------------------

    def _apply_adjoint_values(self, v, tol=None, kmax=None):
        """Adjoint of the direct factorization: free* - input*(1+loop*)^-1 output*.

        The adjoint loop factor obeys the same norm guard (the bound is
        symmetric under exponent conjugation), so the same series engine
        inverts it.
        """
        free = ifftn(np.conj(self.sym_res) * fftn(v))
        g = self._output_adjoint_values(v)
        w, _ = self._neumann(g, self._loop_adjoint_values, tol=tol, kmax=kmax)
        return free - self._input_adjoint_values(w)

    def resolvent_op(self):
        return LinearOp(
            self.grid,
            lambda v: self.apply(GridFunction(self.grid, v)).values,
            self._apply_adjoint_values,
            name="resolvent",
        )

    def apply(self, f, tol=None, kmax=None):
        """Apply the resolvent of (zeta + generator) to f."""
        v = f.values
        free = ifftn(self.sym_res * fftn(v))
        rep = self.representation
        if rep == "direct":
            g = self._input_values(v)
            w, _ = self._neumann(g, self._loop_values, tol=tol, kmax=kmax)
            corr = self._output_values(w)
        elif rep == "split":
            g = self._input_values(v)
            w, _ = self._neumann(g, self._loop_values, tol=tol, kmax=kmax)
            half = ifftn(self._sym(0.5) * fftn(self.weight_out * w))
            corr = ifftn(self._sym(0.5) * fftn(half))
        elif rep == "fractional":
            pr = self.params
            rp = C.holder_conjugate(pr.r)
            qp = C.holder_conjugate(pr.q)
            v1 = ifftn(self._sym(0.5 / rp) * fftn(v))
            v2 = self._input_values(v1, alpha=0.5 + 0.5 / pr.r)
            w, _ = self._neumann(v2, self._loop_values, tol=tol, kmax=kmax)
            v4 = ifftn(self._sym(0.5 / qp) * fftn(self.weight_out * w))
            corr = ifftn(self._sym(0.5 + 0.5 / pr.q) * fftn(v4))
        elif rep == "symmetric":
            v1 = ifftn(self._sym(0.25) * fftn(v))
            w, _ = self._neumann(v1, self._symmetric_loop_values, tol=tol, kmax=kmax)
            return GridFunction(self.grid, ifftn(self._sym(0.75) * fftn(w)))
        else:  # pragma: no cover
            raise AssertionError(rep)
        return GridFunction(self.grid, free - corr)


def apply_generator(b, f):
    """-Lap f + b . grad f with the full drift field, applied spectrally."""
    from .grid import gradient_apply, laplacian_apply

    grad = gradient_apply(f)
    advect = np.sum(b.values * grad.values, axis=0)
    return GridFunction(f.grid, -laplacian_apply(f).values + advect)


def _dual_vector(v, p):
    """Duality map of the p-norm: |v|^(p-1) * phase(v)."""
    mag = np.abs(v)
    phase = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 0.0)
    return mag ** (p - 1.0) * phase


def estimate_op_norm(op, p_in, p_out=None, n_starts=64, tol=1e-4, max_iter=100, seed=0):
    """Lower estimate of the L^p_in -> L^p_out operator norm.

    Restarted nonlinear power iteration on the norm ratio (ascent on the
    dual vectors); requires the operator's adjoint.  Returns the largest
    ratio found across the random starts.
    """
    p_out = p_in if p_out is None else p_out
    grid = op.grid
    hd = grid.cell_volume()
    rng = np.random.default_rng(seed)
    p_in_conj = C.holder_conjugate(p_in)

    def norm(v, p):
        return float((hd * np.sum(np.abs(v) ** p)) ** (1.0 / p))

    best = 0.0
    for _ in range(n_starts):
        x = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        nx = norm(x, p_in)
        x = x / nx
        est_prev = 0.0
        for _ in range(max_iter):
            y = op.forward(x)
            est = norm(y, p_out)
            if est <= est_prev * (1.0 + tol):
                break
            est_prev = est
            z = op.adjoint(_dual_vector(y, p_out))
            x = _dual_vector(z, p_in_conj)
            nx = norm(x, p_in)
            if nx == 0.0:
                break
            x = x / nx
        best = max(best, est_prev)
    return best


def pseudo_resolvent_residual(params, b, zeta, eta, f, representation="direct"):
    """Relative residual of R(zeta) - R(eta) = (eta - zeta) R(zeta) R(eta) on f."""
    a_z = ResolventAssembly(params.with_zeta(zeta), b, representation)
    a_e = ResolventAssembly(params.with_zeta(eta), b, representation)
    p = params.p
    u_e = a_e.apply(f)
    u_z = a_z.apply(f)
    prod = a_z.apply(u_e)
    diff = u_z - u_e
    resid = diff - (eta - zeta) * prod
    scale = max(lp_norm(diff, p), abs(eta - zeta) * lp_norm(prod, p), 1e-300)
    r = lp_norm(resid, p)
    if r == 0.0:
        return 0.0
    return r / scale


def strong_convergence_study(params, b, levels, f, truncate_fn, b_ref=None, representation="direct"):
    """Error curve level -> |R(zeta, b_level) f - R(zeta, b_ref) f|_p.

    ``truncate_fn(b, level)`` produces the approximating field; ``b_ref``
    defaults to the field itself (the finest available truncation).
    """
    b_ref = b if b_ref is None else b_ref
    ref = ResolventAssembly(params, b_ref, representation).apply(f)
    p = params.p
    errs = []
    for lev in levels:
        bn = truncate_fn(b, lev)
        u = ResolventAssembly(params, bn, representation).apply(f)
        errs.append(lp_norm(u - ref, p))
    return np.array(errs)


def mu_uniformity_study(params, b, levels, mu_grid, f, truncate_fn):
    """Curve mu -> max over levels of |mu R(mu, b_level) f - f|_p."""
    p = params.p
    out = []
    for mu in mu_grid:
        worst = 0.0
        for lev in levels:
            bn = truncate_fn(b, lev)
            pr = params.with_zeta(complex(mu))
            u = ResolventAssembly(pr, bn).apply(f)
            worst = max(worst, lp_norm(mu * u - f, p))
        out.append(worst)
    return np.array(out)


def zeta_ray_grid(lam, d, n_ray=8, n_real=4):
    """Spectral-parameter sample: the boundary ray of the admissible
    half-plane plus a real dyadic sweep (covers both the boundary and
    the large-|zeta| decay claims)."""
    floor = C.kappa_d(d) * lam
    ims = [0.0]
    step = 1.0
    while len(ims) < n_ray:
        ims.extend([step, -step])
        step *= 4.0
    ray = [complex(floor, im * floor) for im in ims[:n_ray]]
    real = [complex(floor * 2.0 ** j, 0.0) for j in range(n_real)]
    return ray + real


def norm_bound_report(params, b, zeta_list=None, n_starts=16, tol=1e-3, seed=0):
    """Measured factor norms against their closed-form bounds.

    Rows: (quantity, zeta, measured, bound, pass).  The output-factor
    bound appears twice because the stated decay exponent and the one
    the derivation chain ends with disagree; both are reported and the
    ledger of which holds empirically is left to the data.
    """
    d, p, delta, lam = params.d, params.p, params.delta, params.lam
    zetas = zeta_ray_grid(lam, d) if zeta_list is None else zeta_list
    c1 = C.C1(p, delta, d)
    c2 = C.C2(p, delta, d)
    c3 = C.C3(p, delta, d)
    cp = C.C_p_resolvent(p, delta, d)
    guard = params.guard_value
    rows = []
    for z in zetas:
        pr = params.with_zeta(z)
        a = ResolventAssembly(pr, b)
        az = abs(z)
        measured_in = estimate_op_norm(a.input_factor(), p, n_starts=n_starts, tol=tol, seed=seed)
        rows.append(("input_factor", z, measured_in, c1 * az ** (-0.5 / pr.p_conj)))
        measured_out = estimate_op_norm(a.output_factor(), p, n_starts=n_starts, tol=tol, seed=seed)
        rows.append(("output_factor_stated", z, measured_out, c2 * az ** (-0.5 - 0.5 / p)))
        rows.append(("output_factor_chain", z, measured_out, c2 * az ** (-0.5 / p)))
        measured_w = estimate_op_norm(a.weighted_resolvent(), p, n_starts=n_starts, tol=tol, seed=seed)
        rows.append(("weighted_resolvent", z, measured_w, c3 * az ** (-0.5 - 0.5 / pr.p_conj)))
        measured_loop = estimate_op_norm(a.loop_factor(), p, n_starts=n_starts, tol=tol, seed=seed)
        rows.append(("loop_factor", z, measured_loop, guard))
        measured_res = estimate_op_norm(a.resolvent_op(), p, n_starts=max(2, n_starts // 4),
                                        tol=tol, seed=seed)
        rows.append(("resolvent", z, measured_res, cp / az))
    return [(q, z, m, bd, m <= bd) for (q, z, m, bd) in rows]
