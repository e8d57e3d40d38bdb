"""Closed-form constants gating the series inversion and the norm bounds.

Everything here is evaluated from its defining formula in double
precision; nothing is a hard-coded decimal.  These values guard the
convergence of the Neumann inverse and feed the diagnostic bound
reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import beta as _beta
from scipy.special import gamma as _gamma

__all__ = [
    "m_d",
    "m_d_squared_form",
    "kappa_d",
    "c_p",
    "interval_I",
    "feller_threshold",
    "feller_admissible",
    "neumann_guard_value",
    "c_q_fractional",
    "C_r_delta",
    "C1",
    "C2",
    "C3",
    "C_p_resolvent",
    "K_1r",
    "K_2q",
    "DimensionConstants",
    "constants_table",
]


def m_d(d):
    """Gradient-domination constant pi^(1/2) (2e)^(-1/2) d^(d/2) (d-1)^((1-d)/2)."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    d = float(d)
    return math.sqrt(math.pi) / math.sqrt(2.0 * math.e) * d ** (d / 2.0) * (d - 1.0) ** ((1.0 - d) / 2.0)


def m_d_squared_form(d):
    """Same constant via its squared form pi (2e)^-1 d^d (d-1)^(1-d)."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    d = float(d)
    return math.sqrt(math.pi / (2.0 * math.e) * d ** d * (d - 1.0) ** (1.0 - d))


def kappa_d(d):
    """d/(d-1), the half-plane scaling factor."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    return d / (d - 1.0)


def holder_conjugate(p):
    p = float(p)
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    return p / (p - 1.0)


def c_p(p):
    """p p'/4; equals 1 exactly at p = 2 and exceeds 1 elsewhere."""
    return p * holder_conjugate(p) / 4.0


def interval_I(delta, d):
    """Admissible exponent interval (2/(1+s), 2/(1-s)), s = sqrt(1 - m_d delta).

    Empty (raises) when m_d * delta >= 1, which is exactly the failure of
    the smallness hypothesis.
    """
    md = m_d(d)
    if md * delta >= 1.0:
        raise ValueError(
            f"m_d*delta = {md * delta:.6g} >= 1: admissible interval is empty"
        )
    s = math.sqrt(1.0 - md * delta)
    if s == 1.0:
        return (1.0, math.inf)
    return (2.0 / (1.0 + s), 2.0 / (1.0 - s))


def feller_threshold(d):
    """4(d-2)/(d-1)^2, the stricter smallness level for the C_infty theory."""
    if d < 3:
        raise ValueError(f"d must be >= 3, got {d}")
    return 4.0 * (d - 2.0) / (d - 1.0) ** 2


def feller_admissible(delta, d):
    """Whether m_d delta < 4(d-2)/(d-1)^2; if so also the exponent range.

    Returns (ok, p_range) where p_range = (d-1, 2/(1-sqrt(1-m_d delta)))
    or None when the condition fails or the range is empty.
    """
    md = m_d(d)
    thr = feller_threshold(d)
    if md * delta >= thr:
        return False, None
    s = math.sqrt(1.0 - md * delta)
    hi = math.inf if s == 1.0 else 2.0 / (1.0 - s)
    lo = d - 1.0
    if lo >= hi:
        return True, None
    return True, (lo, hi)


def neumann_guard_value(p, delta, d):
    """m_d c_p delta; the series inverse is guarded by this being < 1."""
    return m_d(d) * c_p(p) * delta


def c_q_fractional(q):
    """Gamma(1/2) / (Gamma(1/(2q)) Gamma(1/(2q'))).

    Normalizing constant of the one-dimensional integral representation
    of the fractional power (zeta - Laplacian)^(-1/(2q')).
    """
    q = float(q)
    if not 1.0 < q < math.inf:
        raise ValueError(f"q must lie in (1, inf), got {q}")
    qp = holder_conjugate(q)
    return _gamma(0.5) / (_gamma(0.5 / q) * _gamma(0.5 / qp))


def C_r_delta(r, delta):
    """(c_r delta)^(1/r), the weighted-resolvent bound constant."""
    return (c_p(r) * delta) ** (1.0 / r)


def C1(p, delta, d):
    """2 kappa_d m_d C_{p,delta} 2^(d/4): bound constant for G_p."""
    return 2.0 * kappa_d(d) * m_d(d) * C_r_delta(p, delta) * 2.0 ** (d / 4.0)


def C2(p, delta, d):
    """2 C_{p',delta} 2^(-d/4+1/4): bound constant for Q_p."""
    return 2.0 * C_r_delta(holder_conjugate(p), delta) * 2.0 ** (-d / 4.0 + 0.25)


def C3(p, delta, d):
    """2 C_{p,delta} 2^(d/4+1/4) 2^(-1/2): bound constant for P_p."""
    return 2.0 * C_r_delta(p, delta) * 2.0 ** (d / 4.0 + 0.25) * 2.0 ** (-0.5)


def C_p_resolvent(p, delta, d):
    """1 + C1 C2 / (1 - m_d c_p delta): |zeta|-scaled resolvent bound."""
    g = neumann_guard_value(p, delta, d)
    if g >= 1.0:
        raise ValueError(f"m_d c_p delta = {g:.6g} >= 1")
    return 1.0 + C1(p, delta, d) * C2(p, delta, d) / (1.0 - g)


def _power_tail_integral(a, b, lam):
    """integral_0^inf t^(a-1) (t+lam)^(-b) dt = lam^(a-b) B(a, b-a), 0 < a < b."""
    if not 0.0 < a < b:
        raise ValueError(f"requires 0 < a < b, got a={a}, b={b}")
    return lam ** (a - b) * _beta(a, b - a)


def K_2q(q, p, delta, lam):
    """Bound constant for the fractional-weight factor Q_p(q).

    c_q C_{p',delta} integral_0^inf t^(-1+1/(2q)) (t+lam)^(-1/(2p)) dt;
    the integral converges at infinity only for q > p.
    """
    if not q > p:
        raise ValueError(f"requires q > p, got q={q}, p={p}")
    integral = _power_tail_integral(0.5 / q, 0.5 / p, lam)
    return c_q_fractional(q) * C_r_delta(holder_conjugate(p), delta) * integral


def K_1r(r, p, delta, lam, m_rd):
    """Bound constant for the fractional-gradient factor G_p(r).

    m_rd c_{r'} C_{p,delta} integral_0^inf t^(-1+1/(2r')) (t+lam)^(-1/(2p')) dt;
    m_rd has no closed form and is supplied from the kernel-probe estimate.
    The integral converges only for r < p.
    """
    if not 1.0 <= r < p:
        raise ValueError(f"requires 1 <= r < p, got r={r}, p={p}")
    rp = holder_conjugate(r)
    pp = holder_conjugate(p)
    integral = _power_tail_integral(0.5 / rp, 0.5 / pp, lam)
    return m_rd * c_q_fractional(rp) * C_r_delta(p, delta) * integral


@dataclass(frozen=True)
class DimensionConstants:
    """Bundle of the dimension-dependent constants for one d."""

    d: int

    @property
    def m_d(self):
        return m_d(self.d)

    @property
    def kappa_d(self):
        return kappa_d(self.d)

    @property
    def feller_threshold(self):
        return feller_threshold(self.d)

    def c_p(self, p):
        return c_p(p)

    def interval_I(self, delta):
        return interval_I(delta, self.d)

    def guard(self, p, delta):
        return neumann_guard_value(p, delta, self.d)


def constants_table(d_values, deltas):
    """Rows (d, m_d, kappa_d, feller_threshold, delta, I_lo, I_hi) for the CLI."""
    rows = []
    for d in d_values:
        md = m_d(d)
        kd = kappa_d(d)
        thr = feller_threshold(d) if d >= 3 else float("nan")
        for delta in deltas:
            if md * delta < 1.0:
                lo, hi = interval_I(delta, d)
            else:
                lo, hi = float("nan"), float("nan")
            rows.append((d, md, kd, thr, delta, lo, hi))
    return rows
