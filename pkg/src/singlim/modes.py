"""Closed-form solver for the damped scalar mode equation.

Solves eps*y'' + y' + lam*y = (a + b*t)*exp(-nu*t) exactly, classifying the
homogeneous branch by the discriminant 1 - 4*eps*lam and escalating the
particular solution degree when the forcing rate collides with a
characteristic root.  An adaptive high-order integrator is provided as an
independent numerical oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .exppoly import ExpPoly

__all__ = [
    "ModeParams",
    "RootPair",
    "ForcingTerm",
    "ModeTrajectory",
    "characteristic_roots",
    "solve_homogeneous",
    "solve_forced",
    "rk_reference",
    "rk_reference_path",
    "OracleStepLimitError",
]

# Absolute window on the discriminant inside which the double-root branch is
# used: the two-root coefficients scale like 1/sqrt(d) and cancel badly.
DELTA_CRIT = 1e-9

# Relative window for treating the forcing rate as resonant with a
# characteristic root; same cancellation concern in the particular solve.
DELTA_RES = 1e-9

# Oracle refuses runs whose stability-limited step count would be absurd.
_MAX_STEP_RATIO = 2e6


class OracleStepLimitError(RuntimeError):
    """The adaptive oracle would need too many steps (eps too small)."""


@dataclass(frozen=True)
class ModeParams:
    """One eigenmode of the damped problem: eps*y'' + y' + lam*y with data."""

    eps: float
    lam: float
    y0: float
    y1: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


@dataclass(frozen=True)
class RootPair:
    mu_plus: complex
    mu_minus: complex
    classification: str


@dataclass(frozen=True)
class ForcingTerm:
    """Forcing (a + b*t) * exp(-nu*t); the family every profile needs."""

    a: float
    b: float
    nu: float

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("forcing decay rate nu must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.a == 0.0 and self.b == 0.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = (self.a + self.b * t) * np.exp(-self.nu * t)
        return out if out.ndim else float(out)

    def as_exppoly(self) -> ExpPoly:
        return ExpPoly.build([(0, -self.nu, self.a), (1, -self.nu, self.b)])


ZERO_FORCING = ForcingTerm(0.0, 0.0, 0.0)


def characteristic_roots(eps: float, lam: float) -> RootPair:
    """Roots of eps*mu**2 + mu + lam = 0 with a cancellation-safe slow root."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0.0:
        return RootPair(0.0 + 0j, complex(-1.0 / eps), "degenerate_lambda_zero")
    d = 1.0 - 4.0 * eps * lam
    if abs(d) <= DELTA_CRIT:
        mu = complex(-1.0 / (2.0 * eps))
        return RootPair(mu, mu, "critical")
    if d > 0:
        sq = math.sqrt(d)
        # rationalized form keeps the slow root accurate when eps*lam << 1
        mu_plus = -2.0 * lam / (1.0 + sq)
        mu_minus = -(1.0 + sq) / (2.0 * eps)
        return RootPair(complex(mu_plus), complex(mu_minus), "overdamped")
    beta = math.sqrt(-d) / (2.0 * eps)
    alpha = -1.0 / (2.0 * eps)
    return RootPair(complex(alpha, beta), complex(alpha, -beta), "underdamped")


def _homogeneous_poly(roots: RootPair, y0: float, y1: float) -> ExpPoly:
    """Homogeneous solution matching (y(0), y'(0)) = (y0, y1)."""
    mp, mm = roots.mu_plus, roots.mu_minus
    if roots.classification == "critical":
        # (c1 + c2*t) * exp(mu*t)
        return ExpPoly.build([(0, mp, y0), (1, mp, y1 - mp * y0)])
    c_plus = (y1 - mm * y0) / (mp - mm)
    c_minus = y0 - c_plus
    return ExpPoly.build([(0, mp, c_plus), (0, mm, c_minus)])


@dataclass(frozen=True)
class ModeTrajectory:
    """Closed-form record for one mode: roots, particular part, evaluators.

    Evaluation at 0 reproduces the initial data by construction; the
    residual method recomputes eps*y'' + y' + lam*y - f analytically.
    """

    params: ModeParams
    forcing: ForcingTerm
    roots: RootPair
    poly: ExpPoly
    particular: ExpPoly
    resonance_escalation: int  # 0 plain, 1 simple-root collision, 2 double root

    @property
    def dpoly(self) -> ExpPoly:
        return self.poly.derivative()

    def value(self, t):
        return self.poly.value(t)

    def derivative(self, t):
        return self.poly.derivative().value(t)

    def second_derivative(self, t):
        return self.poly.derivative().derivative().value(t)

    def evaluate(self, t):
        return self.value(t), self.derivative(t)

    def residual(self, t):
        p = self.params
        d1 = self.poly.derivative()
        d2 = d1.derivative()
        return (
            p.eps * d2.value(t)
            + d1.value(t)
            + p.lam * self.poly.value(t)
            - self.forcing.value(t)
        )


def solve_homogeneous(p: ModeParams) -> ModeTrajectory:
    """Exact unforced solution in the branch selected by the discriminant."""
    roots = characteristic_roots(p.eps, p.lam)
    poly = _homogeneous_poly(roots, p.y0, p.y1)
    return ModeTrajectory(p, ZERO_FORCING, roots, poly, ExpPoly.zero(), 0)


def solve_forced(p: ModeParams, f: ForcingTerm) -> ModeTrajectory:
    """Exact solution with forcing (a + b*t)*exp(-nu*t).

    Undetermined coefficients against the characteristic polynomial
    q(mu) = eps*mu**2 + mu + lam evaluated at mu = -nu: when q(-nu) is
    resonantly small the particular ansatz is escalated by one or two
    powers of t.  The homogeneous part is fitted afterwards so the initial
    data is always reproduced exactly.
    """
    if f.is_zero:
        traj = solve_homogeneous(p)
        return ModeTrajectory(p, f, traj.roots, traj.poly, ExpPoly.zero(), 0)
    eps, lam, nu = p.eps, p.lam, f.nu
    rho = eps * nu**2 - nu + lam  # q(-nu)
    qp = 1.0 - 2.0 * eps * nu  # q'(-nu)
    mu = -nu
    if abs(rho) > DELTA_RES * max(1.0, eps * nu**2, nu, lam):
        p1 = f.b / rho
        p0 = (f.a - qp * p1) / rho
        particular = ExpPoly.build([(0, mu, p0), (1, mu, p1)])
        escalation = 0
        part0, dpart0 = p0, p1 - nu * p0
    elif abs(qp) > DELTA_RES * max(1.0, eps * nu):
        # -nu collides with a simple characteristic root: t * (q0 + q1*t)
        q1 = f.b / (2.0 * qp)
        q0 = (f.a - 2.0 * eps * q1) / qp
        particular = ExpPoly.build([(1, mu, q0), (2, mu, q1)])
        escalation = 1
        part0, dpart0 = 0.0, q0
    else:
        # -nu is the double root: t**2 * (r0 + r1*t)
        r0 = f.a / (2.0 * eps)
        r1 = f.b / (6.0 * eps)
        particular = ExpPoly.build([(2, mu, r0), (3, mu, r1)])
        escalation = 2
        part0, dpart0 = 0.0, 0.0
    roots = characteristic_roots(eps, lam)
    homog = _homogeneous_poly(roots, p.y0 - part0, p.y1 - dpart0)
    return ModeTrajectory(p, f, roots, homog + particular, particular, escalation)


def rk_reference_path(p: ModeParams, f: ForcingTerm, ts, tol: float):
    """Oracle values (y, y') at sorted sample times from one adaptive run.

    Embedded-pair one-step integration (eighth order) with the initial step
    capped at eps/2 so the fast transient is resolved by accuracy control.
    """
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("oracle tolerance must lie in [1e-13, 1e-6]")
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise ValueError("sample times must be nonnegative")
    t_end = float(ts.max()) if ts.size else 0.0
    if t_end == 0.0:
        return np.full(ts.shape, p.y0), np.full(ts.shape, p.y1)
    if t_end / p.eps > _MAX_STEP_RATIO:
        raise OracleStepLimitError(
            f"t/eps = {t_end / p.eps:.2e} exceeds the oracle step budget"
        )
    eps, lam = p.eps, p.lam

    def rhs(t, y):
        return (y[1], (f.value(t) - y[1] - lam * y[0]) / eps)

    t_eval = np.unique(ts[ts > 0])
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        (p.y0, p.y1),
        method="DOP853",
        rtol=tol,
        atol=tol,
        first_step=min(eps / 2.0, t_end / 2.0),
        t_eval=t_eval,
    )
    if not sol.success:
        raise OracleStepLimitError(f"oracle integration failed: {sol.message}")
    lookup = {t: (sol.y[0, i], sol.y[1, i]) for i, t in enumerate(sol.t)}
    lookup[0.0] = (p.y0, p.y1)
    ys = np.array([lookup[t][0] for t in ts])
    dys = np.array([lookup[t][1] for t in ts])
    return ys, dys


def rk_reference(p: ModeParams, f: ForcingTerm, t: float, tol: float):
    """Oracle (y(t), y'(t)) for a single sample time."""
    if t < 0:
        raise ValueError("sample time must be nonnegative")
    ys, dys = rk_reference_path(p, f, np.array([t]), tol)
    return float(ys[0]), float(dys[0])
