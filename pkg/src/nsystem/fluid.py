"""Fluid and diffusion approximations for the many-server N-system."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .model import SystemParams, derive


@dataclass(frozen=True)
class FluidSolution:
    T: float
    beta: float
    m1: float
    m2: float
    f1: float
    f2: float


@dataclass(frozen=True)
class CltParams:
    sigma1: float
    sigma2: float
    corr: float


def idle_quadratic(params: SystemParams) -> tuple[float, float, float]:
    """Coefficients (a, b, c) of g(T) = a T^2 + b T + c."""
    p = params
    lam = p.lam
    a = lam * p.mu1 * p.mu2
    b = lam * (p.mu1 + p.mu2) - p.n * p.mu1 * p.mu2
    c = lam - p.n1 * p.mu1 - p.n2 * p.mu2
    return a, b, c


def quadratic_residual(params: SystemParams, T: float) -> float:
    """|g(T)| relative to the magnitude of its terms."""
    a, b, c = idle_quadratic(params)
    scale = abs(a * T * T) + abs(b * T) + abs(c)
    return abs(a * T * T + b * T + c) / scale


def fluid_solve(params: SystemParams) -> FluidSolution:
    p = params
    d = derive(p)
    if d.rho >= 1:
        raise ValueError("unstable: no positive idle time (rho >= 1)")
    lam = p.lam
    r1, r2 = 1 / p.mu1, 1 / p.mu2
    disc = (p.n / lam) ** 2 + 2 * (p.n2 - p.n1) / lam * (r1 - r2) + (r1 - r2) ** 2
    T = 0.5 * (p.n / lam - r1 - r2 + math.sqrt(disc))

    # Newton polish: the radical form cancels badly as rho -> 1.
    a, b, c = idle_quadratic(p)
    for _ in range(8):
        slope = 2 * a * T + b
        if slope == 0:
            break
        step = (a * T * T + b * T + c) / slope
        if not math.isfinite(step):
            break
        T -= step
        if abs(step) <= 1e-16 * abs(T):
            break
    if T <= 0:
        # near-critical fallback; g(0) < 0 and g(hi) > 0 bracket the root
        hi = 1.0
        while a * hi * hi + b * hi + c <= 0:
            hi *= 2
        T = bisect(lambda t: a * t * t + b * t + c, 0.0, hi, xtol=1e-300, rtol=4e-16)

    beta = p.n1 / (lam * T + lam * r1)
    m1 = T * p.n1 / (T + r1)
    m2 = T * p.n2 / (T + r2)
    return FluidSolution(T=T, beta=beta, m1=m1, m2=m2, f1=m1 / p.n, f2=m2 / p.n)


def pooling(params: SystemParams) -> bool:
    """Complete resource pooling: alpha + beta > 1."""
    sol = fluid_solve(params)
    return derive(params).alpha + sol.beta > 1


def clt_params(params: SystemParams) -> CltParams:
    """Limiting covariance of the sqrt(n)-scaled idle counts.

    Only meaningful under complete resource pooling; outside it the idle
    counts separate into two independent single-pool systems.
    """
    d = derive(params)
    if not (d.rho < 1 and d.delta < 1):
        raise ValueError("CLT formulas need a stable system")
    sol = fluid_solve(params)
    if d.alpha + sol.beta <= 1:
        raise ValueError("CLT formulas out of validity region (alpha + beta <= 1)")
    return clt_from_fractions(d.theta, sol.f1, sol.f2)


def clt_from_fractions(theta: float, f1: float, f2: float) -> CltParams:
    den = theta * f2**2 + (1 - theta) * f1**2
    var1 = (theta - f1) * f1 * ((1 - theta) * f1 + f2**2) / den
    var2 = (1 - theta - f2) * f2 * (theta * f2 + f1**2) / den
    corr2 = (theta - f1) * (1 - theta - f2) * f1 * f2 / (
        (theta * f2 + f1**2) * ((1 - theta) * f1 + f2**2)
    )
    return CltParams(sigma1=math.sqrt(var1), sigma2=math.sqrt(var2), corr=math.sqrt(corr2))


def idle_covariance(params: SystemParams) -> tuple[float, float, float]:
    """(Var I1, Var I2, corr) from the unscaled pool sizes and fluid means."""
    sol = fluid_solve(params)
    n1, n2, m1, m2 = params.n1, params.n2, sol.m1, sol.m2
    den = n1 * m2**2 + n2 * m1**2
    var1 = (n1 - m1) * m1 * (n2 * m1 + m2**2) / den
    var2 = (n2 - m2) * m2 * (n1 * m2 + m1**2) / den
    corr = math.sqrt(
        (n1 - m1) * (n2 - m2) * m1 * m2 / ((n1 * m2 + m1**2) * (n2 * m1 + m2**2))
    )
    return var1, var2, corr


def k_ratio(alpha: float, beta: float) -> float:
    """Common ratio (1 - beta) / alpha of the limiting law of K."""
    if alpha <= 0 or alpha + beta <= 1:
        raise ValueError(
            f"degenerate geometric: alpha + beta = {alpha + beta:.6g} <= 1, mass escapes to infinity"
        )
    return (1 - beta) / alpha


def k_geometric(alpha: float, beta: float, kmax: int | None = None, tail: float = 1e-15) -> np.ndarray:
    """pmf of K on 0..kmax; by default truncated once the tail drops below ``tail``."""
    r = k_ratio(alpha, beta)
    if kmax is None:
        kmax = 0 if r == 0 else max(0, math.ceil(math.log(tail) / math.log(r)) - 1)
    k = np.arange(kmax + 1)
    return (1 - r) * r**k


@dataclass(frozen=True)
class ImprovedTheta:
    theta_star: float
    e_i1_approx: float


def improved_theta_residual(params: SystemParams, theta: float) -> float:
    """Expected effective s1 share over the geometric K law, minus theta."""
    p = params
    alpha = derive(p).alpha
    k = np.arange(p.n2 + 1)
    share = (p.n1 - 1) / (p.n - 1 - k)
    weights = ((1 - theta) / alpha) ** k * (alpha + theta - 1) / alpha
    return float(share @ weights) - theta


def improved_theta(params: SystemParams, grid: int = 4000, xtol: float = 1e-10) -> ImprovedTheta:
    """Self-consistent s1 share when K is not negligible (alpha near 1 - theta).

    The residual is negative at both ends of (1 - alpha, 1); the relevant
    root is the upper one, where the residual crosses from + to -.
    """
    d = derive(params)
    if not (d.rho < 1 and d.delta < 1):
        raise ValueError("improved approximation needs a stable system")
    lo, hi = 1 - d.alpha + 1e-9, 1 - 1e-9
    if lo >= hi:
        raise ValueError("fixed point not found: empty bracket (alpha ~ 0)")
    thetas = np.linspace(lo, hi, grid)
    h = np.array([improved_theta_residual(params, t) for t in thetas])
    down = np.nonzero((h[:-1] > 0) & (h[1:] <= 0))[0]
    if down.size == 0:
        raise ValueError(
            f"fixed point not found: no sign change on [{lo:.6g}, {hi:.6g}], "
            f"residual range [{h.min():.3g}, {h.max():.3g}]"
        )
    j = down[-1]
    theta_star = bisect(lambda t: improved_theta_residual(params, t), thetas[j], thetas[j + 1], xtol=xtol)
    return ImprovedTheta(theta_star=theta_star, e_i1_approx=params.n1 - theta_star * d.rho * d.n)
