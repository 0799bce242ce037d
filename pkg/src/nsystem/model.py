"""System parameters for the two-pool N-system and the n-scaling rule.

Pool s1 (flexible) serves both customer types, pool s2 serves type c1 only.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class SystemParams:
    lambda1: float
    lambda2: float
    n1: int
    n2: int
    mu1: float
    mu2: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "mu1", "mu2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("arrival rates must be non-negative")
        if self.lambda1 + self.lambda2 <= 0:
            raise ValueError("total arrival rate must be positive")
        for name in ("n1", "n2"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("service rates must be positive")

    @property
    def lam(self) -> float:
        return self.lambda1 + self.lambda2

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def capacity(self) -> float:
        return self.n1 * self.mu1 + self.n2 * self.mu2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> SystemParams:
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown parameter fields: {sorted(unknown)}")
        missing = names - set(doc)
        if missing:
            raise ValueError(f"missing parameter fields: {sorted(missing)}")
        return cls(**doc)


def load_params(path: str | Path) -> SystemParams:
    """Read a JSON document holding exactly the six primitive fields."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("parameter document must be a JSON object")
    return SystemParams.from_dict(doc)


@dataclass(frozen=True)
class DerivedRatios:
    lam: float
    n: int
    alpha: float
    theta: float
    rho: float
    delta: float
    kappa: float


def derive(params: SystemParams) -> DerivedRatios:
    p = params
    lam = p.lam
    return DerivedRatios(
        lam=lam,
        n=p.n,
        alpha=p.lambda1 / lam,
        theta=p.n1 / p.n,
        rho=lam / p.capacity,
        delta=p.lambda2 / (p.n1 * p.mu1),
        kappa=p.lambda1 / (p.mu2 * p.n2),
    )


@dataclass(frozen=True)
class Stability:
    stable: bool
    pooled_prerequisite: bool


def stability(params: SystemParams) -> Stability:
    """Stability needs rho < 1 and delta < 1.

    Resource pooling additionally needs alpha + beta > 1, which requires the
    fluid service share; see :func:`nsystem.fluid.pooling`.
    """
    d = derive(params)
    stable = d.rho < 1 and d.delta < 1
    return Stability(stable=stable, pooled_prerequisite=stable)


def require_stable(params: SystemParams) -> DerivedRatios:
    d = derive(params)
    if not (d.rho < 1 and d.delta < 1):
        raise ValueError(f"unstable system: rho={d.rho:.6g}, delta={d.delta:.6g}")
    return d


@dataclass(frozen=True)
class Shape:
    """Dimensionless description of a family of systems indexed by n."""

    alpha: float
    theta: float
    rho: float
    mu1: float = 1.0
    mu2: float = 1.0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("service rates must be positive")


def scale(shape: Shape, n: int) -> SystemParams:
    """Member of ``shape``'s family with ``n`` servers in total.

    The load is set from the capacity, lambda = rho * (n1 mu1 + n2 mu2),
    which reduces to lambda = rho * n for unit service rates.
    """
    if n < 2:
        raise ValueError("need at least two servers")
    # round() guards against theta*n landing an ulp above an integer
    n1 = math.ceil(round(shape.theta * n, 9))
    n2 = n - n1
    if n2 < 1:
        raise ValueError(f"theta={shape.theta} leaves no s2 servers at n={n}")
    lam = shape.rho * (n1 * shape.mu1 + n2 * shape.mu2)
    return SystemParams(
        lambda1=shape.alpha * lam,
        lambda2=(1 - shape.alpha) * lam,
        n1=n1,
        n2=n2,
        mu1=shape.mu1,
        mu2=shape.mu2,
    )


# Numerical section system: lambda=100, n1=n2=100, unit rates.
def symmetric_system(alpha: float, n: int = 200) -> SystemParams:
    return scale(Shape(alpha=alpha, theta=0.5, rho=0.5), n)
