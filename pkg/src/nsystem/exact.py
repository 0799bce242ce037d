"""Exact stationary analysis of the FCFS-ALIS N-system at finite n.

All weights live in log space: at n = 200 the factorials overflow doubles
long before normalization. The joint law of (K, I1, I2) is held as a dense
array indexed ``[k, i1, i2]`` with ``-inf`` off the support.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .model import SystemParams, derive, require_stable

S1, S2 = 1, 2


class CellIndex(NamedTuple):
    k: int
    i1: int
    i2: int


def in_support(params: SystemParams, cell: CellIndex) -> bool:
    k, i1, i2 = cell
    n1, n2 = params.n1, params.n2
    if not (0 <= k <= n2 and 0 <= i1 <= n1 and 0 <= i2 <= n2):
        return False
    if i1 >= 1:
        return i2 >= k
    if i2 >= 1:
        return k >= i2
    return True


def _check_exact_params(params: SystemParams):
    require_stable(params)
    if params.lambda1 <= 0:
        raise ValueError("exact analysis needs lambda1 > 0 (s2 servers are never used otherwise)")


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def log_weight_cell(params: SystemParams, cell: CellIndex) -> float:
    """Unnormalized log weight of one (k, i1, i2) cell, -inf off the support."""
    _check_exact_params(params)
    cell = CellIndex(*cell)
    if not in_support(params, cell):
        return -math.inf
    p = params
    k, i1, i2 = cell
    lam, lam1, lam2 = p.lam, p.lambda1, p.lambda2
    lg = math.lgamma
    if i1 >= 1:
        return (
            lg(p.n1 + 1) - lg(i1 + 1) - lg(p.n1 - i1 + 1)
            + lg(p.n2 + 1) - lg(i2 + 1) - lg(p.n2 - i2 + 1)
            + math.log(i1) + lg(i2 + 1) + lg(i1 + i2 - k) - lg(i2 - k + 1)
            + i1 * math.log(p.mu1) + i2 * math.log(p.mu2)
            - (i1 + i2) * math.log(lam) + k * math.log(lam / lam1)
        )
    head = (
        math.log(p.n1) + lg(p.n2 + 1) - lg(p.n2 - k + 1)
        + math.log(p.mu1) + k * math.log(p.mu2)
    )
    # j runs over positions n-k .. last; the rate denominator uses j - n1
    last = p.n - i2 if i2 >= 1 else p.n - 1
    prod = sum(
        math.log(p.mu1 * p.n1 + p.mu2 * (j - p.n1) - lam2) for j in range(p.n - k, last + 1)
    )
    if i2 >= 1:
        return head - prod - i2 * math.log(lam1)
    return head - prod - math.log(p.capacity - lam)


@dataclass(frozen=True, eq=False)
class StationaryTable:
    params: SystemParams
    log_w: np.ndarray
    logZ: float

    def log_weight(self, cell: CellIndex) -> float:
        k, i1, i2 = cell
        if not (0 <= k <= self.params.n2 and 0 <= i1 <= self.params.n1 and 0 <= i2 <= self.params.n2):
            return -math.inf
        return float(self.log_w[k, i1, i2])

    def prob(self) -> np.ndarray:
        return np.exp(self.log_w - self.logZ)

    @property
    def support_size(self) -> int:
        return int(np.isfinite(self.log_w).sum())

    def to_csv(self, path: str | Path):
        p = self.prob()
        ks, i1s, i2s = np.nonzero(np.isfinite(self.log_w))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "i1", "i2", "prob"])
            for k, i1, i2 in zip(ks, i1s, i2s):
                w.writerow([int(k), int(i1), int(i2), repr(float(p[k, i1, i2]))])


def build_table(params: SystemParams) -> StationaryTable:
    _check_exact_params(params)
    p = params
    n1, n2 = p.n1, p.n2
    lam = p.lam
    k = np.arange(n2 + 1)[:, None, None]
    i1 = np.arange(n1 + 1)[None, :, None]
    i2 = np.arange(n2 + 1)[None, None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = (
            _log_binom(n1, i1) + _log_binom(n2, i2)
            + np.log(i1) + gammaln(i2 + 1) + gammaln(i1 + i2 - k) - gammaln(i2 - k + 1)
            + i1 * math.log(p.mu1) + i2 * math.log(p.mu2)
            - (i1 + i2) * math.log(lam) + k * math.log(lam / p.lambda1)
        )
    log_w = np.where((i1 >= 1) & (i2 >= k), log_w, -np.inf)

    # cum[m] = sum_{t < m} log(mu1 n1 + mu2 t - lambda2), t = j - n1
    t = np.arange(n2 + 1)
    cum = np.concatenate([[0.0], np.cumsum(np.log(p.mu1 * n1 + p.mu2 * t - p.lambda2))])
    kk = np.arange(n2 + 1)
    head = (
        math.log(n1) + gammaln(n2 + 1) - gammaln(n2 - kk + 1)
        + math.log(p.mu1) + kk * math.log(p.mu2)
    )
    # i1 = i2 = 0: positions n-k .. n-1
    log_w[kk, 0, 0] = head - (cum[n2] - cum[n2 - kk]) - math.log(p.capacity - lam)
    # i1 = 0, 1 <= i2 <= k: positions n-k .. n-i2
    ki, ji = np.meshgrid(kk, np.arange(n2 + 1), indexing="ij")
    mask = (ji >= 1) & (ji <= ki)
    kv, jv = ki[mask], ji[mask]
    log_w[kv, 0, jv] = head[kv] - (cum[n2 - jv + 1] - cum[n2 - kv]) - jv * math.log(p.lambda1)

    logZ = float(logsumexp(log_w))
    return StationaryTable(params=p, log_w=log_w, logZ=logZ)


@dataclass(frozen=True)
class Moments:
    mean_i1: float
    mean_i2: float
    var_i1: float
    var_i2: float
    cov: float
    p_i1_zero: float
    k_pmf: np.ndarray
    i1_pmf: np.ndarray
    i2_pmf: np.ndarray

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("k_pmf", "i1_pmf", "i2_pmf"):
            d[key] = [float(x) for x in d[key]]
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in d.items()}

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


def moments(table: StationaryTable) -> Moments:
    prob = table.prob()
    i1_pmf = prob.sum(axis=(0, 2))
    i2_pmf = prob.sum(axis=(0, 1))
    k_pmf = prob.sum(axis=(1, 2))
    a = np.arange(i1_pmf.size)
    b = np.arange(i2_pmf.size)
    e1 = float(i1_pmf @ a)
    e2 = float(i2_pmf @ b)
    d1, d2 = a - e1, b - e2
    joint = prob.sum(axis=0)
    return Moments(
        mean_i1=e1,
        mean_i2=e2,
        var_i1=float(i1_pmf @ d1**2),
        var_i2=float(i2_pmf @ d2**2),
        cov=float(d1 @ joint @ d2),
        p_i1_zero=float(i1_pmf[0]),
        k_pmf=k_pmf,
        i1_pmf=i1_pmf,
        i2_pmf=i2_pmf,
    )


def exact_moments(params: SystemParams) -> Moments:
    return moments(build_table(params))


@dataclass(frozen=True)
class EmptyPoolMass:
    """Masses of {I1=0, I2=0} and {I1=0, I2>0}, as multiples of the normalizer 1/Z."""

    log_rel_00: float
    log_rel_0pos: float

    @property
    def log_rel(self) -> float:
        return float(np.logaddexp(self.log_rel_00, self.log_rel_0pos))


def p_i1_zero_closed_form(params: SystemParams) -> EmptyPoolMass:
    _check_exact_params(params)
    d = derive(params)
    n2 = params.n2
    log_pool = -math.log1p(-d.delta)
    log_rel_00 = log_pool + math.log(1 - (1 - d.alpha) * d.rho) - math.log1p(-d.rho)
    # P(X = n2 - j) / P(X = n2) for X ~ Poisson(kappa n2), j = 1..n2
    j = np.arange(1, n2 + 1)
    log_ratio = gammaln(n2 + 1) - gammaln(n2 - j + 1) - j * math.log(d.kappa * n2)
    log_rel_0pos = log_pool + float(logsumexp(log_ratio))
    return EmptyPoolMass(log_rel_00=log_rel_00, log_rel_0pos=log_rel_0pos)


def p_i1_zero(params: SystemParams, logZ: float | None = None) -> float:
    """P(I1 = 0) from the closed forms; ``logZ`` defaults to a fresh table build."""
    if logZ is None:
        logZ = build_table(params).logZ
    return math.exp(p_i1_zero_closed_form(params).log_rel - logZ)


def perm_sum_bruteforce(a: Sequence[float]) -> float:
    """Sum over orderings of a of prod_l 1 / (A_1 + ... + A_l)."""
    a = [float(x) for x in a]
    if not 1 <= len(a) <= 8:
        raise ValueError("perm_sum_bruteforce supports 1..8 entries")
    if any(x <= 0 for x in a):
        raise ValueError("entries must be positive")
    total = 0.0
    for perm in itertools.permutations(a):
        prod = 1.0
        acc = 0.0
        for x in perm:
            acc += x
            prod /= acc
        total += prod
    return total


@dataclass(frozen=True)
class DetailedState:
    """Full FCFS-ALIS state.

    ``perm`` lists server types (1 or 2): the busy servers in the arrival
    order of the customers they serve, then the idle servers from most
    recently idle to longest idle. ``queues[j]`` is the number of customers
    waiting behind the customer of busy server j.
    """

    perm: tuple[int, ...]
    idle_cut: int
    queues: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def i1(self) -> int:
        return sum(1 for s in self.perm[self.idle_cut:] if s == S1)

    @property
    def i2(self) -> int:
        return sum(1 for s in self.perm[self.idle_cut:] if s == S2)

    @property
    def k(self) -> int:
        return trailing_s2(self.perm)

    def validate(self, params: SystemParams):
        n = self.n
        if sorted(self.perm) != [S1] * params.n1 + [S2] * params.n2:
            raise ValueError("perm does not match the pool sizes")
        if not 0 <= self.idle_cut <= n:
            raise ValueError("idle_cut out of range")
        if len(self.queues) != self.idle_cut or any(q < 0 for q in self.queues):
            raise ValueError("need one non-negative queue length per busy server")
        i, k = n - self.idle_cut, self.k
        if i > k and any(self.queues):
            raise ValueError("an s1 server is idle but customers are waiting")
        # 1-based j < min(n-k, n-i) must have empty queues
        if any(self.queues[: min(n - k, n - i) - 1]):
            raise ValueError("customers wait ahead of the last s1 server")


def trailing_s2(perm: Sequence[int]) -> int:
    k = 0
    for s in reversed(perm):
        if s != S2:
            break
        k += 1
    return k


def log_pi_state(params: SystemParams, state: DetailedState) -> float:
    """Unnormalized log stationary weight of a detailed state."""
    state.validate(params)
    p = params
    n, n1 = p.n, p.n1
    rates = [p.mu1 if s == S1 else p.mu2 for s in state.perm]
    cum = list(itertools.accumulate(rates))
    i1, i2, k = state.i1, state.i2, state.k
    i = i1 + i2
    q = state.queues

    def queue_term(j, rate, arrival):
        qj = q[j - 1]
        out = -(qj + 1) * math.log(rate)
        if qj:
            out += qj * math.log(arrival) if arrival > 0 else -math.inf
        return out

    if i1 >= 1:
        return (
            -sum(math.log(c) for c in cum[: n - i])
            - (i - k) * math.log(p.lam)
            - k * math.log(p.lambda1)
        )
    out = -sum(math.log(c) for c in cum[: n - k - 1])
    last = n - i2 if i2 >= 1 else n - 1
    for j in range(n - k, last + 1):
        out += queue_term(j, p.mu1 * n1 + p.mu2 * (j - n1), p.lambda2)
    if i2 >= 1:
        return out - i2 * math.log(p.lambda1)
    return out + queue_term(n, p.capacity, p.lam)
