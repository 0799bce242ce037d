"""Truncated CTMC on the detailed FCFS-ALIS state, solved by a sparse linear solve.

States are :class:`~nsystem.exact.DetailedState` with server *types* in the
permutation; permutations of same-type servers are lumped, which changes no
marginal. Customer types are not part of the state: a waiting customer is a
known c2 unless it sits in the last queue of a fully busy system, where its
type is still unrevealed (c1 with probability alpha). An s2 server scanning
that queue reveals types one by one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .exact import S1, S2, DetailedState, trailing_s2
from .model import SystemParams, derive

MAX_SERVERS = 4
MAX_QMAX = 50

# waiting-customer tokens; servers are tokens S1 / S2
_C2 = -1  # known type c2
_UNSEEN = -2  # type not yet revealed


def _busy_line(state: DetailedState) -> list[int]:
    full = state.idle_cut == len(state.perm)
    line = []
    for j, (s, q) in enumerate(zip(state.perm[: state.idle_cut], state.queues)):
        line.append(s)
        last = full and j == state.idle_cut - 1
        line.extend([_UNSEEN if last else _C2] * q)
    return line


def _from_line(line: list[int], idle: tuple[int, ...]) -> DetailedState:
    perm, queues = [], []
    for tok in line:
        if tok < 0:
            queues[-1] += 1
        else:
            perm.append(tok)
            queues.append(0)
    return DetailedState(tuple(perm) + idle, len(perm), tuple(queues))


def enumerate_states(params: SystemParams, qmax: int) -> list[DetailedState]:
    n = params.n
    perms = sorted(set(itertools.permutations([S1] * params.n1 + [S2] * params.n2)))
    states = []
    for perm in perms:
        k = trailing_s2(perm)
        for b in range(n + 1):
            i = n - b
            # queues may be non-empty only at 1-based positions >= min(n-k, n-i), and none if i > k
            first = 0 if i > k else min(n - k, n - i)
            free = [j for j in range(1, b + 1) if first and j >= first]
            for qs in itertools.product(range(qmax + 1), repeat=len(free)):
                queues = [0] * b
                for j, q in zip(free, qs):
                    queues[j - 1] = q
                states.append(DetailedState(perm, b, tuple(queues)))
    return states


def _transitions(params: SystemParams, state: DetailedState, alpha: float):
    """Yield (rate, next_state) pairs, before truncation."""
    p = params
    n, b = p.n, state.idle_cut
    perm = state.perm
    idle = perm[b:]
    line = _busy_line(state)

    # c1 arrival: longest idle server (last in perm), else join the back.
    if p.lambda1 > 0:
        if b < n:
            yield p.lambda1, _from_line(line + [perm[-1]], idle[:-1])
        else:
            yield p.lambda1, _from_line(line + [_UNSEEN], ())
    # c2 arrival: longest idle s1, else wait at the back.
    if p.lambda2 > 0:
        s1_idle = [j for j, s in enumerate(idle) if s == S1]
        if s1_idle:
            j = s1_idle[-1]
            yield p.lambda2, _from_line(line + [S1], idle[:j] + idle[j + 1:])
        else:
            yield p.lambda2, _from_line(line + [_C2 if b < n else _UNSEEN], idle)

    for pos, s in enumerate(line):
        if s < 0:
            continue
        rate = p.mu1 if s == S1 else p.mu2
        rest = line[:pos] + line[pos + 1:]
        if s == S1:
            waiting = [j for j in range(pos, len(rest)) if rest[j] < 0]
            if waiting:
                new = list(rest)
                new[waiting[0]] = S1
                yield rate, _from_line(new, idle)
            else:
                yield rate, _from_line(rest, (S1,) + idle)
            continue
        # s2 skips known c2s and reveals unseen customers in order
        unseen = [j for j in range(pos, len(rest)) if rest[j] == _UNSEEN]
        for r, j in enumerate(unseen):
            new = list(rest)
            new[j] = S2
            yield rate * alpha * (1 - alpha) ** r, _from_line(new, idle)
        miss = (1 - alpha) ** len(unseen)
        if miss > 0:
            yield rate * miss, _from_line(rest, (S2,) + idle)


def build_generator(params: SystemParams, qmax: int):
    """States and the sparse generator of the chain truncated at ``qmax`` per queue.

    Transitions leading to a queue longer than ``qmax`` are dropped.
    """
    if params.n > MAX_SERVERS or qmax > MAX_QMAX:
        raise ValueError(
            f"state space guard: need n <= {MAX_SERVERS} and qmax <= {MAX_QMAX}, "
            f"got n={params.n}, qmax={qmax}"
        )
    if qmax < 1:
        raise ValueError("qmax must be at least 1")
    alpha = derive(params).alpha
    states = enumerate_states(params, qmax)
    index = {s: j for j, s in enumerate(states)}
    rows, cols, vals = [], [], []
    diag = np.zeros(len(states))
    for j, s in enumerate(states):
        out: dict[int, float] = {}
        for rate, t in _transitions(params, s, alpha):
            if rate <= 0 or t == s:
                continue
            if any(q > qmax for q in t.queues):
                continue
            dest = index.get(t)
            if dest is None:
                raise RuntimeError(f"transition left the enumerated state space: {s} -> {t}")
            out[dest] = out.get(dest, 0.0) + rate
        for dest, rate in out.items():
            rows.append(j)
            cols.append(dest)
            vals.append(rate)
        diag[j] = -math.fsum(out.values())
    rows.extend(range(len(states)))
    cols.extend(range(len(states)))
    vals.extend(diag)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    return states, Q


def stationary_vector(Q) -> np.ndarray:
    """Solve pi Q = 0, sum(pi) = 1."""
    m = Q.shape[0]
    A = Q.T.tolil()
    A[m - 1, :] = np.ones(m)
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    pi = spsolve(A.tocsc(), rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class CtmcMarginals:
    mean_i1: float
    var_i1: float
    mean_i2: float
    var_i2: float
    k_pmf: np.ndarray
    p_i1_zero: float
    truncation_mass: float
    states: list
    pi: np.ndarray

    def summary(self) -> dict:
        return {
            "mean_i1": self.mean_i1,
            "var_i1": self.var_i1,
            "mean_i2": self.mean_i2,
            "var_i2": self.var_i2,
            "k_pmf": [float(x) for x in self.k_pmf],
            "p_i1_zero": self.p_i1_zero,
            "truncation_mass": self.truncation_mass,
        }


def ctmc_oracle(params: SystemParams, qmax: int = 40) -> CtmcMarginals:
    states, Q = build_generator(params, qmax)
    pi = stationary_vector(Q)
    i1 = np.array([s.i1 for s in states])
    i2 = np.array([s.i2 for s in states])
    k = np.array([s.k for s in states])
    at_cap = np.array([any(q == qmax for q in s.queues) for s in states])
    e1, e2 = float(pi @ i1), float(pi @ i2)
    return CtmcMarginals(
        mean_i1=e1,
        var_i1=float(pi @ (i1 - e1) ** 2),
        mean_i2=e2,
        var_i2=float(pi @ (i2 - e2) ** 2),
        k_pmf=np.bincount(k, weights=pi, minlength=params.n2 + 1),
        p_i1_zero=float(pi[i1 == 0].sum()),
        truncation_mass=float(pi[at_cap].sum()),
        states=states,
        pi=pi,
    )
