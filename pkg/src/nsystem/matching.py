"""FCFS infinite bipartite matching for the N-graph.

Customers (c1 w.p. alpha) are matched one at a time against an i.i.d.
server sequence (s1 w.p. beta). c1 takes the first remaining server, c2
takes the first remaining s1. K is the number of s2 servers ahead of the
first s1 in what remains.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

S1, S2 = 1, 2


class MatchState:
    """Window of unmatched servers, replenished only when it holds no s1."""

    def __init__(self, beta: float, rng: np.random.Generator):
        self.beta = beta
        self.rng = rng
        self.window: deque[int] = deque()
        self.k_current = 0
        self._fill()

    def _fill(self):
        while S1 not in self.window:
            s = S1 if self.rng.random() < self.beta else S2
            self.window.append(s)
            if s == S2 and self.k_current == len(self.window) - 1:
                self.k_current += 1

    def leading_s2(self) -> int:
        k = 0
        for s in self.window:
            if s != S2:
                break
            k += 1
        return k

    def match(self, customer: int) -> int:
        """Match one customer (1 or 2); returns the type of server used."""
        if customer == 1:
            s = self.window.popleft()
            if s == S2:
                self.k_current -= 1
            else:
                self.k_current = self.leading_s2()
        else:
            del self.window[self.k_current]
            s = S1
            self.k_current = self.leading_s2()
        self._fill()
        return s


@dataclass
class MatchResult:
    alpha: float
    beta: float
    steps: int
    pmf: np.ndarray
    trace: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "steps": self.steps,
                "k_pmf": [float(x) for x in self.pmf]}

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_trace(self, path: str | Path):
        if self.trace is None:
            raise ValueError("run with keep_trace=True to record K per step")
        with open(path, "w") as fh:
            fh.write("step,k\n")
            for j, k in enumerate(self.trace):
                fh.write(f"{j},{k}\n")


def match_run(alpha: float, beta: float, steps: int, seed: int | None = None,
              keep_trace: bool = False) -> MatchResult:
    """Empirical law of K recorded after every match."""
    if not (0 < alpha <= 1 and 0 < beta <= 1):
        raise ValueError("alpha and beta must lie in (0, 1]")
    if alpha + beta <= 1:
        raise ValueError("alpha + beta <= 1: the matching chain is transient")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = np.random.default_rng(seed)
    state = MatchState(beta, rng)
    customers = np.where(rng.random(steps) < alpha, 1, 2)
    trace = np.empty(steps, dtype=np.int64)
    for j, c in enumerate(customers):
        state.match(int(c))
        trace[j] = state.k_current
    pmf = np.bincount(trace) / steps
    return MatchResult(alpha, beta, steps, pmf, trace if keep_trace else None)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    m = max(len(p), len(q))
    p = np.pad(np.asarray(p, float), (0, m - len(p)))
    q = np.pad(np.asarray(q, float), (0, m - len(q)))
    return 0.5 * float(np.abs(p - q).sum())
