"""Discrete-event simulation of the FCFS-ALIS N-system.

Servers pick the longest-waiting compatible customer; arrivals go to the
longest-idle compatible server. Idle servers and waiting customers are
kept in per-type FIFO rings keyed by sequence numbers, so every dispatch
decision is O(1). K counts idle s2 servers that have been idle longer than
every idle s1 server; with no idle s1 it extends into the busy s2 servers
serving customers newer than any customer held by an s1 server.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .model import SystemParams, derive

# event codes in traces
ARRIVAL_C1, ARRIVAL_C2, DONE_S1, DONE_S2 = 0, 1, 2, 3

# ring slots in ``meta``: (head, size) pairs
_IDLE1, _IDLE2, _WAIT1, _WAIT2 = 0, 2, 4, 6


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 1e4
    warmup_fraction: float = 0.2
    seed: int = 0
    replications: int = 1
    batch_count: int = 20
    workers: int = 1
    queue_capacity: int = 1 << 20
    allow_unstable: bool = False
    check_invariants: bool = False
    trace_limit: int = 0

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 <= self.warmup_fraction <= 0.5:
            raise ValueError("warmup_fraction must lie in [0, 0.5]")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.batch_count < 10:
            raise ValueError("batch_count must be at least 10")


@numba.njit(cache=True)
def _push(buf, meta, slot, value):
    cap = buf.shape[0]
    if meta[slot + 1] >= cap:
        return False
    buf[(meta[slot] + meta[slot + 1]) % cap] = value
    meta[slot + 1] += 1
    return True


@numba.njit(cache=True)
def _pop(buf, meta, slot):
    value = buf[meta[slot]]
    meta[slot] = (meta[slot] + 1) % buf.shape[0]
    meta[slot + 1] -= 1
    return value


@numba.njit(cache=True)
def _at(buf, meta, slot, j):
    return buf[(meta[slot] + j) % buf.shape[0]]


@numba.njit(cache=True)
def _current_k(n1, idle1, idle2, meta, idle_seq, busy1, nb1, busy2, nb2, cust_seq):
    ni2 = meta[_IDLE2 + 1]
    if meta[_IDLE1 + 1] > 0:
        oldest_s1 = idle_seq[_at(idle1, meta, _IDLE1, 0)]
        # idle2 is sorted by idle_seq; count entries idle longer than oldest_s1
        lo, hi = 0, ni2
        while lo < hi:
            mid = (lo + hi) // 2
            if idle_seq[_at(idle2, meta, _IDLE2, mid)] < oldest_s1:
                lo = mid + 1
            else:
                hi = mid
        return lo
    newest = -1
    for j in range(nb1):
        if cust_seq[busy1[j]] > newest:
            newest = cust_seq[busy1[j]]
    k = ni2
    for j in range(nb2):
        if cust_seq[busy2[j]] > newest:
            k += 1
    return k


@numba.njit(cache=True, nogil=True)
def _run(n1, n2, lam1, lam2, mu1, mu2, horizon, warm, batch_count, seed,
         check, trace_limit, queue_capacity):
    np.random.seed(seed)
    n = n1 + n2
    blen = (horizon - warm) / batch_count

    idle1 = np.empty(n1, np.int64)
    idle2 = np.empty(n2, np.int64)
    wait1 = np.empty(queue_capacity, np.int64)
    wait2 = np.empty(queue_capacity, np.int64)
    meta = np.zeros(8, np.int64)
    idle_seq = np.empty(n, np.int64)
    cust_seq = np.full(n, -1, np.int64)
    ctype = np.zeros(n, np.int64)
    busy1 = np.empty(n1, np.int64)
    busy2 = np.empty(n2, np.int64)
    bpos = np.empty(n, np.int64)
    nb1 = 0
    nb2 = 0
    for s in range(n):
        idle_seq[s] = s
    for s in range(n1):
        _push(idle1, meta, _IDLE1, s)
    for s in range(n1, n):
        _push(idle2, meta, _IDLE2, s)
    idle_counter = n
    arrival_counter = 0

    # per-batch integrals: I1, I2, I1^2, I2^2, I1*I2
    area = np.zeros((batch_count, 5))
    k_area = np.zeros((batch_count, n2 + 1))
    served = np.zeros((batch_count, 2, 2), np.int64)  # [batch, customer type, server type]
    trace_t = np.empty(trace_limit)
    trace_v = np.empty((trace_limit, 4), np.int64)
    ntrace = 0
    violations = 0
    events = 0
    overflow = False

    t = 0.0
    while True:
        i1 = meta[_IDLE1 + 1]
        i2 = meta[_IDLE2 + 1]
        rate = lam1 + lam2 + nb1 * mu1 + nb2 * mu2
        t_next = t - math.log(1.0 - np.random.random()) / rate
        if t_next > horizon:
            t_next = horizon
        k = _current_k(n1, idle1, idle2, meta, idle_seq, busy1, nb1, busy2, nb2, cust_seq)
        if k > n2:
            k = n2
        cur = t if t > warm else warm
        while cur < t_next:
            b = int((cur - warm) / blen)
            if b >= batch_count:
                b = batch_count - 1
            seg_end = warm + (b + 1) * blen
            if seg_end <= cur and b < batch_count - 1:
                b += 1
                seg_end = warm + (b + 1) * blen
            if seg_end > t_next or b == batch_count - 1:
                seg_end = t_next
            dt = seg_end - cur
            area[b, 0] += dt * i1
            area[b, 1] += dt * i2
            area[b, 2] += dt * i1 * i1
            area[b, 3] += dt * i2 * i2
            area[b, 4] += dt * i1 * i2
            k_area[b, k] += dt
            cur = seg_end
        if t_next >= horizon:
            break
        t = t_next

        u = np.random.random() * rate
        if u < lam1:
            code = ARRIVAL_C1
            seq = arrival_counter
            arrival_counter += 1
            take = -1
            if i1 > 0 and i2 > 0:
                a = _at(idle1, meta, _IDLE1, 0)
                c = _at(idle2, meta, _IDLE2, 0)
                take = _IDLE1 if idle_seq[a] < idle_seq[c] else _IDLE2
            elif i1 > 0:
                take = _IDLE1
            elif i2 > 0:
                take = _IDLE2
            if take == _IDLE1:
                s = _pop(idle1, meta, _IDLE1)
                busy1[nb1] = s
                bpos[s] = nb1
                nb1 += 1
            elif take == _IDLE2:
                s = _pop(idle2, meta, _IDLE2)
                busy2[nb2] = s
                bpos[s] = nb2
                nb2 += 1
            else:
                s = -1
                if not _push(wait1, meta, _WAIT1, seq):
                    overflow = True
                    break
            if s >= 0:
                cust_seq[s] = seq
                ctype[s] = 0
        elif u < lam1 + lam2:
            code = ARRIVAL_C2
            seq = arrival_counter
            arrival_counter += 1
            if i1 > 0:
                s = _pop(idle1, meta, _IDLE1)
                busy1[nb1] = s
                bpos[s] = nb1
                nb1 += 1
                cust_seq[s] = seq
                ctype[s] = 1
            elif not _push(wait2, meta, _WAIT2, seq):
                overflow = True
                break
        else:
            u -= lam1 + lam2
            if u < nb1 * mu1:
                code = DONE_S1
                j = int(u / mu1)
                if j >= nb1:
                    j = nb1 - 1
                s = busy1[j]
                stype = 0
            else:
                code = DONE_S2
                j = int((u - nb1 * mu1) / mu2)
                if j >= nb2:
                    j = nb2 - 1
                s = busy2[j]
                stype = 1
            if t >= warm:
                b = int((t - warm) / blen)
                if b >= batch_count:
                    b = batch_count - 1
                served[b, ctype[s], stype] += 1
            # next customer: oldest compatible waiting one
            nxt = -1
            w1 = meta[_WAIT1 + 1]
            w2 = meta[_WAIT2 + 1]
            if stype == 0:
                if w1 > 0 and (w2 == 0 or _at(wait1, meta, _WAIT1, 0) < _at(wait2, meta, _WAIT2, 0)):
                    nxt = 0
                elif w2 > 0:
                    nxt = 1
            elif w1 > 0:
                nxt = 0
            if nxt == 0:
                cust_seq[s] = _pop(wait1, meta, _WAIT1)
                ctype[s] = 0
            elif nxt == 1:
                cust_seq[s] = _pop(wait2, meta, _WAIT2)
                ctype[s] = 1
            else:
                # leave the busy set (swap-remove) and join the idle ring
                if stype == 0:
                    last = busy1[nb1 - 1]
                    busy1[j] = last
                    bpos[last] = j
                    nb1 -= 1
                    _push(idle1, meta, _IDLE1, s)
                else:
                    last = busy2[nb2 - 1]
                    busy2[j] = last
                    bpos[last] = j
                    nb2 -= 1
                    _push(idle2, meta, _IDLE2, s)
                idle_seq[s] = idle_counter
                idle_counter += 1
                cust_seq[s] = -1
        events += 1

        if check:
            ni1 = meta[_IDLE1 + 1]
            ni2 = meta[_IDLE2 + 1]
            if ni1 > 0 and meta[_WAIT1 + 1] + meta[_WAIT2 + 1] > 0:
                violations += 1
            if ni1 + ni2 > 0 and meta[_WAIT1 + 1] > 0:
                violations += 1
            if ni1 + nb1 != n1 or ni2 + nb2 != n2:
                violations += 1
        if ntrace < trace_limit:
            trace_t[ntrace] = t
            trace_v[ntrace, 0] = code
            trace_v[ntrace, 1] = meta[_IDLE1 + 1]
            trace_v[ntrace, 2] = meta[_IDLE2 + 1]
            trace_v[ntrace, 3] = _current_k(n1, idle1, idle2, meta, idle_seq, busy1, nb1, busy2, nb2, cust_seq)
            ntrace += 1

    return area, k_area, served, events, violations, overflow, trace_t[:ntrace], trace_v[:ntrace]


@dataclass
class Replication:
    area: np.ndarray
    k_area: np.ndarray
    served: np.ndarray
    events: int
    violations: int
    trace_t: np.ndarray
    trace_v: np.ndarray


@dataclass
class SimStats:
    mean_i1: float
    mean_i2: float
    var_i1: float
    var_i2: float
    cov: float
    k_pmf_hat: np.ndarray
    r_hat: np.ndarray
    beta_hat: float
    throughput: float
    stderr: dict
    ci_halfwidth: dict
    n_batches: int
    events: int
    violations: int = 0
    unstable: bool = False
    replications: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        def plain(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            return v

        keys = ["mean_i1", "mean_i2", "var_i1", "var_i2", "cov", "k_pmf_hat", "r_hat",
                "beta_hat", "throughput", "stderr", "ci_halfwidth", "n_batches", "events",
                "violations", "unstable"]
        return {k: plain(getattr(self, k)) for k in keys}

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_trace(self, path: str | Path):
        """Event trace of the first replication (needs ``trace_limit`` > 0)."""
        rep = self.replications[0]
        with open(path, "w") as fh:
            fh.write("clock,event,i1,i2,k\n")
            names = ("arrival_c1", "arrival_c2", "done_s1", "done_s2")
            for t, (code, i1, i2, k) in zip(rep.trace_t, rep.trace_v):
                fh.write(f"{float(t)!r},{names[code]},{int(i1)},{int(i2)},{int(k)}\n")


def replication_seeds(seed: int, replications: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(replications)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def _one(params: SystemParams, config: SimConfig, seed: int) -> Replication:
    p = params
    warm = config.warmup_fraction * config.horizon
    area, k_area, served, events, violations, overflow, tt, tv = _run(
        p.n1, p.n2, float(p.lambda1), float(p.lambda2), float(p.mu1), float(p.mu2),
        float(config.horizon), float(warm), config.batch_count, seed,
        config.check_invariants, config.trace_limit, config.queue_capacity,
    )
    if overflow:
        raise RuntimeError(f"waiting room overflow ({config.queue_capacity} customers); system unstable?")
    return Replication(area, k_area, served, int(events), int(violations), tt, tv)


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.shape[0]))


def simulate(params: SystemParams, config: SimConfig = SimConfig(), z: float = 1.96) -> SimStats:
    d = derive(params)
    unstable = not (d.rho < 1 and d.delta < 1)
    if unstable and not config.allow_unstable:
        raise ValueError(f"unstable system (rho={d.rho:.4g}, delta={d.delta:.4g}); set allow_unstable")
    seeds = replication_seeds(config.seed, config.replications)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            reps = list(pool.map(lambda s: _one(params, config, s), seeds))
    else:
        reps = [_one(params, config, s) for s in seeds]

    blen = (1 - config.warmup_fraction) * config.horizon / config.batch_count
    area = np.concatenate([r.area for r in reps]) / blen
    k_area = np.concatenate([r.k_area for r in reps]) / blen
    served = np.concatenate([r.served for r in reps]).astype(float)

    m1, m2, s11, s22, s12 = area.mean(axis=0)
    var1, var2, cov = s11 - m1**2, s22 - m2**2, s12 - m1 * m2
    k_pmf = k_area.mean(axis=0)
    totals = served.sum(axis=(1, 2))
    total = served.sum()
    # no completions at all (tiny horizon or near-empty system)
    r_hat = served.sum(axis=0) / total if total > 0 else np.zeros((2, 2))
    beta_hat = float(r_hat[:, 0].sum()) if total > 0 else math.nan
    per_batch_r = served / np.maximum(totals, 1)[:, None, None]

    stderr = {
        "mean_i1": _se(area[:, 0]),
        "mean_i2": _se(area[:, 1]),
        # linearized: d(E[X^2] - E[X]^2) = dE[X^2] - 2 E[X] dE[X]
        "var_i1": _se(area[:, 2] - 2 * m1 * area[:, 0]),
        "var_i2": _se(area[:, 3] - 2 * m2 * area[:, 1]),
        "cov": _se(area[:, 4] - m2 * area[:, 0] - m1 * area[:, 1]),
        "k_pmf_hat": np.std(k_area, axis=0, ddof=1) / math.sqrt(k_area.shape[0]),
        "r_hat": np.std(per_batch_r, axis=0, ddof=1) / math.sqrt(k_area.shape[0]),
        "beta_hat": _se(per_batch_r[:, :, 0].sum(axis=1)),
        "throughput": _se(totals / blen),
    }
    return SimStats(
        mean_i1=float(m1),
        mean_i2=float(m2),
        var_i1=float(var1),
        var_i2=float(var2),
        cov=float(cov),
        k_pmf_hat=k_pmf,
        r_hat=r_hat,
        beta_hat=beta_hat,
        throughput=float(totals.sum() / (blen * len(totals))),
        stderr=stderr,
        ci_halfwidth={k: z * v for k, v in stderr.items()},
        n_batches=int(area.shape[0]),
        events=sum(r.events for r in reps),
        violations=sum(r.violations for r in reps),
        unstable=unstable,
        replications=reps,
    )
