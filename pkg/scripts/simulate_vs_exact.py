"""Monte Carlo estimates against the exact moments, reported in standard errors."""

import argparse
from dataclasses import dataclass

from nsystem.exact import build_table, moments
from nsystem.model import symmetric_system
from nsystem.simulate import SimConfig, simulate


@dataclass(frozen=True)
class Experiment:
    alpha: float = 0.8
    horizon: float = 2e4
    replications: int = 4
    seed: int = 0


def run(exp: Experiment) -> dict:
    p = symmetric_system(exp.alpha)
    m = moments(build_table(p))
    s = simulate(p, SimConfig(horizon=exp.horizon, replications=exp.replications, seed=exp.seed))
    out = {}
    for name in ("mean_i1", "mean_i2", "var_i1", "var_i2"):
        est, ref, se = getattr(s, name), getattr(m, name), s.stderr[name]
        out[name] = (est, ref, (est - ref) / se)
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.8)
    ap.add_argument("--horizon", type=float, default=2e4)
    ap.add_argument("--replications", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    for name, (est, ref, z) in run(Experiment(a.alpha, a.horizon, a.replications, a.seed)).items():
        print(f"{name:8s} sim={est:10.4f} exact={ref:10.4f} z={z:+.2f}")
