import json

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from nsystem.fluid import k_geometric
from nsystem.matching import MatchState, match_run, total_variation


@pytest.mark.parametrize("alpha,beta", [(0.8, 0.5), (0.7, 0.6), (0.9, 0.3)])
def test_geometric_limit(alpha, beta):
    res = match_run(alpha, beta, 1_000_000, seed=17)
    assert total_variation(res.pmf, k_geometric(alpha, beta)) <= 0.01
    if (alpha, beta) == (0.8, 0.5):
        assert res.pmf[0] == pytest.approx(0.375, abs=0.005)


def test_all_flexible_servers():
    res = match_run(0.6, 1.0, 10_000, seed=1, keep_trace=True)
    assert np.all(res.trace == 0)


def test_all_c1_customers():
    beta = 0.4
    res = match_run(1.0, beta, 200_000, seed=2)
    k = np.arange(res.pmf.size)
    assert total_variation(res.pmf, beta * (1 - beta) ** k) <= 0.01


def test_window_invariant():
    rng = np.random.default_rng(5)
    st = MatchState(0.45, rng)
    for c in rng.choice([1, 2], size=20_000, p=[0.75, 0.25]):
        st.match(int(c))
        assert st.k_current == st.leading_s2()
        assert 1 in st.window


def test_c2_never_takes_s2():
    rng = np.random.default_rng(8)
    st = MatchState(0.3, rng)
    for c in rng.choice([1, 2], size=5000, p=[0.8, 0.2]):
        s = st.match(int(c))
        if c == 2:
            assert s == 1


def test_markov_property():
    """Given K_t, the next value should not depend on K_{t-1}."""
    res = match_run(0.8, 0.5, 400_000, seed=23, keep_trace=True)
    t = res.trace
    prev, cur, nxt = t[:-2], t[1:-1], t[2:]
    for k in range(3):
        sel = cur == k
        p = np.minimum(prev[sel], 4)
        q = np.minimum(nxt[sel], 4)
        table = np.zeros((5, 5))
        np.add.at(table, (p, q), 1)
        table = table[table.sum(axis=1) > 50][:, table.sum(axis=0) > 50]
        if min(table.shape) < 2:
            continue
        assert chi2_contingency(table).pvalue > 1e-3


def test_invalid_regime():
    with pytest.raises(ValueError, match="transient"):
        match_run(0.5, 0.5, 10)
    with pytest.raises(ValueError):
        match_run(0.8, 0.5, 0)


def test_exports(tmp_path):
    res = match_run(0.8, 0.5, 1000, seed=3, keep_trace=True)
    doc = json.loads(res.to_json(tmp_path / "m.json"))
    assert doc["steps"] == 1000
    assert sum(doc["k_pmf"]) == pytest.approx(1.0)
    res.write_trace(tmp_path / "k.csv")
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "step,k" and len(lines) == 1001
    with pytest.raises(ValueError):
        match_run(0.8, 0.5, 10, seed=3).write_trace(tmp_path / "x.csv")


def test_seeded_runs_repeat():
    a = match_run(0.8, 0.5, 5000, seed=4)
    b = match_run(0.8, 0.5, 5000, seed=4)
    assert np.array_equal(a.pmf, b.pmf)
