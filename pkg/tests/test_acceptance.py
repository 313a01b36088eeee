"""Acceptance checks, one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
lines interleaved with pytest's own output; they are printed either way).
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy import stats

from _util import random_tree_graph
from ldpc_workbench.channels import AWGN, BEC, BSC, ZC, capacity, uniform_input_rate, zc_mutual_information, \
    zc_optimal_input
from ldpc_workbench.codes import RegularEnsemble, draw_sockets, sample_regular
from ldpc_workbench.decoders import bp_decode, map_decode_bruteforce
from ldpc_workbench.density_evolution import DeSettings, bp_threshold
from ldpc_workbench.harness import ErrorRateRecord, ExperimentConfig, run_experiment, scaling_compare
from ldpc_workbench.markov_channels import (MarkovChannelSpec, entropy_rates, example_three_state,
                                           forward_state)
from ldpc_workbench.messages import binary_entropy
from ldpc_workbench.rs_free_energy import RsSettings, map_threshold
from ldpc_workbench.satisfiability import Factor, FactorGraph, generic_bp, parity_factor
from ldpc_workbench.weight_enumerator import expected_weight_enumerator, gilbert_varshamov, omega_star

pytestmark = pytest.mark.slow

ENSEMBLES = [(3, 4), (3, 5), (3, 6), (4, 6)]
BP_TABLE = {(3, 4): 0.1669, (3, 5): 0.1138, (3, 6): 0.0840, (4, 6): 0.1169}
MAP_TABLE = {(3, 4): 0.2101, (3, 5): 0.1384, (3, 6): 0.1010, (4, 6): 0.1726}

_bp_cache: dict = {}


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
    assert ok, detail


def bp_thresholds():
    for lk in ENSEMBLES:
        if lk not in _bp_cache:
            start = time.perf_counter()
            res = bp_threshold(*lk, family="bsc", tol=1e-3, settings=DeSettings(pop_size=100_000), seed=0)
            _bp_cache[lk] = (res, time.perf_counter() - start)
    return _bp_cache


# ----------------------------------------------------------------------
def test_criterion_1_bp_thresholds(capsys):
    cache = bp_thresholds()
    parts, ok = [], True
    for lk in ENSEMBLES:
        res, secs = cache[lk]
        good = abs(res.estimate - BP_TABLE[lk]) <= 0.002 and secs <= 600
        ok &= good
        parts.append(f"{lk}: {res.estimate:.4f} vs {BP_TABLE[lk]:.4f} ({secs:.0f}s)")
    report(capsys, 1, ok, "; ".join(parts))


def test_criterion_2_map_thresholds(capsys):
    cache = bp_thresholds()
    parts, ok = [], True
    for lk in ENSEMBLES:
        res = map_threshold(*lk, family="bsc", tol=1e-3, settings=RsSettings(), seed=0)
        p_d = cache[lk][0].estimate
        good = abs(res.estimate - MAP_TABLE[lk]) <= 0.003 and p_d <= res.estimate
        ok &= good
        parts.append(f"{lk}: p_c {res.estimate:.4f} vs {MAP_TABLE[lk]:.4f}, p_d {p_d:.4f}")
    report(capsys, 2, ok, "; ".join(parts))


def sampled_enumerator(l, k, n, graphs, rng):
    """Average number of codewords of each weight over sampled configuration-model graphs."""
    ens = RegularEnsemble(l, k, n)
    words = np.array(list(itertools.product([0, 1], repeat=n)))
    weights = words.sum(axis=1)
    counts = np.zeros((graphs, n + 1))
    for g in range(graphs):
        var, chk = draw_sockets(ens, rng)
        H = np.zeros((ens.m, n), dtype=np.int64)
        np.add.at(H, (chk, var), 1)
        ok = ~((words @ (H % 2).T) % 2).any(axis=1)
        counts[g] = np.bincount(weights[ok], minlength=n + 1)
    return counts.mean(axis=0), counts.std(axis=0, ddof=1) / math.sqrt(graphs)


def test_criterion_3_weight_enumerator(capsys):
    w_star = omega_star(3, 6)
    ok = abs(w_star - 0.02) <= 0.005
    parts = [f"omega_star(3,6) = {w_star:.5f}"]
    rng = np.random.default_rng(2024)
    for l, k, n in [(2, 3, 3), (2, 4, 4)]:
        mean, se = sampled_enumerator(l, k, n, 10_000, rng)
        exact = np.array([float(expected_weight_enumerator(l, k, n, w)) for w in range(n + 1)])
        # a weight class that is constant over graphs has zero spread and must match exactly
        good = bool(np.all(np.abs(mean - exact) <= np.maximum(3 * se, 1e-12)))
        ok &= good
        z = np.max(np.abs(mean - exact) / np.where(se > 0, se, np.inf))
        parts.append(f"({l},{k},{n}) exact {np.round(exact, 4).tolist()} sampled {np.round(mean, 4).tolist()} "
                     f"max |z| {z:.2f}")
    report(capsys, 3, ok, "; ".join(parts))


def test_criterion_4_gilbert_elliott(capsys):
    start = time.perf_counter()
    spec = example_three_state()
    p = spec.stationary()
    eps = spec.average_crossover()
    rates = entropy_rates(spec, 1_000_000, 0)
    memoryless = 1 - float(binary_entropy(eps))
    secs = time.perf_counter() - start
    ok = (np.allclose(p, [0.4444, 0.4444, 0.1112], atol=1e-4) and abs(eps - 0.108889) <= 1e-6
          and abs(rates.information_rate - 0.583) <= 0.005 and abs(memoryless - 0.503444) <= 1e-4 and secs <= 60)
    report(capsys, 4, ok, f"p = {np.round(p, 5).tolist()}, eps_avg = {eps:.6f}, "
                          f"I(N=1e6) = {rates.information_rate:.4f}, 1-h2(eps_avg) = {memoryless:.6f}, {secs:.1f}s")


def test_criterion_5_bit_flipping(capsys):
    params = [0.015, 0.02, 0.0225, 0.025, 0.0275, 0.03, 0.035]
    cfg = ExperimentConfig(l=5, k=10, ns=[1000, 10_000], params=params, decoder="flip", trials=500,
                           min_block_errors=None, seed=0)
    recs = run_experiment(cfg)
    success = {}
    for r in recs:
        success.setdefault(r.n, {})[r.param] = 1 - r.pB
    ok = min(r.trials for r in recs) >= 500
    parts = []
    drops = {}
    for n, curve in success.items():
        # the half-success point has to fall inside the window
        ok &= curve[0.02] > 0.5 > curve[0.03]
        drops[n] = curve[0.02] - curve[0.03]
        parts.append(f"N={n}: success " + ", ".join(f"{p:g}:{curve[p]:.2f}" for p in params))
    ok &= drops[10_000] > drops[1000]
    parts.append(f"drop over [0.020, 0.030]: {drops[1000]:.2f} (1e3) < {drops[10_000]:.2f} (1e4)")
    report(capsys, 5, ok, "; ".join(parts))


def test_criterion_6_capacities(capsys):
    c_bsc = capacity(BSC(0.110028))
    d_gv = gilbert_varshamov(0.5)
    bec_exact = all(capacity(BEC(e)) == 1 - e for e in (0.0, 0.25, 0.5, 0.9, 1.0))
    ok = abs(c_bsc - 0.5) <= 1e-4 and abs(d_gv - 0.1100) <= 1e-3 and bec_exact
    report(capsys, 6, ok, f"C_BSC(0.110028) = {c_bsc:.7f}, delta_GV(1/2) = {d_gv:.7f}, BEC exact: {bec_exact}")


def _path_sum(spec, y, x):
    out = np.zeros(spec.n_states)
    for path in itertools.product(range(spec.n_states), repeat=len(y) + 1):
        w = spec.init[path[0]]
        for t in range(len(y)):
            e = spec.eps[path[t + 1]]
            w *= spec.transition[path[t + 1], path[t]] * 0.5 * (1 - e if y[t] == x[t] else e)
        out[path[-1]] += w
    return out


def test_criterion_7_oracle_equivalences(capsys):
    rng = np.random.default_rng(77)
    # (a) BP on trees equals exact posteriors
    tree_err = 0.0
    for _ in range(20):
        g = random_tree_graph(rng, 6)
        ch = AWGN(0.9)
        x = g.to_parity_check().sample_codeword(rng).astype(np.int64)
        y = ch.sample(x, rng)
        res = bp_decode(g, ch.llr(y), max_iter=2 * g.m + 2, early_stop=False, rng=rng)
        exact = map_decode_bruteforce(g, ch, y).marginals
        tree_err = max(tree_err, np.max(np.abs(1 / (1 + np.exp(2 * res.llr)) - exact)))
    # (b) generic BP with parity factors reproduces the decoder's messages
    msg_err = 0.0
    for _ in range(20):
        n = int(rng.choice([12, 18, 24]))
        g = sample_regular(RegularEnsemble(3, 6, n), rng)
        llrs = BSC(0.1).llr(BSC(0.1).sample(np.zeros(n, dtype=np.int64), rng))
        factors = [parity_factor(tuple(int(i) for i in g.chk_neighbors(a))) for a in range(g.m)]
        factors += [Factor((i,), np.exp([llrs[i], -llrs[i]])) for i in range(n)]
        gen = generic_bp(FactorGraph(n, factors), iterations=7, record=True)
        dec = bp_decode(g, llrs, max_iter=6, early_stop=False, record_messages=True, rng=rng)
        for t in range(1, 7):
            h, u = dec.messages[t - 1]
            nu, nu_hat = gen.history[t - 1][0], gen.history[t][1]
            for e in range(g.n_edges):
                i, a = int(g.edge_var[e]), int(g.edge_chk[e])
                msg_err = max(msg_err, abs(0.5 * math.log(nu[(i, a)][0] / nu[(i, a)][1]) - h[e]),
                              abs(0.5 * math.log(nu_hat[(a, i)][0] / nu_hat[(a, i)][1]) - u[e]))
    # (c) normalised forward recursion equals exhaustive summation
    fwd_err = 0.0
    for s, n in [(2, 12), (3, 8), (4, 6)]:
        P = rng.random((s, s)) + 0.05
        P /= P.sum(axis=0)
        init = rng.random(s)
        spec = MarkovChannelSpec(P, rng.uniform(0.01, 0.5, s), init / init.sum())
        x, y = rng.integers(0, 2, n), rng.integers(0, 2, n)
        exact = _path_sum(spec, y, x)
        fwd_err = max(fwd_err, np.max(np.abs(forward_state(spec, y, x).unnormalised() / exact - 1)))
    # (d) symbol MAP bit error is no larger than BP's, within three standard errors
    ch = BSC(0.08)
    diffs = []
    for _ in range(300):
        g = sample_regular(RegularEnsemble(3, 6, 24), rng)
        x = g.to_parity_check().sample_codeword(rng).astype(np.int64)
        y = ch.sample(x, rng)
        m = map_decode_bruteforce(g, ch, y)
        bits = m.symbol_bits.copy()
        bits[m.symbol_ties] = rng.integers(0, 2, int(m.symbol_ties.sum()))
        b = bp_decode(g, ch.llr(y), rng=rng)
        diffs.append((np.count_nonzero(b.bits != x) - np.count_nonzero(bits != x)) / 24)
    diffs = np.array(diffs)
    margin = diffs.mean() + 3 * diffs.std(ddof=1) / math.sqrt(diffs.size)
    ok = tree_err <= 1e-10 and msg_err <= 1e-12 and fwd_err <= 1e-9 and margin >= 0
    report(capsys, 7, ok, f"tree BP vs exact {tree_err:.1e}; generic vs decoder {msg_err:.1e}; "
                          f"forward vs paths {fwd_err:.1e} rel; P_b(BP) - P_b(MAP) = {diffs.mean():.4f}")


def test_criterion_8_z_channel(capsys):
    grid = np.linspace(0.001, 0.999, 999)
    ps = np.linspace(0.05, 0.95, 10)
    beats = all(zc_mutual_information(p, a) <= zc_mutual_information(p, zc_optimal_input(p)) + 1e-6
                for p in ps for a in grid)
    ratio = min(uniform_input_rate(ZC(p)) / capacity(ZC(p)) for p in np.linspace(0.05, 0.95, 19))
    cfg = ExperimentConfig(l=3, k=6, ns=[1000], params=[0.02, 0.05], channel="zc", codeword="random", trials=200,
                           min_block_errors=None, seed=8)
    recs = run_experiment(cfg)
    conc = min(r.type_concentrated for r in recs)
    ok = beats and ratio >= 0.92 and conc >= 0.99
    report(capsys, 8, ok, f"optimal input beats grid: {beats}; min I_uniform/C = {ratio:.4f}; "
                          f"type within 5/sqrt(N) for {conc:.3f} of codewords")


def test_criterion_9_scaling(capsys):
    alpha0, eps_d = 0.55, 0.084
    synth = []
    for n in (1024, 4096, 16384):
        for p in (0.074, 0.078, 0.082, 0.086, 0.090):
            pB = float(stats.norm.cdf(math.sqrt(n) * (p - eps_d) / alpha0))
            synth.append(ErrorRateRecord(n, p, pB / 10, 0.0, pB, 0.0, 1000, 1.0))
    fit = scaling_compare(synth, eps_d)
    ok_synth = abs(fit.alpha / alpha0 - 1) <= 0.02
    # simulated (3,6) records on grids that cover each blocklength's waterfall
    grids = {1024: [0.068, 0.072, 0.076, 0.080, 0.084], 4096: [0.075, 0.077, 0.079, 0.081, 0.083],
             16384: [0.079, 0.080, 0.081, 0.082, 0.083]}
    ns = list(grids)
    recs = []
    for i, n in enumerate(ns):
        cfg = ExperimentConfig(l=3, k=6, ns=[n], params=grids[n], trials=200, min_block_errors=None, seed=90 + i)
        recs += run_experiment(cfg)
    sim = scaling_compare(recs, eps_d)
    refined = scaling_compare(recs, eps_d, refine=True)
    used = [r for r in recs if 0 < r.pB < 1]
    per_n = {n: float(np.sqrt(np.mean([res ** 2 for r, res in zip(used, sim.residuals) if r.n == n])))
             for n in ns}
    shrinking = per_n[ns[-1]] < per_n[ns[0]]
    ok = ok_synth and sim.alpha > 0 and shrinking and refined.rms <= sim.rms
    report(capsys, 9, ok, f"synthetic alpha {fit.alpha:.4f} vs {alpha0}; simulated alpha {sim.alpha:.3f}, "
                          f"rms by N " + ", ".join(f"{n}:{v:.3f}" for n, v in per_n.items())
           + f"; refined rms {refined.rms:.3f} <= plain {sim.rms:.3f}")
