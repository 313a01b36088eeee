import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldpc_workbench.channels import AWGN, BSC
from ldpc_workbench.codes import RegularEnsemble, sample_regular
from ldpc_workbench.decoders import bp_decode
from ldpc_workbench.satisfiability import (CnfFormula, Factor, FactorGraph, brute_force_marginals, decay_probe,
                                           example_formula, format_dimacs, generic_bp, parity_factor,
                                           parse_dimacs, random_ksat, read_dimacs, root_influence,
                                           sample_tree_formula, to_factor_graph, write_dimacs)


def formula(n, *clauses):
    """Build from DIMACS-style signed integers."""
    return CnfFormula(n, [tuple((abs(t) - 1, t < 0) for t in c) for c in clauses])


def enumerate_marginals(f):
    sols = [x for x in itertools.product([0, 1], repeat=f.n_vars) if f.satisfied(x)]
    return np.mean(sols, axis=0), len(sols)


def test_example_formula_marginals():
    f = example_formula()
    exact, count = brute_force_marginals(f)
    ref, ref_count = enumerate_marginals(f)
    assert count == ref_count == 11
    assert np.allclose(exact, ref)
    assert np.allclose(exact, [10 / 11, 4 / 11, 5 / 11, 5 / 11, 6 / 11])


def test_single_clause():
    f = formula(2, [1, 2])
    exact, count = brute_force_marginals(f)
    assert count == 3 and exact[0] == pytest.approx(2 / 3)
    bp = generic_bp(to_factor_graph(f), 5)
    assert bp.marginals[0, 1] == pytest.approx(2 / 3, abs=1e-12)


def test_empty_and_unsatisfiable_formulas():
    exact, count = brute_force_marginals(CnfFormula(3, []))
    assert count == 8 and np.allclose(exact, 0.5)
    with pytest.raises(ValueError):
        brute_force_marginals(formula(1, [1], [-1]))


def test_bp_flags_contradiction():
    res = generic_bp(to_factor_graph(formula(1, [1], [-1])), 3)
    assert res.contradiction


def test_cnf_validation():
    with pytest.raises(ValueError):
        formula(2, [1, -1])
    with pytest.raises(ValueError):
        formula(2, [3])
    with pytest.raises(ValueError):
        Factor((0, 1), np.ones(2))
    with pytest.raises(ValueError):
        FactorGraph(1, [Factor((0, 1), np.ones((2, 2)))])


@pytest.mark.parametrize("seed", range(10))
def test_generic_bp_exact_on_tree_formulas(seed):
    rng = np.random.default_rng(seed)
    tree = sample_tree_formula(3, 0.3, 2 + seed % 2, rng)
    while tree.formula.n_vars > 20:
        tree = sample_tree_formula(3, 0.3, 2 + seed % 2, rng)
    f = tree.formula
    exact, _ = brute_force_marginals(f)
    bp = generic_bp(to_factor_graph(f), iterations=2 * tree.t + 2)
    assert np.allclose(bp.marginals.sum(axis=1), 1.0)
    assert np.max(np.abs(bp.marginals[:, 1] - exact)) < 1e-10


def ldpc_factor_graph(graph, llrs):
    factors = []
    for a in range(graph.m):
        factors.append(parity_factor(tuple(int(i) for i in graph.chk_neighbors(a))))
    for i in range(graph.n):
        factors.append(Factor((i,), np.array([math.exp(llrs[i]), math.exp(-llrs[i])])))
    return FactorGraph(graph.n, factors)


def half_llr(msg):
    return 0.5 * math.log(msg[0] / msg[1])


@pytest.mark.parametrize("seed", range(20))
def test_generic_bp_matches_ldpc_decoder_messages(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.choice([12, 18, 24]))
    g = sample_regular(RegularEnsemble(3, 6, n), rng)
    ch = BSC(0.1) if seed % 2 else AWGN(0.8)
    llrs = ch.llr(ch.sample(np.zeros(n, dtype=np.int64), rng))
    iters = 6
    dec = bp_decode(g, llrs, max_iter=iters, early_stop=False, record_messages=True, rng=rng)
    gen = generic_bp(ldpc_factor_graph(g, llrs), iterations=iters + 1, record=True)
    worst = 0.0
    for t in range(1, iters + 1):
        h, u = dec.messages[t - 1]
        nu = gen.history[t - 1][0]
        nu_hat = gen.history[t][1]
        for e in range(g.n_edges):
            i, a = int(g.edge_var[e]), int(g.edge_chk[e])
            worst = max(worst, abs(half_llr(nu[(i, a)]) - h[e]), abs(half_llr(nu_hat[(a, i)]) - u[e]))
    assert worst < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 12), st.integers(0, 2**32 - 1))
def test_dimacs_roundtrip(n, m, seed):
    rng = np.random.default_rng(seed)
    k = min(n, 3)
    m = min(m, math.comb(n, k) * 2 ** k)
    f = random_ksat(n, m / n, k, rng)
    assert parse_dimacs(format_dimacs(f)).clauses == f.clauses


def test_dimacs_file_and_comments(tmp_path):
    text = "c a comment\np cnf 3 2\n1 -2 0\n2 3 0\n"
    f = parse_dimacs(text)
    assert f.n_vars == 3 and f.clauses == [((0, False), (1, True)), ((1, False), (2, False))]
    write_dimacs(f, tmp_path / "f.cnf")
    assert read_dimacs(tmp_path / "f.cnf").clauses == f.clauses
    for bad in ("1 2 0\n", "p cnf 2 1\n1 5 0\n", "p cnf 2 2\n1 2 0\n"):
        with pytest.raises(ValueError):
            parse_dimacs(bad)


def test_random_ksat_properties():
    rng = np.random.default_rng(0)
    f = random_ksat(2, 2.0, 2, rng)
    assert all(sorted(v for v, _ in c) == [0, 1] for c in f.clauses)
    assert f.repeated == 4 - len(set(f.clauses))
    big = random_ksat(200, 250.0, 3, rng)
    signs = np.array([neg for c in big.clauses for _, neg in c])
    assert signs.size == 150_000 and all(len(c) == 3 for c in big.clauses)
    assert signs.mean() == pytest.approx(0.5, abs=4 * 0.5 / math.sqrt(signs.size))
    distinct = random_ksat(3, 2.0, 2, rng, allow_repeats=False)
    assert len(set(distinct.clauses)) == 6 and distinct.repeated == 0
    with pytest.raises(ValueError):
        random_ksat(2, 5.0, 2, rng)


def brute_root_ratio(tree, boundary_values):
    """Half log-ratio of the root by enumeration with the boundary clamped."""
    f = tree.formula
    counts = np.zeros(2)
    for x in itertools.product([0, 1], repeat=f.n_vars):
        if all(x[v] == b for v, b in zip(tree.boundary, boundary_values)) and f.satisfied(x):
            counts[x[0]] += 1
    if counts.sum() == 0:
        return math.nan
    with np.errstate(divide="ignore"):
        return 0.5 * (np.log(counts[1]) - np.log(counts[0]))


@pytest.mark.parametrize("seed", range(6))
def test_decay_probe_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    tree = sample_tree_formula(3, 0.3, 2, rng)
    while tree.formula.n_vars > 16 or tree.boundary.size == 0:
        tree = sample_tree_formula(3, 0.3, 2, rng)
    vals = [brute_root_ratio(tree, b) for b in itertools.product([0, 1], repeat=tree.boundary.size)]
    vals = [v for v in vals if not math.isnan(v)]
    h_max, h_min = decay_probe(tree)
    assert h_max == pytest.approx(max(vals), abs=1e-12)
    assert h_min == pytest.approx(min(vals), abs=1e-12)


def test_decay_probe_trivial_cases():
    rng = np.random.default_rng(1)
    assert decay_probe(sample_tree_formula(3, 0.3, 0, rng)) == (0.0, 0.0)
    assert decay_probe(sample_tree_formula(3, 1e-9, 3, rng)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        decay_probe(sample_tree_formula(3, 0.3, 1, rng), method="guess")


def test_sampled_probe_is_inside_exhaustive_range():
    rng = np.random.default_rng(4)
    for _ in range(20):
        tree = sample_tree_formula(3, 0.4, 2, rng)
        hi, lo = decay_probe(tree)
        s_hi, s_lo = decay_probe(tree, method="sampled", samples=64, rng=rng)
        assert lo - 1e-12 <= s_lo <= s_hi <= hi + 1e-12


def test_influence_decays_with_depth():
    rng = np.random.default_rng(7)
    means = []
    for t in (1, 2, 3):
        vals = [root_influence(*decay_probe(sample_tree_formula(3, 0.2, t, rng), method="auto", rng=rng))
                for _ in range(200)]
        assert min(vals) >= 0.0
        means.append(np.mean(vals))
    assert means[0] > means[1] > means[2]
