import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _util import random_tree_graph
from ldpc_workbench.channels import AWGN, BEC, BSC, ERASURE
from ldpc_workbench.codes import RegularEnsemble, TannerGraph, example_hamming_graph, sample_regular
from ldpc_workbench.decoders import bit_flip_decode, bp_check_messages, bp_decode, map_decode_bruteforce
from ldpc_workbench.messages import check_update, check_update_reference


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-8, 8), min_size=2, max_size=8))
def test_check_update_matches_tanh_rule(h):
    h = np.array(h)
    assert np.allclose(check_update(h), check_update_reference(h), atol=1e-9)


def test_check_update_handles_infinities():
    assert check_update(np.array([np.inf, np.inf])) == np.inf
    assert check_update(np.array([np.inf, -np.inf])) == -np.inf
    assert check_update(np.array([np.inf, 0.0])) == 0.0
    assert check_update(np.array([2.0, np.inf])) == pytest.approx(2.0)


def test_extrinsic_messages_match_reference():
    rng = np.random.default_rng(0)
    g = sample_regular(RegularEnsemble(3, 6, 60), rng)
    h = rng.normal(0.5, 2.0, g.n_edges)
    u = bp_check_messages(g, h)
    for a in range(g.m):
        edges = g.chk_edges[g.chk_ptr[a]:g.chk_ptr[a + 1]]
        for e in edges:
            others = h[[f for f in edges if f != e]]
            assert u[e] == pytest.approx(float(check_update_reference(others)), abs=1e-10)


def exact_posteriors(graph, channel, y):
    res = map_decode_bruteforce(graph, channel, y)
    return res.marginals


@pytest.mark.parametrize("seed", range(8))
def test_bp_is_exact_on_trees(seed):
    rng = np.random.default_rng(seed)
    g = random_tree_graph(rng, n_checks=6, max_check_degree=4)
    ch = AWGN(0.9)
    x = g.to_parity_check().sample_codeword(rng).astype(np.int64)
    y = ch.sample(x, rng)
    res = bp_decode(g, ch.llr(y), max_iter=2 * g.m + 2, early_stop=False, rng=rng)
    p1 = 1.0 / (1.0 + np.exp(2.0 * res.llr))
    assert np.max(np.abs(p1 - exact_posteriors(g, ch, y))) < 1e-10


def test_bec_map_example_has_ties():
    H = np.array([[1, 0, 0], [0, 1, 1]])
    y = np.array([0, ERASURE, ERASURE])
    res = map_decode_bruteforce(H, BEC(0.5), y)
    assert {tuple(w) for w in res.map_words} == {(0, 0, 0), (0, 1, 1)}
    assert res.word_ties == 2
    assert np.allclose(res.marginals, [0.0, 0.5, 0.5])
    assert list(res.symbol_ties) == [False, True, True]


def test_hamming_map_corrects_single_error():
    g = example_hamming_graph()
    for i in range(7):
        y = np.zeros(7, dtype=np.int64)
        y[i] = 1
        res = map_decode_bruteforce(g, BSC(0.05), y)
        assert not res.word.any() and res.word_ties == 1


def test_bp_early_stop_on_codeword():
    g = example_hamming_graph()
    res = bp_decode(g, BSC(0.1).llr(np.zeros(7, dtype=np.int64)))
    assert res.iterations == 0 and res.converged


def test_bp_ties_are_random_but_seeded():
    g = TannerGraph.from_dense(np.array([[1, 1]]))
    llrs = np.zeros(2)
    a = bp_decode(g, llrs, max_iter=3, rng=np.random.default_rng(1), early_stop=False)
    b = bp_decode(g, llrs, max_iter=3, rng=np.random.default_rng(1), early_stop=False)
    assert np.array_equal(a.bits, b.bits) and a.ties == b.ties > 0


def test_bp_on_bec_fills_erasures():
    rng = np.random.default_rng(3)
    g = sample_regular(RegularEnsemble(3, 6, 2000), rng)
    x = g.to_parity_check().sample_codeword(rng).astype(np.int64)
    y = BEC(0.3).sample(x, rng)
    res = bp_decode(g, BEC(0.3).llr(y), rng=rng)
    assert res.converged and np.array_equal(res.bits, x)


def test_bp_decodes_bsc_below_threshold():
    rng = np.random.default_rng(4)
    g = sample_regular(RegularEnsemble(3, 6, 4000), rng)
    y = BSC(0.04).sample(np.zeros(g.n, dtype=np.int64), rng)
    res = bp_decode(g, BSC(0.04).llr(y), rng=rng, truth=np.zeros(g.n))
    assert res.converged and not res.bits.any()
    assert res.error_trace[0] > 0 and res.error_trace[-1] == 0


def test_bp_rejects_bad_input():
    g = example_hamming_graph()
    with pytest.raises(ValueError):
        bp_decode(g, np.zeros(5))
    with pytest.raises(ValueError):
        bp_decode(g, np.full(7, np.nan))


def test_map_lower_bounds_bp_bit_error():
    rng = np.random.default_rng(11)
    ch = BSC(0.08)
    n, trials = 24, 300
    map_err = bp_err = 0
    diffs = []
    for _ in range(trials):
        g = sample_regular(RegularEnsemble(3, 6, n), rng)
        x = g.to_parity_check().sample_codeword(rng).astype(np.int64)
        y = ch.sample(x, rng)
        m = map_decode_bruteforce(g, ch, y)
        bits = m.symbol_bits.copy()
        bits[m.symbol_ties] = rng.integers(0, 2, int(m.symbol_ties.sum()))
        b = bp_decode(g, ch.llr(y), rng=rng)
        e_map = np.count_nonzero(bits != x) / n
        e_bp = np.count_nonzero(b.bits != x) / n
        map_err += e_map
        bp_err += e_bp
        diffs.append(e_bp - e_map)
    sigma = np.std(diffs, ddof=1) / math.sqrt(trials)
    assert map_err / trials <= bp_err / trials + 3 * sigma


# ----------------------------------------------------------------------
def test_flip_decoder_monotone_and_clean():
    rng = np.random.default_rng(5)
    g = sample_regular(RegularEnsemble(5, 10, 1000), rng)
    y = BSC(0.01).sample(np.zeros(g.n, dtype=np.int64), rng)
    res = bit_flip_decode(g, y, rng)
    assert np.all(np.diff(res.unsat_trace) < 0)
    assert res.converged and not res.bits.any()


def test_flip_decoder_stops_on_codeword():
    g = example_hamming_graph()
    res = bit_flip_decode(g, np.zeros(7, dtype=np.int64), np.random.default_rng(0))
    assert res.iterations == 0 and res.converged


def test_flip_decoder_reproducible():
    g = sample_regular(RegularEnsemble(5, 10, 500), np.random.default_rng(0))
    y = BSC(0.04).sample(np.zeros(g.n, dtype=np.int64), np.random.default_rng(1))
    a = bit_flip_decode(g, y, np.random.default_rng(2))
    b = bit_flip_decode(g, y, np.random.default_rng(2))
    assert np.array_equal(a.bits, b.bits) and np.array_equal(a.unsat_trace, b.unsat_trace)


def test_flip_decoder_rejects_soft_input():
    with pytest.raises(ValueError):
        bit_flip_decode(example_hamming_graph(), np.full(7, 0.5), np.random.default_rng(0))
