"""Shared helpers for the test suite."""

import numpy as np

from ldpc_workbench.codes import TannerGraph


def random_tree_graph(rng: np.random.Generator, n_checks: int, max_check_degree: int = 4) -> TannerGraph:
    """A Tanner graph that is a tree: every new check hangs off one existing variable."""
    var, chk = [], []
    n = 1
    for a in range(n_checks):
        anchor = int(rng.integers(n))
        fresh = int(rng.integers(1, max_check_degree))
        members = [anchor] + list(range(n, n + fresh))
        n += fresh
        var += members
        chk += [a] * len(members)
    return TannerGraph(n, n_checks, np.array(var), np.array(chk))


def same_with_nan(a, b) -> bool:
    return np.array_equal(np.asarray(a, float), np.asarray(b, float), equal_nan=True)
