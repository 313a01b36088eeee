import numpy as np
import pytest

from ldpc_workbench.channels import BEC, BSC
from ldpc_workbench.density_evolution import (DeSettings, _bisect, bec_recursion, bec_threshold, bp_threshold,
                                              run_de, shannon_limit)

# minimum over x in (0, 1] of x / (1 - (1 - x)^(k-1))^(l-1), evaluated on a fine grid
BEC_THRESHOLDS = {(3, 6): 0.4294398144, (3, 4): 0.6474256494, (4, 6): 0.5061323462, (3, 5): 0.5175701819}


@pytest.mark.parametrize("lk", sorted(BEC_THRESHOLDS))
def test_bec_threshold_matches_closed_form(lk):
    assert bec_threshold(*lk) == pytest.approx(BEC_THRESHOLDS[lk], abs=1e-7)


def test_bec_recursion_limits():
    assert bec_recursion(0.40, 3, 6, 2000)[-1] < 1e-12
    assert bec_recursion(0.45, 3, 6, 2000)[-1] > 0.1


def test_population_tracks_bec_recursion():
    settings = DeSettings(pop_size=200_000, t_max=1)
    rng = np.random.default_rng(0)
    eps = 0.4
    exact = bec_recursion(eps, 3, 6, 6)
    traj = run_de(3, 6, BEC(eps), settings, rng=rng)
    u = traj.u
    for t in range(1, 6):
        h = traj.h
        assert np.mean(h == 0) == pytest.approx(exact[t - 1], abs=5e-3)
        traj = run_de(3, 6, BEC(eps), settings, rng=rng, init_u=u)
        u = traj.u


def test_bsc_trajectory_starts_at_channel_error():
    traj = run_de(3, 6, BSC(0.05), DeSettings(pop_size=100_000, t_max=3), rng=1)
    assert traj.pb[0] == pytest.approx(0.05, abs=3e-3)
    assert traj.iterations == 3


def test_bsc_below_and_above_threshold():
    s = DeSettings(pop_size=20_000, t_max=200)
    good = run_de(3, 6, BSC(0.06), s, rng=2, stop_below_floor=True)
    bad = run_de(3, 6, BSC(0.10), s, rng=2, stop_below_floor=True)
    assert good.pb[-1] < s.floor and good.iterations < 200
    assert bad.pb[-1] > 0.05 and bad.iterations == 200
    assert np.all(np.diff(good.entropy) <= 1e-3)


def test_bec_threshold_by_population_dynamics():
    res = bp_threshold(3, 6, "bec", lo=0.40, hi=0.46, tol=2e-3, settings=DeSettings(pop_size=20_000, t_max=300))
    assert res.estimate == pytest.approx(BEC_THRESHOLDS[(3, 6)], abs=5e-3)
    assert res.monotone


def test_bisection_checks_its_bracket():
    with pytest.raises(ValueError):
        _bisect(lambda p: (p < 0.5, 0), 0.6, 0.9, 1e-3)
    with pytest.raises(ValueError):
        _bisect(lambda p: (p < 0.5, 0), 0.1, 0.4, 1e-3)
    res = _bisect(lambda p: (p < 0.3, 0), 0.0, 1.0, 1e-4)
    assert res.estimate == pytest.approx(0.3, abs=1e-4)


def test_shannon_limits():
    assert shannon_limit(0.5, "bsc") == pytest.approx(0.110028, abs=1e-6)
    assert shannon_limit(0.25, "bec") == 0.75


def test_de_rejects_asymmetric_channel():
    from ldpc_workbench.channels import ZC
    with pytest.raises(ValueError):
        run_de(3, 6, ZC(0.1))
