import math

import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from kpzf import distributions as ds
from kpzf import polymer_sim as ps
from kpzf.errors import ParameterError
from kpzf.scaling import scaling_C, theta_from_kappa, u_semidiscrete


def test_config_validation():
    with pytest.raises(ParameterError):
        ps.SimConfig(N=4, tau=1.0, M=2)
    with pytest.raises(ParameterError):
        ps.SimConfig(N=2, tau=1.0, a=(1.0,))
    with pytest.raises(ParameterError):
        ps.SimConfig(N=2, tau=-1.0)
    with pytest.raises(ParameterError):
        ps.SimConfig(N=2, tau=1.0, polymer_scheme="euler")
    assert ps.SimConfig(N=3, tau=1.0).a == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("scheme", ["split", "lattice"])
def test_n1_is_brownian_endpoint(scheme):
    cfg = ps.SimConfig(N=1, tau=2.0, a=(0.3,), M=256, samples=10000, seed=1, polymer_scheme=scheme)
    res = ps.simulate(cfg)
    assert abs(res.mean - 0.6) <= 4 * res.std_error
    assert np.var(res.values, ddof=1) == pytest.approx(2.0, rel=0.05)
    # exactly the sum of the drawn increments
    incr = ps._increments(cfg, ps._rng(cfg.seed, "polymer", 0))
    assert res.values[0] == pytest.approx(incr.sum(), abs=1e-12)


@pytest.mark.parametrize("N", [2, 3])
def test_annealed_mean(N):
    res = ps.simulate(ps.SimConfig(N=N, tau=1.0, M=1024, samples=20000, seed=3))
    z = np.exp(res.values)
    target = math.exp(0.5) / math.factorial(N - 1)
    assert abs(z.mean() - target) <= 4 * z.std(ddof=1) / math.sqrt(len(z))


def test_mesh_refinement_small_against_mc_error():
    # coupled mesh study: the coarse path sums pairs of fine increments
    N, tau, M, n = 4, 1.0, 1024, 4000
    coarse, fine = np.empty(n), np.empty(n)
    for i in range(n):
        rng = np.random.default_rng([77, i])
        incr = rng.standard_normal((N, 2 * M)) * math.sqrt(tau / (2 * M))
        fine[i] = ps._log_partition_split(incr, math.log(tau / (2 * M)) + tau / (8 * M), ps.SPLIT_MAX_JUMPS)
        pair = incr[:, 0::2] + incr[:, 1::2]
        coarse[i] = ps._log_partition_split(pair, math.log(tau / M) + tau / (4 * M), ps.SPLIT_MAX_JUMPS)
    se = coarse.std(ddof=1) / math.sqrt(n)
    assert abs(fine.mean() - coarse.mean()) < se


def test_lattice_scheme_bias_shrinks_with_mesh():
    N, tau, n = 8, 8.0, 400
    means = []
    for M in (256, 1024):
        means.append(ps.simulate(ps.SimConfig(N=N, tau=tau, M=M, samples=n, seed=4, polymer_scheme="lattice")).mean)
    split = ps.simulate(ps.SimConfig(N=N, tau=tau, M=1024, samples=n, seed=4)).mean
    assert means[0] > means[1] > split


def test_ground_state_n1():
    cfg = ps.SimConfig(N=1, tau=1.0, M=64, samples=5, seed=2)
    res = ps.simulate(cfg, "ground-state")
    incr = ps._increments(cfg, ps._rng(cfg.seed, "ground-state", 0))
    assert res.values[0] == pytest.approx(incr.sum(), abs=1e-12)


def test_ground_state_dominates_paths():
    cfg = ps.SimConfig(N=3, tau=1.0, M=128, samples=1, seed=5)
    rng = ps._rng(cfg.seed, "ground-state", 0)
    incr = ps._increments(cfg, rng)
    expo = rng.standard_exponential((cfg.N, cfg.M))
    lattice = ps._ground_state(incr)
    bridge = ps._ground_state_bridge(incr, expo, 2 * cfg.h)
    # one fixed path: jumps after steps 40 and 90
    path = incr[0, :40].sum() + incr[1, 40:90].sum() + incr[2, 90:].sum()
    assert lattice >= path
    assert bridge >= lattice
    assert ps.sample_ground_state(cfg, 0) == bridge


def test_ground_state_scaling_n4():
    n = 10000
    g = ps.simulate(ps.SimConfig(N=4, tau=4.0, M=4096, samples=n, seed=6), "ground-state")
    e = ps.simulate(ps.SimConfig(N=4, tau=1.0, samples=n, seed=6), "gue")
    # M^N(tau) has the law of sqrt(tau) lambda_max
    se = math.hypot(g.std_error, 2 * e.std_error)
    assert abs(g.mean - 2 * e.mean) <= 4 * se


def test_gue_n1_is_standard_normal():
    res = ps.simulate(ps.SimConfig(N=1, tau=1.0, samples=20000, seed=7), "gue")
    assert abs(res.mean) <= 4 * res.std_error
    assert np.var(res.values, ddof=1) == pytest.approx(1.0, rel=0.05)


def test_gue_n2_mean():
    # lambda_max = (h11 + h22)/2 + |X|, X a 3-vector of Normal(0, 1/2) entries;
    # E|X| by quadrature of the chi-3 density
    s2 = 0.5
    dens = lambda r: r * math.sqrt(2 / math.pi) * r**2 * math.exp(-(r**2) / (2 * s2)) / s2**1.5  # noqa: E731
    exact = scipy.integrate.quad(dens, 0, np.inf)[0]
    assert exact == pytest.approx(2 / math.sqrt(math.pi), rel=1e-10)
    res = ps.simulate(ps.SimConfig(N=2, tau=1.0, samples=20000, seed=8), "gue")
    assert abs(res.mean - exact) <= 4 * res.std_error


def test_brownian_scaling_consistency():
    # log Z(kappa N) has the law of (N-1) log kappa + log Z(N) with increments scaled by sqrt(kappa)
    N, kappa, n = 4, 2.0, 10000
    a = ps.simulate(ps.SimConfig(N=N, tau=kappa * N, M=1024, samples=n, seed=9))
    b = ps.simulate(ps.SimConfig(N=N, tau=float(N), M=1024, samples=n, seed=10, scale=math.sqrt(kappa)))
    shifted = b.values + (N - 1) * math.log(kappa)
    assert ps.ks_two_sample(a.values, shifted) < ps.ks_critical_two_sample(n, n)


def test_thread_count_does_not_change_results():
    cfg1 = ps.SimConfig(N=5, tau=5.0, M=256, samples=300, seed=11, threads=1)
    cfg3 = ps.SimConfig(N=5, tau=5.0, M=256, samples=300, seed=11, threads=3)
    for model in ("polymer", "ground-state", "gue"):
        assert np.array_equal(ps.simulate(cfg1, model).values, ps.simulate(cfg3, model).values)


def test_empirical_laplace_extremes():
    vals = np.random.default_rng(0).normal(size=1000)
    est, se = ps.empirical_laplace(vals, -60.0)
    assert est == pytest.approx(1.0, abs=1e-20) and se < 1e-20
    est, _ = ps.empirical_laplace(vals, 60.0)
    assert est == 0.0


def test_empirical_smoothed_cdf_identity():
    sc = theta_from_kappa(1.0)
    res = ps.simulate(ps.kappa_config(8, 1.0, 500, seed=12, M=512))
    for r in (-1.0, 0.5):
        lu, _ = u_semidiscrete(8, r, sc)
        assert ps.empirical_smoothed_cdf(res, r, sc, 8) == ps.empirical_laplace(res, lu)
    assert ps.empirical_smoothed_cdf(res, 50.0, sc, 8)[0] == pytest.approx(1.0, abs=1e-12)


def test_smoothed_cdf_profile_n32_matches_determinant():
    sc = theta_from_kappa(1.0)
    res = ps.simulate(ps.kappa_config(32, 1.0, 4000, seed=5))
    for r in (-2.0, 0.0, 2.0):
        est, se = ps.empirical_smoothed_cdf(res, r, sc, 32)
        exact = ds.semidiscrete_smoothed_cdf(32, 1.0, None, r)
        assert abs(est - exact) <= 3 * se


def test_ks_statistic():
    table = ds.CdfTable(np.linspace(-1, 2, 301), np.clip(np.linspace(-1, 2, 301), 0, 1))
    u = np.random.default_rng(13).uniform(size=10000)
    assert ps.ks_statistic(u, table) < 1.63 / math.sqrt(10000)
    assert ps.ks_statistic(np.full(100, 0.5), table) >= 0.5
    assert ps.ks_two_sample(u, u) == 0.0
    with pytest.raises(ParameterError):
        ps.ks_statistic([0.1], table)


def test_ks_statistic_matches_manual_formula():
    x = np.sort(np.random.default_rng(14).normal(size=200))
    F = scipy.stats.norm.cdf(x)
    n = len(x)
    manual = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    assert ps.ks_statistic(x, scipy.stats.norm.cdf) == pytest.approx(manual, abs=1e-15)


def test_intermediate_disorder_preset():
    pre = ps.IntermediateDisorderPreset(N=16, T=4.0, b=(0.5,))
    cfg = pre.config(samples=10, M=512)
    theta = theta_from_kappa(math.sqrt(4.0 / 16)).theta
    assert cfg.tau == pytest.approx(8.0)
    assert cfg.a[0] == pytest.approx(theta + 0.5) and cfg.a[1:] == (0.0,) * 15
    res = ps.simulate(cfg)
    assert np.allclose(pre.rescale(res), res.values - scaling_C(16, 4.0, 0.0, 1))
