import itertools
import math

import numpy as np
import pytest

from kpzf import contours as ct
from kpzf import distributions as ds
from kpzf import kernels as kn
from kpzf.errors import AccuracyError, ConditioningError, ParameterError
from kpzf.fredholm import det_adaptive, det_nystrom, det_series, nystrom_matrix


def unit_interval(n=16):
    return ct.discretize(ct.Contour((ct.Segment(0.0, 1.0),)), n, 10.0, panel_length=1.0)


def airy(x, y):
    return kn.airy_product_matrix(x.real, y.real)


def test_zero_kernel_gives_one():
    res = det_nystrom(lambda x, y: np.zeros((len(x), len(y))), unit_interval())
    assert res.value == 1.0


def test_rank_one_kernel():
    res = det_nystrom(lambda x, y: np.outer(x, y), unit_interval(), sign=1)
    assert abs(res.value - 4 / 3) < 1e-12
    res = det_nystrom(lambda x, y: np.outer(x, y), unit_interval(), sign=-1)
    assert abs(res.value - 2 / 3) < 1e-12


def test_airy_nystrom_matches_series():
    g = ds._half_line_grid(0.0, kn.AIRY_CUTOFF, 16)
    full = det_nystrom(airy, g, -1).value
    assert abs(full - det_series(airy, g, 6, -1)) < 1e-6
    assert abs(full - 0.96937282835526) < 1e-12


def test_series_low_orders():
    g = unit_interval(8)
    K = lambda x, y: np.exp(-np.subtract.outer(x, y) ** 2)  # noqa: E731
    assert det_series(K, g, 0) == 1.0
    trace = np.sum(np.diag(K(g.nodes, g.nodes)) * g.weights)
    assert abs(det_series(K, g, 1) - (1 + trace)) < 1e-14


def test_series_terms_are_principal_minor_sums(rng):
    # brute force: the n-th term is the sum of all n x n principal minors of K W
    n = 7
    A = rng.standard_normal((n, n)) * 0.3
    x = np.arange(n, dtype=float)
    grid = ct.QuadratureGrid(x.astype(complex), np.ones(n, complex), (), 0.0)
    kern = lambda u, v: A[np.ix_(u.real.astype(int), v.real.astype(int))]  # noqa: E731
    for order in range(0, 5):
        brute = 1.0 + sum(
            np.linalg.det(A[np.ix_(idx, idx)]) for k in range(1, order + 1) for idx in itertools.combinations(range(n), k)
        )
        assert abs(det_series(kern, grid, order) - brute) < 1e-12
    assert abs(det_series(kern, grid, 7) - np.linalg.det(np.eye(n) + A)) < 1e-12


def test_series_truncation_decays():
    g = ds._half_line_grid(2.0, kn.AIRY_CUTOFF, 16)
    assert abs(det_series(airy, g, 3, -1) - det_series(airy, g, 6, -1)) < 1e-8


def test_series_order_bounds():
    with pytest.raises(ParameterError):
        det_series(airy, unit_interval(), 9)


def test_nystrom_matrix_layout():
    g = unit_interval(4)
    M = nystrom_matrix(lambda x, y: np.outer(x, y), g, 1)
    assert np.allclose(M, np.eye(4) + np.outer(g.nodes, g.nodes) * g.weights[None, :])


def test_singular_matrix_raises():
    g = ct.QuadratureGrid(np.array([0.0 + 0j]), np.array([1.0 + 0j]), (), 0.0)
    with pytest.raises(ConditioningError):
        det_nystrom(lambda x, y: -np.ones((1, 1)), g, 1)


def gaussian_factory(k):
    seg = ct.Contour((ct.Segment(-10.0, 10.0),))
    return ct.discretize(seg, 8 * 2**k, 20.0, panel_length=2.0)


def gaussian(x, y):
    return np.exp(-np.add.outer(x.real**2, y.real**2))


@pytest.mark.parametrize("sign", [1, -1])
def test_adaptive_gaussian_rank_one(sign):
    res = det_adaptive(gaussian, gaussian_factory, 1e-8, sign)
    assert res.converged
    assert abs(res.value - (1 + sign * math.sqrt(math.pi / 2))) < 1e-10


def test_adaptive_unreachable_tolerance():
    with pytest.raises(AccuracyError) as info:
        det_adaptive(gaussian, gaussian_factory, 1e-30, 1, max_rounds=2)
    assert info.value.value is not None


def test_adaptive_cost_grows_into_left_tail():
    left = ds.f_gue_result(-10.0)
    right = ds.f_gue_result(10.0)
    assert left.outer_nodes > right.outer_nodes
