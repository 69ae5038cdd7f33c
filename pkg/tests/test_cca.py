import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bscca.cca import (
    Model,
    PosteriorDraws,
    align_signs,
    canonical_decomposition,
    combined_select,
    grand_covariance,
    inv_sqrt_spd,
    summarize,
)
from bscca.errors import InputError, NumericalError

from _oracles import grid_rho1, random_spd


def _draws(u, v, rho=None, model=Model.NDFSM):
    s = u.shape[0]
    rho = np.full((s, 1), 0.5) if rho is None else rho
    return PosteriorDraws(model, rho, u, v, np.zeros(s), np.zeros(s))


# ------------------------------------------------------------ grand covariance

def test_grand_covariance_zero_loadings():
    phi1, phi2 = np.diag([1.0, 2.0]), np.array([[3.0]])
    sig = grand_covariance(np.zeros((2, 1)), np.zeros((1, 1)), phi1, phi2)
    assert np.array_equal(sig, np.array([[1, 0, 0], [0, 2, 0], [0, 0, 3.0]]))


def test_grand_covariance_scalar():
    assert np.array_equal(grand_covariance([[1.0]], [[1.0]], [[1.0]], [[1.0]]), [[2.0, 1.0], [1.0, 2.0]])


def test_grand_covariance_monte_carlo():
    rng = np.random.default_rng(0)
    a1, a2 = rng.standard_normal((3, 2)), rng.standard_normal((2, 2))
    phi1, phi2 = random_spd(rng, 3), random_spd(rng, 2)
    n = 10**6
    z = rng.standard_normal((n, 2))
    x1 = z @ a1.T + rng.multivariate_normal(np.zeros(3), phi1, n)
    x2 = z @ a2.T + rng.multivariate_normal(np.zeros(2), phi2, n)
    emp = np.cov(np.hstack([x1, x2]), rowvar=False)
    assert np.max(np.abs(emp - grand_covariance(a1, a2, phi1, phi2))) < 0.01


def test_grand_covariance_rejects_mismatch():
    with pytest.raises(InputError):
        grand_covariance(np.ones((2, 2)), np.ones((2, 1)), np.eye(2), np.eye(2))
    with pytest.raises(InputError):
        grand_covariance(np.ones((2, 1)), np.ones((2, 1)), np.eye(3), np.eye(2))


@given(seed=st.integers(0, 2**31 - 1), col=st.integers(0, 2))
@settings(max_examples=30, deadline=None)
def test_column_negation_invariance(seed, col):
    rng = np.random.default_rng(seed)
    a1, a2 = rng.standard_normal((4, 3)), rng.standard_normal((3, 3))
    phi1, phi2 = random_spd(rng, 4), random_spd(rng, 3)
    b1, b2 = a1.copy(), a2.copy()
    b1[:, col] *= -1
    b2[:, col] *= -1
    s0, s1 = grand_covariance(a1, a2, phi1, phi2), grand_covariance(b1, b2, phi1, phi2)
    assert np.array_equal(s0, s1)
    r0 = [t.rho for t in canonical_decomposition(s0, 4, 3)]
    r1 = [t.rho for t in canonical_decomposition(s1, 4, 3)]
    assert np.max(np.abs(np.subtract(r0, r1))) < 1e-12


# ------------------------------------------------------------ inverse square root

def test_inv_sqrt_examples():
    assert np.allclose(inv_sqrt_spd(np.eye(3)), np.eye(3), atol=1e-15)
    assert np.allclose(inv_sqrt_spd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_inv_sqrt_identity(seed):
    m = random_spd(np.random.default_rng(seed), 5)
    b = inv_sqrt_spd(m)
    assert np.array_equal(b, b.T)
    assert np.max(np.abs(b @ m @ b - np.eye(5))) < 1e-8


def test_inv_sqrt_rejects_singular():
    with pytest.raises(NumericalError, match="eigenvalue"):
        inv_sqrt_spd(np.diag([1.0, 1e-14]))
    with pytest.raises(NumericalError):
        inv_sqrt_spd(np.diag([1.0, -1.0]))


# ------------------------------------------------------------ canonical decomposition

def test_block_diagonal_has_zero_correlations():
    sig = np.zeros((5, 5))
    sig[:3, :3] = random_spd(np.random.default_rng(1), 3)
    sig[3:, 3:] = random_spd(np.random.default_rng(2), 2)
    assert all(abs(t.rho) < 1e-12 for t in canonical_decomposition(sig, 3, 2))


def test_scalar_decomposition():
    (t,) = canonical_decomposition(np.array([[1.0, 0.73], [0.73, 1.0]]), 1)
    assert t.rho == pytest.approx(0.73, abs=1e-14)
    assert abs(t.u[0]) == pytest.approx(1.0) and abs(t.v[0]) == pytest.approx(1.0)
    assert t.order == 1


def test_decomposition_rejects_bad_rank():
    sig = random_spd(np.random.default_rng(0), 5)
    with pytest.raises(InputError):
        canonical_decomposition(sig, 3, 3)
    with pytest.raises(InputError):
        canonical_decomposition(sig, 0, 1)


@pytest.mark.parametrize("case", range(10))
def test_rho1_matches_grid_search(case):
    sig = random_spd(np.random.default_rng(100 + case), 5)
    rho = canonical_decomposition(sig, 3, 1)[0].rho
    assert abs(rho - grid_rho1(sig)) < 1e-3


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_whitened_directions_orthonormal(seed):
    sig = random_spd(np.random.default_rng(seed), 7)
    tr = canonical_decomposition(sig, 4, 3)
    rho = [t.rho for t in tr]
    assert rho == sorted(rho, reverse=True)
    for r in range(3):
        assert np.linalg.norm(tr[r].u) == pytest.approx(1.0, abs=1e-12)
        for s in range(r + 1, 3):
            assert abs(tr[r].u @ tr[s].u) < 1e-8
            assert abs(tr[r].v @ tr[s].v) < 1e-8


# ------------------------------------------------------------ alignment and summaries

def test_align_positive_is_identity():
    rng = np.random.default_rng(3)
    u = np.abs(rng.standard_normal((20, 4))) + np.array([5.0, 0, 0, 0])
    v = rng.standard_normal((20, 2))
    out = align_signs(_draws(u, v))
    assert np.array_equal(out.u, u) and np.array_equal(out.v, v)
    assert out.pivot == (1, 0)


def test_align_negated_input_recovers_original():
    rng = np.random.default_rng(4)
    u = np.abs(rng.standard_normal((20, 3))) + 1.0
    v = rng.standard_normal((20, 2))
    out = align_signs(_draws(-u, -v))
    assert np.array_equal(out.u, u) and np.array_equal(out.v, v)


def test_align_random_flips_recovers_direction():
    rng = np.random.default_rng(5)
    base = np.array([0.8, -0.5, 0.3, 0.1])
    base /= np.linalg.norm(base)
    u = base + 0.05 * rng.standard_normal((500, 4))
    v = np.tile([0.6, 0.8], (500, 1))
    sign = rng.choice([-1.0, 1.0], size=(500, 1))
    before = (sign * u).mean(axis=0)
    out = align_signs(_draws(sign * u, sign * v))
    after = out.u.mean(axis=0)
    cos = lambda x: abs(x @ base) / np.linalg.norm(x)
    assert cos(after) > 0.99
    assert np.linalg.norm(before) < 0.2


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_align_idempotent(seed):
    rng = np.random.default_rng(seed)
    d = _draws(rng.standard_normal((15, 4)), rng.standard_normal((15, 3)))
    once = align_signs(d)
    twice = align_signs(once)
    assert np.array_equal(once.u, twice.u) and np.array_equal(once.v, twice.v)
    assert once.pivot == twice.pivot


def test_align_rejects_empty():
    with pytest.raises(InputError):
        align_signs(_draws(np.zeros((0, 2)), np.zeros((0, 2)), rho=np.zeros((0, 1))))


def test_summarize_constant_draws():
    u = np.tile([0.6, 0.0, -0.8], (10, 1))
    v = np.tile([1.0, 0.0], (10, 1))
    s = summarize(_draws(u, v, rho=np.full((10, 2), [0.4, 0.1])))
    assert np.allclose(s.rho_hat, [0.4, 0.1])
    assert np.array_equal(s.ci_lower_u, s.ci_upper_u)
    assert s.selected_u.tolist() == [True, False, True]
    assert s.selected_v.tolist() == [True, False]
    assert np.linalg.norm(s.u_hat) == pytest.approx(1.0, abs=1e-10)


def test_summarize_normal_quartiles():
    rng = np.random.default_rng(6)
    n = 200000
    u = np.column_stack([5.0 + 0.1 * rng.standard_normal(n), rng.standard_normal(n), 2.0 + 0.1 * rng.standard_normal(n)])
    v = np.column_stack([np.ones(n), np.zeros(n)])
    s = summarize(_draws(u, v, rho=np.full((n, 1), 0.5)))
    assert s.ci_lower_u[1] == pytest.approx(-0.674, abs=0.01)
    assert s.ci_upper_u[1] == pytest.approx(0.674, abs=0.01)
    assert s.selected_u.tolist() == [True, False, True]
    # selection is exactly "interval excludes zero"
    excl = (s.ci_lower_u > 0) | (s.ci_upper_u < 0)
    assert np.array_equal(excl, s.selected_u)


def test_summarize_overshrink_fraction():
    rho = np.array([[0.1], [0.15], [0.3], [0.5]])
    s = summarize(_draws(np.ones((4, 2)), np.ones((4, 2)), rho=rho))
    assert s.p_overshrink == 0.5


def test_summarize_rejects():
    d = _draws(np.ones((3, 2)), np.ones((3, 2)))
    with pytest.raises(InputError):
        summarize(d, ci_level=1.0)
    with pytest.raises(NumericalError):
        summarize(_draws(np.ones((3, 2)), np.ones((3, 2)), rho=np.full((3, 1), 1.5)))


def _summary(p_over, model):
    s = summarize(_draws(np.ones((4, 2)), np.ones((4, 2)), model=model))
    from dataclasses import replace
    return replace(s, p_overshrink=p_over)


@pytest.mark.parametrize("p_over, expected", [(0.7349, Model.DFSM), (0.0, Model.NDFSM), (0.5, Model.NDFSM), (0.5000001, Model.DFSM)])
def test_combined_select(p_over, expected):
    out = combined_select(_summary(p_over, Model.NDFSM), _summary(0.0, Model.DFSM))
    assert out.model_used is expected


def test_summary_dict_round_trip():
    from bscca.cca import InferenceSummary
    s = _summary(0.25, Model.DFSM)
    back = InferenceSummary.from_dict(s.to_dict())
    assert back.model_used is Model.DFSM and back.pivot_feature == s.pivot_feature
    assert np.array_equal(back.selected_u, s.selected_u)
