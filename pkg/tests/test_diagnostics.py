import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from bscca.data import DataViews
from bscca.diagnostics import TraceSeries, autocorrelation, effective_sample_size, gaussian_loglik
from bscca.errors import InputError, NumericalError


def ar1(n, phi, seed):
    e = np.random.default_rng(seed).standard_normal(n)
    return signal.lfilter([1.0], [1.0, -phi], e)


def test_acf_lag0_and_white_noise():
    x = np.random.default_rng(0).standard_normal(10**5)
    acf = autocorrelation(x, 5)
    assert acf[0] == 1.0
    assert abs(acf[1]) < 0.01


def test_acf_ar1():
    acf = autocorrelation(TraceSeries("ar", ar1(10**5, 0.5, 1)), 2)
    assert acf[1] == pytest.approx(0.5, abs=0.01)
    assert acf[2] == pytest.approx(0.25, abs=0.01)


def test_acf_matches_direct_sum():
    x = np.random.default_rng(2).standard_normal(300)
    c = x - x.mean()
    direct = [np.dot(c[: 300 - k], c[k:]) / np.dot(c, c) for k in range(10)]
    assert np.allclose(autocorrelation(x, 9), direct, atol=1e-12)


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(20, 400))
@settings(max_examples=50, deadline=None)
def test_acf_bounded(seed, n):
    x = np.random.default_rng(seed).standard_normal(n).cumsum()
    acf = autocorrelation(x, n // 2 - 1)
    assert acf[0] == 1.0
    assert np.all(np.abs(acf) <= 1.0 + 1e-12)


def test_acf_rejects():
    with pytest.raises(InputError):
        autocorrelation(np.ones(50), 3)
    with pytest.raises(InputError):
        autocorrelation(np.arange(10.0), 5)
    with pytest.raises(InputError):
        TraceSeries("bad", [1.0, np.nan])


def test_ess_iid():
    ess = effective_sample_size(np.random.default_rng(3).standard_normal(10**4))
    assert 9000 <= ess <= 10400


def test_ess_ar1():
    n = 10**5
    assert effective_sample_size(ar1(n, 0.5, 4)) == pytest.approx(n / 3, rel=0.1)


def test_ess_alternating_is_clipped():
    x = np.tile([1.0, -1.0], 500)
    assert effective_sample_size(x) == x.size


@given(seed=st.integers(0, 2**31 - 1), phi=st.floats(-0.9, 0.95))
@settings(max_examples=50, deadline=None)
def test_ess_within_bounds(seed, phi):
    x = ar1(500, phi, seed)
    ess = effective_sample_size(x)
    assert 1.0 <= ess <= x.size


@pytest.mark.parametrize("k", [2, 5, 10])
def test_thinning_raises_ess_fraction(k):
    x = ar1(2 * 10**5, 0.9, 5)
    before = effective_sample_size(x) / x.size
    thinned = x[::k]
    after = effective_sample_size(thinned) / thinned.size
    assert after >= before * 0.95


def test_ess_rejects():
    with pytest.raises(InputError):
        effective_sample_size(np.arange(5.0))
    with pytest.raises(InputError):
        effective_sample_size(np.zeros(100))


def test_loglik_scalar():
    assert gaussian_loglik([[0.0]], [0.0], [[1.0]]) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-15)
    assert gaussian_loglik([[0.0]], [0.0], [[1.0]]) == pytest.approx(-0.918939, abs=1e-6)


def test_loglik_identity_closed_form():
    x = np.random.default_rng(6).standard_normal((7, 4))
    expect = -0.5 * (x.size * np.log(2 * np.pi) + np.sum(x**2))
    views = DataViews(x[:, :3], x[:, 3:])
    assert gaussian_loglik(views, np.zeros(4), np.eye(4)) == pytest.approx(expect, rel=1e-13)


def test_loglik_extended_precision():
    rng = np.random.default_rng(7)
    g = rng.standard_normal((3, 5))
    sigma = g @ g.T / 5 + 0.2 * np.eye(3)
    mu = rng.standard_normal(3)
    x = mu + rng.standard_normal((4, 3))
    mpmath.mp.dps = 50
    s = mpmath.matrix(sigma.tolist())
    s_inv, det = s**-1, mpmath.det(s)
    total = mpmath.mpf(0)
    for row in x:
        r = mpmath.matrix((row - mu).tolist())
        quad = (r.T * s_inv * r)[0]
        total += -0.5 * (3 * mpmath.log(2 * mpmath.pi) + mpmath.log(det) + quad)
    assert gaussian_loglik(x, mu, sigma) == pytest.approx(float(total), abs=1e-10)


def test_loglik_rejects():
    with pytest.raises(NumericalError):
        gaussian_loglik(np.zeros((2, 2)), np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(InputError):
        gaussian_loglik(np.zeros((2, 2)), np.zeros(3), np.eye(2))
