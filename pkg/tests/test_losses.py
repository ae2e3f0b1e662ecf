import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lkfmixer.fft import fft, fft2, ifft2
from lkfmixer.losses import fft_loss, l1_loss, training_loss
from lkfmixer.tensor import ShapeError, Tensor

rng = np.random.default_rng(5)


def test_fft2_matches_naive_dft_16():
    x = rng.standard_normal((16, 16))
    assert np.max(np.abs(fft2(x) - oracles.naive_dft2(x))) < 1e-4


@pytest.mark.parametrize("shape", [(5, 7), (6, 12), (1, 9), (3, 1)])
def test_fft2_non_power_of_two_naive(shape):
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    assert np.max(np.abs(fft2(x) - oracles.naive_dft2(x))) < 1e-9


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 70))
def test_fft_1d_against_numpy(n):
    x = np.random.default_rng(n).standard_normal((2, n))
    assert np.allclose(fft(x), np.fft.fft(x), atol=1e-9)
    assert np.allclose(fft(fft(x), inverse=True), x, atol=1e-10)


def test_fft2_batched_and_inverse():
    x = rng.standard_normal((2, 3, 8, 6))
    assert np.allclose(fft2(x), np.fft.fft2(x), atol=1e-10)
    assert np.allclose(ifft2(fft2(x)).real, x, atol=1e-12)


def test_delta_has_flat_spectrum():
    d = np.zeros((8, 8))
    d[0, 0] = 1
    assert np.allclose(np.abs(fft2(d)), 1.0)
    shifted = np.zeros((8, 8))
    shifted[3, 5] = 1
    assert np.allclose(np.abs(fft2(shifted)), 1.0)


def test_losses_zero_on_identical():
    x = Tensor(rng.uniform(size=(2, 3, 8, 8)))
    assert l1_loss(x, x).item() == 0
    assert fft_loss(x, x).item() == 0


def test_l1_value():
    p = Tensor(np.array([1.0, -1.0, 3.0, 0.0]).reshape(1, 1, 2, 2))
    q = Tensor.zeros((1, 1, 2, 2))
    assert l1_loss(p, q).item() == pytest.approx(1.25)


def test_fft_loss_definition():
    p = rng.standard_normal((2, 3, 4, 8))
    q = rng.standard_normal((2, 3, 4, 8))
    spec = np.fft.fft2(p - q)
    want = (np.abs(spec.real).sum() + np.abs(spec.imag).sum()) / (2 * p.size)
    got = fft_loss(Tensor(p, dtype=np.float64), Tensor(q, dtype=np.float64)).item()
    assert got == pytest.approx(want, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.floats(1e-3, 1.0))
def test_fft_loss_positive_when_different(seed, eps):
    r = np.random.default_rng(seed)
    p = r.standard_normal((1, 1, 4, 4))
    q = p.copy()
    q[0, 0, r.integers(4), r.integers(4)] += eps
    val = fft_loss(Tensor(p, dtype=np.float64), Tensor(q, dtype=np.float64)).item()
    assert val > 0


def test_training_loss_combination():
    p = Tensor(rng.uniform(size=(1, 3, 8, 8)), dtype=np.float64)
    q = Tensor(rng.uniform(size=(1, 3, 8, 8)), dtype=np.float64)
    total, l1, ff = training_loss(p, q, 0.05)
    assert total.item() == pytest.approx(l1.item() + 0.05 * ff.item(), rel=1e-14)


def test_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        l1_loss(Tensor.zeros((1, 1, 2, 2)), Tensor.zeros((1, 1, 2, 3)))
    with pytest.raises(ShapeError):
        fft_loss(Tensor.zeros((1, 1, 2, 2)), Tensor.zeros((1, 2, 2, 2)))
