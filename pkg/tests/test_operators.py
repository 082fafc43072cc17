import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adtex.operators import (
    InvalidSigma,
    OperatorKind,
    apply_operator,
    gaussian_kernel,
    log_kernel,
    operator_decompose,
    operator_series,
)

from .oracles import convolve_reflect_sum

ALL_KINDS = [OperatorKind.gaussian(1.0), OperatorKind.laplacian(), OperatorKind.log(2.0)]


def test_constant_image_responses():
    c = np.full((9, 11), 77.0)
    np.testing.assert_allclose(apply_operator(c, OperatorKind.gaussian(1.5)), c, atol=1e-12)
    np.testing.assert_array_equal(apply_operator(c, OperatorKind.laplacian()), np.zeros_like(c))
    np.testing.assert_allclose(apply_operator(c, OperatorKind.log(1.0)), 0.0, atol=1e-10)


def test_laplacian_reflect_border_hand_values():
    out = apply_operator(np.array([[0.0, 100.0, 0.0]]), OperatorKind.laplacian())
    np.testing.assert_array_equal(out, [[100.0, -200.0, 100.0]])


@pytest.mark.parametrize("kind", ALL_KINDS + [OperatorKind.gaussian(0.7)], ids=lambda k: k.label())
def test_matches_scalar_convolution_oracle(rng, kind):
    from adtex.operators import operator_kernel

    img = rng.uniform(0, 255, (13, 14))
    expected = np.real(np.array(convolve_reflect_sum(img.tolist(), operator_kernel(kind).tolist())))
    np.testing.assert_allclose(apply_operator(img, kind), expected, atol=1e-10)


@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5, 4.0])
def test_kernel_sums_and_sizes(sigma):
    g, lg = gaussian_kernel(sigma), log_kernel(sigma)
    r = int(np.ceil(3 * sigma))
    assert g.shape == lg.shape == (2 * r + 1, 2 * r + 1)
    assert abs(g.sum() - 1.0) <= 1e-12
    assert abs(lg.sum()) <= 1e-12
    np.testing.assert_array_equal(g, g.T)


def test_invalid_sigma():
    with pytest.raises(InvalidSigma):
        OperatorKind.gaussian(0.0)
    with pytest.raises(InvalidSigma):
        OperatorKind("log", None)
    with pytest.raises(ValueError):
        OperatorKind("sobel")


@given(st.integers(4, 24), st.floats(0.3, 3.0))
def test_gaussian_commutes_with_transpose(n, sigma):
    img = np.random.default_rng(n).uniform(0, 255, (n, n))
    k = OperatorKind.gaussian(sigma)
    np.testing.assert_allclose(apply_operator(img.T, k), apply_operator(img, k).T, atol=1e-10, rtol=0)


byte_images = arrays(np.float64, st.tuples(st.integers(2, 16), st.integers(2, 16)),
                     elements=st.integers(0, 255).map(float))


@given(byte_images, st.sampled_from(ALL_KINDS), st.integers(0, 4))
def test_smooth_plus_residual_is_exact(img, kind, t):
    smooth, residual = operator_decompose(img, kind, t)
    np.testing.assert_array_equal(smooth + residual, img)


def test_gaussian_zero_iterations_has_zero_residual(rng):
    img = rng.uniform(0, 255, (8, 8))
    smooth, residual = operator_decompose(img, OperatorKind.gaussian(), 0)
    np.testing.assert_array_equal(smooth, img)
    assert not residual.any()


def test_gaussian_iterates_and_highpass_uses_response(rng):
    img = rng.integers(0, 256, (12, 12)).astype(float)
    k = OperatorKind.gaussian(1.0)
    twice = apply_operator(apply_operator(img, k), k)
    smooth, residual = operator_decompose(img, k, 2)
    np.testing.assert_array_equal(smooth, twice)
    np.testing.assert_array_equal(residual, img - twice)

    lap = OperatorKind.laplacian()
    smooth, residual = operator_decompose(img, lap, 7)
    np.testing.assert_allclose(residual, apply_operator(img, lap), atol=1e-12)


def test_series_agrees_with_single_calls(rng):
    img = rng.integers(0, 256, (10, 10)).astype(float)
    for kind in ALL_KINDS:
        for t, smooth, residual in operator_series(img, kind, [3, 1]):
            s1, r1 = operator_decompose(img, kind, t)
            np.testing.assert_array_equal(smooth, s1)
            np.testing.assert_array_equal(residual, r1)
