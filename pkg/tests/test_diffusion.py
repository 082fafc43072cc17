import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adtex.diffusion import (
    ConductionKind,
    DiffusionParams,
    InvalidDiffusionParams,
    NonPositiveKappa,
    conduction,
    decompose,
    diffuse,
    diffuse_series,
    diffuse_step,
)

from .oracles import diffuse_step_loop

KINDS = [ConductionKind.EXPONENTIAL, ConductionKind.RATIONAL]

byte_images = arrays(
    np.float64,
    st.tuples(st.integers(1, 12), st.integers(1, 12)),
    elements=st.integers(0, 255).map(float),
)
params = st.builds(
    DiffusionParams,
    lam=st.floats(0, 1),
    kappa=st.floats(0.5, 500),
    kind=st.sampled_from(KINDS),
    iterations=st.integers(0, 8),
)


@pytest.mark.parametrize("kind", KINDS)
def test_conduction_at_zero_is_one(kind):
    assert conduction(0.0, 7.0, kind) == 1.0


def test_conduction_reference_values():
    assert conduction(15.0, 15.0, "rational") == 0.5
    assert conduction(-15.0, 15.0, "rational") == 0.5
    assert conduction(15.0, 15.0, "exponential") == pytest.approx(0.36787944117144233, abs=1e-15)


def test_conduction_rejects_bad_kappa():
    with pytest.raises(NonPositiveKappa):
        conduction(1.0, 0.0)
    with pytest.raises(NonPositiveKappa):
        DiffusionParams(kappa=-1)


@pytest.mark.parametrize("bad", [dict(lam=1.5), dict(lam=-0.1), dict(iterations=-1), dict(iterations=1.5)])
def test_params_validation(bad):
    with pytest.raises(InvalidDiffusionParams):
        DiffusionParams(**bad)


@given(st.floats(0.01, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_conduction_decreasing_and_ordered(kappa, a, b):
    lo, hi = sorted((a, b))
    for kind in KINDS:
        assert conduction(hi, kappa, kind) <= conduction(lo, kappa, kind)
        assert 0 <= conduction(hi, kappa, kind) <= 1  # exp underflows to 0 for huge ratios
    # exp(-x) <= 1/(1+x) for x >= 0; the two agree to O(x^2), so allow one ulp of rounding
    rational = conduction(a, kappa, "rational")
    assert conduction(a, kappa, "exponential") <= np.nextafter(rational, 2.0)


def test_conduction_strictly_decreasing_on_grid():
    g = np.linspace(0.1, 60, 500)
    for kind in KINDS:
        assert np.all(np.diff(conduction(g, 15.0, kind)) < 0)


def test_two_pixel_step_oracle():
    p = DiffusionParams(lam=1.0, kappa=100.0, kind="rational")
    out = diffuse_step(np.array([[0.0, 100.0]]), p)
    np.testing.assert_allclose(out, [[12.5, 87.5]], atol=1e-12)
    np.testing.assert_allclose(diffuse_step_loop([[0.0, 100.0]], 1.0, 100.0, "rational"), [[12.5, 87.5]], atol=1e-12)


def test_constant_image_and_zero_lambda_are_fixed_points(rng):
    c = np.full((7, 5), 42.0)
    np.testing.assert_array_equal(diffuse_step(c, DiffusionParams()), c)
    img = rng.uniform(0, 255, (6, 6))
    np.testing.assert_array_equal(diffuse_step(img, DiffusionParams(lam=0.0)), img)


@pytest.mark.parametrize("kind", KINDS)
def test_step_matches_scalar_oracle(rng, kind):
    for _ in range(20):
        img = rng.uniform(0, 255, (8, 8))
        p = DiffusionParams(lam=rng.uniform(0, 1), kappa=rng.uniform(1, 100), kind=kind)
        expected = np.array(diffuse_step_loop(img.tolist(), p.lam, p.kappa, p.kind.value))
        np.testing.assert_allclose(diffuse_step(img, p), expected, rtol=0, atol=1e-12)


def test_diffuse_composition(rng):
    img = rng.uniform(0, 255, (10, 9))
    p = DiffusionParams(iterations=0)
    out = diffuse(img, p)
    np.testing.assert_array_equal(out, img)
    assert out is not img
    np.testing.assert_array_equal(diffuse(img, p.with_iterations(1)), diffuse_step(img, p))
    three = diffuse_step(diffuse_step(diffuse_step(img, p), p), p)
    np.testing.assert_array_equal(diffuse(img, p.with_iterations(3)), three)


def test_series_matches_fresh_runs(rng):
    img = rng.uniform(0, 255, (12, 12))
    p = DiffusionParams(kind="rational", kappa=30)
    for t, snap in diffuse_series(img, p, [5, 0, 2, 5]):
        np.testing.assert_array_equal(snap, diffuse(img, p.with_iterations(t)))


def test_long_run_converges_to_mean(rng):
    img = rng.uniform(0, 255, (16, 16))
    out = diffuse(img, DiffusionParams(lam=1.0, kappa=1e6, iterations=10000))
    assert np.max(np.abs(out - img.mean())) < 1e-6


@given(byte_images, params)
def test_decomposition_identity_is_bit_exact(img, p):
    u, v = decompose(img, p)
    np.testing.assert_array_equal(u + v, img)


def test_decompose_trivial_cases(rng):
    c = np.full((8, 8), 99.0)
    u, v = decompose(c, DiffusionParams(iterations=30))
    assert not v.any()
    img = rng.uniform(0, 255, (8, 8))
    u, v = decompose(img, DiffusionParams(iterations=0))
    np.testing.assert_array_equal(u, img)
    assert not v.any()


@given(byte_images, params)
def test_maximum_principle_and_conservation(img, p):
    out = diffuse_step(img, p)
    assert out.min() >= img.min()
    assert out.max() <= img.max()
    total = img.sum()
    assert abs(out.sum() - total) <= 1e-9 * max(abs(total), 1.0)


@given(byte_images, params)
def test_texture_sums_to_zero(img, p):
    _, v = decompose(img, p)
    assert abs(v.sum()) <= 1e-9 * max(img.sum(), 1.0)


@given(byte_images, params)
def test_range_non_increasing(img, p):
    prev = np.ptp(img)
    out = img
    for _ in range(10):
        out = diffuse_step(out, p)
        assert np.ptp(out) <= prev
        prev = np.ptp(out)


def test_edges_survive_better_than_flat_noise():
    # a high-contrast step keeps most of its jump while low-contrast ripples flatten
    img = np.zeros((16, 32))
    img[:, 16:] = 200.0
    img += 3.0 * np.cos(np.arange(32) * math.pi)[None, :]
    u = diffuse(img, DiffusionParams(kappa=15.0, iterations=50))
    assert u[:, 20].mean() - u[:, 11].mean() > 180
    assert np.std(u[:, 2:10]) < 0.5
