from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from adtex import imgcore
from adtex.imgcore import (
    CorruptData,
    TileTooLarge,
    UnsupportedFormat,
    load_float,
    load_image,
    save_float,
    save_image,
    split_tiles,
)


def test_pgm_byte_255_loads_as_255(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 1\n255\n" + bytes([255, 0]))
    np.testing.assert_array_equal(load_image(p), [[255.0, 0.0]])


def test_pgm_header_comments_and_whitespace(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5 # made by hand\n# another\n 3\t2 \n255\n" + bytes(range(6)))
    np.testing.assert_array_equal(load_image(p), [[0, 1, 2], [3, 4, 5]])


def test_pgm_16bit_is_rescaled(tmp_path):
    p = tmp_path / "w.pgm"
    p.write_bytes(b"P5\n2 1\n65535\n" + np.array([65535, 0], dtype=">u2").tobytes())
    np.testing.assert_allclose(load_image(p), [[255.0, 0.0]])


def test_png_rgb_luminance(tmp_path):
    rgb = np.array([[[255, 255, 255], [255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
    p = tmp_path / "rgb.png"
    Image.fromarray(rgb).save(p)
    img = load_image(p)
    assert img[0, 0] == pytest.approx(255.0, abs=1e-12)
    assert img[0, 1] == pytest.approx(76.245, abs=1e-12)
    assert img[0, 2] == pytest.approx(0.587 * 255, abs=1e-12)
    assert img[0, 3] == pytest.approx(0.114 * 255, abs=1e-12)


def test_png_gray(tmp_path):
    p = tmp_path / "g.png"
    Image.fromarray(np.array([[0, 17, 255]], dtype=np.uint8)).save(p)
    np.testing.assert_array_equal(load_image(p), [[0, 17, 255]])


def test_load_errors_name_the_path(tmp_path):
    missing = tmp_path / "missing.pgm"
    with pytest.raises(FileNotFoundError, match="missing.pgm"):
        load_image(missing)
    junk = tmp_path / "junk.bmp"
    junk.write_bytes(b"BM not supported")
    with pytest.raises(UnsupportedFormat, match="junk.bmp"):
        load_image(junk)
    short = tmp_path / "short.pgm"
    short.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(CorruptData, match="short.pgm"):
        load_image(short)
    bad_png = tmp_path / "bad.png"
    bad_png.write_bytes(imgcore.PNG_SIGNATURE + b"garbage")
    with pytest.raises(CorruptData, match="bad.png"):
        load_image(bad_png)


@pytest.mark.parametrize("value, byte", [(127.5, 128), (-3.0, 0), (300.0, 255), (0.49, 0), (254.5, 255), (0.49999999999999994, 0), (2.5, 3)])
def test_save_clamps_and_rounds_half_up(tmp_path, value, byte):
    p = tmp_path / "x.pgm"
    save_image(np.array([[value]]), p)
    assert p.read_bytes()[-1] == byte


def test_saved_pgm_is_plain_netpbm(tmp_path):
    p = tmp_path / "x.pgm"
    save_image(np.array([[1.0, 2.0, 3.0]]), p)
    assert p.read_bytes() == b"P5\n3 1\n255\n\x01\x02\x03"


def _round_half_up(x):
    return float(Decimal(x).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(-50, 300, allow_nan=False)))
def test_save_load_equals_clamp_round(tmp_path_factory, img):
    d = tmp_path_factory.mktemp("rt")
    for name in ("x.pgm", "x.png"):
        save_image(img, d / name)
        expected = np.vectorize(_round_half_up)(np.clip(img, 0, 255))
        np.testing.assert_array_equal(load_image(d / name), expected)


def test_float_sidecar_roundtrip_and_layout(tmp_path, rng):
    v = rng.normal(0, 20, (5, 7))
    p = tmp_path / "v.atxf"
    save_float(v, p)
    raw = p.read_bytes()
    assert raw.startswith(b"ATXF1\n7 5\n")
    assert len(raw) == len(b"ATXF1\n7 5\n") + 8 * 35
    np.testing.assert_array_equal(np.frombuffer(raw[len(b"ATXF1\n7 5\n"):], "<f8").reshape(5, 7), v)
    np.testing.assert_array_equal(load_float(p), v)


def test_as_gray_rejects_nan():
    with pytest.raises(ValueError):
        imgcore.as_gray(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        imgcore.as_gray(np.zeros(4))


@pytest.mark.parametrize(
    "w, h, tw, th, n",
    [(512, 512, 128, 128, 16), (200, 200, 200, 200, 1), (640, 480, 200, 200, 6), (600, 600, 200, 200, 9)],
)
def test_split_tile_counts(w, h, tw, th, n):
    assert len(split_tiles(np.zeros((h, w)), tw, th)) == n


def test_split_discards_remainder_in_row_major_order():
    img = np.arange(480 * 640, dtype=float).reshape(480, 640)
    tiles = split_tiles(img, 200, 200)
    np.testing.assert_array_equal(tiles[0], img[:200, :200])
    np.testing.assert_array_equal(tiles[2], img[:200, 400:600])
    np.testing.assert_array_equal(tiles[3], img[200:400, :200])


def test_split_too_large():
    with pytest.raises(TileTooLarge):
        split_tiles(np.zeros((10, 10)), 11, 5)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 6), st.integers(1, 6), st.integers(0, 3), st.integers(0, 3))
def test_split_tiles_properties(rows, cols, tw, th, extra_w, extra_h):
    h, w = rows * th + extra_h, cols * tw + extra_w
    img = np.arange(h * w, dtype=float).reshape(h, w)
    tiles = split_tiles(img, tw, th)
    assert len(tiles) == (w // tw) * (h // th)
    # values are unique, so disjointness = no value appears twice
    seen = np.concatenate([t.ravel() for t in tiles])
    assert len(np.unique(seen)) == seen.size
    ncols = w // tw
    grid = np.block([[tiles[r * ncols + c] for c in range(ncols)] for r in range(h // th)])
    np.testing.assert_array_equal(grid, img[: (h // th) * th, : ncols * tw])
