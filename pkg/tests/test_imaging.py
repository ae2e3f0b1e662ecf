import numpy as np
import pytest
from PIL import Image

import oracles
from lkfmixer.imaging import (
    AlphaChannelError,
    ImageFormatError,
    PlanarImage,
    UnsupportedBitDepthError,
    bicubic_resize,
    cubic,
    degrade,
    load_png,
    quantize,
    resize_image,
    resize_weights,
    rgb_to_y,
    save_png,
)
from lkfmixer.metrics import PSNR_CAP, psnr, psnr_y, ssim, ssim_y

rng = np.random.default_rng(17)


def rand_image(h, w, seed=None):
    r = rng if seed is None else np.random.default_rng(seed)
    return PlanarImage(r.integers(0, 256, size=(3, h, w), dtype=np.uint8))


# -- PNG I/O --------------------------------------------------------------------


def test_png_roundtrip(tmp_path):
    img = rand_image(13, 21)
    save_png(img, tmp_path / "a.png")
    back = load_png(tmp_path / "a.png")
    assert np.array_equal(back.pixels, img.pixels)
    assert (back.height, back.width) == (13, 21)


def test_grayscale_replicated(tmp_path):
    gray = rng.integers(0, 256, size=(5, 6), dtype=np.uint8)
    Image.fromarray(gray, "L").save(tmp_path / "g.png")
    img = load_png(tmp_path / "g.png")
    assert all(np.array_equal(img.pixels[c], gray) for c in range(3))


def test_png_errors_are_distinct(tmp_path):
    Image.fromarray(np.zeros((4, 4, 4), dtype=np.uint8), "RGBA").save(tmp_path / "a.png")
    with pytest.raises(AlphaChannelError):
        load_png(tmp_path / "a.png")
    Image.fromarray(np.full((4, 4), 300, dtype=np.uint16)).save(tmp_path / "d.png")
    with pytest.raises(UnsupportedBitDepthError):
        load_png(tmp_path / "d.png")
    (tmp_path / "bad.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really")
    with pytest.raises(ImageFormatError):
        load_png(tmp_path / "bad.png")
    with pytest.raises(FileNotFoundError):
        load_png(tmp_path / "missing.png")
    assert not issubclass(AlphaChannelError, UnsupportedBitDepthError)


def test_quantize_rules():
    assert quantize(np.array([1.2, -0.3, 0.5, 0.0, 1.0, 127.4 / 255])).tolist() == [255, 0, 128, 0, 255, 127]


def test_float_roundtrip_exact():
    img = rand_image(4, 5)
    assert PlanarImage.from_float(img.to_float()) == img
    assert PlanarImage.from_tensor(img.to_tensor()) == img


# -- colour -----------------------------------------------------------------------


def _flat(v):
    return PlanarImage(np.full((3, 2, 2), v, dtype=np.uint8))


def test_luma_reference_points():
    assert np.allclose(rgb_to_y(_flat(0)), 16)
    assert np.allclose(rgb_to_y(_flat(255)), 235, atol=1e-3)
    half = PlanarImage.from_float(np.full((3, 1, 1), 0.5))
    # 0.5 quantizes to 128, so check the formula on the float directly too
    assert abs(16 + (65.481 + 128.553 + 24.966) * 0.5 - 125.5) < 1e-3
    assert np.allclose(rgb_to_y(half), 16 + 219.0 * 128 / 255, atol=1e-9)


def test_luma_matches_oracle():
    img = rand_image(7, 9)
    assert np.allclose(rgb_to_y(img), oracles.luma(img.pixels), atol=1e-12)


# -- bicubic -----------------------------------------------------------------------


def test_cubic_kernel_interpolates():
    assert cubic(np.array([0.0]))[0] == 1
    assert np.allclose(cubic(np.array([-2.0, -1.0, 1.0, 2.0, 2.5])), 0)
    xs = np.linspace(-0.99, 0.99, 7)
    assert np.allclose(cubic(xs) + cubic(xs - 1) + cubic(xs + 1) + cubic(xs - 2) + cubic(xs + 2), 1)


@pytest.mark.parametrize("shape", [(8, 8), (5, 11), (1, 3)])
def test_identity_resize(shape):
    x = rng.standard_normal(shape)
    assert np.allclose(bicubic_resize(x, *shape), x, atol=1e-12)


@pytest.mark.parametrize("out", [(3, 5), (17, 9), (40, 40)])
def test_constant_preserved(out):
    assert np.allclose(bicubic_resize(np.full((12, 10), 0.37), *out), 0.37, atol=1e-12)


@pytest.mark.parametrize("src,dst", [((16, 16), (8, 8)), ((12, 9), (4, 3)), ((7, 6), (14, 18)), ((10, 10), (7, 13))])
def test_two_pass_oracle(src, dst):
    x = rng.standard_normal(src)
    assert np.max(np.abs(bicubic_resize(x, *dst) - oracles.bicubic_two_pass(x, *dst))) < 1e-6


def test_weight_rows_sum_to_one():
    for n_in, n_out in [(16, 8), (9, 3), (5, 20)]:
        assert np.allclose(resize_weights(n_in, n_out).sum(axis=1), 1)


def test_degrade_crops_to_multiple():
    img = rand_image(81, 101)
    lr = degrade(img, 2)
    assert (lr.height, lr.width) == (40, 50)
    lr3 = degrade(img, 3)
    assert (lr3.height, lr3.width) == (27, 33)
    with pytest.raises(ValueError):
        degrade(rand_image(2, 2), 3)


def test_bicubic_sr_beats_gray():
    from lkfmixer.train import synthetic_images

    hr = synthetic_images(1, 96, seed=4)[0]
    lr = degrade(hr, 4)
    up = resize_image(lr, hr.height, hr.width)
    gray = PlanarImage(np.full_like(hr.pixels, 128))
    assert psnr_y(hr, up, 4) > psnr_y(hr, gray, 4)


# -- metrics --------------------------------------------------------------------------


def test_identical_images():
    img = rand_image(24, 24)
    assert psnr_y(img, img, 2) == PSNR_CAP
    assert ssim_y(img, img, 2) == pytest.approx(1.0, abs=1e-12)


def test_uniform_offset_psnr():
    a = rng.uniform(20, 200, size=(30, 30))
    assert psnr(a, a + 1.0, shave=3) == pytest.approx(20 * np.log10(255), abs=1e-9)
    assert psnr(a, a + 1.0) == pytest.approx(48.13, abs=0.01)


def test_metrics_scalar_oracle():
    for seed in range(5):
        a = rand_image(22, 20, seed)
        b = rand_image(22, 20, seed + 100)
        ya, yb = rgb_to_y(a), rgb_to_y(b)
        assert abs(psnr_y(a, b, 2) - oracles.psnr_scalar(ya.tolist(), yb.tolist(), 2)) < 1e-6
        assert abs(ssim_y(a, b, 2) - oracles.ssim_scalar(ya.tolist(), yb.tolist(), 2)) < 1e-6


def test_metric_symmetry_and_flip_invariance():
    a, b = rand_image(26, 24), rand_image(26, 24)
    ya, yb = rgb_to_y(a), rgb_to_y(b)
    assert psnr(ya, yb, 3) == psnr(yb, ya, 3)
    assert ssim(ya, yb, 3) == pytest.approx(ssim(yb, ya, 3), abs=1e-12)
    assert psnr(ya[:, ::-1], yb[:, ::-1], 3) == pytest.approx(psnr(ya, yb, 3), abs=1e-9)
    assert ssim(ya[:, ::-1], yb[:, ::-1], 3) == pytest.approx(ssim(ya, yb, 3), abs=1e-9)


def test_metric_errors():
    a = np.zeros((20, 20))
    with pytest.raises(ValueError, match="mismatch"):
        psnr(a, np.zeros((20, 21)))
    with pytest.raises(ValueError):
        psnr(a, a, shave=10)
    with pytest.raises(ValueError):
        ssim(np.zeros((12, 12)), np.zeros((12, 12)), shave=1)
