import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from smn.rng import Rng
from smn.signal import (
    PSNR_CAP_DB,
    ImageFormatError,
    ImageSignal,
    fft_radix2,
    load_image,
    make_grid,
    next_pow2,
    peak_frequencies,
    psnr,
    sample_image,
    save_image,
    spectrum_1d,
    test_card,
)


# -- image files ------------------------------------------------------------------


def test_endpoints_map_exactly(tmp_path):
    arr = np.array([[0, 255], [128, 1]], dtype=np.uint8)
    Image.fromarray(arr).save(tmp_path / "g.png")
    img = load_image(tmp_path / "g.png")
    assert img.channels == 1
    assert img.pixels[0, 0, 0] == 0.0 and img.pixels[0, 1, 0] == 1.0
    assert img.pixels[1, 0, 0] == 128 / 255


@pytest.mark.parametrize("ext", ["png", "ppm"])
def test_save_load_quantization_bound(tmp_path, ext):
    img = ImageSignal(Rng(4).random((9, 13, 3)))
    save_image(img, tmp_path / f"x.{ext}")
    back = load_image(tmp_path / f"x.{ext}")
    assert back.pixels.shape == (9, 13, 3)
    assert np.abs(back.pixels - img.pixels).max() <= 1 / (2 * 255) + 1e-12


def test_round_trip_of_quantized_image_is_exact(tmp_path):
    q = Rng(2).random((5, 6, 3))
    img = ImageSignal(np.rint(q * 255) / 255)
    save_image(img, tmp_path / "q.png")
    assert np.array_equal(load_image(tmp_path / "q.png").pixels, img.pixels)


def test_unsupported_modes(tmp_path):
    Image.new("RGBA", (4, 4)).save(tmp_path / "a.png")
    Image.fromarray(np.zeros((4, 4), dtype=np.uint16)).save(tmp_path / "d.png")
    for name in ("a.png", "d.png"):
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / name)
    (tmp_path / "junk.png").write_bytes(b"not an image")
    with pytest.raises(ImageFormatError):
        load_image(tmp_path / "junk.png")


def test_image_signal_validation():
    with pytest.raises(ValueError):
        ImageSignal(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        ImageSignal(np.zeros((2, 2, 2)))


def test_targets_round_trip():
    img = ImageSignal(Rng(0).random((4, 5, 3)))
    t = img.targets()
    assert t.shape == (3, 20)
    assert np.array_equal(t[:, 6], img.pixels[1, 1])
    assert np.array_equal(ImageSignal.from_targets(t, 5, 4).pixels, img.pixels)


def test_center_crop():
    px = np.arange(6 * 8, dtype=float).reshape(6, 8) / 100
    crop = ImageSignal(px).center_crop(4, 2)
    assert np.array_equal(crop.pixels[:, :, 0], px[2:4, 2:6])
    with pytest.raises(ValueError):
        ImageSignal(px).center_crop(9, 2)


def test_sample_image():
    img = sample_image()
    assert (img.width, img.height, img.channels) == (256, 256, 3)
    assert 0.1 < img.pixels.mean() < 0.9


@pytest.mark.parametrize("kind", ["gray", "checkerboard", "grating"])
def test_test_cards(kind):
    img = test_card(kind, 20, 10)
    assert img.pixels.shape == (10, 20, 3)
    assert img.pixels.min() >= 0 and img.pixels.max() <= 1
    with pytest.raises(ValueError):
        test_card("plaid", 4, 4)


# -- grids ------------------------------------------------------------------------


def test_grid_two_by_two():
    g = make_grid(2, 2)
    assert g.coords.T.tolist() == [[-1, -1], [1, -1], [-1, 1], [1, 1]]


def test_grid_three_wide():
    assert make_grid(3, 2).coords[0, :3].tolist() == [-1.0, 0.0, 1.0]


def test_grid_symmetric_and_bounded():
    g = make_grid(7, 5)
    pts = {tuple(p) for p in np.round(g.coords.T, 12)}
    assert pts == {(-x + 0.0, y) for x, y in pts}
    assert np.abs(g.coords).max() == 1.0


def test_grid_order_matches_pixels():
    w, h = 5, 3
    g = make_grid(w, h)
    xs, ys = np.linspace(-1, 1, w), np.linspace(-1, 1, h)
    for j in range(w * h):
        r, c = divmod(j, w)
        assert g.coords[0, j] == xs[c] and g.coords[1, j] == ys[r]


def test_grid_rejects_degenerate():
    with pytest.raises(ValueError):
        make_grid(1, 5)


# -- psnr -------------------------------------------------------------------------


def test_psnr_analytic():
    target = np.zeros((1, 100))
    assert psnr(np.full((1, 100), 0.01), target) == pytest.approx(40.0)


def test_psnr_cap():
    x = Rng(1).random((3, 10))
    assert psnr(x, x) == PSNR_CAP_DB == 99.0


def test_psnr_clamps_predictions():
    target = np.ones((1, 4))
    assert psnr(np.full((1, 4), 3.0), target) == PSNR_CAP_DB


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((1, 3)), np.zeros((1, 4)))


@given(st.integers(0, 10**6))
def test_psnr_symmetric(seed):
    r = Rng(seed)
    a, b = r.random((3, 16)), r.random((3, 16))
    assert psnr(a, b) == psnr(b, a)


# -- spectra ------------------------------------------------------------------------


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 1000, 1024, 1025)] == [1, 2, 4, 1024, 1024, 2048]


@settings(deadline=None)
@given(st.integers(0, 11), st.integers(0, 10**6))
def test_fft_matches_numpy(log_n, seed):
    r = Rng(seed)
    x = r.normal(2**log_n) + 1j * r.normal(2**log_n)
    assert np.allclose(fft_radix2(x), np.fft.fft(x), rtol=0, atol=1e-9 * max(1, 2**log_n))


def test_fft_rejects_other_lengths():
    with pytest.raises(ValueError):
        fft_radix2(np.ones(6))


def tone_t(n=1024):
    return np.arange(n) / n


def test_pure_tone_single_peak():
    s = spectrum_1d(np.sin(2 * np.pi * 5 * tone_t()), 1 / 1024)
    assert peak_frequencies(s) == [5.0]
    assert s.magnitude_at(5) == pytest.approx(1 / np.sqrt(2))


def test_product_of_tones():
    t = tone_t()
    s = spectrum_1d(np.sin(2 * np.pi * 3 * t) * np.sin(2 * np.pi * 10 * t), 1 / 1024)
    assert peak_frequencies(s) == [7.0, 13.0]


def test_square_of_tone():
    s = spectrum_1d(np.sin(2 * np.pi * 5 * tone_t()) ** 2, 1 / 1024)
    assert peak_frequencies(s) == [0.0, 10.0]


def test_two_tone_sum():
    t = tone_t()
    s = spectrum_1d(np.sin(2 * np.pi * 3 * t) + 0.5 * np.sin(2 * np.pi * 10 * t), 1 / 1024)
    assert peak_frequencies(s) == [3.0, 10.0]


def test_zero_padding_and_axis():
    s = spectrum_1d(np.ones(5), 0.5)
    assert s.n_fft == 8
    assert s.frequencies[-1] == pytest.approx(1.0)  # Nyquist of spacing 0.5
    assert s.bin_width == pytest.approx(0.25)


def test_spectrum_errors():
    with pytest.raises(ValueError):
        spectrum_1d([], 1.0)
    with pytest.raises(ValueError):
        peak_frequencies(spectrum_1d(np.ones(4), 1.0), floor_db=3.0)


def test_silent_signal_has_no_peaks():
    assert peak_frequencies(spectrum_1d(np.zeros(16), 1.0)) == []


@settings(deadline=None)
@given(arrays(np.float64, st.integers(1, 700), elements=st.floats(-100, 100, allow_nan=False)))
def test_parseval(x):
    s = spectrum_1d(x, 1.0)
    padded_power = np.sum(x * x) / s.n_fft
    assert np.sum(s.magnitudes**2) == pytest.approx(padded_power, rel=1e-9, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60), st.floats(0.2, 1.0))
def test_addition_adds_no_frequencies(f1, f2, amp):
    t = tone_t()
    a, b = np.sin(2 * np.pi * f1 * t), amp * np.sin(2 * np.pi * f2 * t)
    pa = peak_frequencies(spectrum_1d(a, 1 / 1024), -40)
    pb = peak_frequencies(spectrum_1d(b, 1 / 1024), -40)
    assert set(peak_frequencies(spectrum_1d(a + b, 1 / 1024), -40)) <= set(pa) | set(pb)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60))
def test_multiplication_adds_frequencies(f1, f2):
    t = tone_t()
    a, b = np.sin(2 * np.pi * f1 * t), np.sin(2 * np.pi * f2 * t)
    peaks = set(peak_frequencies(spectrum_1d(a * b, 1 / 1024), -40))
    assert peaks - {float(f1), float(f2)}


def test_spectrum_text_format(tmp_path):
    s = spectrum_1d(np.sin(2 * np.pi * tone_t(8)), 1 / 8)
    s.save(tmp_path / "s.txt")
    lines = (tmp_path / "s.txt").read_text().splitlines()
    assert lines[0].startswith("#")
    rows = np.loadtxt(tmp_path / "s.txt")
    assert rows.shape == (5, 2)
    assert np.allclose(rows[:, 0], s.frequencies) and np.allclose(rows[:, 1], s.magnitudes)
