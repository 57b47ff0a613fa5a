import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mdcs.exceptions import FormatError, ValidationError
from mdcs.lfio import (
    SyntheticSceneSpec,
    read_tensor,
    save_png,
    spectral_to_linear_rgb,
    spectral_to_rgb,
    synth_scene,
    write_tensor,
)


def test_tns_round_trip_f8(tmp_path, rng):
    T = rng.standard_normal((3, 4, 2, 2, 5))
    write_tensor(tmp_path / "a.tns", T)
    assert np.array_equal(read_tensor(tmp_path / "a.tns"), T)


def test_tns_round_trip_f4(tmp_path, rng):
    T = rng.uniform(-1, 1, size=(6, 5, 3))
    write_tensor(tmp_path / "a.tns", T, dtype="f4")
    back = read_tensor(tmp_path / "a.tns")
    assert np.max(np.abs(back - T) / np.maximum(np.abs(T), 1e-30)) <= 2.0 ** -23


def test_tns_layout(tmp_path):
    T = np.arange(6.0).reshape((2, 3), order="F")
    write_tensor(tmp_path / "a.tns", T)
    raw = (tmp_path / "a.tns").read_bytes()
    assert raw[:4] == b"MDCS" and raw[8] == 2
    assert raw[25] == 8
    assert np.array_equal(np.frombuffer(raw[26:], "<f8"), np.arange(6.0))


def test_tns_single_element(tmp_path):
    write_tensor(tmp_path / "one.tns", np.full((1, 1, 1, 1, 1), 3.5))
    back = read_tensor(tmp_path / "one.tns")
    assert back.shape == (1, 1, 1, 1, 1) and back.item() == 3.5


def test_tns_errors(tmp_path):
    p = tmp_path / "a.tns"
    write_tensor(p, np.zeros((2, 2)))
    raw = p.read_bytes()
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError, match="magic"):
        read_tensor(p)
    p.write_bytes(raw[:-3])
    with pytest.raises(FormatError, match="bytes"):
        read_tensor(p)
    with pytest.raises(ValidationError):
        write_tensor(p, np.zeros(2), dtype="i4")


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.tuples(*[st.integers(1, 4)] * 3), elements=st.floats(-1e6, 1e6)))
def test_tns_property(tmp_path_factory, T):
    p = tmp_path_factory.mktemp("tns") / "t.tns"
    write_tensor(p, T)
    assert np.array_equal(read_tensor(p), T)


def test_synth_zero_primitives():
    L = synth_scene(SyntheticSceneSpec(primitives=0))
    assert L.shape == (20, 20, 4, 4, 13) and not L.any()


def test_synth_zero_disparity_views_identical():
    L = synth_scene(SyntheticSceneSpec(disparity=0.0, seed=4))
    for u in range(4):
        for v in range(4):
            assert np.array_equal(L[:, :, u, v], L[:, :, 0, 0])


def _centroid(img):
    s = np.arange(img.shape[0])[:, None]
    t = np.arange(img.shape[1])[None, :]
    return np.sum(s * img) / img.sum(), np.sum(t * img) / img.sum()


def test_synth_parallax_shift():
    L = synth_scene(SyntheticSceneSpec(dims=(40, 40, 4, 4, 13), primitives=1, disparity=1.0, seed=7))
    img = L.sum(axis=4)
    c00 = _centroid(img[:, :, 0, 0])
    c10 = _centroid(img[:, :, 1, 0])
    c01 = _centroid(img[:, :, 0, 1])
    # the blob is sampled on a finite grid, so the centroid moves by one pixel up to edge truncation
    assert c10[0] - c00[0] == pytest.approx(1.0, abs=1e-2)
    assert c01[1] - c00[1] == pytest.approx(1.0, abs=1e-2)
    assert c10[1] == pytest.approx(c00[1], abs=1e-9)


def test_synth_deterministic_and_normalized():
    spec = SyntheticSceneSpec(seed=11)
    a, b = synth_scene(spec), synth_scene(spec)
    assert np.array_equal(a, b) and a.max() == 1.0 and a.min() >= 0
    assert not np.array_equal(a, synth_scene(SyntheticSceneSpec(seed=12)))


def test_rgb_black_and_gray():
    assert not spectral_to_rgb(np.zeros((4, 4, 1, 1, 13))).any()
    gray = spectral_to_rgb(np.full((4, 4, 1, 1, 13), 0.5))
    assert gray.dtype == np.uint8 and gray.shape == (4, 4, 3)
    assert int(gray.max()) - int(gray.min()) <= 10


def test_rgb_monochromatic_green():
    L = np.zeros((2, 2, 1, 1, 13))
    L[..., 6] = 1.0  # 550 nm
    px = spectral_to_rgb(L)[0, 0].astype(int)
    assert px[1] > px[0] and px[1] > px[2]


def test_rgb_linear_before_clipping(rng):
    a = rng.uniform(size=(3, 3, 2, 2, 13))
    b = rng.uniform(size=(3, 3, 2, 2, 13))
    np.testing.assert_allclose(
        spectral_to_linear_rgb(2 * a + b, view=(1, 0)),
        2 * spectral_to_linear_rgb(a, view=(1, 0)) + spectral_to_linear_rgb(b, view=(1, 0)),
        atol=1e-12,
    )


def test_rgb_needs_wavelengths():
    with pytest.raises(ValidationError):
        spectral_to_rgb(np.zeros((2, 2, 1, 1, 7)))
    img = spectral_to_rgb(np.ones((2, 2, 1, 1, 7)), wavelengths=np.linspace(420, 680, 7))
    assert img.shape == (2, 2, 3)


def test_png_write(tmp_path):
    from PIL import Image

    img = spectral_to_rgb(synth_scene(SyntheticSceneSpec(seed=1)))
    save_png(tmp_path / "v.png", img)
    assert np.array_equal(np.asarray(Image.open(tmp_path / "v.png")), img)
