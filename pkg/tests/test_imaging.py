"""Image codec, mask sampling/persistence, and projection tests."""

import numpy as np
import pytest

from quatcomplete import (
    ConfigError,
    DataError,
    ObservationMask,
    QuaternionMatrix,
    decode_image,
    encode_image,
    project_omega,
    sample_mask,
)
from quatcomplete.imaging import (
    load_image,
    sample_image_path,
    save_image,
    validate_image,
)


def test_encode_pure_red_pixel():
    img = np.zeros((1, 1, 3))
    img[0, 0] = (255, 0, 0)
    q = encode_image(img)
    assert q.entry(0, 0).components() == (0, 255, 0, 0)


def test_encode_black_image():
    q = encode_image(np.zeros((4, 5, 3)))
    assert q.frobenius_norm() == 0.0


def test_encode_output_is_pure():
    rng = np.random.default_rng(0)
    q = encode_image(rng.uniform(0, 255, (6, 7, 3)))
    assert q.is_pure()


def test_round_trip_integer_images():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (5, 4, 3)).astype(float)
    back = decode_image(encode_image(img))
    assert np.array_equal(back, img)


def test_decode_values():
    q = QuaternionMatrix(np.zeros((1, 1)), np.array([[10.0]]),
                         np.array([[20.0]]), np.array([[30.0]]))
    assert decode_image(q)[0, 0].tolist() == [10.0, 20.0, 30.0]


def test_decode_clamps():
    q = QuaternionMatrix(np.zeros((1, 1)), np.array([[300.0]]),
                         np.array([[-5.0]]), np.array([[128.0]]))
    assert decode_image(q)[0, 0].tolist() == [255.0, 0.0, 128.0]


def test_decode_warns_on_real_residue():
    q = QuaternionMatrix(np.full((2, 2), 1e-3), *[np.zeros((2, 2))] * 3)
    with pytest.warns(UserWarning, match="real quaternion component"):
        decode_image(q)


def test_decode_silent_on_tiny_residue():
    import warnings

    q = QuaternionMatrix(np.full((2, 2), 1e-9), *[np.zeros((2, 2))] * 3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        decode_image(q)


def test_validate_image_errors():
    with pytest.raises(DataError):
        validate_image(np.zeros((3, 3)))
    with pytest.raises(DataError):
        validate_image(np.zeros((3, 3, 4)))
    with pytest.raises(DataError):
        validate_image(np.full((3, 3, 3), np.nan))
    with pytest.raises(DataError):
        validate_image(np.full((3, 3, 3), 300.0))


# -- masks ------------------------------------------------------------------

def test_sample_mask_extremes():
    assert sample_mask(5, 7, 1.0, 0).n_observed == 35
    assert sample_mask(5, 7, 0.0, 0).n_observed == 0


def test_sample_mask_count_and_determinism():
    m1 = sample_mask(100, 100, 0.3, seed=42)
    m2 = sample_mask(100, 100, 0.3, seed=42)
    assert m1.n_observed == 3000
    assert np.array_equal(m1.observed, m2.observed)
    m3 = sample_mask(100, 100, 0.3, seed=43)
    assert not np.array_equal(m1.observed, m3.observed)


def test_sample_mask_rejects_bad_ratio():
    with pytest.raises(ConfigError):
        sample_mask(4, 4, 1.5, 0)
    with pytest.raises(ConfigError):
        sample_mask(4, 4, -0.1, 0)


def test_mask_complement_partition():
    m = sample_mask(9, 9, 0.4, seed=3)
    c = m.complement()
    assert m.n_observed + c.n_observed == 81
    assert not np.any(m.observed & c.observed)


def test_mask_from_indices_bounds():
    with pytest.raises(DataError):
        ObservationMask.from_indices(3, 3, [(3, 0)])


def test_mask_save_load_round_trip(tmp_path):
    m = sample_mask(12, 10, 0.35, seed=99)
    path = tmp_path / "mask.txt"
    m.save(path)
    loaded = ObservationMask.load(path)
    assert loaded.shape == m.shape
    assert np.array_equal(loaded.observed, m.observed)
    assert loaded.sampling_ratio == m.sampling_ratio
    assert loaded.seed == 99
    # byte-exact round trip through save again
    path2 = tmp_path / "mask2.txt"
    loaded.save(path2)
    assert path.read_bytes() == path2.read_bytes()


def test_mask_file_format(tmp_path):
    m = ObservationMask.from_indices(2, 3, [(0, 1), (1, 2)])
    path = tmp_path / "m.txt"
    m.save(path)
    lines = path.read_text().splitlines()
    assert lines[0].split() == ["2", "3", repr(2 / 6), "explicit"]
    assert lines[1:] == ["0,1", "1,2"]


def test_mask_load_errors(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("")
    with pytest.raises(DataError):
        ObservationMask.load(path)
    path.write_text("3 3\n")
    with pytest.raises(DataError):
        ObservationMask.load(path)


# -- projection ----------------------------------------------------------------

def test_project_full_and_empty():
    rng = np.random.default_rng(4)
    x = QuaternionMatrix.random(5, 5, rng)
    assert project_omega(x, ObservationMask.full(5, 5)).allclose(x, atol=0)
    assert project_omega(x, ObservationMask.empty(5, 5)).frobenius_norm() == 0.0


def test_project_idempotent_and_complementary():
    rng = np.random.default_rng(5)
    x = QuaternionMatrix.random(5, 5, rng)
    m = sample_mask(5, 5, 0.5, seed=1)
    once = project_omega(x, m)
    assert project_omega(once, m).allclose(once, atol=0)
    total = once + project_omega(x, m.complement())
    assert total.allclose(x, atol=0)
    assert once.frobenius_norm() <= x.frobenius_norm()


def test_project_dimension_mismatch():
    rng = np.random.default_rng(6)
    with pytest.raises(DataError):
        project_omega(QuaternionMatrix.random(4, 4, rng), ObservationMask.full(4, 5))


# -- file I/O --------------------------------------------------------------------

def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, (8, 9, 3)).astype(float)
    path = tmp_path / "img.png"
    save_image(path, img)
    assert np.array_equal(load_image(path), img)


def test_load_rgba_warns(tmp_path):
    from PIL import Image

    rgba = np.zeros((4, 4, 4), dtype=np.uint8)
    rgba[:, :, 0] = 200
    rgba[:, :, 3] = 128
    path = tmp_path / "a.png"
    Image.fromarray(rgba, mode="RGBA").save(path)
    with pytest.warns(UserWarning, match="alpha"):
        img = load_image(path)
    assert img.shape == (4, 4, 3)
    assert img[0, 0, 0] == 200


def test_load_unreadable_raises(tmp_path):
    path = tmp_path / "not_an_image.png"
    path.write_text("hello")
    with pytest.raises(DataError):
        load_image(path)
    with pytest.raises(DataError):
        load_image(tmp_path / "absent.png")


def test_bundled_asset():
    img = load_image(sample_image_path())
    assert img.shape == (64, 64, 3)
    assert img.min() >= 0.0 and img.max() <= 255.0


def test_encode_after_decode_identity_on_pure():
    rng = np.random.default_rng(8)
    q = QuaternionMatrix(np.zeros((5, 6)), *rng.uniform(0, 255, (3, 5, 6)))
    back = encode_image(decode_image(q))
    assert back.allclose(q, atol=0)
