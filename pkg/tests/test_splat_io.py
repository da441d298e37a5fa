import struct

import numpy as np
import pytest

from conftest import random_scene
from splatfx.errors import (DataError, EmptySelectionError, FormatError,
                            IoError, MaskError)
from splatfx.splat_io import (LOGIT_CLAMP, Scene, SelectionMask, bounds,
                              full_mask, load_mask, load_scene, logit,
                              make_mask, quat_to_matrix, save_scene, sigmoid)

REQUIRED = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
            "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]


def ply_bytes(rows, names=REQUIRED):
    header = ["ply", "format binary_little_endian 1.0",
              f"element vertex {len(rows)}"]
    header += [f"property float {n}" for n in names]
    header.append("end_header")
    body = b"".join(struct.pack(f"<{len(names)}f", *row) for row in rows)
    return ("\n".join(header) + "\n").encode() + body


def test_single_point_decoding(tmp_path):
    # raw file stores logit opacity and log scales; zeros decode to 0.5 / 1.0
    row = [1.0, 2.0, 3.0,  0.0, 0.0, 0.0,  0.0,  0.0, 0.0, 0.0,
           1.0, 0.0, 0.0, 0.0]
    path = tmp_path / "one.ply"
    path.write_bytes(ply_bytes([row]))
    scene = load_scene(path)
    assert len(scene) == 1
    np.testing.assert_allclose(scene.positions[0], [1.0, 2.0, 3.0])
    assert scene.opacities[0] == pytest.approx(0.5)
    np.testing.assert_allclose(scene.scales[0], [1.0, 1.0, 1.0])
    np.testing.assert_allclose(scene.rotations[0], [1.0, 0.0, 0.0, 0.0])
    assert scene.sh_rest is None
    splat = scene[0]
    assert splat.opacity == pytest.approx(0.5)


def test_opacity_and_scale_encoding(tmp_path):
    row = [0.0, 0.0, 0.0,  0.1, 0.2, 0.3,  2.0,  -1.0, 0.0, 1.0,
           1.0, 0.0, 0.0, 0.0]
    path = tmp_path / "enc.ply"
    path.write_bytes(ply_bytes([row]))
    scene = load_scene(path)
    assert scene.opacities[0] == pytest.approx(1.0 / (1.0 + np.exp(-2.0)), rel=1e-6)
    np.testing.assert_allclose(scene.scales[0],
                               np.exp([-1.0, 0.0, 1.0]), rtol=1e-6)


def test_quaternion_normalized_on_load(tmp_path):
    row = [0.0, 0.0, 0.0, 0, 0, 0, 0.0, 0, 0, 0, 2.0, 0.0, 2.0, 0.0]
    path = tmp_path / "quat.ply"
    path.write_bytes(ply_bytes([row]))
    scene = load_scene(path)
    assert np.linalg.norm(scene.rotations[0]) == pytest.approx(1.0)
    s = 1.0 / np.sqrt(2.0)
    np.testing.assert_allclose(scene.rotations[0], [s, 0.0, s, 0.0], atol=1e-7)


def test_missing_required_field(tmp_path):
    names = [n for n in REQUIRED if n != "opacity"]
    row = [0.0] * len(names)
    path = tmp_path / "bad.ply"
    path.write_bytes(ply_bytes([row], names))
    with pytest.raises(FormatError) as exc:
        load_scene(path)
    assert exc.value.field == "opacity"


def test_not_a_ply(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_bytes(b"obj\nwhatever\n")
    with pytest.raises(FormatError):
        load_scene(path)


def test_ascii_format_rejected(tmp_path):
    path = tmp_path / "ascii.ply"
    path.write_bytes(b"ply\nformat ascii 1.0\nend_header\n")
    with pytest.raises(FormatError):
        load_scene(path)


def test_truncated_body(tmp_path):
    data = ply_bytes([[0.0] * 14])
    path = tmp_path / "short.ply"
    path.write_bytes(data[:-8])
    with pytest.raises(IoError):
        load_scene(path)


def test_nonfinite_value_reports_index(tmp_path):
    rows = [[0.0] * 6 + [0.0] + [0.0] * 3 + [1.0, 0.0, 0.0, 0.0]
            for _ in range(3)]
    rows[2][0] = float("nan")
    path = tmp_path / "nan.ply"
    path.write_bytes(ply_bytes(rows))
    with pytest.raises(DataError) as exc:
        load_scene(path)
    assert exc.value.index == 2


def test_missing_file():
    with pytest.raises(IoError):
        load_scene("/nonexistent/scene.ply")


def test_round_trip_preserves_attributes(tmp_path, rng):
    scene = random_scene(rng, 64)
    p = tmp_path / "rt.ply"
    save_scene(scene, p)
    again = load_scene(p)
    # float32 storage, so about 7 significant digits survive
    np.testing.assert_allclose(again.positions, scene.positions, atol=1e-5)
    np.testing.assert_allclose(again.scales, scene.scales, rtol=1e-5)
    np.testing.assert_allclose(again.opacities, scene.opacities, atol=1e-6)
    np.testing.assert_allclose(again.sh_dc, scene.sh_dc, atol=1e-5)
    dots = np.abs(np.sum(again.rotations * scene.rotations, axis=1))
    np.testing.assert_allclose(dots, 1.0, atol=1e-6)
    np.testing.assert_allclose(again.sh_rest, scene.sh_rest, atol=1e-5)


def test_round_trip_without_rest_band(tmp_path, rng):
    scene = random_scene(rng, 8)
    scene.sh_rest = None
    p = tmp_path / "norest.ply"
    save_scene(scene, p)
    assert load_scene(p).sh_rest is None


def test_second_round_trip_is_stable(tmp_path, rng):
    # once through float32, a second save/load stays put (up to one f32 ulp
    # of quaternion renormalization jitter)
    scene = random_scene(rng, 32)
    p1, p2 = tmp_path / "a.ply", tmp_path / "b.ply"
    save_scene(scene, p1)
    once = load_scene(p1)
    save_scene(once, p2)
    twice = load_scene(p2)
    np.testing.assert_array_equal(twice.positions, once.positions)
    np.testing.assert_array_equal(twice.sh_dc, once.sh_dc)
    np.testing.assert_allclose(twice.scales, once.scales, rtol=1e-7)
    np.testing.assert_allclose(twice.opacities, once.opacities, atol=1e-7)
    np.testing.assert_allclose(twice.rotations, once.rotations, atol=2e-7)


def test_extreme_opacity_stays_finite(tmp_path, rng):
    scene = random_scene(rng, 4)
    scene.opacities = np.array([0.0, 1.0, 0.5, 1e-9])
    p = tmp_path / "extreme.ply"
    save_scene(scene, p)
    again = load_scene(p)
    assert np.isfinite(again.opacities).all()
    assert again.opacities[0] == pytest.approx(sigmoid(np.array([-LOGIT_CLAMP]))[0])
    assert again.opacities[1] == pytest.approx(sigmoid(np.array([LOGIT_CLAMP]))[0])


def test_logit_sigmoid_inverse():
    p = np.linspace(0.01, 0.99, 23)
    np.testing.assert_allclose(sigmoid(logit(p)), p, atol=1e-12)


def test_covariances_match_per_splat_construction(rng):
    scene = random_scene(rng, 20)
    covs = scene.covariances()
    for k in range(len(scene)):
        R = quat_to_matrix(scene.rotations[k][None])[0]
        expected = R @ np.diag(scene.scales[k] ** 2) @ R.T
        np.testing.assert_allclose(covs[k], expected, atol=1e-12)
    assert scene.covariances() is covs  # cached


def test_quat_to_matrix_is_rotation(rng):
    q = rng.normal(size=(40, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    ms = quat_to_matrix(q)
    for m in ms:
        np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(m) == pytest.approx(1.0)


def test_identity_quaternion_matrix():
    m = quat_to_matrix(np.array([[1.0, 0.0, 0.0, 0.0]]))[0]
    np.testing.assert_allclose(m, np.eye(3), atol=0)


# masks ----------------------------------------------------------------------


def test_load_mask(tmp_path, small_scene):
    p = tmp_path / "mask.txt"
    p.write_text("# comment\n3\n1\n\n3\n7\n")
    mask = load_mask(p, small_scene)
    np.testing.assert_array_equal(mask.indices, [1, 3, 7])


def test_mask_out_of_range(small_scene):
    with pytest.raises(MaskError) as exc:
        make_mask([0, len(small_scene)], len(small_scene))
    assert exc.value.value == len(small_scene)
    with pytest.raises(MaskError) as exc:
        make_mask([-1, 2], len(small_scene))
    assert exc.value.value == -1


def test_mask_bad_line(tmp_path, small_scene):
    p = tmp_path / "mask.txt"
    p.write_text("1\nbanana\n")
    with pytest.raises(MaskError):
        load_mask(p, small_scene)


def test_empty_mask_warns(small_scene):
    with pytest.warns(UserWarning):
        mask = make_mask([], len(small_scene))
    assert len(mask) == 0


def test_full_mask(small_scene):
    mask = full_mask(small_scene)
    assert len(mask) == len(small_scene)
    np.testing.assert_array_equal(mask.indices, np.arange(len(small_scene)))


def test_bounds_against_brute_force(rng):
    scene = random_scene(rng, 100)
    idx = rng.choice(100, size=30, replace=False)
    box = bounds(scene, make_mask(idx.tolist(), 100))
    pts = scene.positions[np.unique(idx)]
    np.testing.assert_array_equal(box.min, pts.min(axis=0))
    np.testing.assert_array_equal(box.max, pts.max(axis=0))
    np.testing.assert_allclose(box.center, 0.5 * (box.min + box.max))
    np.testing.assert_allclose(box.size, box.max - box.min)


def test_bounds_empty_selection(small_scene):
    with pytest.raises(EmptySelectionError):
        bounds(small_scene, SelectionMask(indices=np.zeros(0, dtype=np.int64)))


def test_empty_scene_round_trip(tmp_path):
    scene = Scene(positions=np.zeros((0, 3)), rotations=np.zeros((0, 4)),
                  scales=np.zeros((0, 3)), sh_dc=np.zeros((0, 3)),
                  opacities=np.zeros(0))
    p = tmp_path / "empty.ply"
    save_scene(scene, p)
    assert len(load_scene(p)) == 0
