"""Binary checkpoint format: round trips and corruption detection."""
import numpy as np
import pytest

from memalign.checkpoint import (
    CheckpointError,
    MAGIC,
    load_checkpoint,
    save_checkpoint,
)


def random_sections(seed=0):
    rng = np.random.default_rng(seed)
    return {
        "module/weight": rng.standard_normal((4, 3)).astype(np.float32),
        "module/bias": rng.standard_normal(4).astype(np.float32),
        "scalar": np.float32(3.25).reshape(()),
        "empty": np.zeros((0, 5), dtype=np.float32),
    }


def test_round_trip_bit_exact(tmp_path):
    path = tmp_path / "m.ckpt"
    sections = random_sections()
    save_checkpoint(sections, path)
    loaded = load_checkpoint(path)
    assert set(loaded) == set(sections)
    for name, arr in sections.items():
        assert loaded[name].dtype == np.dtype("<f4")
        assert loaded[name].shape == np.asarray(arr).shape
        np.testing.assert_array_equal(loaded[name], arr)


def test_save_is_deterministic(tmp_path):
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(random_sections(), a)
    save_checkpoint(random_sections(), b)
    assert a.read_bytes() == b.read_bytes()


def test_float64_inputs_stored_as_float32(tmp_path):
    path = tmp_path / "m.ckpt"
    arr = np.array([1.0, 1.0 + 1e-12])
    save_checkpoint({"x": arr}, path)
    loaded = load_checkpoint(path)["x"]
    np.testing.assert_array_equal(loaded, arr.astype(np.float32))


def test_every_single_byte_corruption_detected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint({"w": np.arange(4, dtype=np.float32)}, path)
    data = bytearray(path.read_bytes())
    # flip one bit in a sample of byte positions spanning the whole file
    for pos in range(0, len(data), max(1, len(data) // 40)):
        corrupted = bytearray(data)
        corrupted[pos] ^= 0x01
        path.write_bytes(bytes(corrupted))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
    path.write_bytes(bytes(data))
    load_checkpoint(path)  # pristine file still loads


def test_bad_magic(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint({"w": np.zeros(2, dtype=np.float32)}, path)
    data = bytearray(path.read_bytes())
    data[:8] = b"MEMALNCX"
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="magic|checksum"):
        load_checkpoint(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint({"w": np.zeros(8, dtype=np.float32)}, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(data[:4])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_magic_constant():
    assert MAGIC == b"MEMALNCK"
