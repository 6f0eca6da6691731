"""Checkpoint format: byte layout, exact round trips, corruption handling."""

from __future__ import annotations

import json
import struct

import numpy as np
import pytest

from randprompt_ad.errors import CorruptionError, DataError, FormatError
from randprompt_ad.mlp import (
    MlpArchitecture,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    score_fnn,
    train,
)

from .test_mlp_train import SMALL_ARCH, separable_pairs


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    pairs = separable_pairs(60)
    cfg = TrainConfig(epochs=2, batch_size=16, seed=3)
    result = train(pairs, SMALL_ARCH, cfg)
    path = tmp_path_factory.mktemp("ckpt") / "model.fnn1"
    save_checkpoint(result.params, cfg, path)
    return result, cfg, path


EXPECTED_TENSOR_NAMES = [
    "layer0.weight", "layer0.bias",
    "bn0.gamma", "bn0.beta", "bn0.running_mean", "bn0.running_var",
    "layer1.weight", "layer1.bias",
    "bn1.gamma", "bn1.beta", "bn1.running_mean", "bn1.running_var",
    "layer2.weight", "layer2.bias",
    "bn2.gamma", "bn2.beta", "bn2.running_mean", "bn2.running_var",
    "layer3.weight", "layer3.bias",
]


class TestByteLayout:
    def test_magic_then_length_then_json(self, trained):
        _, _, path = trained
        raw = path.read_bytes()
        assert raw[:4] == b"FNN1"
        (header_len,) = struct.unpack("<I", raw[4:8])
        header = json.loads(raw[8 : 8 + header_len])
        assert header["format"] == "FNN1" and header["version"] == 1
        assert header["arch"]["hidden_dims"] == [32, 16, 8]
        assert [t["name"] for t in header["tensors"]] == EXPECTED_TENSOR_NAMES

    def test_payload_is_declared_float64_tensors(self, trained):
        result, _, path = trained
        raw = path.read_bytes()
        (header_len,) = struct.unpack("<I", raw[4:8])
        header = json.loads(raw[8 : 8 + header_len])
        payload = raw[8 + header_len :]
        n_values = sum(
            int(np.prod(t["shape"], dtype=np.int64)) for t in header["tensors"]
        )
        assert len(payload) == n_values * 8
        first_shape = tuple(header["tensors"][0]["shape"])
        first = np.frombuffer(payload[: 8 * int(np.prod(first_shape))], dtype="<f8")
        assert np.array_equal(first.reshape(first_shape), result.params.weights[0])


class TestRoundTrip:
    def test_everything_restored_exactly(self, trained):
        result, cfg, path = trained
        params, loaded_cfg = load_checkpoint(path)
        assert loaded_cfg == cfg
        assert params.arch == result.params.arch
        assert params.step == result.params.step
        original = dict(result.params.named_tensors())
        for name, tensor in params.named_tensors():
            assert np.array_equal(tensor, original[name]), name

    def test_loaded_params_score_identically(self, trained):
        result, _, path = trained
        params, _ = load_checkpoint(path)
        images = separable_pairs(20, seed=50).normals
        original = score_fnn(result.params, images).values
        restored = score_fnn(params, images).values
        assert np.array_equal(original, restored)

    def test_save_is_deterministic(self, trained, tmp_path):
        result, cfg, path = trained
        again = tmp_path / "again.fnn1"
        save_checkpoint(result.params, cfg, again)
        assert again.read_bytes() == path.read_bytes()


class TestCorruption:
    def test_bad_magic(self, trained, tmp_path):
        _, _, path = trained
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(b"XNN1" + path.read_bytes()[4:])
        with pytest.raises(FormatError):
            load_checkpoint(bad)

    def test_truncated_tensor(self, trained, tmp_path):
        _, _, path = trained
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CorruptionError):
            load_checkpoint(bad)

    def test_trailing_bytes(self, trained, tmp_path):
        _, _, path = trained
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(CorruptionError):
            load_checkpoint(bad)

    def test_truncated_header(self, trained, tmp_path):
        _, _, path = trained
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(path.read_bytes()[:6])
        with pytest.raises(CorruptionError):
            load_checkpoint(bad)

    def test_header_not_json(self, trained, tmp_path):
        _, _, path = trained
        raw = path.read_bytes()
        (header_len,) = struct.unpack("<I", raw[4:8])
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(raw[:8] + b"x" * header_len + raw[8 + header_len :])
        with pytest.raises(FormatError):
            load_checkpoint(bad)

    def test_renamed_tensor_rejected(self, trained, tmp_path):
        _, _, path = trained
        raw = path.read_bytes()
        (header_len,) = struct.unpack("<I", raw[4:8])
        header = json.loads(raw[8 : 8 + header_len])
        header["tensors"][0]["name"] = "layer9.weight"
        blob = json.dumps(header, sort_keys=True).encode()
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(raw[:4] + struct.pack("<I", len(blob)) + blob + raw[8 + header_len :])
        with pytest.raises(FormatError):
            load_checkpoint(bad)

    def test_non_finite_tensor_rejected(self, trained, tmp_path):
        _, _, path = trained
        raw = bytearray(path.read_bytes())
        (header_len,) = struct.unpack("<I", raw[4:8])
        start = 8 + header_len
        raw[start : start + 8] = struct.pack("<d", float("nan"))
        bad = tmp_path / "bad.fnn1"
        bad.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            load_checkpoint(bad)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "nope.fnn1")
