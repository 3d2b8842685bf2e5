import json

import numpy as np
import pytest

from smogcast.core.container import PREAMBLE, canonical_json
from smogcast.core.exceptions import FingerprintMismatchError, FormatError
from smogcast.models.config import ArchitectureConfig, RunConfig, TrainConfig
from smogcast.models.dataset import FeatureRange, NormStats
from smogcast.nn.network import build_network, network_forward
from smogcast.training.checkpoint import SMGC_MAGIC, load_checkpoint, save_checkpoint
from smogcast.training.trainer import train


@pytest.fixture
def run(tiny_arch):
    return RunConfig(architecture=tiny_arch, train=TrainConfig(epochs=2, learning_rate=1e-2))


@pytest.fixture
def stats():
    return NormStats(
        predictors=FeatureRange(feature_names=["SO2", "NO2"], minimum=[0.0, 1.0], maximum=[2.0, 3.0]),
        target=FeatureRange(feature_names=["AER_AI"], minimum=[-0.5], maximum=[1.5]),
    )


@pytest.fixture
def trained(run, tiny_dataset):
    return train(build_network(run.architecture, seed=run.seed), tiny_dataset, tiny_dataset, run.train)


def split_file(path):
    raw = path.read_bytes()
    magic, version, length = PREAMBLE.unpack_from(raw, 0)
    start = PREAMBLE.size
    return raw[:start], json.loads(raw[start:start + length]), raw[start + length:]


def rewrite(path, header, payload):
    body = canonical_json(header)
    path.write_bytes(PREAMBLE.pack(SMGC_MAGIC, 1, len(body)) + body + payload)


def test_round_trip_gives_identical_forward(tmp_path, run, trained, stats, tiny_dataset):
    path = save_checkpoint(tmp_path / "ckpt.smgc", trained.params, run, trained.optimizer, stats, epochs_trained=2)

    ckpt = load_checkpoint(path, run.fingerprint())

    np.testing.assert_array_equal(
        network_forward(tiny_dataset.samples, ckpt.params),
        network_forward(tiny_dataset.samples, trained.params),
    )
    for name, t in trained.params.named_tensors().items():
        np.testing.assert_array_equal(ckpt.params.named_tensors()[name], t)
    assert ckpt.epochs_trained == 2
    assert ckpt.norm_stats == stats
    assert ckpt.run == run
    assert ckpt.optimizer.step_count == trained.optimizer.step_count
    assert ckpt.optimizer.lr == trained.optimizer.lr
    for name, m in trained.optimizer.m.items():
        np.testing.assert_array_equal(ckpt.optimizer.m[name], m)
        np.testing.assert_array_equal(ckpt.optimizer.v[name], trained.optimizer.v[name])


def test_same_content_gives_identical_bytes(tmp_path, run, tiny_arch):
    params = build_network(tiny_arch, seed=4)
    a = save_checkpoint(tmp_path / "a.smgc", params, run)
    b = save_checkpoint(tmp_path / "b.smgc", params.copy(), run)
    assert a.read_bytes() == b.read_bytes()


def test_checkpoint_without_optimizer(tmp_path, run, tiny_arch):
    path = save_checkpoint(tmp_path / "plain.smgc", build_network(tiny_arch), run)
    ckpt = load_checkpoint(path)
    assert ckpt.optimizer is None
    assert ckpt.norm_stats is None
    assert ckpt.config_fingerprint == run.fingerprint()


def test_expected_fingerprint_must_match(tmp_path, run, tiny_arch):
    path = save_checkpoint(tmp_path / "ckpt.smgc", build_network(tiny_arch), run)
    other = RunConfig(architecture=tiny_arch, train=TrainConfig(epochs=3))
    with pytest.raises(FingerprintMismatchError):
        load_checkpoint(path, other.fingerprint())


def test_params_must_match_declared_architecture(tmp_path, run):
    with pytest.raises(FingerprintMismatchError):
        save_checkpoint(tmp_path / "x.smgc", build_network(ArchitectureConfig(in_channels=2, filters=[2, 4])), run)


def test_edited_header_is_refused(tmp_path, run, tiny_arch):
    path = save_checkpoint(tmp_path / "ckpt.smgc", build_network(tiny_arch), run)
    _, header, payload = split_file(path)
    header["run"]["train"]["epochs"] = 99
    rewrite(path, header, payload)

    with pytest.raises(FingerprintMismatchError):
        load_checkpoint(path)


def test_shape_mismatch_is_a_format_error(tmp_path, run, tiny_arch):
    path = save_checkpoint(tmp_path / "ckpt.smgc", build_network(tiny_arch), run)
    _, header, payload = split_file(path)
    entry = next(e for e in header["tensors"] if e["name"] == "head.kernel")
    entry["shape"] = [entry["count"]]
    rewrite(path, header, payload)

    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_corrupted_payload_fails_checksum(tmp_path, run, tiny_arch):
    path = save_checkpoint(tmp_path / "ckpt.smgc", build_network(tiny_arch), run)
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))

    with pytest.raises(FormatError, match="checksum"):
        load_checkpoint(path)


@pytest.mark.parametrize("damage", ["magic", "version", "truncated", "trailing", "header"])
def test_damaged_files_are_format_errors(tmp_path, run, tiny_arch, damage):
    path = save_checkpoint(tmp_path / "ckpt.smgc", build_network(tiny_arch), run)
    raw = path.read_bytes()
    if damage == "magic":
        raw = b"SMGD" + raw[4:]
    elif damage == "version":
        raw = raw[:4] + (7).to_bytes(4, "little") + raw[8:]
    elif damage == "truncated":
        raw = raw[:-4]
    elif damage == "trailing":
        raw = raw + b"\x00\x00\x80\x3f"
    elif damage == "header":
        raw = raw[:PREAMBLE.size] + b"~" + raw[PREAMBLE.size + 1:]
    path.write_bytes(raw)

    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "absent.smgc")
