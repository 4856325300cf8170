import pytest
import torch

from erupoint.fusion.checkpoint import (
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)


def test_checkpoint_round_trip(tiny_model, tiny_example, tmp_path):
    path = tmp_path / "model.erunet"
    save_checkpoint(tiny_model, path, metadata={"steps": 12})

    hparams, metadata, tensors = read_checkpoint(path)
    assert hparams == tiny_model.hparams
    assert metadata == {"steps": 12}
    assert set(tensors) == set(tiny_model.state_dict())

    loaded = load_checkpoint(path)
    assert loaded.dtype == torch.float64
    for name, value in loaded.state_dict().items():
        torch.testing.assert_close(
            value, tiny_model.state_dict()[name], rtol=1e-6, atol=1e-7
        )
    with torch.no_grad():
        expected = tiny_model(tiny_example.inputs).confidences
        actual = loaded(tiny_example.inputs).confidences
    torch.testing.assert_close(actual, expected, rtol=0, atol=1e-5)


def test_checkpoint_is_byte_stable(tiny_model, tmp_path):
    save_checkpoint(tiny_model, tmp_path / "a.erunet")
    save_checkpoint(tiny_model, tmp_path / "b.erunet")
    assert (tmp_path / "a.erunet").read_bytes() == (
        tmp_path / "b.erunet"
    ).read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "model.erunet"
    path.write_bytes(b"NOTANET" + bytes(16))
    with pytest.raises(ValueError, match="checkpoint"):
        load_checkpoint(path)


def test_truncated_checkpoint(tiny_model, tmp_path):
    path = tmp_path / "model.erunet"
    save_checkpoint(tiny_model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(ValueError, match="truncated"):
        read_checkpoint(path)
