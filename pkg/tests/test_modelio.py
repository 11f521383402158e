import struct

import numpy as np
import pytest

from bwcast.exceptions import ModelFileError
from bwcast.modelio import FORMAT_VERSION, MAGIC, load_model, save_model
from bwcast.nn import ForecastModel, ModelSpec, init_params
from bwcast.preprocess import fit_normalizer


@pytest.fixture(params=["vanilla", "bidirectional"])
def saved(tmp_path, request):
    spec = ModelSpec(units=(5, 4), nlags=6, input_dim=2, output_dim=1, msteps=2, variant=request.param)
    model = ForecastModel(spec, init_params(spec, 3, 0.3), [{"epoch": 1, "loss": 0.5}])
    norm = fit_normalizer(np.random.default_rng(0).standard_normal((50, 2)), "z-score")
    path = tmp_path / "m.bwm"
    save_model(model, norm, path, {"seed": 4})
    return model, norm, path


def test_round_trip_predicts_bit_exactly(saved):
    model, norm, path = saved
    loaded, lnorm, config = load_model(path)
    X = np.random.default_rng(1).standard_normal((100, 6, 2))
    assert loaded.predict(X).tobytes() == model.predict(X).tobytes()
    assert loaded.spec == model.spec and loaded.history == model.history
    assert config == {"seed": 4}
    assert lnorm.method == "z-score"
    np.testing.assert_array_equal(lnorm.transform(X[0]), norm.transform(X[0]))


def test_layout_prefix(saved):
    _, _, path = saved
    magic, version, _ = struct.unpack_from("<8sIQ", path.read_bytes())
    assert magic == MAGIC and version == FORMAT_VERSION


def test_corrupted_byte(saved):
    _, _, path = saved
    data = bytearray(path.read_bytes())
    data[len(data) // 2] ^= 0x01
    path.write_bytes(bytes(data))
    with pytest.raises(ModelFileError, match="checksum"):
        load_model(path)


def test_future_version(saved):
    _, _, path = saved
    data = bytearray(path.read_bytes())
    data[8:12] = struct.pack("<I", FORMAT_VERSION + 1)
    path.write_bytes(bytes(data))
    with pytest.raises(ModelFileError, match="version"):
        load_model(path)


def test_truncated_and_foreign_files(saved, tmp_path):
    _, _, path = saved
    data = path.read_bytes()
    path.write_bytes(data[:10])
    with pytest.raises(ModelFileError, match="truncated"):
        load_model(path)
    path.write_bytes(data[:-100])
    with pytest.raises(ModelFileError):
        load_model(path)
    other = tmp_path / "x.bin"
    other.write_bytes(b"NOTAMODEL" + bytes(100))
    with pytest.raises(ModelFileError, match="magic"):
        load_model(other)


def test_without_normalizer(tmp_path):
    spec = ModelSpec(units=(2,), nlags=3)
    path = tmp_path / "n.bwm"
    save_model(ForecastModel(spec, init_params(spec)), None, path)
    _, norm, config = load_model(path)
    assert norm is None and config == {}
