import json

import numpy as np
import pytest

from rssim import channels as chn
from rssim import io, linops


def test_channel_round_trip(tmp_path):
    ch = chn.amplitude_damping(0.3)
    path = tmp_path / "ad.json"
    io.save_channel(ch, path)
    back = io.load_channel(path)
    assert chn.choi_distance(ch, back) == 0.0
    assert back.name == "ad"


def test_real_entries_and_name():
    ch = io.channel_from_dict({"dim_in": 1, "dim_out": 2, "kraus": [[[1], [0]]], "name": "prep0"})
    assert ch.name == "prep0"
    np.testing.assert_allclose(chn.apply(ch, np.eye(1)), np.diag([1.0, 0.0]))


@pytest.mark.parametrize(
    "data, field",
    [
        ({"dim_in": 2, "dim_out": 2}, "kraus"),
        ({"dim_in": 2, "dim_out": 2, "kraus": []}, "kraus"),
        ({"dim_in": 2, "dim_out": 2, "kraus": [[[1, 0, 0], [0, 1, 0]]]}, "kraus"),
        ({"dim_in": 2, "dim_out": 2, "kraus": [[[1, "x"], [0, 1]]]}, "kraus[0]"),
        ({"dim_in": 0, "dim_out": 2, "kraus": [[[1]]]}, "dim_in"),
        ({"dim_out": 2, "kraus": [[[1]]]}, "dim_in"),
        ({"dim_in": 2, "dim_out": 2, "kraus": [[[1, 0], [0, 1]]], "extra": 1}, "extra"),
    ],
)
def test_channel_errors_name_field(data, field):
    with pytest.raises(io.InputError) as info:
        io.channel_from_dict(data)
    assert info.value.field == field


def test_state_round_trip(tmp_path):
    rho = linops.random_density(4, np.random.default_rng(0))
    path = tmp_path / "s.json"
    io.save_state(rho, (2, 2), path)
    back, dims = io.load_state(path)
    assert dims == (2, 2)
    np.testing.assert_allclose(back, rho, atol=1e-15)


@pytest.mark.parametrize(
    "data, field",
    [
        ({"dims": [2, 2]}, "matrix"),
        ({"dims": [2, 3], "matrix": [[1, 0], [0, 0]]}, "dims"),
        ({"dims": [2], "matrix": [[1, 0], [0, 1]]}, "matrix"),
        ({"dims": [2], "matrix": [[1, 0, 0], [0, 0, 0]]}, "matrix"),
        ({"dims": "2", "matrix": [[1]]}, "dims"),
        ({"dims": [1], "matrix": [[1]], "note": ""}, "note"),
    ],
)
def test_state_errors_name_field(data, field):
    with pytest.raises(io.InputError) as info:
        io.state_from_dict(data)
    assert info.value.field == field


def test_file_errors(tmp_path):
    with pytest.raises(io.InputError):
        io.load_channel(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(io.InputError) as info:
        io.load_channel(bad)
    assert "not valid JSON" in str(info.value)
    bad.write_text(json.dumps([1, 2]))
    with pytest.raises(io.InputError):
        io.load_state(bad)


def test_parse_params():
    assert io.parse_params(["p=0.2", "d=3"]) == {"p": 0.2, "d": 3}
    assert io.parse_params(["px=0.1,py=0.2"]) == {"px": 0.1, "py": 0.2}
    assert io.parse_params(None) == {}
    with pytest.raises(io.InputError):
        io.parse_params(["p"])
    with pytest.raises(io.InputError):
        io.parse_params(["p=abc"])


def test_resolve_channel(tmp_path):
    assert io.resolve_channel("identity3").dim_in == 3
    ch = io.resolve_channel("depolarizing:p=0.2")
    assert chn.choi_distance(ch, chn.depolarizing(2, 0.2)) <= 1e-15
    ch = io.resolve_channel("pauli", {"px": 0.1, "py": 0.0, "pz": 0.2})
    assert len(ch.kraus) == 3
    path = tmp_path / "c.json"
    io.save_channel(chn.dephasing(0.5), path)
    assert io.resolve_channel(str(path)).dim_out == 2
    for spec, params in (("nosuch", None), ("identity2", {"p": 1}), ("dephasing", {"p": 2.0}), (None, None)):
        with pytest.raises(io.InputError):
            io.resolve_channel(spec, params)
